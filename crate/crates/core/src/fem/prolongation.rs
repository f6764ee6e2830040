//! The prolongation operator mapping conforming DOFs to all DOFs.

use super::DofMap;
use crate::error::{Error, Result};
use crate::mesh::HangingConstraint;
use crate::sparse::CsrMatrix;

/// Builds `P` of shape `(all DOFs) x (conforming DOFs)`: an identity block
/// over the conforming DOFs stacked over interpolation rows for hanging
/// DOFs. Hanging x/y components use the same scalar weights.
pub fn build_prolongation(dofs: &DofMap, constraints: &[HangingConstraint]) -> Result<CsrMatrix> {
    let n_all = dofs.n_all_dofs();
    let n_conf = dofs.n_conforming_dofs();
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(n_conf + 4 * constraints.len());
    for d in 0..n_conf {
        triplets.push((d as u32, d as u32, 1.0));
    }
    for c in constraints {
        for comp in 0..2 {
            let row = dofs.dof(c.slave, comp);
            debug_assert!(row >= n_conf);
            for (&m, &w) in c.masters.iter().zip(&c.weights) {
                let col = dofs.dof(m, comp);
                if col >= n_conf {
                    return Err(Error::Internal(format!(
                        "master node {m} of slave {} is not conforming",
                        c.slave
                    )));
                }
                triplets.push((row as u32, col as u32, w));
            }
        }
    }
    CsrMatrix::from_triplets(n_all, n_conf, triplets)
}

/// Congruence projection onto the conforming space:
/// `K = P^T Ktilde P`, `L = P^T Ltilde`.
pub fn form_conforming(
    k_all: &CsrMatrix,
    l_all: &[f64],
    p: &CsrMatrix,
) -> Result<(CsrMatrix, Vec<f64>)> {
    if k_all.nrows() != p.nrows() || l_all.len() != p.nrows() {
        return Err(Error::Dimension(
            "prolongation does not match the all-DOF system".into(),
        ));
    }
    let pt = p.transpose();
    let k = pt.matmul(k_all)?.matmul(p)?;
    let l = pt.mul_vec(l_all);
    Ok((k, l))
}
