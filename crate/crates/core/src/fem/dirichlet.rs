//! Dirichlet handling by symmetric elimination, keeping the contact
//! penalty as the only penalty in the system.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Prescribed values on conforming DOFs.
#[derive(Debug, Clone, Default)]
pub struct DirichletBc {
    /// (conforming dof index, prescribed value); duplicates must agree.
    pub entries: Vec<(usize, f64)>,
}

impl DirichletBc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fix(&mut self, dof: usize, value: f64) {
        self.entries.push((dof, value));
    }
}

/// The reduced SPD system plus the scatter back to conforming DOFs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// reduced index -> conforming dof
    pub free_dofs: Vec<usize>,
    /// conforming dof -> reduced index (None when constrained)
    pub free_map: Vec<Option<usize>>,
    /// prescribed values on constrained dofs, zero elsewhere
    pub boundary_values: Vec<f64>,
}

impl ReducedSystem {
    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Full conforming vector from a reduced solution.
    pub fn scatter(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.free_dofs.len());
        let mut full = self.boundary_values.clone();
        for (i, &d) in self.free_dofs.iter().enumerate() {
            full[d] = reduced[i];
        }
        full
    }

    /// Restriction of a conforming vector to the free dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }
}

/// Eliminates the constrained DOFs: they leave the unknown set and their
/// contribution moves to the right-hand side. The reduced matrix stays
/// symmetric (and positive definite when `k` was SPD on the free space).
pub fn apply_dirichlet(k: &CsrMatrix, l: &[f64], bc: &DirichletBc) -> Result<ReducedSystem> {
    let n = k.nrows();
    if k.ncols() != n || l.len() != n {
        return Err(Error::Dimension("apply_dirichlet shape mismatch".into()));
    }
    let mut constrained = vec![false; n];
    let mut values = vec![0.0; n];
    for &(dof, v) in &bc.entries {
        if dof >= n {
            return Err(Error::Config(format!(
                "Dirichlet dof {dof} outside the conforming system"
            )));
        }
        if constrained[dof] && values[dof] != v {
            return Err(Error::Config(format!(
                "conflicting Dirichlet values on dof {dof}"
            )));
        }
        constrained[dof] = true;
        values[dof] = v;
    }
    let mut free_map = vec![None; n];
    let mut free_dofs = Vec::new();
    for (d, &c) in constrained.iter().enumerate() {
        if !c {
            free_map[d] = Some(free_dofs.len());
            free_dofs.push(d);
        }
    }
    let nf = free_dofs.len();
    let mut rhs = Vec::with_capacity(nf);
    let mut triplets: Vec<(u32, u32, f64)> = Vec::new();
    for (i, &d) in free_dofs.iter().enumerate() {
        let mut b = l[d];
        for (c, v) in k.row(d) {
            match free_map[c] {
                Some(j) => triplets.push((i as u32, j as u32, v)),
                None => b -= v * values[c],
            }
        }
        rhs.push(b);
    }
    let matrix = CsrMatrix::from_triplets(nf, nf, triplets)?;
    Ok(ReducedSystem {
        matrix,
        rhs,
        free_dofs,
        free_map,
        boundary_values: values,
    })
}
