//! Stiffness assembly over all mesh nodes (conformity handled later by
//! the prolongation operator).

use super::{DofMap, FeSpace, Materials};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::parallel;
use crate::quadrature::GaussRule;
use crate::sparse::CsrMatrix;

/// Assembles the all-DOF stiffness matrix and external load vector.
///
/// Q1/Q2 displacement basis, plane-strain isotropic elasticity, geometry
/// Jacobians from the order-q transformation, tensor Gauss rule with
/// `max(order, q) + 1` points per direction. Zero body force and no
/// Neumann data in the benchmark, so the load vector is zero.
pub fn assemble_stiffness(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    materials: &Materials,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let locals = parallel::map_indexed(space.leaves.len(), |le| {
        element_stiffness(mesh, space, materials, le)
    });
    gather(space, dofs, locals)
}

/// Sequential twin of [`assemble_stiffness`]; the fallback when the
/// `parallel` feature is off, and the baseline for the benches.
pub fn assemble_stiffness_serial(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    materials: &Materials,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let locals = parallel::map_indexed_serial(space.leaves.len(), |le| {
        element_stiffness(mesh, space, materials, le)
    });
    gather(space, dofs, locals)
}

fn gather(
    space: &FeSpace,
    dofs: &DofMap,
    locals: Vec<Result<Vec<f64>>>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n_all = dofs.n_all_dofs();
    let nn = (space.order + 1) * (space.order + 1);
    let ndof = 2 * nn;
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(space.leaves.len() * ndof * ndof);
    for (le, local) in locals.into_iter().enumerate() {
        let ke = local?;
        let nodes = &space.elem_nodes[le];
        let mut gdof = [0u32; 18];
        for (a, &n) in nodes.iter().enumerate() {
            gdof[2 * a] = dofs.dof(n, 0) as u32;
            gdof[2 * a + 1] = dofs.dof(n, 1) as u32;
        }
        for i in 0..ndof {
            for j in 0..ndof {
                let v = ke[i * ndof + j];
                if v != 0.0 {
                    triplets.push((gdof[i], gdof[j], v));
                }
            }
        }
    }
    let k = CsrMatrix::from_triplets(n_all, n_all, triplets)?;
    Ok((k, vec![0.0; n_all]))
}

/// Dense local stiffness of one leaf, row-major `2nn x 2nn` in the lattice
/// node order with interleaved (x, y) components.
fn element_stiffness(
    mesh: &Mesh,
    space: &FeSpace,
    materials: &Materials,
    le: usize,
) -> Result<Vec<f64>> {
    let e = space.leaves[le];
    let d = materials.of(mesh.solid_of(e))?.stiffness_matrix();
    let k = space.order;
    let nn = (k + 1) * (k + 1);
    let ng = k.max(mesh.geom_order) + 1;
    let rule = GaussRule::new(ng);
    let jacs = mesh.jacobian_grid(e, &rule.points);

    // Reference gradients of the solution basis at the same tensor grid.
    let mut ref_grads = Vec::with_capacity(ng * ng);
    for &eta in &rule.points {
        for &xi in &rule.points {
            ref_grads.push(space.shape_gradients(xi, eta));
        }
    }

    let mut ke = vec![0.0; 4 * nn * nn];
    let mut grad = vec![[0.0f64; 2]; nn];
    for b in 0..ng {
        for a in 0..ng {
            let qp = b * ng + a;
            let j = jacs[qp];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det <= 0.0 {
                return Err(Error::Geometry(format!(
                    "non-positive Jacobian ({det:.3e}) while assembling element {e}"
                )));
            }
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            for (n, rg) in ref_grads[qp].iter().enumerate() {
                // Physical gradient: J^{-T} * reference gradient.
                grad[n] = [
                    inv[0][0] * rg[0] + inv[1][0] * rg[1],
                    inv[0][1] * rg[0] + inv[1][1] * rg[1],
                ];
            }
            let w = rule.weights[a] * rule.weights[b] * det;
            for i in 0..nn {
                let (gix, giy) = (grad[i][0], grad[i][1]);
                for jn in 0..nn {
                    let (gjx, gjy) = (grad[jn][0], grad[jn][1]);
                    // (x,x): D11 Ni,x Nj,x + D33 Ni,y Nj,y
                    ke[(2 * i) * 2 * nn + 2 * jn] += w * (d[0][0] * gix * gjx + d[2][2] * giy * gjy);
                    // (x,y): D12 Ni,x Nj,y + D33 Ni,y Nj,x
                    ke[(2 * i) * 2 * nn + 2 * jn + 1] +=
                        w * (d[0][1] * gix * gjy + d[2][2] * giy * gjx);
                    // (y,x): D21 Ni,y Nj,x + D33 Ni,x Nj,y
                    ke[(2 * i + 1) * 2 * nn + 2 * jn] +=
                        w * (d[1][0] * giy * gjx + d[2][2] * gix * gjy);
                    // (y,y): D22 Ni,y Nj,y + D33 Ni,x Nj,x
                    ke[(2 * i + 1) * 2 * nn + 2 * jn + 1] +=
                        w * (d[1][1] * giy * gjy + d[2][2] * gix * gjx);
                }
            }
        }
    }
    Ok(ke)
}
