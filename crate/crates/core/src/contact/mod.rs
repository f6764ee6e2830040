//! Node-to-node contact: pairing across the gap, the active-set test,
//! penalized system formation and the fixed-point contact loop.

use crate::error::{Error, Result};
use crate::fem::{pcg_solve, DofMap, FeSpace, ReducedSystem};
use crate::mesh::{BoundaryTag, ElementId, Mesh};
use crate::sparse::CsrMatrix;

#[cfg(test)]
mod tests;

/// Bijective pairing of the contact-boundary nodes of the two solids.
#[derive(Debug, Clone)]
pub struct ContactPairing {
    /// (solid-1 node, solid-2 node), ordered by transverse coordinate.
    pub pairs: Vec<(usize, usize)>,
    /// Unit normal pointing from solid 1 into solid 2.
    pub normal: [f64; 2],
    /// Initial separation of each pair along the normal.
    pub gaps: Vec<f64>,
    /// Pairing matrix over all DOFs: row i evaluates the relative normal
    /// displacement u_N of pair i.
    pub b_all: CsrMatrix,
    /// Contact elements paired across the interface (solid-1 id first),
    /// sorted by the solid-1 element id.
    pub element_pairs: Vec<(ElementId, ElementId)>,
}

/// Pairs each solid-1 contact node with the facing solid-2 node along the
/// a-priori contact normal. Matching discretizations are required; the
/// transverse mismatch tolerance is `1e-8` of the contact-zone extent.
pub fn pair_nodes(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    normal: [f64; 2],
) -> Result<ContactPairing> {
    let nrm = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
    if nrm == 0.0 {
        return Err(Error::Config("contact normal must be non-zero".into()));
    }
    let n = [normal[0] / nrm, normal[1] / nrm];
    let tangent = [-n[1], n[0]];

    let nodes1 = space.contact_nodes(1);
    let nodes2 = space.contact_nodes(2);
    if nodes1.is_empty() || nodes2.is_empty() {
        return Err(Error::Pairing("a contact boundary has no nodes".into()));
    }
    if nodes1.len() != nodes2.len() {
        return Err(Error::Pairing(format!(
            "contact node counts differ: {} vs {}",
            nodes1.len(),
            nodes2.len()
        )));
    }
    let t_of = |node: usize| {
        let p = space.node_coords[node];
        p[0] * tangent[0] + p[1] * tangent[1]
    };
    let mut s1: Vec<usize> = nodes1;
    let mut s2: Vec<usize> = nodes2;
    s1.sort_by(|&a, &b| t_of(a).total_cmp(&t_of(b)));
    s2.sort_by(|&a, &b| t_of(a).total_cmp(&t_of(b)));

    let extent = t_of(*s1.last().unwrap()) - t_of(s1[0]);
    let tol = 1e-8 * extent.abs().max(1e-300);
    let mut pairs = Vec::with_capacity(s1.len());
    let mut gaps = Vec::with_capacity(s1.len());
    for (&a, &b) in s1.iter().zip(&s2) {
        let mismatch = (t_of(a) - t_of(b)).abs();
        if mismatch > tol {
            return Err(Error::Pairing(format!(
                "transverse mismatch {mismatch:.3e} between nodes {a} and {b} (non-matching interfaces)"
            )));
        }
        let pa = space.node_coords[a];
        let pb = space.node_coords[b];
        gaps.push((pb[0] - pa[0]) * n[0] + (pb[1] - pa[1]) * n[1]);
        pairs.push((a, b));
    }

    // u_N = u1 . n1 + u2 . n2 with n1 = n and n2 = -n.
    let mut triplets = Vec::with_capacity(4 * pairs.len());
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let row = i as u32;
        triplets.push((row, dofs.dof(a, 0) as u32, n[0]));
        triplets.push((row, dofs.dof(a, 1) as u32, n[1]));
        triplets.push((row, dofs.dof(b, 0) as u32, -n[0]));
        triplets.push((row, dofs.dof(b, 1) as u32, -n[1]));
    }
    let b_all = CsrMatrix::from_triplets(pairs.len(), dofs.n_all_dofs(), triplets)?;

    let element_pairs = pair_elements(mesh, space, &pairs)?;
    Ok(ContactPairing {
        pairs,
        normal: n,
        gaps,
        b_all,
        element_pairs,
    })
}

/// Elements are paired when all their contact-boundary nodes are pairwise
/// paired; used to keep refined contact boundaries matched.
fn pair_elements(
    mesh: &Mesh,
    space: &FeSpace,
    pairs: &[(usize, usize)],
) -> Result<Vec<(ElementId, ElementId)>> {
    use std::collections::HashMap;
    let image: HashMap<usize, usize> = pairs.iter().copied().collect();

    // Contact nodes per contact leaf, per solid.
    let contact_leaf_nodes = |solid: u8| -> HashMap<ElementId, Vec<usize>> {
        let mut out: HashMap<ElementId, Vec<usize>> = HashMap::new();
        for (e, side) in mesh.tagged_sides(BoundaryTag::Contact(solid)) {
            let le = space.leaves.binary_search(&e).expect("tagged side on a leaf");
            for idx in crate::fem::side_lattice_indices(space.order, side) {
                let node = space.elem_nodes[le][idx];
                out.entry(e).or_default().push(node);
            }
        }
        for nodes in out.values_mut() {
            nodes.sort_unstable();
            nodes.dedup();
        }
        out
    };
    let leaves1 = contact_leaf_nodes(1);
    let leaves2 = contact_leaf_nodes(2);

    let mut owner2: HashMap<usize, Vec<ElementId>> = HashMap::new();
    for (&e, nodes) in &leaves2 {
        for &nd in nodes {
            owner2.entry(nd).or_default().push(e);
        }
    }

    let mut out = Vec::with_capacity(leaves1.len());
    for (&e1, nodes) in &leaves1 {
        let mut candidates: Option<Vec<ElementId>> = None;
        for &nd in nodes {
            let Some(&img) = image.get(&nd) else {
                return Err(Error::Pairing(format!("contact node {nd} is unpaired")));
            };
            let owners = owner2
                .get(&img)
                .ok_or_else(|| Error::Pairing(format!("paired node {img} is on no contact element")))?;
            candidates = Some(match candidates {
                None => owners.clone(),
                Some(prev) => prev.into_iter().filter(|e| owners.contains(e)).collect(),
            });
        }
        let candidates = candidates.unwrap_or_default();
        match candidates.len() {
            1 => out.push((e1, candidates[0])),
            0 => {
                return Err(Error::Pairing(format!(
                    "contact element {e1} has no matching partner"
                )))
            }
            _ => {
                return Err(Error::Pairing(format!(
                    "contact element {e1} matches several partners {candidates:?}"
                )))
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// The active-set test: pair `i` is active when `(B u)_i >= D_i`, with
/// exact comparison (equality counts as active).
pub fn active_set(b: &CsrMatrix, gaps: &[f64], u: &[f64]) -> Vec<usize> {
    let bu = b.mul_vec(u);
    bu.iter()
        .zip(gaps)
        .enumerate()
        .filter_map(|(i, (lhs, d))| (lhs >= d).then_some(i))
        .collect()
}

/// Row restriction to the active set followed by the conforming projection:
/// `Bhat = B[A] P`, `Dhat = D[A]`.
pub fn restrict_and_project(
    b_all: &CsrMatrix,
    gaps: &[f64],
    active: &[usize],
    p: &CsrMatrix,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let b_hat = b_all.restrict_rows(active).matmul(p)?;
    let d_hat = active.iter().map(|&i| gaps[i]).collect();
    Ok((b_hat, d_hat))
}

/// Assembles the penalized equilibrium system
/// `(K + k_N Bhat^T Bhat) U = L + k_N Bhat^T Dhat`.
pub fn form_penalized(
    k: &CsrMatrix,
    l: &[f64],
    b_hat: &CsrMatrix,
    d_hat: &[f64],
    penalty: f64,
) -> Result<(CsrMatrix, Vec<f64>)> {
    if b_hat.ncols() != k.nrows() || d_hat.len() != b_hat.nrows() {
        return Err(Error::Dimension("penalized system shape mismatch".into()));
    }
    let bt = b_hat.transpose();
    let kc = bt.matmul(b_hat)?;
    let matrix = k.add_scaled(&kc, penalty)?;
    let mut rhs = bt.mul_vec(d_hat);
    for (r, li) in rhs.iter_mut().zip(l) {
        *r = li + penalty * *r;
    }
    Ok((matrix, rhs))
}

/// Parameters of the penalty contact solve.
#[derive(Debug, Clone)]
pub struct PenaltyConfig {
    /// Penalty stiffness `k_N` (N/m); callers usually express it as a
    /// multiple of the Young modulus.
    pub stiffness: f64,
    /// Contact sweep budget `l_max`.
    pub max_sweeps: usize,
    /// Active set carried over from a previous solve (warm start).
    pub initial_active: Option<Vec<usize>>,
    pub pcg_rel_tol: f64,
    pub pcg_max_iter: Option<usize>,
}

impl PenaltyConfig {
    pub fn new(stiffness: f64) -> Self {
        PenaltyConfig {
            stiffness,
            max_sweeps: 30,
            initial_active: None,
            pcg_rel_tol: 1e-10,
            pcg_max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub active_size: usize,
    pub pcg_iterations: usize,
    /// Set when the anti-cycling union rule produced this sweep's set.
    pub union_applied: bool,
}

#[derive(Debug, Clone)]
pub struct ContactSolution {
    /// Solution on conforming DOFs (Dirichlet values included).
    pub u_conforming: Vec<f64>,
    /// Solution prolonged to all DOFs.
    pub u_all: Vec<f64>,
    pub active: Vec<usize>,
    pub converged: bool,
    pub sweeps: Vec<SweepRecord>,
}

impl ContactSolution {
    pub fn total_pcg_iterations(&self) -> usize {
        self.sweeps.iter().map(|s| s.pcg_iterations).sum()
    }
}

/// Inputs of one contact solve on a fixed mesh.
pub struct ContactSystem<'a> {
    pub reduced: &'a ReducedSystem,
    /// `B P`: pairing matrix projected to conforming DOFs (all pairs).
    pub b_conforming: &'a CsrMatrix,
    pub gaps: &'a [f64],
    pub prolongation: &'a CsrMatrix,
}

/// Fixed-point contact loop: form the penalized system for the current
/// active set, solve, recompute the set, and stop when it no longer
/// changes. Revisiting a previously seen set (a cycle) falls back to the
/// union with the previous set for one sweep, which can only grow the set.
pub fn solve_contact(sys: &ContactSystem, config: &PenaltyConfig) -> Result<ContactSolution> {
    use std::collections::HashSet;
    let n_pairs = sys.gaps.len();
    let b_free = sys
        .b_conforming
        .restrict_cols(&sys.reduced.free_map, sys.reduced.n_free());

    let mut active: Vec<usize> = match &config.initial_active {
        Some(a) => {
            let mut a = a.clone();
            a.sort_unstable();
            a.dedup();
            if a.iter().any(|&i| i >= n_pairs) {
                return Err(Error::Config("initial active set out of range".into()));
            }
            a
        }
        None => Vec::new(),
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    seen.insert(active.clone());

    let max_iter = config
        .pcg_max_iter
        .unwrap_or_else(|| crate::fem::default_max_iter(sys.reduced.n_free()));
    let mut warm: Option<Vec<f64>> = None;
    let mut sweeps = Vec::new();
    let mut union_next = false;

    for _ in 1..=config.max_sweeps {
        let b_hat = b_free.restrict_rows(&active);
        // Active contact DOFs must survive the Dirichlet elimination: a
        // displacement-controlled node in actual contact would silently
        // lose its penalty.
        if b_hat.nnz() != sys.b_conforming.restrict_rows(&active).nnz() {
            return Err(Error::Config(
                "active contact DOFs overlap the Dirichlet-constrained set".into(),
            ));
        }
        let d_hat: Vec<f64> = active.iter().map(|&i| sys.gaps[i]).collect();
        let (a_pen, rhs) = form_penalized(
            &sys.reduced.matrix,
            &sys.reduced.rhs,
            &b_hat,
            &d_hat,
            config.stiffness,
        )?;
        let sol = pcg_solve(&a_pen, &rhs, config.pcg_rel_tol, max_iter, warm.as_deref())?;
        warm = Some(sol.x.clone());
        let u_conf = sys.reduced.scatter(&sol.x);
        let new_active = active_set(sys.b_conforming, sys.gaps, &u_conf);
        sweeps.push(SweepRecord {
            active_size: active.len(),
            pcg_iterations: sol.iterations,
            union_applied: union_next,
        });
        union_next = false;
        if new_active == active {
            let u_all = sys.prolongation.mul_vec(&u_conf);
            return Ok(ContactSolution {
                u_conforming: u_conf,
                u_all,
                active,
                converged: true,
                sweeps,
            });
        }
        if seen.contains(&new_active) {
            // Cycle: grow monotonically instead of revisiting.
            log::warn!(
                "contact active set cycled (size {} seen before); taking the union",
                new_active.len()
            );
            let mut union: Vec<usize> = new_active
                .iter()
                .chain(active.iter())
                .copied()
                .collect();
            union.sort_unstable();
            union.dedup();
            active = union;
            union_next = true;
        } else {
            active = new_active;
        }
        seen.insert(active.clone());
    }

    // Budget exhausted: report the non-converged state with its trace.
    let x = warm.unwrap_or_else(|| vec![0.0; sys.reduced.n_free()]);
    let u_conf = sys.reduced.scatter(&x);
    let u_all = sys.prolongation.mul_vec(&u_conf);
    Ok(ContactSolution {
        u_conforming: u_conf,
        u_all,
        active,
        converged: false,
        sweeps,
    })
}

/// Maximum violation `(B u - D)_i` over the active pairs, clamped at zero.
pub fn interpenetration(b: &CsrMatrix, gaps: &[f64], u: &[f64], active: &[usize]) -> f64 {
    let bu = b.mul_vec(u);
    active
        .iter()
        .map(|&i| bu[i] - gaps[i])
        .fold(0.0, f64::max)
        .max(0.0)
}

/// One sample of the contact pressure profile.
#[derive(Debug, Clone, Copy)]
pub struct PressureSample {
    /// Arc distance from the contact-zone center (non-negative).
    pub r: f64,
    /// Normal pressure, positive in compression.
    pub pressure: f64,
    pub position: [f64; 2],
}

/// Contact pressure along the solid-1 contact boundary, recovered from the
/// smoothed nodal stress field: `p = -(sigma n) . n`, with `r = 0` at the
/// pair of smallest initial gap. Arc distance accumulates along the
/// polyline of contact nodes.
pub fn contact_pressure_profile(
    space: &FeSpace,
    pairing: &ContactPairing,
    stress: &[[f64; 3]],
) -> Vec<PressureSample> {
    let n = pairing.normal;
    // Pairs are already ordered by transverse coordinate.
    let nodes: Vec<usize> = pairing.pairs.iter().map(|&(a, _)| a).collect();
    let center = pairing
        .gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut arc = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        let a = space.node_coords[nodes[i - 1]];
        let b = space.node_coords[nodes[i]];
        arc[i] = arc[i - 1] + ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    }
    nodes
        .iter()
        .enumerate()
        .map(|(i, &node)| {
            let s = stress[node];
            let traction = s[0] * n[0] * n[0] + 2.0 * s[2] * n[0] * n[1] + s[1] * n[1] * n[1];
            PressureSample {
                r: (arc[i] - arc[center]).abs(),
                pressure: -traction,
                position: space.node_coords[node],
            }
        })
        .collect()
}
