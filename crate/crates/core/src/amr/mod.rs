//! Estimate–mark–stop–refine driver with the nested contact loop.
//!
//! Error estimation follows Zienkiewicz–Zhu: a smoothed nodal stress field
//! is recovered per solid by extrapolating Gauss-point stresses to the
//! nodes and volume-averaging over each node's element patch; the
//! element-wise energy-norm difference between smoothed and raw stress
//! drives the marking.

use crate::contact::{
    pair_nodes, solve_contact, ContactPairing, ContactSolution, ContactSystem, PenaltyConfig,
};
use crate::error::{Error, Result};
use crate::fem::{
    apply_dirichlet, assemble_stiffness, build_prolongation, form_conforming, DirichletBc, DofMap,
    FeSpace, Materials,
};
use crate::mesh::{BoundaryTag, ElementId, HangingConstraint, Mesh};
use crate::parallel;
use crate::partition::{plan_partition, validate_plan, PartitionPlan, RegionState};
use crate::quadrature::GaussRule;
use crate::sparse::CsrMatrix;
use std::collections::HashMap;


/// Which optimality criterion drives detection and which test stops the
/// loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    /// Equidistributed (global) threshold with the global-error stop.
    ZzGlobal,
    /// Element-local threshold with the marked-area stop.
    LocLocal,
}

#[derive(Debug, Clone)]
pub struct AmrConfig {
    pub combination: Combination,
    /// Relative global target `e` (ZZ criterion).
    pub target_global: f64,
    /// Relative local target (LOC criterion).
    pub target_local: f64,
    /// Marked-area fraction `delta` of the local stop.
    pub marked_area_fraction: f64,
    pub max_iterations: usize,
    pub penalty: PenaltyConfig,
    /// Logical ranks of the partition planner.
    pub ranks: usize,
    /// Balance coefficient `c` of the contact-rank formula.
    pub balance_coefficient: f64,
}

/// Element-wise and global energy-norm error estimates.
#[derive(Debug, Clone)]
pub struct ErrorField {
    /// Estimated error per leaf (leaf order of the space).
    pub element_error: Vec<f64>,
    /// Energy norm per leaf (elastic energy plus the error term).
    pub element_energy: Vec<f64>,
    pub global_error: f64,
    pub global_energy: f64,
}

impl ErrorField {
    /// Relative global estimated error.
    pub fn relative_global(&self) -> f64 {
        if self.global_energy == 0.0 {
            0.0
        } else {
            self.global_error / self.global_energy
        }
    }
}

/// Everything derived from a mesh and a solution order.
pub struct Discretization {
    pub space: FeSpace,
    pub dofs: DofMap,
    pub constraints: Vec<HangingConstraint>,
    pub prolongation: CsrMatrix,
}

pub fn discretize(mesh: &Mesh, order: usize) -> Result<Discretization> {
    let space = FeSpace::new(mesh, order)?;
    let constraints = mesh.hanging_constraints()?;
    let dofs = DofMap::new(&space, &constraints)?;
    let prolongation = build_prolongation(&dofs, &constraints)?;
    Ok(Discretization {
        space,
        dofs,
        constraints,
        prolongation,
    })
}

/// Builds the Dirichlet constraint set from the tagged boundary, with
/// per-component values from `values(solid, position)`.
pub fn dirichlet_from_tags(
    space: &FeSpace,
    dofs: &DofMap,
    values: &dyn Fn(u8, [f64; 2]) -> [Option<f64>; 2],
) -> DirichletBc {
    let mut bc = DirichletBc::new();
    let nodes = space.nodes_with_tag(BoundaryTag::Dirichlet);
    if nodes.is_empty() {
        log::warn!("Dirichlet tag matches no nodes");
    }
    for n in nodes {
        debug_assert!(!dofs.is_hanging(n), "Dirichlet node is hanging");
        let v = values(space.node_solid(n), space.node_coords[n]);
        for comp in 0..2 {
            if let Some(val) = v[comp] {
                bc.fix(dofs.dof(n, comp), val);
            }
        }
    }
    bc
}

// ----------------------------------------------------------------------
// Stress recovery.
// ----------------------------------------------------------------------

/// Gauss-point stresses of one leaf, Voigt (xx, yy, xy), plus the leaf's
/// Jacobian determinants at those points. Row-major over the tensor grid.
fn gauss_stresses(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    materials: &Materials,
    u_all: &[f64],
    le: usize,
    rule: &GaussRule,
) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    let e = space.leaves[le];
    let d = materials.of(mesh.solid_of(e))?.stiffness_matrix();
    let ng = rule.len();
    let jacs = mesh.jacobian_grid(e, &rule.points);
    let nodes = &space.elem_nodes[le];
    let ue: Vec<[f64; 2]> = nodes
        .iter()
        .map(|&n| [u_all[dofs.dof(n, 0)], u_all[dofs.dof(n, 1)]])
        .collect();
    let mut stresses = Vec::with_capacity(ng * ng);
    let mut dets = Vec::with_capacity(ng * ng);
    for b in 0..ng {
        for a in 0..ng {
            let j = jacs[b * ng + a];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det <= 0.0 {
                return Err(Error::Geometry(format!(
                    "non-positive Jacobian in element {e}"
                )));
            }
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            let grads = space.shape_gradients(rule.points[a], rule.points[b]);
            let mut eps = [0.0f64; 3];
            for (n, rg) in grads.iter().enumerate() {
                let gx = inv[0][0] * rg[0] + inv[1][0] * rg[1];
                let gy = inv[0][1] * rg[0] + inv[1][1] * rg[1];
                eps[0] += gx * ue[n][0];
                eps[1] += gy * ue[n][1];
                eps[2] += gy * ue[n][0] + gx * ue[n][1];
            }
            let sig = [
                d[0][0] * eps[0] + d[0][1] * eps[1],
                d[1][0] * eps[0] + d[1][1] * eps[1],
                d[2][2] * eps[2],
            ];
            stresses.push(sig);
            dets.push(det);
        }
    }
    Ok((stresses, dets))
}

/// Smoothed nodal stress by patch projection: Gauss-point stresses are
/// extrapolated to the element nodes through the inverse Gauss-to-node
/// interpolation and volume-averaged over each node's patch. Solids never
/// share nodes, so the recovery is per-solid automatically.
pub fn recover_stress(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    materials: &Materials,
    u_all: &[f64],
) -> Result<Vec<[f64; 3]>> {
    let k = space.order;
    let rule = GaussRule::new(k + 1);
    // 1D extrapolation: value at lattice node i from values at Gauss
    // points, i.e. the Gauss-node Lagrange basis evaluated at the lattice.
    let gauss_basis = crate::basis::LagrangeBasis::new(rule.points.clone());
    let lattice = space.basis().nodes().to_vec();
    let extrap: Vec<Vec<f64>> = lattice.iter().map(|&x| gauss_basis.eval(x)).collect();

    let n1 = k + 1;
    let per_leaf = parallel::map_indexed(space.leaves.len(), |le| -> Result<_> {
        let (sig, dets) = gauss_stresses(mesh, space, dofs, materials, u_all, le, &rule)?;
        // Element measure from the same rule (adequate patch weight).
        let mut measure = 0.0;
        for b in 0..n1 {
            for a in 0..n1 {
                measure += rule.weights[a] * rule.weights[b] * dets[b * n1 + a];
            }
        }
        let mut nodal = vec![[0.0f64; 3]; n1 * n1];
        for j in 0..n1 {
            for i in 0..n1 {
                let mut acc = [0.0f64; 3];
                for b in 0..n1 {
                    for a in 0..n1 {
                        let w = extrap[i][a] * extrap[j][b];
                        let s = sig[b * n1 + a];
                        acc[0] += w * s[0];
                        acc[1] += w * s[1];
                        acc[2] += w * s[2];
                    }
                }
                nodal[j * n1 + i] = acc;
            }
        }
        Ok((nodal, measure))
    });

    let mut num = vec![[0.0f64; 3]; space.n_nodes()];
    let mut den = vec![0.0f64; space.n_nodes()];
    for (le, item) in per_leaf.into_iter().enumerate() {
        let (nodal, w) = item?;
        for (idx, &node) in space.elem_nodes[le].iter().enumerate() {
            for c in 0..3 {
                num[node][c] += w * nodal[idx][c];
            }
            den[node] += w;
        }
    }
    for (n, d) in den.iter().enumerate() {
        if *d > 0.0 {
            for c in 0..3 {
                num[n][c] /= d;
            }
        }
    }
    Ok(num)
}

// ----------------------------------------------------------------------
// Error estimation.
// ----------------------------------------------------------------------

/// Element errors `xi_T = (int (s* - s_h) : (e* - e_h))^(1/2)` and element
/// energies `w_T^2 = int s_h : e_h + xi_T^2`, with the recovered strain
/// taken as compliance times recovered stress. Integrals are evaluated at
/// the Gauss points where the raw stress is defined.
pub fn element_errors(
    mesh: &Mesh,
    space: &FeSpace,
    dofs: &DofMap,
    materials: &Materials,
    u_all: &[f64],
    recovered: &[[f64; 3]],
) -> Result<ErrorField> {
    let k = space.order;
    let rule = GaussRule::new(k + 1);
    let n1 = k + 1;
    let per_leaf = parallel::map_indexed(space.leaves.len(), |le| -> Result<(f64, f64)> {
        let e = space.leaves[le];
        let c_inv = materials.of(mesh.solid_of(e))?.compliance_matrix();
        let (sig_h, dets) = gauss_stresses(mesh, space, dofs, materials, u_all, le, &rule)?;
        let nodes = &space.elem_nodes[le];
        let mut xi2 = 0.0;
        let mut energy = 0.0;
        for b in 0..n1 {
            for a in 0..n1 {
                let qp = b * n1 + a;
                let w = rule.weights[a] * rule.weights[b] * dets[qp];
                // Recovered stress interpolated with the solution basis.
                let shape = space.shape_values(rule.points[a], rule.points[b]);
                let mut s_star = [0.0f64; 3];
                for (idx, &node) in nodes.iter().enumerate() {
                    for c in 0..3 {
                        s_star[c] += shape[idx] * recovered[node][c];
                    }
                }
                let ds = [
                    s_star[0] - sig_h[qp][0],
                    s_star[1] - sig_h[qp][1],
                    s_star[2] - sig_h[qp][2],
                ];
                // Voigt strain (with engineering shear) from compliance;
                // the xy product then counts the shear term twice, matching
                // the tensor contraction.
                let de = [
                    c_inv[0][0] * ds[0] + c_inv[0][1] * ds[1],
                    c_inv[1][0] * ds[0] + c_inv[1][1] * ds[1],
                    c_inv[2][2] * ds[2],
                ];
                xi2 += w * (ds[0] * de[0] + ds[1] * de[1] + ds[2] * de[2]);
                let eh = [
                    c_inv[0][0] * sig_h[qp][0] + c_inv[0][1] * sig_h[qp][1],
                    c_inv[1][0] * sig_h[qp][0] + c_inv[1][1] * sig_h[qp][1],
                    c_inv[2][2] * sig_h[qp][2],
                ];
                energy +=
                    w * (sig_h[qp][0] * eh[0] + sig_h[qp][1] * eh[1] + sig_h[qp][2] * eh[2]);
            }
        }
        Ok((xi2.max(0.0), energy))
    });

    let mut element_error = Vec::with_capacity(space.leaves.len());
    let mut element_energy = Vec::with_capacity(space.leaves.len());
    let mut xi2_total = 0.0;
    let mut w2_total = 0.0;
    for item in per_leaf {
        let (xi2, energy) = item?;
        let w2 = energy + xi2;
        element_error.push(xi2.sqrt());
        element_energy.push(w2.sqrt());
        xi2_total += xi2;
        w2_total += w2;
    }
    Ok(ErrorField {
        element_error,
        element_energy,
        global_error: xi2_total.sqrt(),
        global_energy: w2_total.sqrt(),
    })
}

/// Maximum permissible element error: a single equidistributed value
/// `e * w_total / sqrt(N_E)` for the ZZ criterion, or the element-local
/// `e_loc * w_T` for the LOC criterion.
pub fn thresholds(field: &ErrorField, config: &AmrConfig) -> Vec<f64> {
    match config.combination {
        Combination::ZzGlobal => {
            let n_e = field.element_error.len() as f64;
            let t = config.target_global * field.global_energy / n_e.sqrt();
            vec![t; field.element_error.len()]
        }
        Combination::LocLocal => field
            .element_energy
            .iter()
            .map(|w| config.target_local * w)
            .collect(),
    }
}

/// Detection: elements whose error exceeds their threshold, enlarged so
/// that the partner of every marked contact element is marked too (keeps
/// refined contact boundaries matched).
pub fn mark(
    field: &ErrorField,
    limits: &[f64],
    space: &FeSpace,
    element_pairs: &[(ElementId, ElementId)],
) -> Vec<ElementId> {
    let mut marked: Vec<ElementId> = field
        .element_error
        .iter()
        .zip(limits)
        .enumerate()
        .filter_map(|(le, (xi, max))| (xi > max).then_some(space.leaves[le]))
        .collect();
    let base: std::collections::HashSet<ElementId> = marked.iter().copied().collect();
    for &(e1, e2) in element_pairs {
        if base.contains(&e1) && !base.contains(&e2) {
            marked.push(e2);
        }
        if base.contains(&e2) && !base.contains(&e1) {
            marked.push(e1);
        }
    }
    marked.sort_unstable();
    marked.dedup();
    marked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Global criterion met (Combination 1).
    GlobalErrorMet,
    /// Nothing marked.
    MarkedEmpty,
    /// Marked area below the `delta` fraction (Combination 2).
    MarkedAreaSmall,
    /// Iteration budget exhausted.
    Budget,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::GlobalErrorMet => "GLOBAL_ERROR_MET",
            StopReason::MarkedEmpty => "MARKED_EMPTY",
            StopReason::MarkedAreaSmall => "MARKED_AREA_SMALL",
            StopReason::Budget => "BUDGET",
        };
        write!(f, "{s}")
    }
}

/// Stop test, evaluated before refining (so the final reported mesh is the
/// last solved one). Returns the marked-area fraction alongside.
pub fn should_stop(
    field: &ErrorField,
    marked: &[ElementId],
    mesh: &Mesh,
    config: &AmrConfig,
) -> Result<(Option<StopReason>, f64)> {
    let mut marked_measure = 0.0;
    for &e in marked {
        marked_measure += mesh.element_measure(e)?;
    }
    let eta = marked_measure / mesh.initial_measure();
    let reason = match config.combination {
        Combination::ZzGlobal => {
            if field.global_error <= config.target_global * field.global_energy {
                Some(StopReason::GlobalErrorMet)
            } else if marked.is_empty() {
                Some(StopReason::MarkedEmpty)
            } else {
                None
            }
        }
        Combination::LocLocal => {
            if marked.is_empty() {
                Some(StopReason::MarkedEmpty)
            } else if marked_measure <= config.marked_area_fraction * mesh.initial_measure() {
                Some(StopReason::MarkedAreaSmall)
            } else {
                None
            }
        }
    };
    Ok((reason, eta))
}

// ----------------------------------------------------------------------
// The combined loop.
// ----------------------------------------------------------------------

/// One row of the adaptive-loop report.
#[derive(Debug, Clone)]
pub struct AmrIteration {
    pub n: usize,
    pub n_elements: usize,
    pub n_conforming_dofs: usize,
    /// Relative global estimated error.
    pub gamma: f64,
    /// Marked-area fraction.
    pub eta: f64,
    pub marked: usize,
    pub contact_sweeps: usize,
    pub pcg_iterations: usize,
    pub active_size: usize,
    pub contact_ranks: usize,
    pub imbalance: f64,
    pub stop: Option<StopReason>,
}

pub struct AmrOutcome {
    pub mesh: Mesh,
    pub disc: Discretization,
    pub u_all: Vec<f64>,
    pub u_conforming: Vec<f64>,
    pub stress: Vec<[f64; 3]>,
    pub field: ErrorField,
    pub pairing: ContactPairing,
    pub contact: ContactSolution,
    pub report: Vec<AmrIteration>,
    pub stop: StopReason,
    pub plan: PartitionPlan,
    /// Rank of every element under the final plan (children inherit).
    pub rank_of: Vec<u32>,
}

/// Solves the contact problem on a fixed discretization (assembly,
/// conforming restriction, Dirichlet elimination, contact loop).
pub fn solve_fixed(
    mesh: &Mesh,
    disc: &Discretization,
    materials: &Materials,
    pairing: &ContactPairing,
    dirichlet: &dyn Fn(u8, [f64; 2]) -> [Option<f64>; 2],
    penalty: &PenaltyConfig,
) -> Result<ContactSolution> {
    let (k_all, l_all) = assemble_stiffness(mesh, &disc.space, &disc.dofs, materials)?;
    let (k, l) = form_conforming(&k_all, &l_all, &disc.prolongation)?;
    let bc = dirichlet_from_tags(&disc.space, &disc.dofs, dirichlet);
    let reduced = apply_dirichlet(&k, &l, &bc)?;
    let b_conf = pairing.b_all.matmul(&disc.prolongation)?;
    let sys = ContactSystem {
        reduced: &reduced,
        b_conforming: &b_conf,
        gaps: &pairing.gaps,
        prolongation: &disc.prolongation,
    };
    solve_contact(&sys, penalty)
}

/// The combined adaptive loop: solve (warm-started contact), estimate,
/// mark with contact enlargement, stop-check, refine, re-pair and
/// rebalance the partition plan, then iterate.
pub fn amr_contact_loop(
    mut mesh: Mesh,
    materials: &Materials,
    normal: [f64; 2],
    dirichlet: &dyn Fn(u8, [f64; 2]) -> [Option<f64>; 2],
    config: &AmrConfig,
) -> Result<AmrOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    let mut rank_of: Vec<u32> = vec![0; mesh.n_elements()];
    let mut warm_nodes: Option<Vec<(usize, usize)>> = None;
    let mut report: Vec<AmrIteration> = Vec::new();

    for n in 1..=config.max_iterations {
        let disc = discretize(&mesh, 1)?;
        let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, normal)?;

        // Rebalanced partition of the current mesh.
        let regions = region_states(&mesh, &rank_of, &pairing.element_pairs);
        let plan = plan_partition(&regions, config.ranks, config.balance_coefficient)?;
        let validation = validate_plan(&plan, &mesh, &pairing.element_pairs);
        if validation.colocation_violations != 0 {
            return Err(Error::Internal(
                "partition plan split a contact pair".into(),
            ));
        }
        for (&e, &r) in &plan.rank_of {
            rank_of[e] = r;
        }

        // Warm start: surviving node pairs keep their active status.
        let mut penalty = config.penalty.clone();
        if let Some(prev) = &warm_nodes {
            let index: HashMap<(usize, usize), usize> = pairing
                .pairs
                .iter()
                .enumerate()
                .map(|(i, &p)| (p, i))
                .collect();
            let carried: Vec<usize> = prev.iter().filter_map(|p| index.get(p).copied()).collect();
            penalty.initial_active = Some(carried);
        }

        let contact = solve_fixed(&mesh, &disc, materials, &pairing, dirichlet, &penalty)?;
        if !contact.converged {
            return Err(Error::ContactNotConverged {
                sweeps: contact.sweeps.len(),
            });
        }
        warm_nodes = Some(
            contact
                .active
                .iter()
                .map(|&i| pairing.pairs[i])
                .collect(),
        );

        let stress = recover_stress(&mesh, &disc.space, &disc.dofs, materials, &contact.u_all)?;
        let field = element_errors(
            &mesh,
            &disc.space,
            &disc.dofs,
            materials,
            &contact.u_all,
            &stress,
        )?;
        let limits = thresholds(&field, config);
        let marked = mark(&field, &limits, &disc.space, &pairing.element_pairs);
        let (mut stop, eta) = should_stop(&field, &marked, &mesh, config)?;
        if stop.is_none() && n == config.max_iterations {
            stop = Some(StopReason::Budget);
        }

        report.push(AmrIteration {
            n,
            n_elements: disc.space.leaves.len(),
            n_conforming_dofs: disc.dofs.n_conforming_dofs(),
            gamma: field.relative_global(),
            eta,
            marked: marked.len(),
            contact_sweeps: contact.sweeps.len(),
            pcg_iterations: contact.total_pcg_iterations(),
            active_size: contact.active.len(),
            contact_ranks: plan.contact_ranks,
            imbalance: validation.imbalance,
            stop,
        });

        if let Some(reason) = stop {
            return Ok(AmrOutcome {
                mesh,
                disc,
                u_all: contact.u_all.clone(),
                u_conforming: contact.u_conforming.clone(),
                stress,
                field,
                pairing,
                contact,
                report,
                stop: reason,
                plan,
                rank_of,
            });
        }

        // Refine and inherit ranks; the next iteration re-pairs and
        // reassesses the partition.
        let old_len = mesh.n_elements();
        mesh.refine(&marked)?;
        for e in old_len..mesh.n_elements() {
            let parent = mesh.element(e).parent.expect("new element has a parent");
            rank_of.push(rank_of[parent]);
        }
    }
    unreachable!("loop returns at the budget stop");
}

/// Ownership of the current leaves by rank, grouped by super-element for
/// the contact zone. Regions are reported in ascending rank order.
pub fn region_states(
    mesh: &Mesh,
    rank_of: &[u32],
    element_pairs: &[(ElementId, ElementId)],
) -> Vec<RegionState> {
    use std::collections::BTreeMap;
    let by_solid1: HashMap<ElementId, ElementId> = element_pairs.iter().copied().collect();
    let solid2: std::collections::HashSet<ElementId> =
        element_pairs.iter().map(|&(_, e2)| e2).collect();
    let mut regions: BTreeMap<u32, RegionState> = BTreeMap::new();
    for e in mesh.leaves() {
        let r = rank_of[e];
        let region = regions.entry(r).or_insert_with(|| RegionState {
            rank: r,
            super_elements: Vec::new(),
            regular: Vec::new(),
        });
        if let Some(&partner) = by_solid1.get(&e) {
            region.super_elements.push((e, partner));
        } else if !solid2.contains(&e) {
            region.regular.push(e);
        }
    }
    regions.into_values().collect()
}
