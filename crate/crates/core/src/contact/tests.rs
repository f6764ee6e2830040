use super::*;
use crate::amr::{discretize, recover_stress, solve_fixed};
use crate::fem::{Material, Materials};
use crate::mesh::{from_blocks, Block, Curve, Mesh};
use crate::study::HertzSetup;
use approx::assert_relative_eq;

fn hertz_setup(n0: usize, q: usize) -> HertzSetup {
    HertzSetup {
        radius: 2.0,
        gap: 2.0,
        alpha: 0.015,
        n0,
        geom_order: q,
        materials: Materials::uniform(Material::new(210e9, 0.3).unwrap()),
    }
}

/// Two stacked unit squares with flat facing boundaries separated by `gap`.
fn stacked_blocks(gap: f64) -> Vec<Block> {
    let d = Some(BoundaryTag::Dirichlet);
    let lower = Block {
        corners: [
            [0.0, -1.0 - 0.5 * gap],
            [1.0, -1.0 - 0.5 * gap],
            [1.0, -0.5 * gap],
            [0.0, -0.5 * gap],
        ],
        edges: [Curve::Line; 4],
        solid: 1,
        tags: [d, None, Some(BoundaryTag::Contact(1)), None],
    };
    let upper = Block {
        corners: [
            [0.0, 0.5 * gap],
            [1.0, 0.5 * gap],
            [1.0, 1.0 + 0.5 * gap],
            [0.0, 1.0 + 0.5 * gap],
        ],
        edges: [Curve::Line; 4],
        solid: 2,
        tags: [Some(BoundaryTag::Contact(2)), None, d, None],
    };
    vec![lower, upper]
}

#[test]
fn mirrored_flat_faces_pair_with_the_gap() {
    let gap = 0.25;
    let mesh = from_blocks(&stacked_blocks(gap), 4, 1).unwrap();
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, [0.0, 1.0]).unwrap();
    assert_eq!(pairing.pairs.len(), 5);
    for &g in &pairing.gaps {
        assert_relative_eq!(g, gap, epsilon = 1e-14);
    }
    // The pairing is the mirror map: matching x coordinates.
    for &(a, b) in &pairing.pairs {
        let pa = disc.space.node_coords[a];
        let pb = disc.space.node_coords[b];
        assert_relative_eq!(pa[0], pb[0], epsilon = 1e-14);
    }
    // Element pairing matches elements one by one across the interface.
    assert_eq!(pairing.element_pairs.len(), 4);
}

#[test]
fn zero_gap_faces_pair_with_zero_gaps() {
    let mesh = from_blocks(&stacked_blocks(0.0), 3, 1).unwrap();
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, [0.0, 1.0]).unwrap();
    for &g in &pairing.gaps {
        assert_relative_eq!(g, 0.0, epsilon = 1e-14);
    }
}

#[test]
fn hertz_pairing_matches_exhaustive_transverse_search() {
    let s = hertz_setup(4, 4);
    let mesh = s.mesh().unwrap();
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, s.normal()).unwrap();
    // Brute-force oracle: for every solid-1 contact node take the solid-2
    // contact node nearest in the transverse (x) coordinate.
    let n1 = disc.space.contact_nodes(1);
    let n2 = disc.space.contact_nodes(2);
    assert_eq!(pairing.pairs.len(), n1.len());
    for &a in &n1 {
        let xa = disc.space.node_coords[a][0];
        let best = n2
            .iter()
            .copied()
            .min_by(|&p, &q| {
                let dp = (disc.space.node_coords[p][0] - xa).abs();
                let dq = (disc.space.node_coords[q][0] - xa).abs();
                dp.total_cmp(&dq)
            })
            .unwrap();
        assert!(
            pairing.pairs.contains(&(a, best)),
            "node {a} should pair with {best}"
        );
    }
    // Bijection: each side appears exactly once.
    let mut seen1: Vec<usize> = pairing.pairs.iter().map(|p| p.0).collect();
    let mut seen2: Vec<usize> = pairing.pairs.iter().map(|p| p.1).collect();
    seen1.sort_unstable();
    seen1.dedup();
    seen2.sort_unstable();
    seen2.dedup();
    assert_eq!(seen1.len(), pairing.pairs.len());
    assert_eq!(seen2.len(), pairing.pairs.len());
    // Gaps are the along-normal separations and are non-negative here.
    for (i, &(a, b)) in pairing.pairs.iter().enumerate() {
        let ya = disc.space.node_coords[a][1];
        let yb = disc.space.node_coords[b][1];
        assert_relative_eq!(pairing.gaps[i], yb - ya, epsilon = 1e-12);
        assert!(pairing.gaps[i] >= 0.0);
    }
}

#[test]
fn active_set_is_the_componentwise_comparison() {
    // Single pair acting on the y DOFs of two nodes.
    let b = CsrMatrix::from_triplets(1, 4, vec![(0, 1, 1.0), (0, 3, -1.0)]).unwrap();
    let gaps = vec![0.1];
    // u_y1 = 0.2, u_y2 = 0: relative approach 0.2 >= 0.1 -> active.
    assert_eq!(active_set(&b, &gaps, &[0.0, 0.2, 0.0, 0.0]), vec![0]);
    // u_y1 = 0.05: inactive.
    assert!(active_set(&b, &gaps, &[0.0, 0.05, 0.0, 0.0]).is_empty());
    // Equality counts as active.
    assert_eq!(active_set(&b, &gaps, &[0.0, 0.1, 0.0, 0.0]), vec![0]);
    // Zero displacement: positive gaps inactive, zero gaps active.
    assert!(active_set(&b, &gaps, &[0.0; 4]).is_empty());
    assert_eq!(active_set(&b, &[0.0], &[0.0; 4]), vec![0]);
}

#[test]
fn restriction_and_projection_match_the_dense_product() {
    let s = hertz_setup(2, 2);
    let mut mesh = s.mesh().unwrap();
    // Refine one contact element pair to plant hanging nodes near the
    // contact boundary.
    let disc0 = discretize(&mesh, 1).unwrap();
    let pairing0 = pair_nodes(&mesh, &disc0.space, &disc0.dofs, s.normal()).unwrap();
    let (e1, e2) = pairing0.element_pairs[1];
    mesh.refine(&[e1, e2]).unwrap();
    let disc = discretize(&mesh, 1).unwrap();
    assert!(!disc.constraints.is_empty());
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, s.normal()).unwrap();
    let active: Vec<usize> = (0..pairing.pairs.len()).step_by(2).collect();
    let (b_hat, d_hat) =
        restrict_and_project(&pairing.b_all, &pairing.gaps, &active, &disc.prolongation)
            .unwrap();
    // Dense oracle.
    let b_dense = pairing.b_all.to_dense();
    let p_dense = disc.prolongation.to_dense();
    let rows: Vec<usize> = active.clone();
    let restricted = b_dense.select_rows(rows.as_slice());
    let expected = restricted * p_dense;
    let got = b_hat.to_dense();
    assert!((got - expected).abs().max() < 1e-13);
    for (i, &a) in active.iter().enumerate() {
        assert_relative_eq!(d_hat[i], pairing.gaps[a]);
    }
}

#[test]
fn empty_active_set_leaves_the_elastic_system() {
    let k = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
    let l = vec![1.0, -1.0];
    let b = CsrMatrix::zeros(0, 2);
    let (a, rhs) = form_penalized(&k, &l, &b, &[], 1e6).unwrap();
    assert_eq!(a.to_dense(), k.to_dense());
    assert_eq!(rhs, l);
}

/// Scalar spring model: elasticity stiffness kappa pressed by displacement
/// delta against a gap d. The penalized solve has the closed form
/// u = (kappa delta + k_N d) / (kappa + k_N).
fn spring_solution(kappa: f64, delta: f64, gap: f64, k_n: f64) -> (f64, f64) {
    let k = CsrMatrix::from_triplets(1, 1, vec![(0, 0, kappa)]).unwrap();
    let l = vec![kappa * delta];
    let b = CsrMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]).unwrap();
    let (a, rhs) = form_penalized(&k, &l, &b, &[gap], k_n).unwrap();
    let sol = pcg_solve(&a, &rhs, 1e-14, 10, None).unwrap();
    let u = sol.x[0];
    let pen = interpenetration(&b, &[gap], &sol.x, &[0]);
    (u, pen)
}

#[test]
fn scalar_spring_matches_the_closed_form() {
    let (kappa, delta, gap, k_n) = (2.0, 1.0, 0.25, 100.0);
    let (u, pen) = spring_solution(kappa, delta, gap, k_n);
    let expected_u = (kappa * delta + k_n * gap) / (kappa + k_n);
    assert_relative_eq!(u, expected_u, max_relative = 1e-12);
    let expected_pen = kappa * (delta - gap) / (kappa + k_n);
    assert_relative_eq!(pen, expected_pen, max_relative = 1e-10);
    // Tenfold penalty cuts the interpenetration by (almost) tenfold.
    let (_, pen10) = spring_solution(kappa, delta, gap, 10.0 * k_n);
    assert_relative_eq!(
        pen10,
        kappa * (delta - gap) / (kappa + 10.0 * k_n),
        max_relative = 1e-10
    );
    assert!(pen10 < pen / 9.0);
}

#[test]
fn interpenetration_is_zero_without_active_pairs() {
    let b = CsrMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
    assert_eq!(interpenetration(&b, &[0.5], &[1.0, 0.0], &[]), 0.0);
}

fn solve_hertz(setup: &HertzSetup, mesh: &Mesh, penalty: &PenaltyConfig) -> (ContactSolution, ContactPairing) {
    let disc = discretize(mesh, 1).unwrap();
    let pairing = pair_nodes(mesh, &disc.space, &disc.dofs, setup.normal()).unwrap();
    let dirichlet = setup.dirichlet();
    let sol = solve_fixed(mesh, &disc, &setup.materials, &pairing, &dirichlet, penalty).unwrap();
    (sol, pairing)
}

#[test]
fn separated_solids_under_tension_converge_immediately() {
    let s = hertz_setup(2, 2);
    let mesh = s.mesh().unwrap();
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, s.normal()).unwrap();
    // Pull the solids apart: negative face displacement.
    let u_d = -0.1;
    let dirichlet = move |solid: u8, _p: [f64; 2]| -> [Option<f64>; 2] {
        [Some(0.0), Some(if solid == 1 { u_d } else { -u_d })]
    };
    let penalty = PenaltyConfig::new(1e4 * 210e9);
    let sol = solve_fixed(&mesh, &disc, &s.materials, &pairing, &dirichlet, &penalty).unwrap();
    assert!(sol.converged);
    assert!(sol.active.is_empty());
    assert!(sol.sweeps.len() <= 2, "took {} sweeps", sol.sweeps.len());
}

#[test]
fn hertz_active_set_is_stable_centered_and_symmetric() {
    let s = hertz_setup(4, 10);
    let mesh = s.mesh().unwrap();
    let penalty = PenaltyConfig::new(1e4 * 210e9);
    let (sol, pairing) = solve_hertz(&s, &mesh, &penalty);
    assert!(sol.converged);
    assert!(!sol.active.is_empty());
    // Fixed-point consistency: recomputing the active set is idempotent.
    let recomputed = active_set(&pairing.b_all, &pairing.gaps, &sol.u_all);
    assert_eq!(recomputed, sol.active);
    // Central pairs active, outermost pairs inactive.
    let gaps = &pairing.gaps;
    let center = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(sol.active.contains(&center));
    let first = 0;
    let last = gaps.len() - 1;
    assert!(!sol.active.contains(&first));
    assert!(!sol.active.contains(&last));
    // Penalty sign: active pairs are compressed (B U >= D).
    let bu = pairing.b_all.mul_vec(&sol.u_all);
    for &i in &sol.active {
        assert!(bu[i] - gaps[i] >= 0.0);
    }
    // Symmetry about the contact center in the transverse coordinate.
    let disc = discretize(&mesh, 1).unwrap();
    let xs: Vec<f64> = sol
        .active
        .iter()
        .map(|&i| disc.space.node_coords[pairing.pairs[i].0][0])
        .collect();
    for x in &xs {
        let mirrored = -x;
        assert!(
            xs.iter().any(|y| (y - mirrored).abs() < 1e-9),
            "active set asymmetric at x = {x}"
        );
    }
}

#[test]
fn warm_start_reaches_the_cold_fixed_point() {
    let s = hertz_setup(4, 6);
    let mesh = s.mesh().unwrap();
    let penalty = PenaltyConfig::new(1e4 * 210e9);
    let (cold, pairing) = solve_hertz(&s, &mesh, &penalty);
    assert!(cold.converged);
    let mut warm_cfg = penalty.clone();
    warm_cfg.initial_active = Some(cold.active.clone());
    let disc = discretize(&mesh, 1).unwrap();
    let dirichlet = s.dirichlet();
    let warm = solve_fixed(&mesh, &disc, &s.materials, &pairing, &dirichlet, &warm_cfg).unwrap();
    assert!(warm.converged);
    assert_eq!(warm.active, cold.active);
    assert!(warm.sweeps.len() <= cold.sweeps.len());
    let norm: f64 = cold.u_all.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = cold
        .u_all
        .iter()
        .zip(&warm.u_all)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-6 * norm, "relative drift {:.3e}", diff / norm);
}

#[test]
fn interpenetration_decreases_with_the_penalty_coefficient() {
    let s = hertz_setup(2, 6);
    let mesh = s.mesh().unwrap();
    let e_mod = 210e9;
    let mut previous = f64::MAX;
    for factor in [1.0, 10.0, 1e2, 1e3, 1e4] {
        let penalty = PenaltyConfig::new(factor * e_mod);
        let (sol, pairing) = solve_hertz(&s, &mesh, &penalty);
        assert!(sol.converged);
        let pen = interpenetration(&pairing.b_all, &pairing.gaps, &sol.u_all, &sol.active);
        assert!(
            pen < previous,
            "interpenetration {pen:.3e} did not decrease (previous {previous:.3e})"
        );
        previous = pen;
    }
}

#[test]
fn uniform_compression_recovers_the_uniform_pressure() {
    // Flat-interface blocks squeezed vertically; nu = 0 keeps the exact
    // solution laterally uniform, so p = E * d within the penalty error.
    let e_mod = 1000.0;
    let d = 1e-3;
    let mesh = from_blocks(&stacked_blocks(0.0), 4, 1).unwrap();
    let mats = Materials::uniform(Material::new(e_mod, 0.0).unwrap());
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, [0.0, 1.0]).unwrap();
    let dirichlet = move |solid: u8, _p: [f64; 2]| -> [Option<f64>; 2] {
        [Some(0.0), Some(if solid == 1 { d } else { -d })]
    };
    let penalty = PenaltyConfig::new(1e8 * e_mod);
    let sol = solve_fixed(&mesh, &disc, &mats, &pairing, &dirichlet, &penalty).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.active.len(), pairing.pairs.len());
    let stress = recover_stress(&mesh, &disc.space, &disc.dofs, &mats, &sol.u_all).unwrap();
    let profile = contact_pressure_profile(&disc.space, &pairing, &stress);
    let p0 = e_mod * d;
    for s in &profile {
        assert_relative_eq!(s.pressure, p0, max_relative = 1e-6);
    }
}

#[test]
fn stress_free_body_has_zero_pressure_profile() {
    let mesh = from_blocks(&stacked_blocks(0.1), 3, 1).unwrap();
    let mats = Materials::uniform(Material::new(100.0, 0.2).unwrap());
    let disc = discretize(&mesh, 1).unwrap();
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, [0.0, 1.0]).unwrap();
    let dirichlet = |_s: u8, _p: [f64; 2]| -> [Option<f64>; 2] { [Some(0.0), Some(0.0)] };
    let penalty = PenaltyConfig::new(1e6 * 100.0);
    let sol = solve_fixed(&mesh, &disc, &mats, &pairing, &dirichlet, &penalty).unwrap();
    let stress = recover_stress(&mesh, &disc.space, &disc.dofs, &mats, &sol.u_all).unwrap();
    let profile = contact_pressure_profile(&disc.space, &pairing, &stress);
    for s in &profile {
        assert!(s.pressure.abs() < 1e-12);
    }
}
