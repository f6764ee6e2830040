// Temporary sizing probe; deleted before the suite is finalized.
use contact_amr::amr::{amr_contact_loop, AmrConfig, Combination};
use contact_amr::contact::PenaltyConfig;
use contact_amr::fem::{Material, Materials};
use contact_amr::study::{solve_uniform_cascade, HertzSetup};
use std::time::Instant;

fn setup(n0: usize) -> HertzSetup {
    HertzSetup {
        radius: 2.0,
        gap: 2.0,
        alpha: 0.015,
        n0,
        geom_order: 10,
        materials: Materials::uniform(Material::new(210e9, 0.3).unwrap()),
    }
}

#[test]
#[ignore]
fn probe_uniform_cascade() {
    let s = setup(2);
    for levels in [3usize, 4, 5] {
        let t = Instant::now();
        let solves = solve_uniform_cascade(&s, levels, 1, &PenaltyConfig::new(1e4 * 210e9)).unwrap();
        let last = solves.last().unwrap();
        println!(
            "levels {} -> N_E {} dofs {} pen {:.3e} sweeps {} pcg {} time {:?}",
            levels,
            last.mesh.n_leaves(),
            last.n_conforming_dofs(),
            last.interpenetration(),
            last.contact.sweeps.len(),
            last.contact.total_pcg_iterations(),
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_fit_and_amr2() {
    use contact_amr::contact::contact_pressure_profile;
    use contact_amr::hertz::calibrate_hertz;
    // Fine-ish reference fit.
    let s = setup(2);
    let t = Instant::now();
    let solves = solve_uniform_cascade(&s, 6, 1, &PenaltyConfig::new(1e4 * 210e9)).unwrap();
    let fine = solves.last().unwrap();
    println!(
        "reference: N_E {} dofs {} time {:?}",
        fine.mesh.n_leaves(),
        fine.n_conforming_dofs(),
        t.elapsed()
    );
    let stress = contact_amr::amr::recover_stress(
        &fine.mesh,
        &fine.disc.space,
        &fine.disc.dofs,
        &s.materials,
        &fine.u_all,
    )
    .unwrap();
    let profile = contact_pressure_profile(&fine.disc.space, &fine.pairing, &stress);
    let fit = calibrate_hertz(&profile).unwrap();
    println!(
        "fit: a {:.4} p0 {:.4e} residual {:.4}",
        fit.a, fit.p0, fit.residual
    );

    // AMR2 localization probe.
    let s4 = setup(4);
    let config = AmrConfig {
        combination: Combination::LocLocal,
        target_global: 0.02,
        target_local: 0.05,
        marked_area_fraction: 0.001,
        max_iterations: 10,
        penalty: PenaltyConfig::new(1e4 * 210e9),
        ranks: 8,
        balance_coefficient: 1.0,
    };
    let t = Instant::now();
    let dirichlet = s4.dirichlet();
    let out = amr_contact_loop(
        s4.mesh().unwrap(),
        &s4.materials,
        s4.normal(),
        &dirichlet,
        &config,
    )
    .unwrap();
    println!("amr2: stop {:?} time {:?}", out.stop, t.elapsed());
    for row in &out.report {
        println!(
            "  n {} N_E {} dofs {} gamma {:.4} eta {:.5} marked {}",
            row.n, row.n_elements, row.n_conforming_dofs, row.gamma, row.eta, row.marked
        );
    }
    // Where are the finest elements relative to r = a?
    let max_level = out.mesh.max_level();
    let shift = s4.radius + 0.5 * s4.gap;
    let mut rs: Vec<(f64, f64)> = Vec::new();
    for e in out.mesh.leaves() {
        if out.mesh.element(e).level == max_level {
            let c = out.mesh.geometry_map(e, 0.0, 0.0);
            let center = if out.mesh.solid_of(e) == 1 {
                [0.0, -shift]
            } else {
                [0.0, shift]
            };
            let dx = c[0] - center[0];
            let dy = c[1] - center[1];
            let theta = dx.atan2(-dy.abs().copysign(1.0) * dy.signum().max(0.0) - dy);
            let _ = theta;
            // arc distance from the apex along the circle
            let ang = (dx / (dx * dx + dy * dy).sqrt()).asin().abs();
            rs.push((s4.radius * ang, out.mesh.element_diameter(e)));
        }
    }
    let (min_r, max_r) = rs
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &(r, _)| (lo.min(r), hi.max(r)));
    println!(
        "max level {} count {} r range [{:.4}, {:.4}] diam {:.4}",
        max_level,
        rs.len(),
        min_r,
        max_r,
        rs[0].1
    );
}

#[test]
#[ignore]
fn probe_amr1() {
    let s = setup(4);
    for e in [0.05, 0.02] {
        let config = AmrConfig {
            combination: Combination::ZzGlobal,
            target_global: e,
            target_local: 0.05,
            marked_area_fraction: 0.001,
            max_iterations: 12,
            penalty: PenaltyConfig::new(1e4 * 210e9),
            ranks: 8,
            balance_coefficient: 1.0,
        };
        let t = Instant::now();
        let dirichlet = s.dirichlet();
        let out = amr_contact_loop(
            s.mesh().unwrap(),
            &s.materials,
            s.normal(),
            &dirichlet,
            &config,
        )
        .unwrap();
        println!("e={e}: stop {:?} time {:?}", out.stop, t.elapsed());
        for row in &out.report {
            println!(
                "  n {} N_E {} dofs {} gamma {:.4} eta {:.4} marked {} sweeps {} pcg {}",
                row.n,
                row.n_elements,
                row.n_conforming_dofs,
                row.gamma,
                row.eta,
                row.marked,
                row.contact_sweeps,
                row.pcg_iterations
            );
        }
    }
}
