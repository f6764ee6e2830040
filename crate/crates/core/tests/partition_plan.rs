//! Partition planner: worked instance, determinism, isolation, and the
//! brute-force re-simulation oracle.

use contact_amr::partition::{
    assign_region, compute_contact_ranks, plan_partition, PartitionPlan, RegionState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// The 8-process worked example: three contact regions (0..2) with three
/// super-elements each, five regular regions, 72 elements in total so the
/// contact-rank formula lands exactly on R_C = 2.
fn worked_instance() -> Vec<RegionState> {
    // Element ids: contact pairs use (1000 + k, 2000 + k); regular
    // elements count up from 0 per region times 100.
    let mut regions = Vec::new();
    let regular_counts = [7usize, 7, 7, 7, 5, 7, 7, 7];
    let mut next_pair = 0usize;
    for r in 0..8u32 {
        let n_se = if r < 3 { 3 } else { 0 };
        let mut super_elements = Vec::new();
        for _ in 0..n_se {
            super_elements.push((1000 + next_pair, 2000 + next_pair));
            next_pair += 1;
        }
        let regular = (0..regular_counts[r as usize])
            .map(|k| 100 * (r as usize + 1) + k)
            .collect();
        regions.push(RegionState {
            rank: r,
            super_elements,
            regular,
        });
    }
    regions
}

#[test]
fn worked_instance_reproduces_the_reference_assignment() {
    let regions = worked_instance();
    let n_contact: usize = 2 * regions.iter().map(|r| r.super_elements.len()).sum::<usize>();
    let n_total = n_contact + regions.iter().map(|r| r.regular.len()).sum::<usize>();
    assert_eq!((n_contact, n_total), (18, 72));
    assert_eq!(compute_contact_ranks(n_contact, n_total, 8, 1.0).unwrap(), 2);

    let plan = plan_partition(&regions, 8, 1.0).unwrap();
    assert_eq!(plan.contact_ranks, 2);
    // Contact super-elements land on ranks {0, 1} only; regular elements
    // on ranks {2..7} only.
    for region in &regions {
        for &(e1, e2) in &region.super_elements {
            let r = plan.rank_of[&e1];
            assert_eq!(r, plan.rank_of[&e2]);
            assert!(r < 2);
        }
        for &e in &region.regular {
            assert!((2..8).contains(&plan.rank_of[&e]));
        }
    }
    // Start ranks: region 4's first regular element goes to rank 6 and
    // region 5's first to rank 7.
    assert_eq!(plan.rank_of[&regions[4].regular[0]], 6);
    assert_eq!(plan.rank_of[&regions[5].regular[0]], 7);
    // Contact dealing starts at r mod R_C: region 1's pairs go 1, 0, 1
    // (ending process 0 after its three pairs).
    let r1 = &regions[1].super_elements;
    assert_eq!(plan.rank_of[&r1[0].0], 1);
    assert_eq!(plan.rank_of[&r1[1].0], 0);
    assert_eq!(plan.rank_of[&r1[2].0], 1);
    // Region 4 deals its five regular elements 6, 7, 2, 3, 4 (ending
    // process 5).
    let reg4 = &regions[4].regular;
    let expect = [6u32, 7, 2, 3, 4];
    for (e, want) in reg4.iter().zip(expect) {
        assert_eq!(plan.rank_of[e], want);
    }
}

#[test]
fn plans_are_deterministic() {
    let regions = worked_instance();
    let a = plan_partition(&regions, 8, 1.0).unwrap();
    let b = plan_partition(&regions, 8, 1.0).unwrap();
    let to_sorted = |p: &PartitionPlan| {
        let mut v: Vec<(usize, u32)> = p.rank_of.iter().map(|(&e, &r)| (e, r)).collect();
        v.sort_unstable();
        v
    };
    assert_eq!(to_sorted(&a), to_sorted(&b));
}

#[test]
fn regions_can_be_planned_in_isolation() {
    // The no-communication property: assigning each region alone (given
    // only the global scalars R and R_C) reproduces the full plan.
    let regions = worked_instance();
    let plan = plan_partition(&regions, 8, 1.0).unwrap();
    for region in &regions {
        let mut alone: HashMap<usize, u32> = HashMap::new();
        assign_region(region, plan.contact_ranks, plan.ranks, &mut alone);
        for (e, r) in alone {
            assert_eq!(plan.rank_of[&e], r, "element {e} differs in isolation");
        }
    }
}

/// Straightforward re-simulation with explicit loops and counters; kept
/// deliberately naive and separate from the production modular arithmetic.
fn oracle_plan(regions: &[RegionState], ranks: usize, rc: usize) -> HashMap<usize, u32> {
    let mut out = HashMap::new();
    for region in regions {
        let r = region.rank as usize;
        if rc > 0 {
            let mut cursor = r % rc;
            for &(e1, e2) in &region.super_elements {
                out.insert(e1, cursor as u32);
                out.insert(e2, cursor as u32);
                cursor += 1;
                if cursor == rc {
                    cursor = 0;
                }
            }
        } else {
            let mut cursor = r % ranks;
            for &(e1, e2) in &region.super_elements {
                out.insert(e1, cursor as u32);
                out.insert(e2, cursor as u32);
                cursor += 1;
                if cursor == ranks {
                    cursor = 0;
                }
            }
        }
        if ranks > rc {
            let span = ranks - rc;
            let mut cursor = r + rc;
            if cursor >= ranks {
                cursor = (cursor % span) + rc;
            }
            for &e in &region.regular {
                out.insert(e, cursor as u32);
                cursor += 1;
                if cursor == ranks {
                    cursor = rc;
                }
            }
        }
    }
    out
}

#[test]
fn random_region_states_match_the_oracle_and_stay_balanced() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let ranks = rng.gen_range(1..=16usize);
        let n_regions = rng.gen_range(1..=ranks);
        let mut regions = Vec::new();
        let mut next = 0usize;
        for r in 0..n_regions {
            let n_se = if rng.gen_bool(0.5) {
                rng.gen_range(0..7usize)
            } else {
                0
            };
            let n_reg = rng.gen_range(0..12usize);
            let super_elements = (0..n_se)
                .map(|_| {
                    let pair = (next, next + 1);
                    next += 2;
                    pair
                })
                .collect();
            let regular = (0..n_reg)
                .map(|_| {
                    next += 1;
                    next - 1
                })
                .collect();
            regions.push(RegionState {
                rank: r as u32,
                super_elements,
                regular,
            });
        }
        let n_contact: usize =
            2 * regions.iter().map(|r| r.super_elements.len()).sum::<usize>();
        let n_total = n_contact + regions.iter().map(|r| r.regular.len()).sum::<usize>();
        if n_total == 0 {
            continue;
        }
        let plan = plan_partition(&regions, ranks, 1.0).unwrap();
        let rc = plan.contact_ranks;
        assert_eq!(
            rc,
            compute_contact_ranks(n_contact, n_total, ranks, 1.0).unwrap(),
            "case {case}"
        );

        // Cross-check every assignment against the naive oracle.
        let oracle = oracle_plan(&regions, ranks, rc);
        assert_eq!(oracle.len(), plan.rank_of.len(), "case {case}");
        for (e, r) in &oracle {
            assert_eq!(plan.rank_of[e], *r, "case {case}, element {e}");
        }

        // Co-location and separation invariants.
        for region in &regions {
            for &(e1, e2) in &region.super_elements {
                assert_eq!(plan.rank_of[&e1], plan.rank_of[&e2], "case {case}");
                if rc > 0 {
                    assert!((plan.rank_of[&e1] as usize) < rc, "case {case}");
                }
            }
            for &e in &region.regular {
                assert!((plan.rank_of[&e] as usize) >= rc, "case {case}");
            }
        }

        // Per-rank load spread within each class is bounded by the number
        // of regions contributing to that class.
        let mut se_load = vec![0usize; ranks];
        let mut reg_load = vec![0usize; ranks];
        for region in &regions {
            for &(e1, _) in &region.super_elements {
                se_load[plan.rank_of[&e1] as usize] += 1;
            }
            for &e in &region.regular {
                reg_load[plan.rank_of[&e] as usize] += 1;
            }
        }
        let contributing_se = regions
            .iter()
            .filter(|r| !r.super_elements.is_empty())
            .count();
        let contributing_reg = regions.iter().filter(|r| !r.regular.is_empty()).count();
        if rc > 0 {
            let lo = se_load[..rc].iter().min().unwrap();
            let hi = se_load[..rc].iter().max().unwrap();
            assert!(hi - lo <= contributing_se, "case {case}: {se_load:?}");
        }
        if rc < ranks {
            let lo = reg_load[rc..].iter().min().unwrap();
            let hi = reg_load[rc..].iter().max().unwrap();
            assert!(hi - lo <= contributing_reg, "case {case}: {reg_load:?}");
        }
    }
}
