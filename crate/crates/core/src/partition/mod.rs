//! Deterministic contact-aware element-to-rank partition planner.
//!
//! Contact element pairs form "super-elements" that must land on one rank;
//! ranks `[0, R_C)` take super-elements, ranks `[R_C, R)` take everything
//! else. Each region deals its items cyclically, one at a time, starting
//! at a rank derived from its own number only, so the plan of a region
//! never depends on the contents of other regions.

use crate::error::{Error, Result};
use crate::mesh::{ElementId, Mesh};
use std::collections::HashMap;

/// Elements currently owned by one rank, contact pairs grouped and listed
/// by the solid-1 element's local (ascending-id) order.
#[derive(Debug, Clone)]
pub struct RegionState {
    pub rank: u32,
    /// (solid-1 element, solid-2 partner), local-number order.
    pub super_elements: Vec<(ElementId, ElementId)>,
    /// Non-contact elements, local-number order.
    pub regular: Vec<ElementId>,
}

#[derive(Debug, Clone)]
pub struct PartitionPlan {
    pub rank_of: HashMap<ElementId, u32>,
    pub ranks: usize,
    pub contact_ranks: usize,
    pub coefficient: f64,
}

/// Number of ranks reserved for contact elements:
/// `R_C = ceil(c * N_EC / N_E * R)`, clamped so every contact rank gets at
/// least one pair and at least one rank remains for the rest. With contact
/// elements only, all ranks process contact.
pub fn compute_contact_ranks(
    n_contact: usize,
    n_total: usize,
    ranks: usize,
    c: f64,
) -> Result<usize> {
    if n_contact % 2 != 0 {
        return Err(Error::Internal(format!(
            "contact element count {n_contact} is odd; pairing is broken"
        )));
    }
    if ranks == 0 {
        return Err(Error::Config("rank count must be at least 1".into()));
    }
    if n_contact > n_total {
        return Err(Error::Config("more contact elements than elements".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Config("balance coefficient must be positive".into()));
    }
    if n_contact == 0 {
        return Ok(0);
    }
    if n_total == n_contact {
        return Ok(ranks);
    }
    let mut rc = (c * n_contact as f64 / n_total as f64 * ranks as f64).ceil() as usize;
    if rc > n_contact / 2 {
        rc = n_contact / 2;
    }
    if rc >= ranks {
        rc = ranks - 1;
    }
    Ok(rc)
}

/// Start rank of a region's non-contact dealing: `r + R_C`, wrapped into
/// the non-contact range as `((r + R_C) mod (R - R_C)) + R_C` when needed.
fn regular_start(r: u32, rc: usize, ranks: usize) -> usize {
    let r = r as usize;
    if r + rc < ranks {
        r + rc
    } else {
        (r + rc) % (ranks - rc) + rc
    }
}

/// Plans the new element-to-rank assignment. Consumes only per-region
/// local data plus the global counts derived from them.
pub fn plan_partition(regions: &[RegionState], ranks: usize, c: f64) -> Result<PartitionPlan> {
    if regions.is_empty() {
        return Err(Error::Config("no regions to partition".into()));
    }
    let n_contact: usize = 2 * regions.iter().map(|r| r.super_elements.len()).sum::<usize>();
    let n_total: usize = n_contact + regions.iter().map(|r| r.regular.len()).sum::<usize>();
    let rc = compute_contact_ranks(n_contact, n_total, ranks, c)?;

    let mut rank_of: HashMap<ElementId, u32> = HashMap::with_capacity(n_total);
    for region in regions {
        assign_region(region, rc, ranks, &mut rank_of);
    }
    Ok(PartitionPlan {
        rank_of,
        ranks,
        contact_ranks: rc,
        coefficient: c,
    })
}

/// Assignment of a single region, callable in isolation (this is the
/// no-communication property: nothing here reads other regions).
pub fn assign_region(
    region: &RegionState,
    rc: usize,
    ranks: usize,
    rank_of: &mut HashMap<ElementId, u32>,
) {
    let r = region.rank;
    if rc > 0 {
        // Super-elements deal cyclically through the contact ranks
        // starting at r mod R_C.
        for (j, &(e1, e2)) in region.super_elements.iter().enumerate() {
            let target = ((r as usize + j) % rc) as u32;
            rank_of.insert(e1, target);
            rank_of.insert(e2, target);
        }
    } else {
        // No contact ranks (single rank, or no contact at all): pairs are
        // dealt with the regular stream, still co-located.
        debug_assert!(region.super_elements.is_empty() || ranks == 1);
        for (j, &(e1, e2)) in region.super_elements.iter().enumerate() {
            let target = ((r as usize + j) % ranks) as u32;
            rank_of.insert(e1, target);
            rank_of.insert(e2, target);
        }
    }
    let span = ranks - rc;
    if span == 0 {
        debug_assert!(region.regular.is_empty(), "regular elements but no ranks");
        return;
    }
    let start = regular_start(r, rc, ranks);
    for (j, &e) in region.regular.iter().enumerate() {
        let target = (rc + (start - rc + j) % span) as u32;
        rank_of.insert(e, target);
    }
}

/// Independent check of a finished plan.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub colocation_violations: usize,
    pub per_rank_elements: Vec<usize>,
    pub separation_ok: bool,
    /// Worst max/mean element-count ratio, taken over the contact-rank
    /// class and the non-contact-rank class separately.
    pub imbalance: f64,
    pub covered: bool,
}

pub fn validate_plan(
    plan: &PartitionPlan,
    mesh: &Mesh,
    element_pairs: &[(ElementId, ElementId)],
) -> ValidationReport {
    let leaves = mesh.leaves();
    let mut per_rank = vec![0usize; plan.ranks];
    let mut covered = true;
    for &e in &leaves {
        match plan.rank_of.get(&e) {
            Some(&r) => per_rank[r as usize] += 1,
            None => covered = false,
        }
    }
    let mut violations = 0;
    let mut separation_ok = true;
    let rc = plan.contact_ranks;
    let mut is_contact = vec![false; mesh.n_elements()];
    for &(e1, e2) in element_pairs {
        is_contact[e1] = true;
        is_contact[e2] = true;
        match (plan.rank_of.get(&e1), plan.rank_of.get(&e2)) {
            (Some(a), Some(b)) if a == b => {}
            _ => violations += 1,
        }
    }
    if rc > 0 && rc < plan.ranks {
        for &e in &leaves {
            if let Some(&r) = plan.rank_of.get(&e) {
                let in_contact_range = (r as usize) < rc;
                if is_contact[e] != in_contact_range {
                    separation_ok = false;
                }
            }
        }
    }
    let class_imbalance = |range: std::ops::Range<usize>| -> f64 {
        let counts = &per_rank[range];
        if counts.is_empty() {
            return 1.0;
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return 1.0;
        }
        let mean = total as f64 / counts.len() as f64;
        counts.iter().copied().max().unwrap() as f64 / mean
    };
    let imbalance = if rc > 0 && rc < plan.ranks {
        class_imbalance(0..rc).max(class_imbalance(rc..plan.ranks))
    } else {
        class_imbalance(0..plan.ranks)
    };
    ValidationReport {
        colocation_violations: violations,
        per_rank_elements: per_rank,
        separation_ok,
        imbalance,
        covered,
    }
}
