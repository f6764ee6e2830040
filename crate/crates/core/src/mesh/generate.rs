//! Benchmark geometries: the two half-disk contact pair and simple test
//! domains.

use super::blocks::{from_blocks, Block, Curve};
use super::{BoundaryTag, Mesh};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Butterfly decomposition of a half-disk of radius `r`: flat diameter on
/// `y = 0`, curved boundary below, centered on the origin. A central core
/// block is ringed by three arc blocks whose outer sides lie exactly on
/// the circle; the diagonals are radial so corner angles stay benign.
///
/// `arc_tag`/`flat_tag` go to the circle arc and the flat diameter.
fn half_disk_blocks(
    r: f64,
    solid: u8,
    arc_tag: BoundaryTag,
    flat_tag: BoundaryTag,
) -> Vec<Block> {
    let h = 0.5 * r;
    // Shared corner coordinates are written once so adjacent blocks carry
    // bit-identical values.
    let p225 = [r * (1.25 * PI).cos(), r * (1.25 * PI).sin()];
    let p315 = [r * (1.75 * PI).cos(), r * (1.75 * PI).sin()];
    let core_bl = [-h, -h];
    let core_br = [h, -h];
    let core_tr = [h, 0.0];
    let core_tl = [-h, 0.0];
    let flat_l = [-r, 0.0];
    let flat_r = [r, 0.0];

    let arc = |a0: f64, a1: f64| Curve::Arc {
        center: [0.0, 0.0],
        radius: r,
        start_angle: a0,
        end_angle: a1,
    };

    let core = Block {
        corners: [core_bl, core_br, core_tr, core_tl],
        edges: [Curve::Line; 4],
        solid,
        tags: [None, None, Some(flat_tag), None],
    };
    let left = Block {
        corners: [flat_l, p225, core_bl, core_tl],
        edges: [arc(PI, 1.25 * PI), Curve::Line, Curve::Line, Curve::Line],
        solid,
        tags: [Some(arc_tag), None, None, Some(flat_tag)],
    };
    let bottom = Block {
        corners: [p225, p315, core_br, core_bl],
        edges: [arc(1.25 * PI, 1.75 * PI), Curve::Line, Curve::Line, Curve::Line],
        solid,
        tags: [Some(arc_tag), None, None, None],
    };
    let right = Block {
        corners: [p315, flat_r, core_tr, core_br],
        edges: [arc(1.75 * PI, 2.0 * PI), Curve::Line, Curve::Line, Curve::Line],
        solid,
        tags: [Some(arc_tag), Some(flat_tag), None, None],
    };
    vec![core, left, bottom, right]
}

/// Generates the two-solid half-disk contact benchmark mesh.
///
/// Solid 1 is the lower half-disk (curved side up, flat side down), solid
/// 2 the mirror image above it; the curved boundaries face each other
/// across a gap of `gap` and carry `Contact(1)` / `Contact(2)` tags, the
/// flat sides carry `Dirichlet`. Both contact discretizations mirror each
/// other, so node-to-node pairing is exact. Each half-disk consists of
/// four blocks subdivided `n0 x n0`.
pub fn generate_half_disk_pair(
    radius: f64,
    gap: f64,
    n0: usize,
    geom_order: usize,
) -> Result<Mesh> {
    if !(radius > 0.0) {
        return Err(Error::Config("radius must be positive".into()));
    }
    if gap < 0.0 {
        return Err(Error::Config("gap must be non-negative".into()));
    }
    if n0 < 2 {
        return Err(Error::Config("n0 must be at least 2".into()));
    }
    if geom_order == 0 {
        return Err(Error::Config("geometric order must be at least 1".into()));
    }
    let shift = radius + 0.5 * gap;
    // Canonical upper-style half-disk (flat top at y=0), tagged for solid 2.
    let canonical = half_disk_blocks(
        radius,
        2,
        BoundaryTag::Contact(2),
        BoundaryTag::Dirichlet,
    );
    let mut blocks: Vec<Block> = Vec::with_capacity(8);
    // Solid 1: mirrored (arc up), shifted down so the arc apex sits at -gap/2.
    for b in &canonical {
        let mut m = b.mirrored_y().translated(0.0, -shift);
        m.solid = 1;
        for t in m.tags.iter_mut() {
            if let Some(BoundaryTag::Contact(_)) = t {
                *t = Some(BoundaryTag::Contact(1));
            }
        }
        blocks.push(m);
    }
    // Solid 2: shifted up so the arc apex sits at +gap/2.
    for b in &canonical {
        blocks.push(b.translated(0.0, shift));
    }
    from_blocks(&blocks, n0, geom_order)
}

/// Unit square `[0, 1]^2` as a single solid with every boundary side
/// tagged `Dirichlet`; used by patch and constraint tests.
pub fn unit_square(n0: usize, geom_order: usize) -> Result<Mesh> {
    let d = Some(BoundaryTag::Dirichlet);
    let block = Block {
        corners: [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        edges: [Curve::Line; 4],
        solid: 1,
        tags: [d, d, d, d],
    };
    from_blocks(&[block], n0, geom_order)
}
