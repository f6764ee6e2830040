//! Structured block decomposition: each block is a transfinite (Coons)
//! patch bounded by straight segments and exact circle arcs, subdivided
//! into an `n0 x n0` grid of root elements.

use super::{BoundaryTag, Element, Mesh, NodeKey, RootGeom, SPAN};
use crate::basis::LagrangeBasis;
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Boundary curve of one block side, traversed from corner `s` to corner
/// `(s+1) % 4`.
#[derive(Debug, Clone, Copy)]
pub enum Curve {
    /// Straight segment between the two corners.
    Line,
    /// Circle arc; angles in radians, traversed from `start_angle` to
    /// `end_angle`. Both corners must lie on the circle.
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl Curve {
    fn eval(&self, a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
        match *self {
            Curve::Line => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                let th = start_angle + t * (end_angle - start_angle);
                [
                    center[0] + radius * th.cos(),
                    center[1] + radius * th.sin(),
                ]
            }
        }
    }

    fn reversed(&self) -> Curve {
        match *self {
            Curve::Line => Curve::Line,
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => Curve::Arc {
                center,
                radius,
                start_angle: end_angle,
                end_angle: start_angle,
            },
        }
    }

    fn mirrored_y(&self) -> Curve {
        match *self {
            Curve::Line => Curve::Line,
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => Curve::Arc {
                center: [center[0], -center[1]],
                radius,
                start_angle: -start_angle,
                end_angle: -end_angle,
            },
        }
    }
}

/// One structured block: four CCW corners, four boundary curves, a solid
/// id and optional boundary tags per side.
#[derive(Debug, Clone)]
pub struct Block {
    pub corners: [[f64; 2]; 4],
    pub edges: [Curve; 4],
    pub solid: u8,
    pub tags: [Option<BoundaryTag>; 4],
}

impl Block {
    /// Coons patch interpolating the four boundary curves; `(u, v)` in
    /// `[0, 1]^2` with side 0 at `v = 0`.
    pub fn map(&self, u: f64, v: f64) -> [f64; 2] {
        let c = &self.corners;
        let bottom = self.edges[0].eval(c[0], c[1], u);
        let right = self.edges[1].eval(c[1], c[2], v);
        let top = self.edges[2].eval(c[2], c[3], 1.0 - u);
        let left = self.edges[3].eval(c[3], c[0], 1.0 - v);
        let mut p = [0.0; 2];
        for k in 0..2 {
            let edge_blend = (1.0 - v) * bottom[k] + v * top[k] + (1.0 - u) * left[k] + u * right[k];
            let corner_blend = (1.0 - u) * (1.0 - v) * c[0][k]
                + u * (1.0 - v) * c[1][k]
                + u * v * c[2][k]
                + (1.0 - u) * v * c[3][k];
            p[k] = edge_blend - corner_blend;
        }
        p
    }

    /// Mirror image about the x axis, relabeled to stay CCW. Side `s` of
    /// the mirrored block is the mirror of side `3 - s`... concretely the
    /// new corner cycle is `(c0, c3, c2, c1)` and new side `k` carries the
    /// reversed mirror of old side `3 - k`.
    pub fn mirrored_y(&self) -> Block {
        let m = |p: [f64; 2]| [p[0], -p[1]];
        let corners = [
            m(self.corners[0]),
            m(self.corners[3]),
            m(self.corners[2]),
            m(self.corners[1]),
        ];
        let edges = [
            self.edges[3].reversed().mirrored_y(),
            self.edges[2].reversed().mirrored_y(),
            self.edges[1].reversed().mirrored_y(),
            self.edges[0].reversed().mirrored_y(),
        ];
        let tags = [self.tags[3], self.tags[2], self.tags[1], self.tags[0]];
        Block {
            corners,
            edges,
            solid: self.solid,
            tags,
        }
    }

    /// Translated copy.
    pub fn translated(&self, dx: f64, dy: f64) -> Block {
        let t = |p: [f64; 2]| [p[0] + dx, p[1] + dy];
        let te = |e: &Curve| match *e {
            Curve::Line => Curve::Line,
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => Curve::Arc {
                center: t(center),
                radius,
                start_angle,
                end_angle,
            },
        };
        Block {
            corners: [
                t(self.corners[0]),
                t(self.corners[1]),
                t(self.corners[2]),
                t(self.corners[3]),
            ],
            edges: [
                te(&self.edges[0]),
                te(&self.edges[1]),
                te(&self.edges[2]),
                te(&self.edges[3]),
            ],
            solid: self.solid,
            tags: self.tags,
        }
    }
}

/// Node identity during block assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum GridKey {
    Vertex(usize),
    /// (block edge id, grid step from the canonical start).
    Edge(usize, usize),
    Inner(usize, usize, usize),
}

/// Builds the conforming root mesh of a block decomposition.
///
/// Blocks sharing an edge must list bit-identical corner coordinates for
/// it; shared edges must be straight. Every block becomes an `n0 x n0`
/// grid of root elements carrying an order-`geom_order` geometry lattice
/// sampled from the Coons patch, so points on arc sides land exactly on
/// the circles.
pub fn from_blocks(blocks: &[Block], n0: usize, geom_order: usize) -> Result<Mesh> {
    if geom_order == 0 {
        return Err(Error::Config("geometric order must be at least 1".into()));
    }
    if n0 < 1 {
        return Err(Error::Config("n0 must be at least 1".into()));
    }
    let q = geom_order;

    // Block vertices, deduplicated by exact bit pattern.
    let bits = |p: [f64; 2]| (p[0].to_bits(), p[1].to_bits());
    let mut vertex_ids: HashMap<(u64, u64), usize> = HashMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    for b in blocks {
        for &cnr in &b.corners {
            vertex_ids.entry(bits(cnr)).or_insert_with(|| {
                vertices.push(cnr);
                vertices.len() - 1
            });
        }
    }

    // Block edges, canonical direction from the smaller vertex id. The
    // root corner points along each edge are evaluated once so adjacent
    // blocks agree exactly.
    struct BlockEdge {
        points: Vec<[f64; 2]>, // n0 + 1 points, canonical direction
        shared: usize,
    }
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<BlockEdge> = Vec::new();
    for b in blocks {
        for s in 0..4 {
            let va = vertex_ids[&bits(b.corners[s])];
            let vb = vertex_ids[&bits(b.corners[(s + 1) % 4])];
            if va == vb {
                return Err(Error::Geometry("degenerate block side".into()));
            }
            let key = (va.min(vb), va.max(vb));
            if let Some(&eid) = edge_ids.get(&key) {
                edges[eid].shared += 1;
                if edges[eid].shared > 2 {
                    return Err(Error::Geometry(
                        "more than two blocks share an edge".into(),
                    ));
                }
                if !matches!(b.edges[s], Curve::Line) {
                    return Err(Error::Geometry(
                        "shared block edges must be straight".into(),
                    ));
                }
                continue;
            }
            let forward = va < vb;
            let (pa, pb, curve) = if forward {
                (b.corners[s], b.corners[(s + 1) % 4], b.edges[s])
            } else {
                (
                    b.corners[(s + 1) % 4],
                    b.corners[s],
                    b.edges[s].reversed(),
                )
            };
            let points = (0..=n0)
                .map(|i| curve.eval(pa, pb, i as f64 / n0 as f64))
                .collect();
            edge_ids.insert(key, edges.len());
            edges.push(BlockEdge { points, shared: 1 });
        }
    }

    // Grid nodes: (n0+1)^2 per block, welded across vertices and edges.
    let mut node_ids: HashMap<GridKey, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut grid_of_block: Vec<Vec<usize>> = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        let vids: Vec<usize> = (0..4).map(|s| vertex_ids[&bits(b.corners[s])]).collect();
        let mut grid = vec![usize::MAX; (n0 + 1) * (n0 + 1)];
        for j in 0..=n0 {
            for i in 0..=n0 {
                let key = grid_key(bi, i, j, n0, &vids, &edge_ids);
                let id = *node_ids.entry(key).or_insert_with(|| {
                    let p = match key {
                        GridKey::Vertex(v) => vertices[v],
                        GridKey::Edge(e, step) => edges[e].points[step],
                        GridKey::Inner(..) => {
                            b.map(i as f64 / n0 as f64, j as f64 / n0 as f64)
                        }
                    };
                    nodes.push(p);
                    nodes.len() - 1
                });
                grid[j * (n0 + 1) + i] = id;
            }
        }
        grid_of_block.push(grid);
    }

    // Root elements, geometry lattices, tags.
    let mut elements: Vec<Element> = Vec::new();
    let mut roots: Vec<RootGeom> = Vec::new();
    let mut solid_of_root: Vec<u8> = Vec::new();
    let mut root_side_tags: Vec<[Option<BoundaryTag>; 4]> = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        let grid = &grid_of_block[bi];
        for bj in 0..n0 {
            for bix in 0..n0 {
                let corners = [
                    grid[bj * (n0 + 1) + bix],
                    grid[bj * (n0 + 1) + bix + 1],
                    grid[(bj + 1) * (n0 + 1) + bix + 1],
                    grid[(bj + 1) * (n0 + 1) + bix],
                ];
                let mut lattice = Vec::with_capacity((q + 1) * (q + 1));
                for j in 0..=q {
                    for i in 0..=q {
                        let u = (bix as f64 + i as f64 / q as f64) / n0 as f64;
                        let v = (bj as f64 + j as f64 / q as f64) / n0 as f64;
                        lattice.push(b.map(u, v));
                    }
                }
                let mut tags = [None; 4];
                if bj == 0 {
                    tags[0] = b.tags[0];
                }
                if bix == n0 - 1 {
                    tags[1] = b.tags[1];
                }
                if bj == n0 - 1 {
                    tags[2] = b.tags[2];
                }
                if bix == 0 {
                    tags[3] = b.tags[3];
                }
                elements.push(Element {
                    root: roots.len() as u32,
                    corners,
                    level: 0,
                    parent: None,
                    children: None,
                    x0: 0,
                    y0: 0,
                });
                roots.push(RootGeom { lattice });
                solid_of_root.push(b.solid);
                root_side_tags.push(tags);
            }
        }
    }

    // Root edge table (pairs of corner node ids).
    let mut root_edge_ids: HashMap<(usize, usize), u32> = HashMap::new();
    for el in &elements {
        for s in 0..4 {
            let a = el.corners[s];
            let b = el.corners[(s + 1) % 4];
            let pair = (a.min(b), a.max(b));
            let next = root_edge_ids.len() as u32;
            root_edge_ids.entry(pair).or_insert(next);
        }
    }

    let keys: Vec<NodeKey> = (0..nodes.len()).map(NodeKey::Anchor).collect();
    let key_map = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut mesh = Mesh {
        geom_order: q,
        nodes,
        keys,
        key_map,
        elements,
        roots,
        solid_of_root,
        root_side_tags,
        edge_ids: root_edge_ids,
        geom_basis: LagrangeBasis::equispaced_unit(q),
        initial_measure: 0.0,
    };

    // Jacobian sanity plus the frozen reference measure.
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        total += mesh.element_measure(e)?;
    }
    mesh.initial_measure = total;
    Ok(mesh)
}

fn grid_key(
    block: usize,
    i: usize,
    j: usize,
    n0: usize,
    vids: &[usize],
    edge_ids: &HashMap<(usize, usize), usize>,
) -> GridKey {
    let corner = match (i, j) {
        (0, 0) => Some(0),
        (x, 0) if x == n0 => Some(1),
        (x, y) if x == n0 && y == n0 => Some(2),
        (0, y) if y == n0 => Some(3),
        _ => None,
    };
    if let Some(c) = corner {
        return GridKey::Vertex(vids[c]);
    }
    // Side traversal step from corner s; canonical step counts from the
    // smaller vertex id.
    let side = if j == 0 {
        Some((0, i))
    } else if i == n0 {
        Some((1, j))
    } else if j == n0 {
        Some((2, n0 - i))
    } else if i == 0 {
        Some((3, n0 - j))
    } else {
        None
    };
    if let Some((s, step)) = side {
        let va = vids[s];
        let vb = vids[(s + 1) % 4];
        let key = (va.min(vb), va.max(vb));
        let eid = edge_ids[&key];
        let step = if va < vb { step } else { n0 - step };
        return GridKey::Edge(eid, step);
    }
    GridKey::Inner(block, i, j)
}

const _: () = assert!(SPAN.is_power_of_two());
