//! Hierarchical quadrilateral mesh with super-parametric geometry.
//!
//! Every level-0 element ("root") carries an order-`q` tensor Lagrange
//! geometry lattice sampled from an exact block description (straight
//! segments and circle arcs). Refinement splits an element into four
//! children that live inside the parent's reference square, so a child's
//! geometry is the root polynomial restricted to a sub-square: the discrete
//! geometry never changes during refinement.
//!
//! Node identity is tracked with exact integer reference coordinates
//! ("ticks") inside each root square, canonicalized across shared root
//! edges. No floating-point comparison participates in topology.

mod blocks;
mod generate;
mod hanging;
mod refine;

pub use blocks::{Block, Curve, from_blocks};
pub use generate::{generate_half_disk_pair, unit_square};
pub use hanging::HangingConstraint;

use crate::basis::LagrangeBasis;
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use std::collections::HashMap;

pub type NodeId = usize;
pub type ElementId = usize;

/// Integer resolution of a root reference square. Refinement level `L`
/// cells have side `SPAN >> L`, so levels up to 30 stay exact.
pub const SPAN: u64 = 1 << 30;
pub const MAX_LEVEL: u8 = 30;

/// Boundary classification carried by root element sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Displacement-controlled boundary.
    Dirichlet,
    /// Potential contact boundary of the given solid (1 or 2).
    Contact(u8),
}

/// Topological identity of a node, exact by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKey {
    /// A corner node of the initial (root) mesh; its id is the identity.
    Anchor(NodeId),
    /// A point on a root edge, parametrized from the endpoint with the
    /// smaller node id. `0 < t < SPAN`.
    Edge { edge: u32, t: u64 },
    /// A point strictly inside one root square.
    Interior { root: u32, x: u64, y: u64 },
}

#[derive(Debug, Clone)]
pub struct Element {
    /// Root tree this element belongs to.
    pub root: u32,
    /// Corner node ids, CCW; corner `k` sits at the root-frame positions
    /// (x0,y0), (x0+s,y0), (x0+s,y0+s), (x0,y0+s).
    pub corners: [NodeId; 4],
    pub level: u8,
    pub parent: Option<ElementId>,
    pub children: Option<[ElementId; 4]>,
    /// Lower-left corner of the element in root ticks.
    pub x0: u64,
    pub y0: u64,
}

impl Element {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Side length in root ticks.
    pub fn size(&self) -> u64 {
        SPAN >> self.level
    }
}

/// Geometry lattice of one root element: `(q+1)^2` physical points,
/// row-major with the `u` index fastest.
#[derive(Debug, Clone)]
pub(crate) struct RootGeom {
    pub lattice: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geom_order: usize,
    nodes: Vec<[f64; 2]>,
    keys: Vec<NodeKey>,
    key_map: HashMap<NodeKey, NodeId>,
    elements: Vec<Element>,
    roots: Vec<RootGeom>,
    solid_of_root: Vec<u8>,
    /// `(root, side)` tags; side indices follow the corner convention
    /// (0: v=0, 1: u=1, 2: v=1, 3: u=0 in the root frame).
    root_side_tags: Vec<[Option<BoundaryTag>; 4]>,
    /// Root edge ids, keyed by the sorted pair of root corner node ids.
    edge_ids: HashMap<(NodeId, NodeId), u32>,
    geom_basis: LagrangeBasis,
    /// Total measure of the initial mesh, frozen at generation.
    initial_measure: f64,
}

/// A leaf side described as an interval on a canonical grid line, used by
/// the balance checks and neighbor queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum LineKey {
    /// Interval on a root edge (t-parametrized canonically).
    Edge(u32),
    /// Vertical grid line `x = const` inside a root.
    Vertical { root: u32, x: u64 },
    /// Horizontal grid line `y = const` inside a root.
    Horizontal { root: u32, y: u64 },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SideInterval {
    pub line: LineKey,
    pub lo: u64,
    pub hi: u64,
    /// Disambiguates the two sides of the line (root id, or 0/1 inside a root).
    pub token: u32,
    pub element: ElementId,
}

impl Mesh {
    // ------------------------------------------------------------------
    // Construction plumbing shared by `blocks` and `refine`.
    // ------------------------------------------------------------------

    pub(crate) fn node_coords_at_ticks(&self, root: u32, x: u64, y: u64) -> [f64; 2] {
        self.root_map(root, x as f64 / SPAN as f64, y as f64 / SPAN as f64)
    }

    /// Canonical topological key of a root-frame point.
    pub(crate) fn canonical_key(&self, root: u32, x: u64, y: u64) -> NodeKey {
        let on_x = x == 0 || x == SPAN;
        let on_y = y == 0 || y == SPAN;
        let root_el = &self.elements[root as usize];
        debug_assert_eq!(root_el.level, 0);
        if on_x && on_y {
            let corner = match (x == SPAN, y == SPAN) {
                (false, false) => 0,
                (true, false) => 1,
                (true, true) => 2,
                (false, true) => 3,
            };
            return NodeKey::Anchor(root_el.corners[corner]);
        }
        if on_x || on_y {
            let (side, t_local) = if y == 0 {
                (0, x)
            } else if x == SPAN {
                (1, y)
            } else if y == SPAN {
                (2, SPAN - x)
            } else {
                (3, SPAN - y)
            };
            let a = root_el.corners[side];
            let b = root_el.corners[(side + 1) % 4];
            let t = if a < b { t_local } else { SPAN - t_local };
            let pair = (a.min(b), a.max(b));
            let edge = *self
                .edge_ids
                .get(&pair)
                .expect("root side without an edge id");
            return NodeKey::Edge { edge, t };
        }
        NodeKey::Interior { root, x, y }
    }

    /// Finds or creates the node at a root-frame point.
    pub(crate) fn node_at_ticks(&mut self, root: u32, x: u64, y: u64) -> NodeId {
        let key = self.canonical_key(root, x, y);
        if let Some(&id) = self.key_map.get(&key) {
            return id;
        }
        let coords = self.node_coords_at_ticks(root, x, y);
        let id = self.nodes.len();
        self.nodes.push(coords);
        self.keys.push(key);
        self.key_map.insert(key, id);
        id
    }

    /// Looks a node up without creating it.
    pub(crate) fn find_node_at_ticks(&self, root: u32, x: u64, y: u64) -> Option<NodeId> {
        self.key_map.get(&self.canonical_key(root, x, y)).copied()
    }

    // ------------------------------------------------------------------
    // Queries.
    // ------------------------------------------------------------------

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, id: NodeId) -> [f64; 2] {
        self.nodes[id]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn element(&self, id: ElementId) -> &Element {
        &self.elements[id]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn solid_of(&self, id: ElementId) -> u8 {
        self.solid_of_root[self.elements[id].root as usize]
    }

    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    /// Ids of all leaf elements, ascending.
    pub fn leaves(&self) -> Vec<ElementId> {
        (0..self.elements.len())
            .filter(|&e| self.elements[e].is_leaf())
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.elements.iter().filter(|e| e.is_leaf()).count()
    }

    pub fn max_level(&self) -> u8 {
        self.elements
            .iter()
            .filter(|e| e.is_leaf())
            .map(|e| e.level)
            .max()
            .unwrap_or(0)
    }

    pub fn initial_measure(&self) -> f64 {
        self.initial_measure
    }

    /// Tag of a leaf side, inherited from the root side it lies on.
    pub fn side_tag(&self, id: ElementId, side: u8) -> Option<BoundaryTag> {
        let el = &self.elements[id];
        let s = el.size();
        let on = match side {
            0 => el.y0 == 0,
            1 => el.x0 + s == SPAN,
            2 => el.y0 + s == SPAN,
            3 => el.x0 == 0,
            _ => unreachable!(),
        };
        if on {
            self.root_side_tags[el.root as usize][side as usize]
        } else {
            None
        }
    }

    /// Corner node ids of side `s`: `(corners[s], corners[(s+1)%4])`.
    pub fn side_nodes(&self, id: ElementId, side: u8) -> (NodeId, NodeId) {
        let el = &self.elements[id];
        (
            el.corners[side as usize],
            el.corners[(side as usize + 1) % 4],
        )
    }

    /// All `(leaf, side)` pairs carrying the given tag.
    pub fn tagged_sides(&self, tag: BoundaryTag) -> Vec<(ElementId, u8)> {
        let mut out = Vec::new();
        for (e, el) in self.elements.iter().enumerate() {
            if !el.is_leaf() {
                continue;
            }
            for side in 0..4u8 {
                if self.side_tag(e, side) == Some(tag) {
                    out.push((e, side));
                }
            }
        }
        out
    }

    /// Node ids lying on sides with the given tag (deduplicated, ascending).
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<NodeId> {
        let mut mask = vec![false; self.nodes.len()];
        for (e, side) in self.tagged_sides(tag) {
            let (a, b) = self.side_nodes(e, side);
            mask[a] = true;
            mask[b] = true;
        }
        mask.iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    // ------------------------------------------------------------------
    // Geometry.
    // ------------------------------------------------------------------

    /// Root geometry map at root-frame coordinates `(u, v)` in `[0,1]^2`.
    pub(crate) fn root_map(&self, root: u32, u: f64, v: f64) -> [f64; 2] {
        let n = self.geom_basis.len();
        let lu = self.geom_basis.eval(u);
        let lv = self.geom_basis.eval(v);
        let lattice = &self.roots[root as usize].lattice;
        let mut p = [0.0, 0.0];
        for j in 0..n {
            let mut row = [0.0, 0.0];
            for i in 0..n {
                let c = lattice[j * n + i];
                row[0] += lu[i] * c[0];
                row[1] += lu[i] * c[1];
            }
            p[0] += lv[j] * row[0];
            p[1] += lv[j] * row[1];
        }
        p
    }

    /// Root map Jacobian `d(x,y)/d(u,v)` at `(u, v)`.
    pub(crate) fn root_jacobian(&self, root: u32, u: f64, v: f64) -> [[f64; 2]; 2] {
        let n = self.geom_basis.len();
        let lu = self.geom_basis.eval(u);
        let lv = self.geom_basis.eval(v);
        let du = self.geom_basis.deriv(u);
        let dv = self.geom_basis.deriv(v);
        let lattice = &self.roots[root as usize].lattice;
        let mut j = [[0.0; 2]; 2];
        for jj in 0..n {
            let mut row = [0.0, 0.0];
            let mut drow = [0.0, 0.0];
            for i in 0..n {
                let c = lattice[jj * n + i];
                row[0] += lu[i] * c[0];
                row[1] += lu[i] * c[1];
                drow[0] += du[i] * c[0];
                drow[1] += du[i] * c[1];
            }
            // column 0: d/du, column 1: d/dv
            j[0][0] += lv[jj] * drow[0];
            j[1][0] += lv[jj] * drow[1];
            j[0][1] += dv[jj] * row[0];
            j[1][1] += dv[jj] * row[1];
        }
        j
    }

    /// Root-frame coordinates of an element reference point `(xi, eta)` in
    /// `[-1, 1]^2`.
    pub fn element_to_root_frame(&self, id: ElementId, xi: f64, eta: f64) -> (f64, f64) {
        let el = &self.elements[id];
        let s = el.size() as f64 / SPAN as f64;
        let u = el.x0 as f64 / SPAN as f64 + 0.5 * (xi + 1.0) * s;
        let v = el.y0 as f64 / SPAN as f64 + 0.5 * (eta + 1.0) * s;
        (u, v)
    }

    /// Physical position of the element reference point `(xi, eta)`.
    ///
    /// Children evaluate the parent (ultimately root) transformation on
    /// their sub-square, so refined geometry stays on the original order-q
    /// surface exactly.
    pub fn geometry_map(&self, id: ElementId, xi: f64, eta: f64) -> [f64; 2] {
        let (u, v) = self.element_to_root_frame(id, xi, eta);
        self.root_map(self.elements[id].root, u, v)
    }

    /// Jacobian of [`Mesh::geometry_map`] with respect to `(xi, eta)`.
    pub fn geometry_jacobian(&self, id: ElementId, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        let el = &self.elements[id];
        let (u, v) = self.element_to_root_frame(id, xi, eta);
        let j = self.root_jacobian(el.root, u, v);
        let scale = 0.5 * el.size() as f64 / SPAN as f64;
        [
            [j[0][0] * scale, j[0][1] * scale],
            [j[1][0] * scale, j[1][1] * scale],
        ]
    }

    /// Area of an element, integrated with a Gauss rule of order `q + 1`
    /// per direction.
    pub fn element_measure(&self, id: ElementId) -> Result<f64> {
        let rule = GaussRule::new(self.geom_order + 1);
        let mut area = 0.0;
        for (gy, wy) in rule.points.iter().zip(&rule.weights) {
            for (gx, wx) in rule.points.iter().zip(&rule.weights) {
                let j = self.geometry_jacobian(id, *gx, *gy);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "non-positive Jacobian ({det:.3e}) in element {id}"
                    )));
                }
                area += wx * wy * det;
            }
        }
        Ok(area)
    }

    /// Jacobians of the geometry map at a tensor grid of reference points
    /// (`pts` along each axis of `[-1,1]`), row-major with the xi index
    /// fastest. Sum-factorized; this is the assembly hot path.
    pub fn jacobian_grid(&self, id: ElementId, pts: &[f64]) -> Vec<[[f64; 2]; 2]> {
        let el = &self.elements[id];
        let n = self.geom_basis.len();
        let ng = pts.len();
        let s = el.size() as f64 / SPAN as f64;
        let scale = 0.5 * s;
        let u0 = el.x0 as f64 / SPAN as f64;
        let v0 = el.y0 as f64 / SPAN as f64;
        let mut lu = vec![0.0; ng * n];
        let mut du = vec![0.0; ng * n];
        let mut lv = vec![0.0; ng * n];
        let mut dv = vec![0.0; ng * n];
        for (a, &p) in pts.iter().enumerate() {
            let u = u0 + 0.5 * (p + 1.0) * s;
            let v = v0 + 0.5 * (p + 1.0) * s;
            self.geom_basis.eval_into(u, &mut lu[a * n..(a + 1) * n]);
            self.geom_basis.deriv_into(u, &mut du[a * n..(a + 1) * n]);
            self.geom_basis.eval_into(v, &mut lv[a * n..(a + 1) * n]);
            self.geom_basis.deriv_into(v, &mut dv[a * n..(a + 1) * n]);
        }
        let lattice = &self.roots[el.root as usize].lattice;
        // Stage 1: contract over the u index for every (a, j).
        // t[a][j] = sum_i lattice[j*n+i] * lu[a*n+i], dt likewise with du.
        let mut t = vec![[0.0f64; 2]; ng * n];
        let mut dt = vec![[0.0f64; 2]; ng * n];
        for a in 0..ng {
            for j in 0..n {
                let mut acc = [0.0; 2];
                let mut dacc = [0.0; 2];
                for i in 0..n {
                    let c = lattice[j * n + i];
                    let w = lu[a * n + i];
                    let dw = du[a * n + i];
                    acc[0] += w * c[0];
                    acc[1] += w * c[1];
                    dacc[0] += dw * c[0];
                    dacc[1] += dw * c[1];
                }
                t[a * n + j] = acc;
                dt[a * n + j] = dacc;
            }
        }
        // Stage 2: contract over the v index for every (a, b).
        let mut out = Vec::with_capacity(ng * ng);
        for b in 0..ng {
            for a in 0..ng {
                let mut j = [[0.0f64; 2]; 2];
                for jj in 0..n {
                    let w = lv[b * n + jj];
                    let dw = dv[b * n + jj];
                    let tv = t[a * n + jj];
                    let dtv = dt[a * n + jj];
                    j[0][0] += w * dtv[0];
                    j[1][0] += w * dtv[1];
                    j[0][1] += dw * tv[0];
                    j[1][1] += dw * tv[1];
                }
                out.push([
                    [j[0][0] * scale, j[0][1] * scale],
                    [j[1][0] * scale, j[1][1] * scale],
                ]);
            }
        }
        out
    }

    /// Element diameter (largest corner-to-corner distance).
    pub fn element_diameter(&self, id: ElementId) -> f64 {
        let el = &self.elements[id];
        let pts: Vec<[f64; 2]> = el.corners.iter().map(|&c| self.nodes[c]).collect();
        let mut d2: f64 = 0.0;
        for i in 0..4 {
            for k in i + 1..4 {
                let dx = pts[i][0] - pts[k][0];
                let dy = pts[i][1] - pts[k][1];
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt()
    }

    /// Leaf element containing the root-frame point, walking the tree.
    /// Points on internal boundaries resolve to the upper/right child.
    pub fn locate(&self, root: u32, x: u64, y: u64) -> ElementId {
        let mut e = root as usize;
        while let Some(children) = self.elements[e].children {
            let el = &self.elements[e];
            let half = el.size() / 2;
            let right = x >= el.x0 + half;
            let up = y >= el.y0 + half;
            e = children[match (right, up) {
                (false, false) => 0,
                (true, false) => 1,
                (true, true) => 2,
                (false, true) => 3,
            }];
        }
        e
    }

    // ------------------------------------------------------------------
    // Canonical side intervals (shared by balance check and refinement).
    // ------------------------------------------------------------------

    pub(crate) fn side_interval(&self, id: ElementId, side: u8) -> SideInterval {
        let el = &self.elements[id];
        let s = el.size();
        let root_el = &self.elements[el.root as usize];
        // Root-frame description of the side.
        let (on_root_side, root_side, lo_local, hi_local, line): (bool, u8, u64, u64, LineKey) =
            match side {
                0 => (
                    el.y0 == 0,
                    0,
                    el.x0,
                    el.x0 + s,
                    LineKey::Horizontal {
                        root: el.root,
                        y: el.y0,
                    },
                ),
                1 => (
                    el.x0 + s == SPAN,
                    1,
                    el.y0,
                    el.y0 + s,
                    LineKey::Vertical {
                        root: el.root,
                        x: el.x0 + s,
                    },
                ),
                2 => (
                    el.y0 + s == SPAN,
                    2,
                    el.x0,
                    el.x0 + s,
                    LineKey::Horizontal {
                        root: el.root,
                        y: el.y0 + s,
                    },
                ),
                3 => (
                    el.x0 == 0,
                    3,
                    el.y0,
                    el.y0 + s,
                    LineKey::Vertical {
                        root: el.root,
                        x: el.x0,
                    },
                ),
                _ => unreachable!(),
            };
        if on_root_side {
            // Express the interval in canonical root-edge parameters.
            let a = root_el.corners[root_side as usize];
            let b = root_el.corners[(root_side as usize + 1) % 4];
            // The local interval [lo,hi] is measured along x (sides 0/2) or
            // y (sides 1/3); convert to the side traversal parameter first.
            let (t0, t1) = match root_side {
                0 => (lo_local, hi_local),
                1 => (lo_local, hi_local),
                2 => (SPAN - hi_local, SPAN - lo_local),
                3 => (SPAN - hi_local, SPAN - lo_local),
                _ => unreachable!(),
            };
            let (t0, t1) = if a < b {
                (t0, t1)
            } else {
                (SPAN - t1, SPAN - t0)
            };
            let pair = (a.min(b), a.max(b));
            let edge = *self
                .edge_ids
                .get(&pair)
                .expect("root side without an edge id");
            return SideInterval {
                line: LineKey::Edge(edge),
                lo: t0,
                hi: t1,
                token: el.root,
                element: id,
            };
        }
        // Interior line: token 0 for elements below/left of the line.
        let token = match side {
            0 | 3 => 1, // the line is this element's lower/left side
            1 | 2 => 0, // the line is this element's upper/right side
            _ => unreachable!(),
        };
        SideInterval {
            line,
            lo: lo_local,
            hi: hi_local,
            token,
            element: id,
        }
    }

    /// Groups the side intervals of every leaf by canonical grid line.
    pub(crate) fn leaf_side_intervals(&self) -> HashMap<LineKey, Vec<SideInterval>> {
        let mut map: HashMap<LineKey, Vec<SideInterval>> = HashMap::new();
        for e in 0..self.elements.len() {
            if !self.elements[e].is_leaf() {
                continue;
            }
            for side in 0..4u8 {
                let iv = self.side_interval(e, side);
                map.entry(iv.line).or_default().push(iv);
            }
        }
        map
    }

    /// Pairs of edge-adjacent leaves (each pair reported once).
    pub(crate) fn leaf_adjacency(&self) -> Vec<(ElementId, ElementId)> {
        let mut pairs = Vec::new();
        for (_, mut side_list) in self.leaf_side_intervals() {
            side_list.sort_by_key(|iv| (iv.token, iv.lo));
            let first_token = side_list[0].token;
            let (a, b): (Vec<&SideInterval>, Vec<&SideInterval>) =
                side_list.iter().partition(|iv| iv.token == first_token);
            for ia in &a {
                for ib in &b {
                    if ia.lo < ib.hi && ib.lo < ia.hi {
                        pairs.push((ia.element, ib.element));
                    }
                }
            }
        }
        pairs
    }

    /// Exhaustive edge scan checking the single-irregularity (2:1) rule.
    pub fn check_two_to_one(&self) -> Result<()> {
        for (a, b) in self.leaf_adjacency() {
            let la = self.elements[a].level as i32;
            let lb = self.elements[b].level as i32;
            if (la - lb).abs() > 1 {
                return Err(Error::Unbalanced(format!(
                    "leaves {a} (level {la}) and {b} (level {lb}) share an edge"
                )));
            }
        }
        Ok(())
    }

    /// Sum of leaf measures; the hierarchical refinement keeps this equal
    /// to the initial mesh measure.
    pub fn leaf_measure_total(&self) -> Result<f64> {
        let mut total = 0.0;
        for e in self.leaves() {
            total += self.element_measure(e)?;
        }
        Ok(total)
    }

    /// Structural and geometric invariant check (used by tests and after
    /// generation): tree consistency, 2:1 balance, leaf tiling.
    pub fn validate(&self) -> Result<()> {
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(children) = el.children {
                for &c in &children {
                    let ch = &self.elements[c];
                    if ch.parent != Some(e) || ch.level != el.level + 1 {
                        return Err(Error::Internal(format!(
                            "broken parent/child link between {e} and {c}"
                        )));
                    }
                }
            }
        }
        self.check_two_to_one()?;
        let total = self.leaf_measure_total()?;
        let rel = (total - self.initial_measure).abs() / self.initial_measure;
        if rel > 1e-10 {
            return Err(Error::Internal(format!(
                "leaves do not tile the domain: relative measure defect {rel:.3e}"
            )));
        }
        Ok(())
    }
}
