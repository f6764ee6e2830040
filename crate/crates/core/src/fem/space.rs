//! Solution spaces and the conforming / hanging DOF split.

use crate::basis::LagrangeBasis;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, ElementId, HangingConstraint, Mesh, NodeId};
use std::collections::HashMap;

/// Tensor Lagrange solution space of order `k` over the leaves of a mesh.
///
/// For `k = 1` the solution nodes are exactly the mesh corner nodes. For
/// `k = 2` (supported on conforming meshes only) mid-side and center nodes
/// are appended after the mesh nodes.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub order: usize,
    /// Leaf element ids, ascending; all per-leaf arrays use this order.
    pub leaves: Vec<ElementId>,
    /// Solution node coordinates.
    pub node_coords: Vec<[f64; 2]>,
    /// Per leaf: `(order+1)^2` solution node ids, lattice row-major with
    /// the xi index fastest.
    pub elem_nodes: Vec<Vec<usize>>,
    /// Per solution node: set of boundary tags it touches.
    node_tags: Vec<u8>,
    /// Per solution node: owning solid (nodes are never shared).
    node_solid: Vec<u8>,
    basis_1d: LagrangeBasis,
}

const TAG_DIRICHLET: u8 = 1;
const TAG_CONTACT1: u8 = 2;
const TAG_CONTACT2: u8 = 4;

fn tag_bit(tag: BoundaryTag) -> u8 {
    match tag {
        BoundaryTag::Dirichlet => TAG_DIRICHLET,
        BoundaryTag::Contact(1) => TAG_CONTACT1,
        BoundaryTag::Contact(_) => TAG_CONTACT2,
    }
}

impl FeSpace {
    pub fn new(mesh: &Mesh, order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::Config(format!(
                "solution order {order} not supported (1 or 2)"
            )));
        }
        if order == 2 && !mesh.hanging_constraints()?.is_empty() {
            return Err(Error::Config(
                "order-2 spaces require a conforming mesh".into(),
            ));
        }
        let leaves = mesh.leaves();
        let k = order;
        let mut node_coords: Vec<[f64; 2]> = mesh.nodes().to_vec();
        let mut extra: HashMap<crate::mesh::NodeKey, usize> = HashMap::new();
        let mut elem_nodes = Vec::with_capacity(leaves.len());
        for &e in &leaves {
            let el = mesh.element(e);
            let s = el.size();
            let mut ids = Vec::with_capacity((k + 1) * (k + 1));
            for j in 0..=k {
                for i in 0..=k {
                    let x = el.x0 + s * i as u64 / k as u64;
                    let y = el.y0 + s * j as u64 / k as u64;
                    let id = if let Some(n) = mesh.find_node_at_ticks(el.root, x, y) {
                        n
                    } else {
                        let key = mesh.canonical_key(el.root, x, y);
                        *extra.entry(key).or_insert_with(|| {
                            node_coords.push(mesh.node_coords_at_ticks(el.root, x, y));
                            node_coords.len() - 1
                        })
                    };
                    ids.push(id);
                }
            }
            elem_nodes.push(ids);
        }
        // Boundary tags and owning solid per solution node.
        let mut node_tags = vec![0u8; node_coords.len()];
        let mut node_solid = vec![0u8; node_coords.len()];
        for (le, &e) in leaves.iter().enumerate() {
            for &n in &elem_nodes[le] {
                node_solid[n] = mesh.solid_of(e);
            }
            for side in 0..4u8 {
                if let Some(tag) = mesh.side_tag(e, side) {
                    for idx in side_lattice_indices(k, side) {
                        node_tags[elem_nodes[le][idx]] |= tag_bit(tag);
                    }
                }
            }
        }
        Ok(FeSpace {
            order,
            leaves,
            node_coords,
            elem_nodes,
            node_tags,
            node_solid,
            basis_1d: LagrangeBasis::equispaced_biunit(order),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis_1d
    }

    pub fn node_has_tag(&self, node: usize, tag: BoundaryTag) -> bool {
        self.node_tags[node] & tag_bit(tag) != 0
    }

    /// Solid owning a solution node.
    pub fn node_solid(&self, node: usize) -> u8 {
        self.node_solid[node]
    }

    /// Nodes carrying `tag`, ascending.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&n| self.node_has_tag(n, tag))
            .collect()
    }

    /// Contact nodes of a solid (all nodes tagged `Contact(solid)`; the
    /// arc endpoints also touch the Dirichlet boundary but their pairs
    /// stay separated by about the solid diameter and never activate).
    pub fn contact_nodes(&self, solid: u8) -> Vec<usize> {
        self.nodes_with_tag(BoundaryTag::Contact(solid))
    }

    /// Values of all `(order+1)^2` basis functions at `(xi, eta)`,
    /// lattice row-major.
    pub fn shape_values(&self, xi: f64, eta: f64) -> Vec<f64> {
        let lu = self.basis_1d.eval(xi);
        let lv = self.basis_1d.eval(eta);
        let n = lu.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(lu[i] * lv[j]);
            }
        }
        out
    }

    /// Reference gradients `(d/dxi, d/deta)` of all basis functions.
    pub fn shape_gradients(&self, xi: f64, eta: f64) -> Vec<[f64; 2]> {
        let lu = self.basis_1d.eval(xi);
        let lv = self.basis_1d.eval(eta);
        let du = self.basis_1d.deriv(xi);
        let dv = self.basis_1d.deriv(eta);
        let n = lu.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push([du[i] * lv[j], lu[i] * dv[j]]);
            }
        }
        out
    }
}

/// Lattice indices of side `side` of an order-`k` element, following the
/// corner/side convention of the mesh.
pub(crate) fn side_lattice_indices(k: usize, side: u8) -> Vec<usize> {
    let n = k + 1;
    match side {
        0 => (0..n).collect(),
        1 => (0..n).map(|j| j * n + (n - 1)).collect(),
        2 => (0..n).map(|i| (n - 1) * n + i).collect(),
        3 => (0..n).map(|j| j * n).collect(),
        _ => unreachable!(),
    }
}

/// DOF numbering with conforming nodes first, so the prolongation operator
/// has a literal identity block on top.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// Solution node -> slot in the conforming-first node ordering.
    rank: Vec<usize>,
    /// Slot -> node (inverse of `rank`).
    node_of_rank: Vec<usize>,
    hanging: Vec<bool>,
    n_conforming_nodes: usize,
}

impl DofMap {
    pub fn new(space: &FeSpace, constraints: &[HangingConstraint]) -> Result<Self> {
        let n = space.n_nodes();
        let mut hanging = vec![false; n];
        for c in constraints {
            if c.slave >= n {
                return Err(Error::Internal(format!(
                    "constraint slave {} outside the space",
                    c.slave
                )));
            }
            hanging[c.slave] = true;
        }
        for c in constraints {
            for &m in &c.masters {
                if hanging[m] {
                    return Err(Error::Internal(format!(
                        "constraint master {m} is itself hanging"
                    )));
                }
            }
        }
        let mut rank = vec![usize::MAX; n];
        let mut node_of_rank = Vec::with_capacity(n);
        for (node, h) in hanging.iter().enumerate() {
            if !h {
                rank[node] = node_of_rank.len();
                node_of_rank.push(node);
            }
        }
        let n_conforming = node_of_rank.len();
        for (node, h) in hanging.iter().enumerate() {
            if *h {
                rank[node] = node_of_rank.len();
                node_of_rank.push(node);
            }
        }
        Ok(DofMap {
            rank,
            node_of_rank,
            hanging,
            n_conforming_nodes: n_conforming,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.rank.len()
    }

    pub fn n_all_dofs(&self) -> usize {
        2 * self.rank.len()
    }

    pub fn n_conforming_dofs(&self) -> usize {
        2 * self.n_conforming_nodes
    }

    pub fn is_hanging(&self, node: NodeId) -> bool {
        self.hanging[node]
    }

    /// All-DOF index of `(node, component)`; hanging DOFs come last.
    pub fn dof(&self, node: usize, comp: usize) -> usize {
        debug_assert!(comp < 2);
        2 * self.rank[node] + comp
    }

    /// Node and component of an all-DOF index.
    pub fn node_of_dof(&self, dof: usize) -> (usize, usize) {
        (self.node_of_rank[dof / 2], dof % 2)
    }

    /// Gathers per-node values from an all-DOF vector.
    pub fn nodal(&self, all: &[f64], node: usize) -> [f64; 2] {
        [all[self.dof(node, 0)], all[self.dof(node, 1)]]
    }
}
