//! Hanging-node identification.
//!
//! A hanging node is the midpoint of a leaf side whose opposite side is
//! split one level finer. For a first-order solution basis the constraint
//! weights are (1/2, 1/2) on the side endpoints, independent of the curved
//! geometry: constraints couple solution DOFs in reference space.

use super::{Mesh, NodeId};
use crate::error::Result;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct HangingConstraint {
    pub slave: NodeId,
    pub masters: Vec<NodeId>,
    pub weights: Vec<f64>,
}

impl Mesh {
    /// Collects all hanging-node constraints, resolved so that every
    /// master is a conforming node.
    ///
    /// Chains of hanging masters cannot occur on a 2:1-balanced mesh, but
    /// the fixed-point substitution below keeps the result correct even if
    /// one slipped through.
    pub fn hanging_constraints(&self) -> Result<Vec<HangingConstraint>> {
        self.check_two_to_one()?;
        let mut raw: Vec<HangingConstraint> = Vec::new();
        for e in self.leaves() {
            let el = self.element(e);
            let s = el.size();
            let (x0, y0) = (el.x0, el.y0);
            let half = s / 2;
            // Side midpoints in root ticks, same order as the corner sides.
            let mids = [
                (x0 + half, y0),
                (x0 + s, y0 + half),
                (x0 + half, y0 + s),
                (x0, y0 + half),
            ];
            for side in 0..4u8 {
                let (mx, my) = mids[side as usize];
                if let Some(m) = self.find_node_at_ticks(el.root, mx, my) {
                    let (a, b) = self.side_nodes(e, side);
                    raw.push(HangingConstraint {
                        slave: m,
                        masters: vec![a, b],
                        weights: vec![0.5, 0.5],
                    });
                }
            }
        }
        raw.sort_by_key(|c| c.slave);
        raw.dedup_by_key(|c| c.slave);

        // Resolve chains: substitute any master that is itself a slave.
        let index: HashMap<NodeId, usize> =
            raw.iter().enumerate().map(|(i, c)| (c.slave, i)).collect();
        let mut resolved = Vec::with_capacity(raw.len());
        for c in &raw {
            let mut masters: HashMap<NodeId, f64> = HashMap::new();
            let mut stack: Vec<(NodeId, f64)> = c
                .masters
                .iter()
                .zip(&c.weights)
                .map(|(&m, &w)| (m, w))
                .collect();
            let mut guard = 0;
            while let Some((m, w)) = stack.pop() {
                guard += 1;
                assert!(guard < 10_000, "hanging-node constraint cycle");
                if let Some(&i) = index.get(&m) {
                    log::warn!(
                        "hanging master {m} is itself hanging; substituting (2:1 rule should prevent this)"
                    );
                    for (&mm, &ww) in raw[i].masters.iter().zip(&raw[i].weights) {
                        stack.push((mm, w * ww));
                    }
                } else {
                    *masters.entry(m).or_insert(0.0) += w;
                }
            }
            let mut pairs: Vec<(NodeId, f64)> = masters.into_iter().collect();
            pairs.sort_by_key(|&(m, _)| m);
            resolved.push(HangingConstraint {
                slave: c.slave,
                masters: pairs.iter().map(|&(m, _)| m).collect(),
                weights: pairs.iter().map(|&(_, w)| w).collect(),
            });
        }
        Ok(resolved)
    }
}
