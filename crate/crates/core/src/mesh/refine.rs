//! Isotropic hierarchical refinement with 2:1 closure.

use super::{Element, ElementId, Mesh, MAX_LEVEL};
use crate::error::{Error, Result};
use std::collections::HashSet;

impl Mesh {
    /// Closes a set of leaves under the single-irregularity rule: any leaf
    /// strictly coarser than a neighbor about to be split must split too.
    /// Returns the closed set, ascending.
    pub fn close_marked_set(&self, marked: &[ElementId]) -> Result<Vec<ElementId>> {
        let mut split: HashSet<ElementId> = HashSet::new();
        for &m in marked {
            if !self.element(m).is_leaf() {
                return Err(Error::Config(format!(
                    "element {m} is not a leaf and cannot be refined"
                )));
            }
            split.insert(m);
        }
        if split.is_empty() {
            return Ok(Vec::new());
        }
        let adjacency = self.leaf_adjacency();
        // Fixed point: splitting a level-l leaf forces neighbors of level
        // < l to split as well.
        loop {
            let mut grew = false;
            for &(a, b) in &adjacency {
                let la = self.element(a).level;
                let lb = self.element(b).level;
                if split.contains(&a) && !split.contains(&b) && lb < la {
                    split.insert(b);
                    grew = true;
                }
                if split.contains(&b) && !split.contains(&a) && la < lb {
                    split.insert(a);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let mut out: Vec<ElementId> = split.into_iter().collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Refines the marked leaves (after 2:1 closure) in place, each into
    /// four children that split every side in two equal reference parts.
    /// New node coordinates come from the parent geometry map.
    ///
    /// Returns the closed marked set that was actually split.
    pub fn refine(&mut self, marked: &[ElementId]) -> Result<Vec<ElementId>> {
        let closed = self.close_marked_set(marked)?;
        for &e in &closed {
            self.split_leaf(e)?;
        }
        debug_assert!(self.check_two_to_one().is_ok());
        Ok(closed)
    }

    fn split_leaf(&mut self, e: ElementId) -> Result<()> {
        let el = self.element(e).clone();
        debug_assert!(el.is_leaf());
        if el.level >= MAX_LEVEL {
            return Err(Error::Config(format!(
                "element {e} already at the maximum refinement level"
            )));
        }
        let h = el.size() / 2;
        let (x0, y0) = (el.x0, el.y0);
        let root = el.root;
        let mb = self.node_at_ticks(root, x0 + h, y0);
        let mr = self.node_at_ticks(root, x0 + 2 * h, y0 + h);
        let mt = self.node_at_ticks(root, x0 + h, y0 + 2 * h);
        let ml = self.node_at_ticks(root, x0, y0 + h);
        let ctr = self.node_at_ticks(root, x0 + h, y0 + h);
        let c = el.corners;
        let child_defs = [
            ([c[0], mb, ctr, ml], x0, y0),
            ([mb, c[1], mr, ctr], x0 + h, y0),
            ([ctr, mr, c[2], mt], x0 + h, y0 + h),
            ([ml, ctr, mt, c[3]], x0, y0 + h),
        ];
        let mut ids = [0usize; 4];
        for (k, (corners, cx, cy)) in child_defs.into_iter().enumerate() {
            let id = self.elements.len();
            ids[k] = id;
            self.elements.push(Element {
                root,
                corners,
                level: el.level + 1,
                parent: Some(e),
                children: None,
                x0: cx,
                y0: cy,
            });
        }
        self.elements[e].children = Some(ids);
        Ok(())
    }

    /// Refines every leaf once (uniform refinement).
    pub fn refine_uniform(&mut self) -> Result<()> {
        let all = self.leaves();
        self.refine(&all)?;
        Ok(())
    }
}
