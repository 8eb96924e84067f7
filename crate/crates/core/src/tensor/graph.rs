use std::collections::{HashMap, HashSet};

use super::{Element, Tensor};
use crate::error::{contract_err, Result};

/// The gradient-tracking nodes reachable from a root, in reverse creation
/// order. Node ids grow monotonically, so descending id order is a valid
/// reverse topological order of the executed operations.
pub struct GradGraph<T: Element> {
    nodes: Vec<Tensor<T>>,
}

impl<T: Element> GradGraph<T> {
    pub fn from_root(root: &Tensor<T>) -> Self {
        let mut nodes = Vec::new();
        if !root.requires_grad() {
            return Self { nodes };
        }
        let mut seen = HashSet::new();
        let mut stack = vec![root.clone()];
        seen.insert(root.id());
        while let Some(t) = stack.pop() {
            if let Some(gf) = t.grad_fn() {
                for p in &gf.parents {
                    if p.requires_grad() && seen.insert(p.id()) {
                        stack.push(p.clone());
                    }
                }
            }
            nodes.push(t);
        }
        nodes.sort_by_key(|t| std::cmp::Reverse(t.id()));
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Operation names in backward traversal order; `None` marks a leaf.
    pub fn op_names(&self) -> Vec<Option<&'static str>> {
        self.nodes.iter().map(Tensor::op_name).collect()
    }

    pub fn nodes(&self) -> &[Tensor<T>] {
        &self.nodes
    }

    fn run(&self, seed: Vec<T>) {
        let Some(root) = self.nodes.first() else {
            return;
        };
        let mut pending: HashMap<u64, Vec<T>> = HashMap::new();
        pending.insert(root.id(), seed);
        for node in &self.nodes {
            let Some(g) = pending.remove(&node.id()) else {
                continue;
            };
            if let Some(gf) = node.grad_fn() {
                let parent_grads = (gf.backward)(&g, &gf.parents);
                debug_assert_eq!(parent_grads.len(), gf.parents.len());
                for (p, pg) in gf.parents.iter().zip(parent_grads) {
                    let Some(pg) = pg else { continue };
                    if !p.requires_grad() {
                        continue;
                    }
                    debug_assert_eq!(pg.len(), p.numel(), "grad size for {:?}", gf.name);
                    match pending.get_mut(&p.id()) {
                        Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, &b)| *a += b),
                        None => {
                            pending.insert(p.id(), pg);
                        }
                    }
                }
            }
            node.accumulate_grad(&g);
        }
    }
}

impl<T: Element> Tensor<T> {
    /// Back-propagates from this scalar. Gradients add onto whatever is
    /// already stored until [`Tensor::zero_grad`] is called.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return contract_err(format!(
                "backward() needs a scalar loss, got shape {:?}",
                self.shape()
            ));
        }
        GradGraph::from_root(self).run(vec![T::one()]);
        Ok(())
    }
}
