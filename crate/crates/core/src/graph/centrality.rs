//! Exact betweenness centrality (Brandes) under mean-delay weights.

use std::collections::{BTreeMap, BinaryHeap};

use super::{NodeId, SocialGraph};
use crate::scalar::Real;

/// Normalized betweenness, keyed by node id.
///
/// Each ordered pair `(s, t)` contributes its dependency, and the sum is
/// divided by `(n-1)(n-2)`, which for undirected graphs is the usual
/// unordered-pair normalization.
pub fn betweenness_centrality<T: Real>(g: &SocialGraph<T>) -> BTreeMap<NodeId, T> {
    let scores = betweenness_dense(g);
    g.ids().iter().copied().zip(scores).collect()
}

pub(crate) fn betweenness_dense<T: Real>(g: &SocialGraph<T>) -> Vec<T> {
    let n = g.node_count();
    let mut bc = vec![T::zero(); n];
    if n == 0 {
        return bc;
    }

    let mut sigma = vec![T::zero(); n];
    let mut dist = vec![T::infinity(); n];
    let mut delta = vec![T::zero(); n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut stack = Vec::with_capacity(n);

    for s in 0..n {
        for v in 0..n {
            sigma[v] = T::zero();
            dist[v] = T::infinity();
            delta[v] = T::zero();
            preds[v].clear();
            settled[v] = false;
        }
        stack.clear();
        sigma[s] = T::one();
        dist[s] = T::zero();

        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(T::zero(), s));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if settled[v] || d > dist[v] {
                continue;
            }
            settled[v] = true;
            stack.push(v);
            for &(w, e) in g.neighbors(v) {
                if settled[w] {
                    continue;
                }
                let nd = d + g.edge(e).delay.mean;
                if nd < dist[w] {
                    dist[w] = nd;
                    sigma[w] = sigma[v];
                    preds[w].clear();
                    preds[w].push(v);
                    heap.push(HeapItem(nd, w));
                } else if nd == dist[w] {
                    let sv = sigma[v];
                    sigma[w] += sv;
                    preds[w].push(v);
                }
            }
        }

        // dependency accumulation in reverse settle order
        while let Some(w) = stack.pop() {
            let coeff = (T::one() + delta[w]) / sigma[w];
            for &v in &preds[w] {
                delta[v] += sigma[v] * coeff;
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }

    if n >= 3 {
        let norm = T::of_usize((n - 1) * (n - 2));
        for b in &mut bc {
            *b /= norm;
        }
    }
    bc
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem<T>(T, usize);

impl<T: PartialOrd> Eq for HeapItem<T> {}

impl<T: PartialOrd> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl<T: PartialOrd> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
