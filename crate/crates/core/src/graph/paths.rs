use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NodeId, SocialGraph};
use crate::error::Result;
use crate::scalar::Real;

/// Shortest-path tree under cumulative mean delay.
///
/// Indices are dense node indices of the graph the tree was built from.
/// Unreachable nodes have infinite `dist_mean` and no parent.
#[derive(Clone, Debug)]
pub struct ShortestPathTree<T> {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<usize>>,
    pub dist_mean: Vec<T>,
    pub dist_var: Vec<T>,
    pub depth: Vec<usize>,
    /// Settle order of reachable nodes; parents precede children.
    pub order: Vec<usize>,
}

impl<T: Real> ShortestPathTree<T> {
    #[inline]
    pub fn is_reachable(&self, v: usize) -> bool {
        self.dist_mean[v].is_finite()
    }

    /// Edge indices of the root-to-`v` path in travel order.
    pub fn path_edges(&self, v: usize) -> Option<Vec<usize>> {
        if !self.is_reachable(v) {
            return None;
        }
        let mut path = Vec::with_capacity(self.depth[v]);
        let mut cur = v;
        while let Some(e) = self.parent_edge[cur] {
            path.push(e);
            cur = self.parent[cur].expect("edge implies parent");
        }
        path.reverse();
        Some(path)
    }

    /// Lowest common ancestor of two reachable nodes.
    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        debug_assert!(self.is_reachable(a) && self.is_reachable(b));
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has parent");
            b = self.parent[b].expect("non-root has parent");
        }
        a
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> Eq for Entry<T> {}

impl<T: PartialOrd> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: PartialOrd> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct DijkstraResult<T> {
    pub dist: Vec<T>,
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<usize>>,
    pub order: Vec<usize>,
}

/// Dijkstra with positive per-edge weights. On equal distance the parent
/// with the smaller index wins.
pub(crate) fn dijkstra_with<T: Real>(
    g: &SocialGraph<T>,
    root: usize,
    weight: impl Fn(usize) -> T,
) -> DijkstraResult<T> {
    let n = g.node_count();
    let mut dist = vec![T::infinity(); n];
    let mut parent = vec![None; n];
    let mut parent_edge = vec![None; n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[root] = T::zero();
    heap.push(Entry {
        dist: T::zero(),
        node: root,
    });
    while let Some(Entry { dist: d, node: v }) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, e) in g.neighbors(v) {
            if settled[w] {
                continue;
            }
            let nd = d + weight(e);
            if nd < dist[w] {
                dist[w] = nd;
                parent[w] = Some(v);
                parent_edge[w] = Some(e);
                heap.push(Entry { dist: nd, node: w });
            } else if nd == dist[w] && parent[w].is_some_and(|p| v < p) {
                parent[w] = Some(v);
                parent_edge[w] = Some(e);
            }
        }
    }
    DijkstraResult {
        dist,
        parent,
        parent_edge,
        order,
    }
}

pub fn shortest_path_tree<T: Real>(g: &SocialGraph<T>, root: NodeId) -> Result<ShortestPathTree<T>> {
    let r = g.require(root)?;
    Ok(tree_from_index(g, r))
}

pub(crate) fn tree_from_index<T: Real>(g: &SocialGraph<T>, root: usize) -> ShortestPathTree<T> {
    let DijkstraResult {
        dist,
        parent,
        parent_edge,
        order,
    } = dijkstra_with(g, root, |e| g.edge(e).delay.mean);
    let n = g.node_count();
    let mut dist_var = vec![T::infinity(); n];
    let mut depth = vec![usize::MAX; n];
    dist_var[root] = T::zero();
    depth[root] = 0;
    // parents are settled before their children, so one pass suffices
    for &v in order.iter().skip(1) {
        let p = parent[v].expect("settled non-root has parent");
        let e = parent_edge[v].expect("settled non-root has parent edge");
        dist_var[v] = dist_var[p] + g.edge(e).delay.variance;
        depth[v] = depth[p] + 1;
    }
    ShortestPathTree {
        root,
        parent,
        parent_edge,
        dist_mean: dist,
        dist_var,
        depth,
        order,
    }
}
