//! Louvain community detection on the unweighted topology.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NodeId, SocialGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Disjoint clustering of a graph's nodes (dense indices).
///
/// Clusters are numbered by their smallest member, so cluster 0 always
/// contains node index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    cluster_of: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    modularity: T,
}

impl<T: Real> Partition<T> {
    /// Wraps an arbitrary assignment `node index -> label`, renumbering the
    /// labels canonically and computing the modularity.
    pub fn from_assignment(g: &SocialGraph<T>, labels: &[usize]) -> Result<Self> {
        if labels.len() != g.node_count() {
            return Err(Error::Dimension(format!(
                "assignment covers {} nodes, graph has {}",
                labels.len(),
                g.node_count()
            )));
        }
        let mut renumber = BTreeMap::new();
        let mut cluster_of = Vec::with_capacity(labels.len());
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for (v, &l) in labels.iter().enumerate() {
            let next = renumber.len();
            let c = *renumber.entry(l).or_insert(next);
            if c == clusters.len() {
                clusters.push(Vec::new());
            }
            clusters[c].push(v);
            cluster_of.push(c);
        }
        let modularity = modularity(g, &cluster_of);
        Ok(Self {
            cluster_of,
            clusters,
            modularity,
        })
    }

    pub fn single_cluster(g: &SocialGraph<T>) -> Self {
        Self::from_assignment(g, &vec![0; g.node_count()]).expect("assignment sized to graph")
    }

    #[inline]
    pub fn cluster_of(&self, v: usize) -> usize {
        self.cluster_of[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, c: usize) -> &[usize] {
        &self.clusters[c]
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn modularity(&self) -> T {
        self.modularity
    }

    /// Cluster members as node ids.
    pub fn member_ids(&self, g: &SocialGraph<T>, c: usize) -> Vec<NodeId> {
        self.clusters[c].iter().map(|&v| g.id(v)).collect()
    }
}

/// Newman modularity of `assignment` with every edge weighted 1.
pub fn modularity<T: Real>(g: &SocialGraph<T>, assignment: &[usize]) -> T {
    let m = g.edge_count();
    if m == 0 {
        return T::zero();
    }
    let k = assignment.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for e in g.edges() {
        let (ca, cb) = (assignment[e.a], assignment[e.b]);
        if ca == cb {
            internal[ca] += 1;
        }
        degree[ca] += 1;
        degree[cb] += 1;
    }
    let mf = T::of_usize(m);
    let two_m = mf + mf;
    internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| {
            let frac = T::of_usize(d) / two_m;
            T::of_usize(l) / mf - frac * frac
        })
        .sum()
}

/// Aggregated graph used at each Louvain level.
struct Level<T> {
    adjacency: Vec<Vec<(usize, T)>>,
    self_loops: Vec<T>,
}

impl<T: Real> Level<T> {
    fn degree(&self, v: usize) -> T {
        let s: T = self.adjacency[v].iter().map(|&(_, w)| w).sum();
        s + self.self_loops[v] + self.self_loops[v]
    }
}

/// Greedy modularity optimisation: local moves followed by aggregation,
/// repeated until no node changes community. Node visiting order is
/// shuffled with `seed`; everything else is deterministic.
pub fn louvain_partition<T: Real>(g: &SocialGraph<T>, seed: u64) -> Partition<T> {
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..n).collect();

    let mut level = Level {
        adjacency: (0..n)
            .map(|v| g.neighbors(v).iter().map(|&(w, _)| (w, T::one())).collect())
            .collect(),
        self_loops: vec![T::zero(); n],
    };

    loop {
        let (community, moved) = local_moves(&level, &mut rng);
        if !moved {
            break;
        }
        // renumber in order of first appearance by node index
        let mut relabel = vec![usize::MAX; community.len()];
        let mut next = 0;
        for &c in &community {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
        }
        for m in &mut membership {
            *m = relabel[community[*m]];
        }
        if next == level.adjacency.len() {
            break;
        }
        level = aggregate(&level, &community, &relabel, next);
    }

    Partition::from_assignment(g, &membership).expect("membership sized to graph")
}

fn local_moves<T: Real>(level: &Level<T>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.adjacency.len();
    let degree: Vec<T> = (0..n).map(|v| level.degree(v)).collect();
    let two_m: T = degree.iter().copied().sum();
    let mut community: Vec<usize> = (0..n).collect();
    if two_m == T::zero() {
        return (community, false);
    }
    let mut total = degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![T::zero(); n];
    let mut is_touched = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;
    let tol = T::lit(1e-12);

    for _pass in 0..1000 {
        let mut moved = false;
        for &v in &order {
            let current = community[v];
            for &(w, wt) in &level.adjacency[v] {
                let c = community[w];
                if !is_touched[c] {
                    is_touched[c] = true;
                    touched.push(c);
                }
                link[c] += wt;
            }
            total[current] -= degree[v];

            let gain = |c: usize, link_c: T| link_c - total[c] * degree[v] / two_m;
            let mut best = current;
            let mut best_gain = gain(current, link[current]);
            touched.sort_unstable();
            for &c in &touched {
                let gc = gain(c, link[c]);
                if gc > best_gain + tol {
                    best = c;
                    best_gain = gc;
                }
            }
            total[best] += degree[v];
            if best != current {
                community[v] = best;
                moved = true;
            }
            for &c in &touched {
                link[c] = T::zero();
                is_touched[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    (community, moved_any)
}

fn aggregate<T: Real>(level: &Level<T>, community: &[usize], relabel: &[usize], k: usize) -> Level<T> {
    let mut weights: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); k];
    let mut self_loops = vec![T::zero(); k];
    for (v, adj) in level.adjacency.iter().enumerate() {
        let cv = relabel[community[v]];
        self_loops[cv] += level.self_loops[v];
        for &(w, wt) in adj {
            let cw = relabel[community[w]];
            if cv == cw {
                // each internal edge is seen from both ends
                self_loops[cv] += wt / T::lit(2.0);
            } else {
                *weights[cv].entry(cw).or_insert_with(T::zero) += wt;
            }
        }
    }
    Level {
        adjacency: weights.into_iter().map(|m| m.into_iter().collect()).collect(),
        self_loops,
    }
}
