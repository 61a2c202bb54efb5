//! Synthetic test networks with random Gaussian edge delays.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::diffusion::rng_from_seed;
use crate::error::{Error, Result};
use crate::graph::{EdgeDelay, GraphBuilder, NodeId, SocialGraph};

/// Graph family and its shape parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NetworkFamily {
    /// Preferential attachment, `m` edges per new node.
    BarabasiAlbert { m: usize },
    /// Ring lattice of degree `k` with rewiring probability `beta`.
    WattsStrogatz { k: usize, beta: f64 },
    /// Uniform random recursive tree.
    Tree,
    /// Two cliques joined by one bridge edge; sizes split `n` as evenly
    /// as possible.
    TwoClique,
}

impl NetworkFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NetworkFamily::BarabasiAlbert { .. } => "ba",
            NetworkFamily::WattsStrogatz { .. } => "ws",
            NetworkFamily::Tree => "tree",
            NetworkFamily::TwoClique => "two-clique",
        }
    }
}

impl fmt::Display for NetworkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkFamily {
    type Err = Error;

    /// Accepts `ba`, `ws`, `tree` and `two-clique` with default shape
    /// parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ba" | "barabasi-albert" => Ok(NetworkFamily::BarabasiAlbert { m: 2 }),
            "ws" | "watts-strogatz" => Ok(NetworkFamily::WattsStrogatz { k: 4, beta: 0.1 }),
            "tree" => Ok(NetworkFamily::Tree),
            "two-clique" | "twoclique" => Ok(NetworkFamily::TwoClique),
            other => Err(Error::InvalidArgument(format!("unknown network family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarianceModel {
    /// Uniform in `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `ratio · mean²`.
    RelativeToMeanSquared(f64),
}

/// How edge delays are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayModel {
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub variance: VarianceModel,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            mean_lo: 1.0,
            mean_hi: 5.0,
            variance: VarianceModel::RelativeToMeanSquared(0.04),
        }
    }
}

impl DelayModel {
    fn validate(&self) -> Result<()> {
        let means_ok = self.mean_lo > 0.0 && self.mean_hi >= self.mean_lo && self.mean_hi.is_finite();
        let var_ok = match self.variance {
            VarianceModel::Uniform { lo, hi } => lo >= 0.0 && hi >= lo && hi.is_finite(),
            VarianceModel::RelativeToMeanSquared(r) => r >= 0.0 && r.is_finite(),
        };
        if means_ok && var_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid delay model {self:?}")))
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> EdgeDelay<f64> {
        let mean = uniform(rng, self.mean_lo, self.mean_hi);
        let variance = match self.variance {
            VarianceModel::Uniform { lo, hi } => uniform(rng, lo, hi),
            VarianceModel::RelativeToMeanSquared(r) => r * mean * mean,
        };
        EdgeDelay { mean, variance }
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Builds a connected graph with nodes `0..n`. Edge delays are drawn in
/// edge order after the topology, so a seed fixes both.
pub fn generate_network(family: NetworkFamily, n: usize, delays: &DelayModel, seed: u64) -> Result<SocialGraph<f64>> {
    delays.validate()?;
    let mut rng = rng_from_seed(seed);
    let pairs = match family {
        NetworkFamily::BarabasiAlbert { m } => barabasi_albert(n, m, &mut rng)?,
        NetworkFamily::WattsStrogatz { k, beta } => watts_strogatz(n, k, beta, &mut rng)?,
        NetworkFamily::Tree => random_tree(n, &mut rng)?,
        NetworkFamily::TwoClique => {
            if n < 2 {
                return Err(Error::InvalidArgument("two-clique needs at least 2 nodes".to_string()));
            }
            two_clique(n / 2, n - n / 2)
        }
    };
    let mut b = GraphBuilder::new();
    for v in 0..n {
        b.add_node(NodeId(v as u64));
    }
    for (u, v) in pairs {
        b.add_edge(NodeId(u as u64), NodeId(v as u64), delays.draw(&mut rng))?;
    }
    let g = b.build();
    debug_assert!(g.is_connected());
    Ok(g)
}

fn barabasi_albert(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if m == 0 || n <= m {
        return Err(Error::InvalidArgument(format!(
            "barabasi-albert needs m >= 1 and n > m, got n={n} m={m}"
        )));
    }
    // seed with a clique on m + 1 nodes
    let mut edges = Vec::new();
    let mut ends = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    for v in m + 1..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = ends[rng.random_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v));
            ends.extend([t, v]);
        }
    }
    Ok(edges)
}

fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if k < 2 || !k.is_multiple_of(2) || k >= n || !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "watts-strogatz needs even k in [2, n) and beta in [0, 1], got n={n} k={k} beta={beta}"
        )));
    }
    for _ in 0..100 {
        let mut present: HashSet<(usize, usize)> = HashSet::new();
        let mut edges = Vec::new();
        for u in 0..n {
            for j in 1..=k / 2 {
                let v = (u + j) % n;
                edges.push((u, v));
                present.insert((u.min(v), u.max(v)));
            }
        }
        for e in edges.iter_mut() {
            if rng.random::<f64>() >= beta {
                continue;
            }
            let u = e.0;
            let w = rng.random_range(0..n);
            let key = (u.min(w), u.max(w));
            if w == u || present.contains(&key) {
                continue;
            }
            present.remove(&(e.0.min(e.1), e.0.max(e.1)));
            present.insert(key);
            *e = (u, w);
        }
        if connected(n, &edges) {
            return Ok(edges);
        }
    }
    Err(Error::InvalidArgument(format!(
        "watts-strogatz with beta={beta} did not produce a connected graph"
    )))
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Err(Error::InvalidArgument("tree needs at least 1 node".to_string()));
    }
    // attach each node to a uniform earlier one, then relabel randomly so
    // that low ids are not systematically central
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    Ok((1..n)
        .map(|v| {
            let parent = rng.random_range(0..v);
            (label[parent], label[v])
        })
        .collect())
}

fn two_clique(a: usize, b: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..a {
        for v in u + 1..a {
            edges.push((u, v));
        }
    }
    for u in a..a + b {
        for v in u + 1..a + b {
            edges.push((u, v));
        }
    }
    edges.push((a - 1, a));
    edges
}
