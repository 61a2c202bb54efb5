//! Weighted undirected social graph with Gaussian edge delays.
//!
//! Nodes carry external [`NodeId`]s; internally they are stored in ascending
//! id order so that a dense index comparison is the same as an id comparison.
//! Every tie-break in this crate ("smaller NodeId wins") relies on that.

pub(crate) mod centrality;
mod community;
mod gateway;
pub(crate) mod paths;
mod sensors;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use centrality::betweenness_centrality;
pub use community::{louvain_partition, modularity, Partition};
pub use gateway::{build_gateway_graph, GatewayGraph};
pub use paths::{shortest_path_tree, ShortestPathTree};
pub use sensors::select_sensors;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// Gaussian delay model of one edge: `N(mean, variance)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeDelay<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Real> EdgeDelay<T> {
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !(mean > T::zero()) || !mean.is_finite() {
            return Err(Error::Validation(format!("edge mean must be > 0, got {mean}")));
        }
        if !(variance >= T::zero()) || !variance.is_finite() {
            return Err(Error::Validation(format!("edge variance must be >= 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }
}

/// Edge between two dense node indices, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    pub delay: EdgeDelay<T>,
}

impl<T> Edge<T> {
    #[inline]
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug)]
pub struct SocialGraph<T> {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    edges: Vec<Edge<T>>,
    /// `(neighbor, edge index)` pairs sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<T: Real> SocialGraph<T> {
    pub fn empty() -> Self {
        GraphBuilder::new().build()
    }

    /// Builds a graph from explicit nodes and edges. Endpoints are added as
    /// nodes implicitly; duplicate edges keep the first occurrence.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, EdgeDelay<T>)>,
    ) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for n in nodes {
            b.add_node(n);
        }
        for (u, v, d) in edges {
            b.add_edge(u, v, d)?;
        }
        Ok(b.build())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in ascending order; position is the dense index.
    #[inline]
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    #[inline]
    pub fn id(&self, idx: usize) -> NodeId {
        self.ids[idx]
    }

    #[inline]
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn require(&self, id: NodeId) -> Result<usize> {
        self.index_of(id).ok_or(Error::NodeNotFound(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    #[inline]
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &Edge<T> {
        &self.edges[e]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Edge record between two nodes, if any.
    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<&Edge<T>> {
        let (ui, vi) = (self.index_of(u)?, self.index_of(v)?);
        let adj = &self.adjacency[ui];
        adj.binary_search_by_key(&vi, |&(n, _)| n)
            .ok()
            .map(|pos| &self.edges[adj[pos].1])
    }

    /// Subgraph induced by the given dense indices, keeping original ids.
    pub fn induced_subgraph(&self, members: &[usize]) -> Self {
        let keep: HashSet<usize> = members.iter().copied().collect();
        let mut b = GraphBuilder::new();
        for &m in members {
            b.add_node(self.ids[m]);
        }
        for e in &self.edges {
            if keep.contains(&e.a) && keep.contains(&e.b) {
                b.add_edge(self.ids[e.a], self.ids[e.b], e.delay)
                    .expect("edges of a valid graph stay valid");
            }
        }
        b.build()
    }

    /// Unweighted hop counts from `source`; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued nodes have a distance");
            for &(w, _) in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn hop_distance(&self, from: NodeId, to: NodeId) -> Result<Option<usize>> {
        let (f, t) = (self.require(from)?, self.require(to)?);
        Ok(self.hop_distances(f)[t])
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.hop_distances(0).iter().all(Option::is_some)
    }

    /// Writes the graph in the `u v mean variance` edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(
                out,
                "{} {} {} {}",
                self.ids[e.a], self.ids[e.b], e.delay.mean, e.delay.variance
            )?;
        }
        Ok(())
    }
}

/// Incremental graph construction.
#[derive(Debug)]
pub struct GraphBuilder<T> {
    nodes: Vec<NodeId>,
    seen: HashSet<NodeId>,
    edges: Vec<(NodeId, NodeId, EdgeDelay<T>)>,
    pairs: HashSet<(NodeId, NodeId)>,
}

impl<T: Real> Default for GraphBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> GraphBuilder<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            seen: HashSet::new(),
            edges: Vec::new(),
            pairs: HashSet::new(),
        }
    }

    pub fn add_node(&mut self, id: NodeId) {
        if self.seen.insert(id) {
            self.nodes.push(id);
        }
    }

    /// Adds an undirected edge. Returns `Ok(false)` for a duplicate, which
    /// is ignored; self-loops are rejected.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, delay: EdgeDelay<T>) -> Result<bool> {
        if u == v {
            return Err(Error::Validation(format!("self-loop on node {u}")));
        }
        let delay = EdgeDelay::new(delay.mean, delay.variance)?;
        let key = if u < v { (u, v) } else { (v, u) };
        if !self.pairs.insert(key) {
            return Ok(false);
        }
        self.add_node(u);
        self.add_node(v);
        self.edges.push((u, v, delay));
        Ok(true)
    }

    pub fn build(self) -> SocialGraph<T> {
        let mut ids = self.nodes;
        ids.sort_unstable();
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        let edges: Vec<Edge<T>> = self
            .edges
            .into_iter()
            .enumerate()
            .map(|(k, (u, v, delay))| {
                let (a, b) = (index[&u], index[&v]);
                adjacency[a].push((b, k));
                adjacency[b].push((a, k));
                Edge {
                    a: a.min(b),
                    b: a.max(b),
                    delay,
                }
            })
            .collect();
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        SocialGraph {
            ids,
            index,
            edges,
            adjacency,
        }
    }
}

/// Parses `u v [mean] [variance]` lines. `#` starts a comment.
pub fn load_edge_list<T: Real, R: BufRead>(reader: R, default_delay: EdgeDelay<T>) -> Result<SocialGraph<T>> {
    let mut b = GraphBuilder::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 || fields.len() > 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `u v [mean] [variance]`, got {} fields", fields.len()),
            });
        }
        let parse_id = |s: &str| {
            s.parse::<u64>().map(NodeId).map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid node id `{s}`"),
            })
        };
        let parse_num = |s: &str| {
            s.parse::<T>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid number `{s}`"),
            })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let mean = fields.get(2).map(|s| parse_num(s)).transpose()?;
        let variance = fields.get(3).map(|s| parse_num(s)).transpose()?;
        let delay = EdgeDelay {
            mean: mean.unwrap_or(default_delay.mean),
            variance: variance.unwrap_or(default_delay.variance),
        };
        b.add_edge(u, v, delay).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {lineno}: {msg}")),
            other => other,
        })?;
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_delay() -> EdgeDelay<f64> {
        EdgeDelay::new(1.0, 0.1).unwrap()
    }

    #[test]
    fn path_graph_from_text() {
        let g = load_edge_list("0 1\n1 2".as_bytes(), default_delay()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(1), 2);
        let e = g.edge_between(NodeId(2), NodeId(1)).unwrap();
        assert_eq!(e.delay, default_delay());
    }

    #[test]
    fn empty_stream_is_empty_graph() {
        let g = load_edge_list::<f64, _>("".as_bytes(), default_delay()).unwrap();
        assert_eq!(g.node_count(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn explicit_fields_are_echoed() {
        let g = load_edge_list("0 1 2.5 0.4".as_bytes(), default_delay()).unwrap();
        let e = g.edges()[0];
        assert_eq!(e.delay.mean, 2.5);
        assert_eq!(e.delay.variance, 0.4);
    }

    #[test]
    fn comments_blank_lines_and_duplicates() {
        let text = "# header\n\n5 7 3 0.5 # trailing\n7 5 9 9\n";
        let g = load_edge_list(text.as_bytes(), default_delay()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].delay.mean, 3.0);
        assert_eq!(g.ids(), &[NodeId(5), NodeId(7)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list::<f64, _>("0 1\n0 x\n".as_bytes(), default_delay()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_edge_list::<f64, _>("0\n".as_bytes(), default_delay()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = load_edge_list::<f64, _>("0 1 1 1 1\n".as_bytes(), default_delay()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn non_positive_mean_is_rejected() {
        let err = load_edge_list::<f64, _>("0 1\n1 2 0 1\n".as_bytes(), default_delay()).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("line 2")),
            other => panic!("unexpected {other}"),
        }
        assert!(load_edge_list::<f64, _>("0 1 -1\n".as_bytes(), default_delay()).is_err());
        assert!(load_edge_list::<f64, _>("0 1 1 -0.5\n".as_bytes(), default_delay()).is_err());
    }

    #[test]
    fn self_loops_are_rejected() {
        assert!(load_edge_list::<f64, _>("3 3\n".as_bytes(), default_delay()).is_err());
    }

    #[test]
    fn write_then_load_preserves_edges() {
        let g = load_edge_list("0 1 2.5 0.4\n1 9 0.1 0\n".as_bytes(), default_delay()).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let h = load_edge_list(buf.as_slice(), default_delay()).unwrap();
        assert_eq!(g.ids(), h.ids());
        assert_eq!(g.edges(), h.edges());
    }

    #[test]
    fn hop_distances_and_subgraph() {
        let g = load_edge_list("0 1\n1 2\n2 3\n5 6\n".as_bytes(), default_delay()).unwrap();
        let d = g.hop_distances(0);
        assert_eq!(&d[..4], &[Some(0), Some(1), Some(2), Some(3)]);
        assert_eq!(d[4], None);
        assert!(!g.is_connected());
        let sub = g.induced_subgraph(&[1, 2, 4]);
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.edge_count(), 1);
    }
}
