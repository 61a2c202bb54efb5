use std::collections::BTreeMap;

use super::{NodeId, Partition, SocialGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes incident to between-cluster edges, the edges among them, and the
/// home cluster of each.
#[derive(Clone, Debug)]
pub struct GatewayGraph<T> {
    pub graph: SocialGraph<T>,
    home: BTreeMap<NodeId, usize>,
}

impl<T: Real> GatewayGraph<T> {
    pub fn cluster_of(&self, gateway: NodeId) -> Option<usize> {
        self.home.get(&gateway).copied()
    }

    pub fn nodes(&self) -> &[NodeId] {
        self.graph.ids()
    }

    pub fn len(&self) -> usize {
        self.graph.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }
}

pub fn build_gateway_graph<T: Real>(g: &SocialGraph<T>, p: &Partition<T>) -> Result<GatewayGraph<T>> {
    if p.assignment().len() != g.node_count() {
        return Err(Error::Dimension("partition does not cover the graph".to_string()));
    }
    let mut is_gateway = vec![false; g.node_count()];
    for e in g.edges() {
        if p.cluster_of(e.a) != p.cluster_of(e.b) {
            is_gateway[e.a] = true;
            is_gateway[e.b] = true;
        }
    }
    let members: Vec<usize> = (0..g.node_count()).filter(|&v| is_gateway[v]).collect();
    if members.is_empty() {
        return Err(Error::EmptyGateway);
    }
    let home = members.iter().map(|&v| (g.id(v), p.cluster_of(v))).collect();
    Ok(GatewayGraph {
        graph: g.induced_subgraph(&members),
        home,
    })
}
