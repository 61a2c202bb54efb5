use std::collections::BTreeMap;

use super::{NodeId, SocialGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Picks the `k` highest-scoring nodes, ties to the smaller id. The first
/// entry is the reference sensor.
///
/// Nodes missing from `scores` rank as zero.
pub fn select_sensors<T: Real>(g: &SocialGraph<T>, k: usize, scores: &BTreeMap<NodeId, T>) -> Result<Vec<NodeId>> {
    if k < 2 || k > g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "sensor count must be in [2, {}], got {k}",
            g.node_count()
        )));
    }
    let mut ranked: Vec<(T, NodeId)> = g
        .ids()
        .iter()
        .map(|&id| (scores.get(&id).copied().unwrap_or_else(T::zero), id))
        .collect();
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(ranked.into_iter().take(k).map(|(_, id)| id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{betweenness_centrality, load_edge_list, EdgeDelay};

    fn graph(text: &str) -> SocialGraph<f64> {
        load_edge_list(text.as_bytes(), EdgeDelay::new(1.0, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn path_picks_center_then_smallest() {
        let g = graph("0 1\n1 2");
        let s = select_sensors(&g, 2, &betweenness_centrality(&g)).unwrap();
        assert_eq!(s, vec![NodeId(1), NodeId(0)]);
    }

    #[test]
    fn equal_scores_fall_back_to_ids() {
        let g = graph("4 9\n9 2\n2 7\n7 4");
        let scores = g.ids().iter().map(|&i| (i, 0.5)).collect();
        let s = select_sensors(&g, 3, &scores).unwrap();
        assert_eq!(s, vec![NodeId(2), NodeId(4), NodeId(7)]);
    }

    #[test]
    fn bad_counts_are_rejected() {
        let g = graph("0 1\n1 2");
        let scores = BTreeMap::new();
        assert!(select_sensors(&g, 1, &scores).is_err());
        assert!(select_sensors(&g, 4, &scores).is_err());
        assert!(select_sensors(&g, 3, &scores).is_ok());
    }
}
