mod common;

use common::{graph_from, random_connected, rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rumor_core::diffusion::{observe, simulate_cascade};
use rumor_core::estimator::{
    candidate_stats, estimate_over, log_likelihood, stage1_estimate, stage2_estimate, two_stage_localize,
    LocalizerConfig,
};
use rumor_core::graph::{build_gateway_graph, louvain_partition, shortest_path_tree, Partition};
use rumor_core::linalg::Matrix;
use rumor_core::{CandidateStats, NodeId, ObservationVector, SocialGraph};
use std::collections::BTreeSet;

/// Covariance of path-delay differences from explicit edge sets.
fn path_set_oracle(g: &SocialGraph, v: NodeId, sensors: &[NodeId]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let t = shortest_path_tree(g, v).unwrap();
    let paths: Vec<BTreeSet<usize>> = sensors
        .iter()
        .map(|s| t.path_edges(g.require(*s).unwrap()).unwrap().into_iter().collect())
        .collect();
    let var = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| -> f64 {
        a.intersection(b).map(|&e| g.edge(e).delay.variance).sum()
    };
    let dist = |s: &NodeId| t.dist_mean[g.require(*s).unwrap()];
    let k = sensors.len();
    let mu = (1..k).map(|r| dist(&sensors[r]) - dist(&sensors[0])).collect();
    let lambda = (1..k)
        .map(|a| {
            (1..k)
                .map(|b| {
                    var(&paths[a], &paths[b]) - var(&paths[a], &paths[0]) - var(&paths[b], &paths[0])
                        + var(&paths[0], &paths[0])
                })
                .collect()
        })
        .collect();
    (mu, lambda)
}

#[test]
fn statistics_match_path_set_covariance() {
    for seed in 0..10 {
        let g = random_connected(15, 10, 700 + seed, false);
        let sensors: Vec<NodeId> = [3u64, 0, 9, 14, 6].map(NodeId).to_vec();
        for v in g.ids().to_vec() {
            let st = candidate_stats(&g, v, &sensors).unwrap();
            let (mu, lambda) = path_set_oracle(&g, v, &sensors);
            for a in 0..4 {
                assert!((st.mu[a] - mu[a]).abs() < 1e-9);
                for b in 0..4 {
                    assert!((st.lambda[(a, b)] - lambda[a][b]).abs() < 1e-9, "seed {seed} v {v}");
                }
            }
            assert!(st.lambda.is_symmetric(0.0));
        }
    }
}

#[test]
fn star_center_pattern() {
    let s2 = 0.3;
    let g = graph_from(&[(0, 1, 1.0, s2), (0, 2, 1.0, s2), (0, 3, 1.0, s2), (0, 4, 1.0, s2)]);
    let st = candidate_stats(&g, NodeId(0), &[NodeId(1), NodeId(2), NodeId(3), NodeId(4)]).unwrap();
    assert_eq!(st.mu, vec![0.0; 3]);
    for a in 0..3 {
        for b in 0..3 {
            let want = if a == b { 2.0 * s2 } else { s2 };
            assert!((st.lambda[(a, b)] - want).abs() < 1e-12);
        }
    }
}

fn random_spd(seed: u64, k: usize) -> Matrix<f64> {
    let mut r = rng(seed);
    let a = Matrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
    let mut m = a.transpose().matmul(&a);
    m.add_to_diagonal(0.5);
    m
}

#[test]
fn likelihood_matches_dense_inverse() {
    for seed in 0..50 {
        let k = 3;
        let lambda = random_spd(seed, k);
        let mut r = rng(seed + 1000);
        let mu: Vec<f64> = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
        let stats = CandidateStats {
            candidate: NodeId(1),
            mu: mu.clone(),
            lambda: lambda.clone(),
        };
        let obs = ObservationVector::complete(NodeId(0), (1..=3).map(NodeId).collect(), x.clone()).unwrap();
        let got = log_likelihood(&stats, &obs).unwrap();

        let ridge = 1e-9 * (0..k).map(|i| lambda[(i, i)]).sum::<f64>() / k as f64;
        let m = DMatrix::from_fn(k, k, |i, j| lambda[(i, j)] + if i == j { ridge } else { 0.0 });
        let r = DVector::from_iterator(k, x.iter().zip(&mu).map(|(a, b)| a - b));
        let inv = m.clone().try_inverse().unwrap();
        let want = -0.5 * m.determinant().ln() - 0.5 * (r.transpose() * inv * &r)[(0, 0)];
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn likelihood_special_cases() {
    let lambda = random_spd(3, 3);
    let stats = CandidateStats {
        candidate: NodeId(1),
        mu: vec![1.0, 2.0, 3.0],
        lambda,
    };
    let obs = ObservationVector::complete(NodeId(0), (1..=3).map(NodeId).collect(), vec![1.0, 2.0, 3.0]).unwrap();
    let det = nalgebra::Matrix3::from_fn(|i, j| stats.regularized()[(i, j)]).determinant();
    assert!((log_likelihood(&stats, &obs).unwrap() + 0.5 * det.ln()).abs() < 1e-10);
}

fn zero_variance(g: &SocialGraph) -> SocialGraph {
    let edges: Vec<_> = g
        .edges()
        .iter()
        .map(|e| {
            (
                g.id(e.a).0,
                g.id(e.b).0,
                e.delay.mean,
                1e-6 * e.delay.mean * e.delay.mean,
            )
        })
        .collect();
    graph_from(&edges)
}

#[test]
fn gateway_source_is_found_in_low_noise_limit() {
    // two paths joined by the bridge 2-3
    let g = graph_from(&[
        (0, 1, 1.0, 1e-6),
        (1, 2, 2.0, 4e-6),
        (2, 3, 1.5, 2e-6),
        (3, 4, 1.0, 1e-6),
        (4, 5, 3.0, 9e-6),
    ]);
    let p = Partition::from_assignment(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
    let gw = build_gateway_graph(&g, &p).unwrap();
    let sensors = [NodeId(0), NodeId(5), NodeId(1)];
    for src in [NodeId(2), NodeId(3)] {
        let c = simulate_cascade(&g, src, 0.0, 11).unwrap();
        let obs = observe(&c, &sensors).unwrap();
        let r = stage1_estimate(&g, &gw, &obs).unwrap();
        assert_eq!(r.pick, src);
        let best = r.table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.table.iter().find(|p| p.1 == best).unwrap().0, r.pick);
    }
}

#[test]
fn whole_graph_cluster_recovers_source() {
    let g = zero_variance(&random_connected(12, 6, 21, false));
    let all = g.ids().to_vec();
    let sensors = all.clone();
    for &src in &all {
        let c = simulate_cascade(&g, src, 0.0, 5).unwrap();
        let obs = observe(&c, &sensors).unwrap();
        let r = stage2_estimate(&g, &all, &obs).unwrap();
        assert_eq!(r.pick, src);
        let best = r.table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        assert!(r.table.iter().all(|p| p.1 <= best));
    }
    let obs = observe(&simulate_cascade(&g, all[0], 0.0, 5).unwrap(), &sensors).unwrap();
    assert_eq!(stage2_estimate(&g, &[all[7]], &obs).unwrap().pick, all[7]);
}

#[test]
fn symmetric_candidates_resolve_to_smallest_id() {
    let g = graph_from(&[(0, 1, 1.0, 0.1), (0, 2, 1.0, 0.1), (0, 3, 1.0, 0.1)]);
    let sensors_obs = ObservationVector::complete(NodeId(1), vec![NodeId(2), NodeId(3)], vec![0.0, 0.0]).unwrap();
    let r = estimate_over(&g, &[NodeId(3), NodeId(2), NodeId(1)], &sensors_obs).unwrap();
    // leaves 1, 2, 3 are interchangeable up to relabelling; the hub is not
    let l2 = r.table.iter().find(|p| p.0 == NodeId(2)).unwrap().1;
    let l3 = r.table.iter().find(|p| p.0 == NodeId(3)).unwrap().1;
    assert!((l2 - l3).abs() < 1e-12);
    let best = r.table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let first_best = r.table.iter().filter(|p| p.1 == best).map(|p| p.0).min().unwrap();
    assert_eq!(r.pick, first_best);
}

fn two_cliques() -> SocialGraph {
    let mut r = rng(99);
    let mut edges = Vec::new();
    for base in [0u64, 6] {
        for i in 0..6 {
            for j in i + 1..6 {
                let m: f64 = r.random_range(1.0..5.0);
                edges.push((base + i, base + j, m, 1e-6 * m * m));
            }
        }
    }
    edges.push((5, 6, 2.0, 4e-6));
    graph_from(&edges)
}

#[test]
fn two_stage_end_to_end() {
    let g = two_cliques();
    let p = louvain_partition(&g, 1);
    assert_eq!(p.cluster_count(), 2);
    let cfg = LocalizerConfig { k1: 2, k2: 6 };
    for src in 0..12u64 {
        let c = simulate_cascade(&g, NodeId(src), 0.0, src).unwrap();
        let est = two_stage_localize(&g, p.clone(), cfg, |_, s| observe(&c, s), Some(NodeId(src))).unwrap();
        let home = p.cluster_of(src as usize);
        assert_eq!(p.cluster_of(g.require(est.stage1_pick).unwrap()), home);
        assert_eq!(est.source(), NodeId(src));
        assert_eq!(est.hop_error, Some(0));
    }
}

#[test]
fn clique_falls_back_to_single_stage() {
    let mut r = rng(5);
    let mut edges = Vec::new();
    for i in 0..6u64 {
        for j in i + 1..6 {
            let m: f64 = r.random_range(1.0..5.0);
            edges.push((i, j, m, 0.05 * m * m));
        }
    }
    let g = graph_from(&edges);
    let p = Partition::single_cluster(&g);
    let c = simulate_cascade(&g, NodeId(4), 0.0, 3).unwrap();
    let est = two_stage_localize(&g, p, LocalizerConfig { k1: 4, k2: 4 }, |_, s| observe(&c, s), None).unwrap();
    assert_eq!(est.cluster, None);
    let sensors = rumor_core::graph::select_sensors(&g, 4, &rumor_core::graph::betweenness_centrality(&g)).unwrap();
    let direct = stage2_estimate(&g, g.ids(), &observe(&c, &sensors).unwrap()).unwrap();
    assert_eq!(est.source(), direct.pick);
    assert_eq!(est.stage2_table, direct.table);
}
