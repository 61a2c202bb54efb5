mod common;

use common::{random_connected, random_layout, rank_one_svd, relative_frobenius};
use proptest::prelude::*;
use rumor_core::bench::{csv_row, Experiment, RecoveryMethod, TrialRecord};
use rumor_core::diffusion::{apply_missingness, derive_seed, observe, simulate_cascade, MissingMode, MissingnessSpec};
use rumor_core::estimator::{candidate_stats, estimate_over};
use rumor_core::graph::{louvain_partition, shortest_path_tree};
use rumor_core::linalg::symmetric_eigenvalues;
use rumor_core::recovery::{condition_check_and_load, cs_recover, dn_complete, renewal_expected_residual, DnOptions};
use rumor_core::{Matrix, NodeId, ObservationVector, RenewalParams, SparsifyingBasis};

fn obs_from(values: Vec<f64>) -> ObservationVector {
    let sensors = (1..=values.len() as u64).map(NodeId).collect();
    ObservationVector::complete(NodeId(0), sensors, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cs_keeps_present_entries(values in prop::collection::vec(-10.0f64..10.0, 2..24), rate in 0.0f64..0.9, seed in any::<u64>()) {
        let o = obs_from(values);
        let spec = MissingnessSpec { mode: MissingMode::Sporadic, rate, seed };
        let masked = apply_missingness(&o, &spec).unwrap();
        prop_assume!(!masked.present_indices().is_empty());
        let rec = cs_recover(&masked, &SparsifyingBasis::dct(o.len()).unwrap()).unwrap();
        prop_assert!(rec.is_complete());
        for i in masked.present_indices() {
            prop_assert_eq!(rec.values[i].to_bits(), o.values[i].to_bits());
        }
        if masked.missing_indices().is_empty() {
            prop_assert_eq!(rec, o);
        }
    }

    #[test]
    fn missing_count_is_ceiling(len in 1usize..60, rate in 0.0f64..=1.0, seed in any::<u64>(), burst in any::<bool>()) {
        let mode = if burst { MissingMode::Burst } else { MissingMode::Sporadic };
        let spec = MissingnessSpec { mode, rate, seed };
        let masked = apply_missingness(&obs_from(vec![1.0; len]), &spec).unwrap();
        let want = ((rate * len as f64) - 1e-9).ceil().max(0.0) as usize;
        prop_assert_eq!(masked.missing_indices().len(), want.min(len));
        if burst {
            let idx = masked.missing_indices();
            prop_assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn masks_nest_across_rates(len in 2usize..60, lo in 0.0f64..0.5, extra in 0.0f64..0.5, seed in any::<u64>(), burst in any::<bool>()) {
        let mode = if burst { MissingMode::Burst } else { MissingMode::Sporadic };
        let o = obs_from(vec![1.0; len]);
        let small = apply_missingness(&o, &MissingnessSpec { mode, rate: lo, seed }).unwrap();
        let large = apply_missingness(&o, &MissingnessSpec { mode, rate: lo + extra, seed }).unwrap();
        if !burst {
            for i in small.missing_indices() {
                prop_assert!(!large.mask[i]);
            }
        }
    }

    #[test]
    fn dn_product_is_dominant_rank_one(m in 1usize..7, n in 1usize..7, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        use rand::Rng;
        let ex = Matrix::from_fn(m, n, |_, _| r.random_range(0.1..10.0));
        let out = dn_complete(&random_layout(m, n, seed), &ex, &DnOptions::default()).unwrap();
        prop_assert!(relative_frobenius(&out.product(), &rank_one_svd(&ex)) < 1e-6);
        prop_assert!(out.alpha.iter().chain(&out.beta).all(|v| *v > 0.0));
    }

    #[test]
    fn loading_brings_condition_below_two(diag in prop::collection::vec(0.01f64..100.0, 1..8), seed in any::<u64>()) {
        let k = diag.len();
        let mut r = common::rng(seed);
        use rand::Rng;
        // random rotation of a diagonal matrix
        let a = Matrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
        let (_, q) = rumor_core::linalg::symmetric_eigen(&a.transpose().matmul(&a));
        let cov = q.matmul(&Matrix::diagonal(&diag)).matmul(&q.transpose());
        let cov = Matrix::from_fn(k, k, |i, j| 0.5 * (cov[(i, j)] + cov[(j, i)]));
        let out = condition_check_and_load(&random_layout(2, 2, seed), &cov).unwrap();
        prop_assert!(out.condition_after < 2.0);
        let eig = symmetric_eigenvalues(&cov);
        let closed = (eig[k - 1] - 2.0 * eig[0]).max(0.0);
        prop_assert!((out.shift - closed).abs() < 1e-6, "{} vs {}", out.shift, closed);
    }

    #[test]
    fn residual_is_at_least_half_the_mean(mx in 0.1f64..10.0, vx in 0.0f64..20.0, ms in 0.0f64..5.0, vs in 0.0f64..5.0) {
        let p = RenewalParams::new(Matrix::from_rows(&[vec![mx]]), Matrix::from_rows(&[vec![vx]]), vec![ms], vec![vs]).unwrap();
        let y = renewal_expected_residual(&p, 0, 0).unwrap();
        prop_assert!(y >= (mx + ms) / 2.0 - 1e-12);
    }

    #[test]
    fn tree_invariants(seed in 0u64..10_000, extra in 0usize..12) {
        let g = random_connected(14, extra, seed, false);
        let t = shortest_path_tree(&g, g.id(0)).unwrap();
        prop_assert_eq!((t.dist_mean[0], t.dist_var[0]), (0.0, 0.0));
        for v in 1..g.node_count() {
            let p = t.parent[v].unwrap();
            prop_assert!(t.dist_mean[p] <= t.dist_mean[v]);
            let edges = t.path_edges(v).unwrap();
            prop_assert_eq!(edges.len(), t.depth[v]);
            let sum: f64 = edges.iter().map(|&e| g.edge(e).delay.mean).sum();
            prop_assert!((sum - t.dist_mean[v]).abs() < 1e-9);
        }
    }

    #[test]
    fn covariance_is_symmetric_psd(seed in 0u64..10_000, extra in 0usize..10, k in 2usize..7) {
        let g = random_connected(12, extra, seed, false);
        let sensors: Vec<NodeId> = (0..k as u64).map(|i| NodeId((i * 5 + seed) % 12)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        prop_assume!(sensors.len() >= 2);
        for v in g.ids().to_vec() {
            let st = candidate_stats(&g, v, &sensors).unwrap();
            prop_assert!(st.lambda.is_symmetric(0.0));
            let eig = symmetric_eigenvalues(&st.lambda);
            prop_assert!(eig[0] > -1e-9 * eig[eig.len() - 1].max(1.0));
            prop_assert!(st.factor().is_ok());
        }
    }

    #[test]
    fn estimate_ignores_start_epoch(seed in 0u64..10_000, shift in -50.0f64..50.0) {
        let g = random_connected(12, 6, seed, false);
        let src = g.id((seed % 12) as usize);
        let c = simulate_cascade(&g, src, 0.0, seed).unwrap();
        let sensors: Vec<NodeId> = g.ids().iter().copied().step_by(3).collect();
        let a = estimate_over(&g, g.ids(), &observe(&c, &sensors).unwrap()).unwrap();
        let b = estimate_over(&g, g.ids(), &observe(&c.shifted(shift), &sensors).unwrap()).unwrap();
        prop_assert_eq!(a.pick, b.pick);
        let best = a.table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(a.table.iter().find(|p| p.1 == best).map(|p| p.0), Some(a.pick));
    }

    #[test]
    fn partition_covers_graph(seed in 0u64..10_000, extra in 0usize..20) {
        let g = random_connected(20, extra, seed, false);
        let p = louvain_partition(&g, seed);
        let mut all: Vec<usize> = p.clusters().concat();
        all.sort();
        prop_assert_eq!(all, (0..20).collect::<Vec<_>>());
        prop_assert!((-0.5..=1.0).contains(&p.modularity()));
    }

    #[test]
    fn csv_fields_round_trip(mse in any::<f64>().prop_filter("finite", |v| v.is_finite()), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let rec = TrialRecord {
            experiment: Experiment::Recovery,
            network: "ba".to_string(),
            nodes: 10,
            sensor_pct: 12.5,
            sensors: 2,
            missing_rate: rate,
            mode: MissingMode::Sporadic,
            method: RecoveryMethod::Cs,
            trial: 3,
            seed,
            source: Some(NodeId(4)),
            estimate: None,
            hop_error: Some(1),
            mse: Some(mse),
            missing: 1,
            error: None,
        };
        let row = csv_row(&rec);
        prop_assert_eq!(row[5].parse::<f64>().unwrap().to_bits(), rate.to_bits());
        prop_assert_eq!(row[9].parse::<u64>().unwrap(), seed);
        prop_assert_eq!(row[13].parse::<f64>().unwrap().to_bits(), mse.to_bits());
    }

    #[test]
    fn seeds_are_stable_and_spread(base in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assert_eq!(derive_seed(base, &[a]), derive_seed(base, &[a]));
        if a != b {
            prop_assert_ne!(derive_seed(base, &[a]), derive_seed(base, &[b]));
        }
    }
}
