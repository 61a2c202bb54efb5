//! Two-stage Gaussian maximum-likelihood source estimation.
//!
//! For a candidate source `v` and sensors `l₁ … l_k`, the arrival time at
//! `l` is the sum of independent Gaussian edge delays along the
//! shortest-path-tree route from `v`. Differences against `l₁` are then
//! jointly Gaussian with mean `μ_v` and covariance `Λ_v`, where the
//! covariance of two routes is the variance of their shared prefix.
//!
//! Stage one scores gateway nodes, picks the cluster of the winner, and
//! stage two scores the nodes of that cluster with sensors re-selected
//! inside it. All path statistics are taken on the full graph, which is
//! where the cascade actually travels.

use rayon::prelude::*;

use crate::diffusion::ObservationVector;
use crate::error::{Error, Result};
use crate::graph::centrality::betweenness_dense;
use crate::graph::paths::tree_from_index;
use crate::graph::{
    build_gateway_graph, select_sensors, GatewayGraph, NodeId, Partition, ShortestPathTree, SocialGraph,
};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

/// Mean vector and covariance of the inter-arrival vector for one
/// candidate source.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateStats<T> {
    pub candidate: NodeId,
    pub mu: Vec<T>,
    pub lambda: Matrix<T>,
}

impl<T: Real> CandidateStats<T> {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Diagonal ridge: `1e-9 · trace(Λ) / (k-1)`, or the bare floor when
    /// the trace vanishes.
    pub fn ridge(&self) -> T {
        let k = self.dim().max(1);
        let scaled = T::ridge_floor() * self.lambda.trace() / T::of_usize(k);
        if scaled > T::zero() {
            scaled
        } else {
            T::ridge_floor()
        }
    }

    pub fn regularized(&self) -> Matrix<T> {
        let mut m = self.lambda.clone();
        m.add_to_diagonal(self.ridge());
        m
    }

    /// Factorizes the regularized covariance for repeated scoring.
    pub fn factor(&self) -> Result<CandidateModel<T>> {
        let chol = Cholesky::new(&self.regularized()).ok_or(Error::NotPositiveDefinite {
            candidate: self.candidate,
        })?;
        let half_log_det = chol.log_det() / T::lit(2.0);
        Ok(CandidateModel {
            candidate: self.candidate,
            mu: self.mu.clone(),
            chol,
            half_log_det,
        })
    }
}

/// A candidate with its covariance already factorized.
#[derive(Clone, Debug)]
pub struct CandidateModel<T> {
    pub candidate: NodeId,
    mu: Vec<T>,
    chol: Cholesky<T>,
    half_log_det: T,
}

impl<T: Real> CandidateModel<T> {
    pub fn mean(&self) -> &[T] {
        &self.mu
    }

    /// `-½ log det Λ - ½ (Δt - μ)ᵀ Λ⁻¹ (Δt - μ)`, without the `2π` term.
    pub fn log_likelihood(&self, obs: &ObservationVector<T>) -> Result<T> {
        check_observation(obs, self.mu.len())?;
        let r: Vec<T> = obs.values.iter().zip(&self.mu).map(|(&x, &m)| x - m).collect();
        let half = T::lit(0.5);
        Ok(-self.half_log_det - half * self.chol.quadratic_form(&r))
    }
}

fn check_observation<T: Real>(obs: &ObservationVector<T>, dim: usize) -> Result<()> {
    if obs.len() != dim {
        return Err(Error::Dimension(format!(
            "observation has {} entries, model expects {dim}",
            obs.len()
        )));
    }
    if !obs.is_complete() {
        return Err(Error::InvalidArgument(
            "observation has missing entries; recover them first".to_string(),
        ));
    }
    Ok(())
}

/// Statistics of candidate `v` for the ordered sensor list.
pub fn candidate_stats<T: Real>(g: &SocialGraph<T>, v: NodeId, sensors: &[NodeId]) -> Result<CandidateStats<T>> {
    let root = g.require(v)?;
    let sensor_idx = sensor_indices(g, sensors)?;
    let tree = tree_from_index(g, root);
    stats_from_tree(g, &tree, &sensor_idx)
}

fn sensor_indices<T: Real>(g: &SocialGraph<T>, sensors: &[NodeId]) -> Result<Vec<usize>> {
    if sensors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sensors, got {}",
            sensors.len()
        )));
    }
    sensors.iter().map(|&s| g.require(s)).collect()
}

pub(crate) fn stats_from_tree<T: Real>(
    g: &SocialGraph<T>,
    tree: &ShortestPathTree<T>,
    sensors: &[usize],
) -> Result<CandidateStats<T>> {
    let unreached: Vec<NodeId> = sensors
        .iter()
        .filter(|&&s| !tree.is_reachable(s))
        .map(|&s| g.id(s))
        .collect();
    if !unreached.is_empty() {
        return Err(Error::Coverage(unreached));
    }
    let reference = sensors[0];
    let rest = &sensors[1..];
    let k = rest.len();
    let ref_mean = tree.dist_mean[reference];
    let mu = rest.iter().map(|&s| tree.dist_mean[s] - ref_mean).collect();

    // shared prefix of two root paths ends at their lowest common ancestor
    let shared = |a: usize, b: usize| tree.dist_var[tree.lca(a, b)];
    let with_ref: Vec<T> = rest.iter().map(|&s| shared(s, reference)).collect();
    let ref_var = tree.dist_var[reference];
    let mut lambda = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = shared(rest[a], rest[b]) - with_ref[a] - with_ref[b] + ref_var;
            lambda[(a, b)] = v;
            lambda[(b, a)] = v;
        }
    }
    Ok(CandidateStats {
        candidate: g.id(tree.root),
        mu,
        lambda,
    })
}

pub fn log_likelihood<T: Real>(stats: &CandidateStats<T>, obs: &ObservationVector<T>) -> Result<T> {
    check_observation(obs, stats.dim())?;
    stats.factor()?.log_likelihood(obs)
}

/// Outcome of one estimation stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageResult<T> {
    pub pick: NodeId,
    /// Log-likelihood per evaluated candidate, ascending by id.
    pub table: Vec<(NodeId, T)>,
}

fn argmax<T: Real>(table: Vec<(NodeId, T)>) -> Result<StageResult<T>> {
    let mut best: Option<(NodeId, T)> = None;
    for &(id, ll) in &table {
        if !ll.is_finite() {
            continue;
        }
        // ascending ids + strict comparison keep the smaller id on ties
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((id, ll));
        }
    }
    let (pick, _) = best.ok_or_else(|| Error::Degenerate("no candidate produced a finite likelihood".to_string()))?;
    Ok(StageResult { pick, table })
}

/// Scores `candidates` against `obs` (sensors taken from the observation).
/// Candidates that cannot reach every sensor are skipped.
pub fn estimate_over<T: Real>(
    g: &SocialGraph<T>,
    candidates: &[NodeId],
    obs: &ObservationVector<T>,
) -> Result<StageResult<T>> {
    let sensors = sensor_indices(g, &obs.all_sensors())?;
    check_observation(obs, sensors.len() - 1)?;
    let mut cand: Vec<usize> = candidates.iter().map(|&c| g.require(c)).collect::<Result<_>>()?;
    cand.sort_unstable();
    cand.dedup();
    let rows: Vec<Option<(NodeId, T)>> = cand
        .par_iter()
        .map(|&v| {
            let tree = tree_from_index(g, v);
            match stats_from_tree(g, &tree, &sensors) {
                Ok(stats) => stats
                    .factor()
                    .and_then(|m| m.log_likelihood(obs))
                    .map(|ll| Some((g.id(v), ll))),
                Err(Error::Coverage(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let table: Vec<(NodeId, T)> = rows.into_iter().flatten().collect();
    if table.is_empty() {
        return Err(Error::Coverage(obs.all_sensors()));
    }
    argmax(table)
}

/// Stage one: argmax over the gateway nodes.
pub fn stage1_estimate<T: Real>(
    g: &SocialGraph<T>,
    gw: &GatewayGraph<T>,
    obs: &ObservationVector<T>,
) -> Result<StageResult<T>> {
    estimate_over(g, gw.nodes(), obs)
}

/// Stage two: argmax over one cluster. A singleton cluster is returned
/// without scoring.
pub fn stage2_estimate<T: Real>(
    g: &SocialGraph<T>,
    cluster: &[NodeId],
    obs: &ObservationVector<T>,
) -> Result<StageResult<T>> {
    match cluster {
        [] => Err(Error::InvalidArgument("empty cluster".to_string())),
        [only] => Ok(StageResult {
            pick: *only,
            table: Vec::new(),
        }),
        _ => estimate_over(g, cluster, obs),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalizerConfig {
    /// Stage-one sensors (or single-stage sensors in the fallback).
    pub k1: usize,
    /// Sensors inside the picked cluster.
    pub k2: usize,
}

/// Which stage an observation request is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    One,
    Two {
        cluster: usize,
    },
    /// Single stage over all nodes (no gateway nodes exist).
    Whole,
}

struct CandidateTable<T> {
    sensors: Vec<NodeId>,
    /// Factorized models ascending by candidate id.
    models: Vec<CandidateModel<T>>,
}

impl<T: Real> CandidateTable<T> {
    fn build(
        g: &SocialGraph<T>,
        candidates: &[usize],
        sensors: Vec<NodeId>,
        trees: &[Option<ShortestPathTree<T>>],
    ) -> Result<Self> {
        let idx = sensor_indices(g, &sensors)?;
        let models: Vec<Option<CandidateModel<T>>> = candidates
            .par_iter()
            .map(|&v| {
                let owned;
                let tree = match &trees[v] {
                    Some(t) => t,
                    None => {
                        owned = tree_from_index(g, v);
                        &owned
                    }
                };
                match stats_from_tree(g, tree, &idx) {
                    Ok(s) => s.factor().map(Some),
                    Err(Error::Coverage(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sensors,
            models: models.into_iter().flatten().collect(),
        })
    }

    fn estimate(&self, obs: &ObservationVector<T>) -> Result<StageResult<T>> {
        if obs.all_sensors() != self.sensors {
            return Err(Error::InvalidArgument(
                "observation sensors differ from the configured sensor list".to_string(),
            ));
        }
        let table = self
            .models
            .iter()
            .map(|m| m.log_likelihood(obs).map(|ll| (m.candidate, ll)))
            .collect::<Result<Vec<_>>>()?;
        argmax(table)
    }
}

/// Final two-stage estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceEstimate<T> {
    pub stage1_pick: NodeId,
    pub stage2_pick: NodeId,
    /// Cluster searched in stage two; `None` in the single-stage fallback.
    pub cluster: Option<usize>,
    pub stage1_table: Vec<(NodeId, T)>,
    pub stage2_table: Vec<(NodeId, T)>,
    /// Unweighted hops between the estimate and the true source.
    pub hop_error: Option<usize>,
}

impl<T> SourceEstimate<T> {
    pub fn source(&self) -> NodeId {
        self.stage2_pick
    }
}

/// Precomputed two-stage estimator for one graph and partition.
///
/// Sensor lists and covariance factorizations depend only on the graph,
/// so they are built once and reused for every cascade.
pub struct Localizer<'g, T> {
    graph: &'g SocialGraph<T>,
    partition: Partition<T>,
    gateway: Option<GatewayGraph<T>>,
    first: CandidateTable<T>,
    /// Per cluster; `None` for singleton clusters.
    clusters: Vec<Option<CandidateTable<T>>>,
}

impl<'g, T: Real> Localizer<'g, T> {
    pub fn new(graph: &'g SocialGraph<T>, partition: Partition<T>, cfg: LocalizerConfig) -> Result<Self> {
        if partition.assignment().len() != graph.node_count() {
            return Err(Error::Dimension("partition does not cover the graph".to_string()));
        }
        if cfg.k1 < 2 || cfg.k2 < 2 {
            return Err(Error::InvalidArgument(format!(
                "sensor counts must be >= 2, got k1={} k2={}",
                cfg.k1, cfg.k2
            )));
        }
        let n = graph.node_count();
        let gateway = match build_gateway_graph(graph, &partition) {
            Ok(gw) => Some(gw),
            Err(Error::EmptyGateway) => None,
            Err(e) => return Err(e),
        };

        let trees: Vec<Option<ShortestPathTree<T>>> = (0..n)
            .into_par_iter()
            .map(|v| Some(tree_from_index(graph, v)))
            .collect();

        let first = match &gateway {
            Some(gw) => {
                let scores = gw
                    .graph
                    .ids()
                    .iter()
                    .copied()
                    .zip(betweenness_dense(&gw.graph))
                    .collect();
                let k = cfg.k1.min(gw.len());
                let sensors = select_sensors(&gw.graph, k, &scores)?;
                let cands: Vec<usize> = gw.nodes().iter().map(|&id| graph.require(id)).collect::<Result<_>>()?;
                CandidateTable::build(graph, &cands, sensors, &trees)?
            }
            None => {
                let scores = graph.ids().iter().copied().zip(betweenness_dense(graph)).collect();
                let sensors = select_sensors(graph, cfg.k1.min(n), &scores)?;
                let all: Vec<usize> = (0..n).collect();
                CandidateTable::build(graph, &all, sensors, &trees)?
            }
        };

        let clusters = if gateway.is_some() {
            partition
                .clusters()
                .iter()
                .map(|members| {
                    if members.len() < 2 {
                        return Ok(None);
                    }
                    let sub = graph.induced_subgraph(members);
                    let scores = sub.ids().iter().copied().zip(betweenness_dense(&sub)).collect();
                    let sensors = select_sensors(&sub, cfg.k2.min(members.len()), &scores)?;
                    CandidateTable::build(graph, members, sensors, &trees).map(Some)
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        Ok(Self {
            graph,
            partition,
            gateway,
            first,
            clusters,
        })
    }

    pub fn graph(&self) -> &SocialGraph<T> {
        self.graph
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn gateway(&self) -> Option<&GatewayGraph<T>> {
        self.gateway.as_ref()
    }

    pub fn is_single_stage(&self) -> bool {
        self.gateway.is_none()
    }

    /// Sensors of stage one (or of the single-stage fallback).
    pub fn stage1_sensors(&self) -> &[NodeId] {
        &self.first.sensors
    }

    /// Stage-two sensors of cluster `c`; empty for singleton clusters.
    pub fn cluster_sensors(&self, c: usize) -> &[NodeId] {
        self.clusters
            .get(c)
            .and_then(Option::as_ref)
            .map_or(&[], |t| t.sensors.as_slice())
    }

    /// Mean offset vectors of every candidate scored in `stage`, ascending
    /// by candidate id.
    pub fn candidate_means(&self, stage: Stage) -> Vec<Vec<T>> {
        let table = match stage {
            Stage::One | Stage::Whole => Some(&self.first),
            Stage::Two { cluster } => self.clusters.get(cluster).and_then(Option::as_ref),
        };
        table.map_or_else(Vec::new, |t| t.models.iter().map(|m| m.mean().to_vec()).collect())
    }

    /// Runs both stages. `observe` is asked for a complete observation
    /// vector over the given sensor list; it is where missing entries get
    /// recovered.
    pub fn localize<F>(&self, mut observe: F, truth: Option<NodeId>) -> Result<SourceEstimate<T>>
    where
        F: FnMut(Stage, &[NodeId]) -> Result<ObservationVector<T>>,
    {
        let obs1 = observe(
            if self.is_single_stage() {
                Stage::Whole
            } else {
                Stage::One
            },
            &self.first.sensors,
        )?;
        let s1 = self.first.estimate(&obs1)?;

        let (cluster, s2) = match &self.gateway {
            None => (None, s1.clone()),
            Some(gw) => {
                let c = gw.cluster_of(s1.pick).expect("stage-one candidates are gateway nodes");
                let s2 = match &self.clusters[c] {
                    None => StageResult {
                        pick: self.graph.id(self.partition.cluster(c)[0]),
                        table: Vec::new(),
                    },
                    Some(table) => {
                        let obs2 = observe(Stage::Two { cluster: c }, &table.sensors)?;
                        table.estimate(&obs2)?
                    }
                };
                (Some(c), s2)
            }
        };

        let hop_error = match truth {
            Some(t) => self.graph.hop_distance(s2.pick, t)?,
            None => None,
        };
        Ok(SourceEstimate {
            stage1_pick: s1.pick,
            stage2_pick: s2.pick,
            cluster,
            stage1_table: s1.table,
            stage2_table: s2.table,
            hop_error,
        })
    }
}

/// Two-stage localization over fully observed sensors of a known cascade
/// arrival map. Convenience wrapper around [`Localizer`].
pub fn two_stage_localize<T: Real, F>(
    g: &SocialGraph<T>,
    partition: Partition<T>,
    cfg: LocalizerConfig,
    observe: F,
    truth: Option<NodeId>,
) -> Result<SourceEstimate<T>>
where
    F: FnMut(Stage, &[NodeId]) -> Result<ObservationVector<T>>,
{
    Localizer::new(g, partition, cfg)?.localize(observe, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_edge_list, EdgeDelay};

    fn graph(text: &str, var: f64) -> SocialGraph<f64> {
        load_edge_list(text.as_bytes(), EdgeDelay::new(1.0, var).unwrap()).unwrap()
    }

    fn ids(v: &[u64]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn star_center_statistics() {
        let s2 = 0.3;
        let g = graph("0 1\n0 2\n0 3\n0 4", s2);
        let st = candidate_stats(&g, NodeId(0), &ids(&[1, 2, 3, 4])).unwrap();
        assert_eq!(st.mu, vec![0.0; 3]);
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { 2.0 * s2 } else { s2 };
                assert!((st.lambda[(a, b)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_candidate_has_empty_reference_path() {
        let g = graph("0 1 1 0.1\n1 2 2 0.2\n1 3 3 0.3", 0.0);
        let st = candidate_stats(&g, NodeId(0), &ids(&[0, 2, 3])).unwrap();
        assert_eq!(st.mu, vec![3.0, 4.0]);
        // shared edge 0-1 only
        assert!((st.lambda[(0, 0)] - 0.3).abs() < 1e-15);
        assert!((st.lambda[(1, 1)] - 0.4).abs() < 1e-15);
        assert!((st.lambda[(0, 1)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unreachable_sensor_is_reported() {
        let g = graph("0 1\n2 3", 0.1);
        assert!(matches!(
            candidate_stats(&g, NodeId(0), &ids(&[1, 3])),
            Err(Error::Coverage(v)) if v == ids(&[3])
        ));
    }

    #[test]
    fn mean_centered_and_identity_cases() {
        let stats: CandidateStats<f64> = CandidateStats {
            candidate: NodeId(0),
            mu: vec![1.0, -2.0],
            lambda: Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]),
        };
        let obs = ObservationVector::complete(NodeId(9), ids(&[1, 2]), vec![1.0, -2.0]).unwrap();
        let det = stats.regularized();
        let det = det[(0, 0)] * det[(1, 1)] - det[(0, 1)] * det[(1, 0)];
        assert!((log_likelihood(&stats, &obs).unwrap() + 0.5 * det.ln()).abs() < 1e-12);

        let ident: CandidateStats<f64> = CandidateStats {
            candidate: NodeId(0),
            mu: vec![0.0, 0.0],
            lambda: Matrix::identity(2),
        };
        let obs = ObservationVector::complete(NodeId(9), ids(&[1, 2]), vec![3.0, 4.0]).unwrap();
        // ridge shifts the identity by 1e-9
        assert!((log_likelihood(&ident, &obs).unwrap() + 12.5).abs() < 1e-7);
    }

    #[test]
    fn incomplete_observation_is_rejected() {
        let stats: CandidateStats<f64> = CandidateStats {
            candidate: NodeId(0),
            mu: vec![0.0, 0.0],
            lambda: Matrix::identity(2),
        };
        let mut obs = ObservationVector::complete(NodeId(9), ids(&[1, 2]), vec![3.0, 4.0]).unwrap();
        obs.mask[1] = false;
        assert!(log_likelihood(&stats, &obs).is_err());
        let short = ObservationVector::complete(NodeId(9), ids(&[1]), vec![3.0]).unwrap();
        assert!(matches!(log_likelihood(&stats, &short), Err(Error::Dimension(_))));
    }

    #[test]
    fn negative_definite_is_a_numerical_error() {
        let stats: CandidateStats<f64> = CandidateStats {
            candidate: NodeId(4),
            mu: vec![0.0, 0.0],
            lambda: Matrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 1.0]]),
        };
        assert!(matches!(
            stats.factor(),
            Err(Error::NotPositiveDefinite { candidate: NodeId(4) })
        ));
    }

    #[test]
    fn singleton_cluster_is_forced() {
        let g = graph("0 1", 0.1);
        let obs = ObservationVector::complete(NodeId(0), ids(&[1]), vec![1.0]).unwrap();
        let r = stage2_estimate(&g, &ids(&[1]), &obs).unwrap();
        assert_eq!(r.pick, NodeId(1));
        assert!(r.table.is_empty());
    }

    #[test]
    fn symmetric_candidates_tie_to_smallest() {
        // star: every leaf looks the same from sensors {0, and nothing else distinguishes}
        let g = graph("0 1\n0 2\n0 3\n0 4", 0.1);
        let obs = ObservationVector::complete(NodeId(0), ids(&[1]), vec![1.0]).unwrap();
        // candidates 2,3,4 are symmetric w.r.t. sensors {0,1}
        let r = estimate_over(&g, &ids(&[4, 3, 2]), &obs).unwrap();
        assert_eq!(r.pick, NodeId(2));
        assert_eq!(r.table.len(), 3);
    }
}
