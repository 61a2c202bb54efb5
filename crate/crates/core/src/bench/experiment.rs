use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::diffusion::{
    apply_missingness, derive_seed, load_cascade, observe, rng_from_seed, simulate_cascade, Cascade, MissingMode,
    MissingnessSpec, ObservationVector,
};
use crate::error::{Error, Result};
use crate::estimator::{candidate_stats, Localizer, LocalizerConfig, Stage};
use crate::graph::paths::tree_from_index;
use crate::graph::{
    betweenness_centrality, load_edge_list, louvain_partition, select_sensors, EdgeDelay, NodeId, SocialGraph,
};
use crate::linalg::Matrix;
use crate::recovery::{
    cs_recover, cs_recover_centered, dn_complete, dn_complete_renewal, DnOptions, DnScaling, Lifetime,
    PartialDelayMatrix, RenewalParams, SparsifyingBasis, VacationRenewal,
};

use super::config::{sensor_count, CsBasis, ExperimentConfig, NetworkSource, RecoveryMethod};
use super::network::{generate_network, VarianceModel};

const TAG_NETWORK: u64 = 1;
const TAG_PARTITION: u64 = 2;
const TAG_TRIAL: u64 = 3;

const SOURCE_STREAM: u64 = 0;
const CASCADE_STREAM: u64 = 1;
const MASK_STREAM: u64 = 2;
const MATRIX_STREAM: u64 = 3;

/// Cycles simulated before the inspection point of a residual sample.
const RESIDUAL_WARMUP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Recovery,
    Localization,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Recovery => "recover",
            Experiment::Localization => "localize",
        }
    }
}

/// One trial's outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub network: String,
    pub nodes: usize,
    pub sensor_pct: f64,
    pub sensors: usize,
    pub missing_rate: f64,
    pub mode: MissingMode,
    pub method: RecoveryMethod,
    pub trial: usize,
    pub seed: u64,
    pub source: Option<NodeId>,
    pub estimate: Option<NodeId>,
    pub hop_error: Option<usize>,
    /// Mean squared error over the masked entries.
    pub mse: Option<f64>,
    pub missing: usize,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Aggregate over the trials of one (sensor percentage, missing rate)
/// setting.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub experiment: Experiment,
    pub sensor_pct: f64,
    pub missing_rate: f64,
    pub mode: MissingMode,
    pub method: RecoveryMethod,
    pub recovery_mse: Option<f64>,
    pub source_distance: Option<f64>,
    pub failures: usize,
    pub trials: Vec<TrialRecord>,
    pub wall_time: Duration,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl MetricsRecord {
    fn new(
        experiment: Experiment,
        cfg: &ExperimentConfig,
        pct: f64,
        rate: f64,
        trials: Vec<TrialRecord>,
        wall_time: Duration,
    ) -> Self {
        Self {
            experiment,
            sensor_pct: pct,
            missing_rate: rate,
            mode: cfg.mode,
            method: cfg.method,
            recovery_mse: mean_of(trials.iter().filter_map(|t| t.mse)),
            source_distance: mean_of(trials.iter().filter_map(|t| t.hop_error.map(|h| h as f64))),
            failures: trials.iter().filter(|t| t.failed()).count(),
            trials,
            wall_time,
        }
    }
}

/// Builds or loads the configured network.
pub fn load_network(cfg: &ExperimentConfig) -> Result<SocialGraph<f64>> {
    match &cfg.network {
        NetworkSource::Synthetic { family, nodes } => {
            generate_network(*family, *nodes, &cfg.delays, derive_seed(cfg.seed, &[TAG_NETWORK]))
        }
        NetworkSource::File(path) => {
            let mean = cfg.delays.mean_lo;
            let variance = match cfg.delays.variance {
                VarianceModel::Uniform { lo, .. } => lo,
                VarianceModel::RelativeToMeanSquared(r) => r * mean * mean,
            };
            let file = File::open(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            load_edge_list(BufReader::new(file), EdgeDelay::new(mean, variance)?)
        }
    }
}

fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(cfg.seed, &[TAG_TRIAL, trial as u64])
}

/// Source and cascade of a simulated trial. They depend only on the base
/// seed and trial index, so every setting sees the same cascades.
fn simulated_cascade(g: &SocialGraph<f64>, seed: u64) -> Result<Cascade<f64>> {
    let mut rng = rng_from_seed(derive_seed(seed, &[SOURCE_STREAM]));
    let source = g.id(rng.random_range(0..g.node_count()));
    simulate_cascade(g, source, 0.0, derive_seed(seed, &[CASCADE_STREAM]))
}

fn squared_error(
    truth: &ObservationVector<f64>,
    masked: &ObservationVector<f64>,
    recovered: &ObservationVector<f64>,
) -> (f64, usize) {
    let idx = masked.missing_indices();
    let sum = idx
        .iter()
        .map(|&i| (recovered.values[i] - truth.values[i]).powi(2))
        .sum();
    (sum, idx.len())
}

struct TrialSetting<'a> {
    cfg: &'a ExperimentConfig,
    experiment: Experiment,
    nodes: usize,
    pct: f64,
    sensors: usize,
    rate: f64,
}

impl TrialSetting<'_> {
    fn record(&self, trial: usize, seed: u64) -> TrialRecord {
        TrialRecord {
            experiment: self.experiment,
            network: self.cfg.network.to_string(),
            nodes: self.nodes,
            sensor_pct: self.pct,
            sensors: self.sensors,
            missing_rate: self.rate,
            mode: self.cfg.mode,
            method: self.cfg.method,
            trial,
            seed,
            source: None,
            estimate: None,
            hop_error: None,
            mse: None,
            missing: 0,
            error: None,
        }
    }

    fn mask(&self, seed: u64) -> MissingnessSpec {
        MissingnessSpec {
            mode: self.cfg.mode,
            rate: self.rate,
            seed,
        }
    }
}

/// Mean and variance of shortest-path delays between every sensor pair.
struct PairMoments {
    mean: Matrix<f64>,
    var: Matrix<f64>,
}

impl PairMoments {
    fn new(g: &SocialGraph<f64>, sensors: &[NodeId]) -> Result<Self> {
        let k = sensors.len();
        let idx: Vec<usize> = sensors.iter().map(|&s| g.require(s)).collect::<Result<_>>()?;
        let mut mean = Matrix::zeros(k, k);
        let mut var = Matrix::zeros(k, k);
        for (a, &s) in idx.iter().enumerate() {
            let tree = tree_from_index(g, s);
            for (b, &t) in idx.iter().enumerate() {
                if !tree.is_reachable(t) {
                    return Err(Error::Coverage(vec![sensors[a], sensors[b]]));
                }
                mean[(a, b)] = tree.dist_mean[t];
                var[(a, b)] = tree.dist_var[t];
            }
        }
        Ok(Self { mean, var })
    }
}

fn warn_on_burst_cs(cfg: &ExperimentConfig) {
    if cfg.method == RecoveryMethod::Cs && cfg.mode == MissingMode::Burst && cfg.missing_rates.iter().any(|&r| r > 0.0)
    {
        log::warn!("compressed sensing is meant for sporadic loss; burst masks remove contiguous runs");
    }
}

fn global_sensors(g: &SocialGraph<f64>, k: usize) -> Result<Vec<NodeId>> {
    let scores = betweenness_centrality(g);
    select_sensors(g, k, &scores)
}

/// Basis and optional centering vector for compressed sensing.
struct CsModel {
    basis: SparsifyingBasis<f64>,
    center: Option<Vec<f64>>,
}

impl CsModel {
    fn new(choice: CsBasis, k: usize, means: impl FnOnce() -> Result<Vec<Vec<f64>>>) -> Result<Self> {
        let dct = || -> Result<Self> {
            Ok(Self {
                basis: SparsifyingBasis::dct(k)?,
                center: None,
            })
        };
        if choice == CsBasis::Dct {
            return dct();
        }
        let means = means()?;
        if means.is_empty() {
            return dct();
        }
        let count = means.len() as f64;
        let center: Vec<f64> = (0..k)
            .map(|i| means.iter().map(|m| m[i]).sum::<f64>() / count)
            .collect();
        let deviations: Vec<Vec<f64>> = means
            .iter()
            .map(|m| m.iter().zip(&center).map(|(a, c)| a - c).collect())
            .collect();
        Ok(Self {
            basis: SparsifyingBasis::principal(&deviations)?,
            center: Some(center),
        })
    }

    fn recover(&self, masked: &ObservationVector<f64>) -> Result<ObservationVector<f64>> {
        match &self.center {
            Some(c) => cs_recover_centered(masked, &self.basis, c),
            None => cs_recover(masked, &self.basis),
        }
    }
}

/// Mean offset vectors of every node that reaches all sensors.
fn all_candidate_means(g: &SocialGraph<f64>, sensors: &[NodeId]) -> Result<Vec<Vec<f64>>> {
    let per_node: Vec<Option<Vec<f64>>> = g
        .ids()
        .par_iter()
        .map(|&v| match candidate_stats(g, v, sensors) {
            Ok(st) => Ok(Some(st.mu)),
            Err(Error::Coverage(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(per_node.into_iter().flatten().collect())
}

/// Runs the recovery experiment, calling `on_group` as each setting
/// finishes.
pub fn run_recovery_experiment(
    cfg: &ExperimentConfig,
    mut on_group: impl FnMut(&MetricsRecord) -> Result<()>,
) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    warn_on_burst_cs(cfg);
    let g = load_network(cfg)?;
    let n = g.node_count();
    let mut out = Vec::new();
    for &pct in &cfg.sensor_pcts {
        let k = sensor_count(pct, n);
        let sensors = global_sensors(&g, k)?;
        let moments = match cfg.method {
            RecoveryMethod::Dn | RecoveryMethod::DnRenewal => Some(PairMoments::new(&g, &sensors)?),
            _ => None,
        };
        let cs_model = match cfg.method {
            RecoveryMethod::Cs => Some(CsModel::new(cfg.basis, k - 1, || all_candidate_means(&g, &sensors))?),
            _ => None,
        };
        for &rate in &cfg.missing_rates {
            let started = Instant::now();
            let setting = TrialSetting {
                cfg,
                experiment: Experiment::Recovery,
                nodes: n,
                pct,
                sensors: k,
                rate,
            };
            let trials: Vec<TrialRecord> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(cfg, t);
                    let mut rec = setting.record(t, seed);
                    let outcome = match &moments {
                        Some(pm) => delay_matrix_trial(&setting, pm, seed, &mut rec),
                        None => observation_trial(&g, &setting, &sensors, cs_model.as_ref(), seed, &mut rec),
                    };
                    if let Err(e) = outcome {
                        rec.error = Some(e.to_string());
                    }
                    rec
                })
                .collect();
            let group = MetricsRecord::new(Experiment::Recovery, cfg, pct, rate, trials, started.elapsed());
            on_group(&group)?;
            out.push(group);
        }
    }
    Ok(out)
}

fn recover_observation(
    g: &SocialGraph<f64>,
    method: RecoveryMethod,
    masked: &ObservationVector<f64>,
    cs_model: Option<&CsModel>,
) -> Result<ObservationVector<f64>> {
    if masked.is_complete() {
        return Ok(masked.clone());
    }
    match method {
        RecoveryMethod::Cs => match cs_model {
            Some(m) => m.recover(masked),
            None => Err(Error::InvalidArgument("compressed sensing needs a basis".to_string())),
        },
        RecoveryMethod::Dn | RecoveryMethod::DnRenewal => bridge_recover(g, method, masked),
        RecoveryMethod::None => Err(Error::InvalidArgument(
            "observation has missing entries but recovery is disabled".to_string(),
        )),
    }
}

fn observation_trial(
    g: &SocialGraph<f64>,
    setting: &TrialSetting<'_>,
    sensors: &[NodeId],
    cs_model: Option<&CsModel>,
    seed: u64,
    rec: &mut TrialRecord,
) -> Result<()> {
    let cascade = simulated_cascade(g, seed)?;
    rec.source = Some(cascade.source);
    let truth = observe(&cascade, sensors)?;
    let masked = apply_missingness(&truth, &setting.mask(derive_seed(seed, &[MASK_STREAM])))?;
    rec.missing = masked.missing_indices().len();
    let recovered = recover_observation(g, setting.cfg.method, &masked, cs_model)?;
    let (sum, count) = squared_error(&truth, &masked, &recovered);
    rec.mse = Some(if count == 0 { 0.0 } else { sum / count as f64 });
    Ok(())
}

/// `m` such that the `m × (k-1-m)` unknown block covers about `rate` of
/// the off-diagonal entries.
pub fn block_split(k: usize, rate: f64) -> Option<usize> {
    if rate <= 0.0 || k < 3 {
        return None;
    }
    let total = (k * (k - 1)) as f64;
    (1..=k - 2)
        .map(|m| (m, (2.0 * (m * (k - 1 - m)) as f64 / total - rate).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(m, _)| m)
}

/// Delay-matrix completion trial: pair delays are residual waits of a
/// vacation renewal process whose transmission lifetime is the
/// shortest-path delay between the two sensors.
fn delay_matrix_trial(setting: &TrialSetting<'_>, pm: &PairMoments, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let cfg = setting.cfg;
    let k = setting.sensors;
    let Some(m) = block_split(k, setting.rate) else {
        rec.mse = Some(0.0);
        return Ok(());
    };
    let mut rng = rng_from_seed(derive_seed(seed, &[MATRIX_STREAM]));
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    // layout: A = order[1..=m], overlap = order[0], B = order[m+1..]
    let layout: Vec<usize> = order[1..=m]
        .iter()
        .chain(&order[..1])
        .chain(&order[m + 1..])
        .copied()
        .collect();
    let vacation = (cfg.vacation_mean > 0.0).then_some(Lifetime::Exponential {
        mean: cfg.vacation_mean,
    });
    let process = |a: usize, b: usize| VacationRenewal {
        transmission: Lifetime::Gaussian {
            mean: pm.mean[(a, b)],
            sd: pm.var[(a, b)].sqrt(),
        },
        vacation,
    };
    let mut full = Matrix::zeros(k, k);
    for r in 0..k {
        for c in r + 1..k {
            let y = process(layout[r], layout[c]).sample_residual(&mut rng, RESIDUAL_WARMUP);
            full[(r, c)] = y;
            full[(c, r)] = y;
        }
    }
    let p = PartialDelayMatrix::from_full(&full, m)?;
    let nb = k - 1 - m;
    rec.missing = m * nb;
    let truth = Matrix::from_fn(m, nb, |i, j| full[(i, m + 1 + j)]);
    let mean_x = Matrix::from_fn(m, nb, |i, j| pm.mean[(layout[i], layout[m + 1 + j])]);
    let var_x = Matrix::from_fn(m, nb, |i, j| pm.var[(layout[i], layout[m + 1 + j])]);
    let vac_mean = vacation.map_or(0.0, |v| v.mean());
    let vac_var = vacation.map_or(0.0, |v| v.variance());
    let params = RenewalParams::new(mean_x, var_x, vec![vac_mean; m], vec![vac_var; m])?;
    let opts = DnOptions {
        scaling: DnScaling::Normalized,
        ..DnOptions::default()
    };
    let filled = match cfg.method {
        RecoveryMethod::Dn => dn_complete(&p, &params.cycle_means(), &opts)?,
        _ => dn_complete_renewal(&p, &params, &opts)?,
    };
    let diff = filled.block.sub(&truth);
    rec.mse = Some(diff.frobenius_norm().powi(2) / (m * nb) as f64);
    Ok(())
}

/// Fills missing arrival offsets through the completed delay block
/// between present and missing sensors: `Δt̂_b = min_a (Δt_a + X̂_ab)`,
/// with the reference sensor as the overlap node.
fn bridge_recover(
    g: &SocialGraph<f64>,
    method: RecoveryMethod,
    masked: &ObservationVector<f64>,
) -> Result<ObservationVector<f64>> {
    let present = masked.present_indices();
    let missing = masked.missing_indices();
    let all = masked.all_sensors();
    let pm = PairMoments::new(g, &all)?;
    // positions in `all` are shifted by one for the reference
    let d: Vec<f64> = missing.iter().map(|&j| pm.mean[(0, j + 1)]).collect();
    let mut out = masked.clone();
    if present.is_empty() {
        for (&j, &dj) in missing.iter().zip(&d) {
            out.values[j] = dj;
            out.mask[j] = true;
        }
        return Ok(out);
    }
    let (m, nb) = (present.len(), missing.len());
    let pos = |side_a: bool, i: usize| if side_a { present[i] + 1 } else { missing[i] + 1 };
    let a = Matrix::from_fn(m, m, |i, j| pm.mean[(pos(true, i), pos(true, j))]);
    let b = Matrix::from_fn(nb, nb, |i, j| pm.mean[(pos(false, i), pos(false, j))]);
    let c: Vec<f64> = present.iter().map(|&i| pm.mean[(i + 1, 0)]).collect();
    let p = PartialDelayMatrix::from_blocks(a, c, 0.0, d.clone(), b)?;
    let mean_x = Matrix::from_fn(m, nb, |i, j| pm.mean[(pos(true, i), pos(false, j))]);
    let opts = DnOptions {
        scaling: DnScaling::Normalized,
        ..DnOptions::default()
    };
    let filled = if method == RecoveryMethod::DnRenewal {
        let var_x = Matrix::from_fn(m, nb, |i, j| pm.var[(pos(true, i), pos(false, j))]);
        let params = RenewalParams::new(mean_x, var_x, vec![0.0; m], vec![0.0; m])?;
        dn_complete_renewal(&p, &params, &opts)?
    } else {
        dn_complete(&p, &mean_x, &opts)?
    };
    for (jj, &j) in missing.iter().enumerate() {
        let via_present = present
            .iter()
            .enumerate()
            .map(|(ii, &i)| masked.values[i] + filled.block[(ii, jj)]);
        out.values[j] = via_present.fold(d[jj], f64::min);
        out.mask[j] = true;
    }
    Ok(out)
}

/// Runs two-stage localization on simulated cascades, or on the
/// configured cascade files if any.
pub fn run_localization_experiment(
    cfg: &ExperimentConfig,
    mut on_group: impl FnMut(&MetricsRecord) -> Result<()>,
) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    warn_on_burst_cs(cfg);
    let g = load_network(cfg)?;
    let n = g.node_count();
    let observed: Vec<Cascade<f64>> = cfg.cascades.iter().map(|p| read_cascade(p)).collect::<Result<_>>()?;
    let partition = louvain_partition(&g, derive_seed(cfg.seed, &[TAG_PARTITION]));
    log::info!(
        "{} nodes, {} clusters, modularity {:.4}",
        n,
        partition.cluster_count(),
        partition.modularity()
    );
    let trials = if observed.is_empty() {
        cfg.trials
    } else {
        observed.len()
    };
    let mut out = Vec::new();
    for &pct in &cfg.sensor_pcts {
        let k1 = sensor_count(pct, n);
        let localizer = Localizer::new(&g, partition.clone(), LocalizerConfig { k1, k2: cfg.k2 })?;
        let bases = if cfg.method == RecoveryMethod::Cs {
            stage_bases(&g, &localizer, cfg.basis)?
        } else {
            StageBases::default()
        };
        for &rate in &cfg.missing_rates {
            let started = Instant::now();
            let setting = TrialSetting {
                cfg,
                experiment: Experiment::Localization,
                nodes: n,
                pct,
                sensors: localizer.stage1_sensors().len(),
                rate,
            };
            let records: Vec<TrialRecord> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(cfg, t);
                    let mut rec = setting.record(t, seed);
                    let cascade = match observed.get(t) {
                        Some(c) => Ok(c.clone()),
                        None => simulated_cascade(&g, seed),
                    };
                    let outcome =
                        cascade.and_then(|c| localization_trial(&g, &localizer, &bases, &setting, &c, seed, &mut rec));
                    if let Err(e) = outcome {
                        rec.error = Some(e.to_string());
                    }
                    rec
                })
                .collect();
            let group = MetricsRecord::new(Experiment::Localization, cfg, pct, rate, records, started.elapsed());
            on_group(&group)?;
            out.push(group);
        }
    }
    Ok(out)
}

#[derive(Default)]
struct StageBases {
    first: Option<CsModel>,
    clusters: Vec<Option<CsModel>>,
}

impl StageBases {
    fn get(&self, stage: Stage) -> Option<&CsModel> {
        match stage {
            Stage::One | Stage::Whole => self.first.as_ref(),
            Stage::Two { cluster } => self.clusters.get(cluster).and_then(Option::as_ref),
        }
    }
}

/// Stage one may see a source anywhere, so its basis is learned from
/// every node; a cluster's basis is learned from its members.
fn stage_bases(g: &SocialGraph<f64>, localizer: &Localizer<'_, f64>, choice: CsBasis) -> Result<StageBases> {
    let first_sensors = localizer.stage1_sensors();
    let first = CsModel::new(choice, first_sensors.len() - 1, || {
        all_candidate_means(g, first_sensors)
    })?;
    let clusters = (0..localizer.partition().cluster_count())
        .map(|c| {
            let k = localizer.cluster_sensors(c).len();
            if k < 2 {
                return Ok(None);
            }
            CsModel::new(choice, k - 1, || {
                Ok(localizer.candidate_means(Stage::Two { cluster: c }))
            })
            .map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(StageBases {
        first: Some(first),
        clusters,
    })
}

fn read_cascade(path: &Path) -> Result<Cascade<f64>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let c = load_cascade(BufReader::new(file))?;
    for w in &c.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(c)
}

fn localization_trial(
    g: &SocialGraph<f64>,
    localizer: &Localizer<'_, f64>,
    bases: &StageBases,
    setting: &TrialSetting<'_>,
    cascade: &Cascade<f64>,
    seed: u64,
    rec: &mut TrialRecord,
) -> Result<()> {
    rec.source = Some(cascade.source);
    let mut sq_sum = 0.0;
    let mut missing = 0;
    let est = localizer.localize(
        |stage, sensors| {
            let tag = match stage {
                Stage::One | Stage::Whole => 0,
                Stage::Two { cluster } => 1 + cluster as u64,
            };
            let truth = observe(cascade, sensors)?;
            let masked = apply_missingness(&truth, &setting.mask(derive_seed(seed, &[MASK_STREAM, tag])))?;
            let recovered = recover_observation(g, setting.cfg.method, &masked, bases.get(stage))?;
            let (s, c) = squared_error(&truth, &masked, &recovered);
            sq_sum += s;
            missing += c;
            Ok(recovered)
        },
        g.contains(cascade.source).then_some(cascade.source),
    )?;
    rec.estimate = Some(est.source());
    rec.hop_error = est.hop_error;
    rec.missing = missing;
    rec.mse = Some(if missing == 0 { 0.0 } else { sq_sum / missing as f64 });
    Ok(())
}
