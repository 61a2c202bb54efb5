use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::diffusion::MissingMode;
use crate::error::{Error, Result};

use super::network::{DelayModel, NetworkFamily, VarianceModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMethod {
    Cs,
    Dn,
    DnRenewal,
    /// No recovery; only valid when nothing is missing.
    None,
}

impl RecoveryMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RecoveryMethod::Cs => "cs",
            RecoveryMethod::Dn => "dn",
            RecoveryMethod::DnRenewal => "dn-renewal",
            RecoveryMethod::None => "none",
        }
    }
}

impl fmt::Display for RecoveryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecoveryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cs" => Ok(RecoveryMethod::Cs),
            "dn" => Ok(RecoveryMethod::Dn),
            "dn-renewal" => Ok(RecoveryMethod::DnRenewal),
            "none" => Ok(RecoveryMethod::None),
            other => Err(Error::InvalidArgument(format!("unknown recovery method `{other}`"))),
        }
    }
}

/// Sparsifying basis used by compressed-sensing recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsBasis {
    /// Orthonormal DCT-II.
    Dct,
    /// Principal directions of the candidates' mean offset vectors.
    Principal,
}

impl FromStr for CsBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(CsBasis::Dct),
            "principal" => Ok(CsBasis::Principal),
            other => Err(Error::InvalidArgument(format!("unknown basis `{other}`"))),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<MissingMode> {
    match s.to_ascii_lowercase().as_str() {
        "sporadic" => Ok(MissingMode::Sporadic),
        "burst" => Ok(MissingMode::Burst),
        other => Err(Error::InvalidArgument(format!("unknown missingness mode `{other}`"))),
    }
}

pub fn mode_name(mode: MissingMode) -> &'static str {
    match mode {
        MissingMode::Sporadic => "sporadic",
        MissingMode::Burst => "burst",
    }
}

/// Where the network comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSource {
    Synthetic {
        family: NetworkFamily,
        nodes: usize,
    },
    /// Edge-list file; missing delay columns take the delay model's lower
    /// mean and its variance.
    File(PathBuf),
}

impl fmt::Display for NetworkSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkSource::Synthetic { family, .. } => write!(f, "{family}"),
            NetworkSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    pub delays: DelayModel,
    /// Sensor counts as percentages of the node count (`5` is 5%).
    pub sensor_pcts: Vec<f64>,
    pub missing_rates: Vec<f64>,
    pub mode: MissingMode,
    pub method: RecoveryMethod,
    pub basis: CsBasis,
    pub trials: usize,
    pub seed: u64,
    pub k2: usize,
    pub out: Option<PathBuf>,
    /// Mean vacation between transmissions in the delay-matrix experiment.
    pub vacation_mean: f64,
    /// Observed cascades; when present they replace simulated trials.
    pub cascades: Vec<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: NetworkSource::Synthetic {
                family: NetworkFamily::BarabasiAlbert { m: 2 },
                nodes: 1000,
            },
            delays: DelayModel::default(),
            sensor_pcts: vec![5.0],
            missing_rates: vec![0.0, 0.15, 0.3],
            mode: MissingMode::Sporadic,
            method: RecoveryMethod::Cs,
            basis: CsBasis::Principal,
            trials: 200,
            seed: 1,
            k2: 10,
            out: None,
            vacation_mean: 2.0,
            cascades: Vec::new(),
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_num<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Number of nodes of a synthetic network, if known up front.
    pub fn nodes(&self) -> Option<usize> {
        match self.network {
            NetworkSource::Synthetic { nodes, .. } => Some(nodes),
            NetworkSource::File(_) => None,
        }
    }

    /// Applies one `key = value` setting. Keys use the long flag names
    /// with `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let key_norm = key.trim().to_ascii_lowercase().replace('-', "_");
        match key_norm.as_str() {
            "network" => {
                self.network = match value.parse::<NetworkFamily>() {
                    Ok(family) => NetworkSource::Synthetic {
                        family,
                        nodes: self.nodes().unwrap_or(1000),
                    },
                    Err(_) => NetworkSource::File(PathBuf::from(value)),
                }
            }
            "nodes" => {
                let n = parse_num(key, value)?;
                match &mut self.network {
                    NetworkSource::Synthetic { nodes, .. } => *nodes = n,
                    NetworkSource::File(_) => {
                        return Err(Error::InvalidArgument("nodes given for a network file".to_string()))
                    }
                }
            }
            "ba_m" => match &mut self.network {
                NetworkSource::Synthetic {
                    family: NetworkFamily::BarabasiAlbert { m },
                    ..
                } => *m = parse_num(key, value)?,
                _ => return Err(Error::InvalidArgument("ba_m needs network = ba".to_string())),
            },
            "ws_k" | "ws_beta" => match &mut self.network {
                NetworkSource::Synthetic {
                    family: NetworkFamily::WattsStrogatz { k, beta },
                    ..
                } => {
                    if key_norm == "ws_k" {
                        *k = parse_num(key, value)?
                    } else {
                        *beta = parse_num(key, value)?
                    }
                }
                _ => return Err(Error::InvalidArgument(format!("{key} needs network = ws"))),
            },
            "sensor_pct" => self.sensor_pcts = parse_list(key, value)?,
            "missing" => self.missing_rates = parse_list(key, value)?,
            "mode" => self.mode = parse_mode(value)?,
            "method" => self.method = value.parse()?,
            "basis" => self.basis = value.parse()?,
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "k2" => self.k2 = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "mean_delay" => {
                let v = parse_list(key, value)?;
                match v.as_slice() {
                    [lo, hi] => {
                        self.delays.mean_lo = *lo;
                        self.delays.mean_hi = *hi;
                    }
                    [m] => {
                        self.delays.mean_lo = *m;
                        self.delays.mean_hi = *m;
                    }
                    _ => return Err(Error::InvalidArgument("mean_delay takes `lo,hi`".to_string())),
                }
            }
            "variance_ratio" => self.delays.variance = VarianceModel::RelativeToMeanSquared(parse_num(key, value)?),
            "variance" => {
                let v = parse_list(key, value)?;
                let [lo, hi] = v.as_slice() else {
                    return Err(Error::InvalidArgument("variance takes `lo,hi`".to_string()));
                };
                self.delays.variance = VarianceModel::Uniform { lo: *lo, hi: *hi };
            }
            "vacation_mean" => self.vacation_mean = parse_num(key, value)?,
            "cascade" => self.cascades.push(PathBuf::from(value)),
            _ => return Err(Error::InvalidArgument(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.trials == 0 && self.cascades.is_empty() {
            return bad("trials must be >= 1".to_string());
        }
        if let Some(r) = self.missing_rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("missing rate {r} outside [0, 1]"));
        }
        if self.missing_rates.is_empty() || self.sensor_pcts.is_empty() {
            return bad("need at least one missing rate and one sensor percentage".to_string());
        }
        if let Some(p) = self.sensor_pcts.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return bad(format!("sensor percentage {p} outside (0, 100]"));
        }
        if let Some(n) = self.nodes() {
            for &p in &self.sensor_pcts {
                if sensor_count(p, n) < 2 {
                    return bad(format!("{p}% of {n} nodes gives fewer than 2 sensors"));
                }
            }
        }
        if self.k2 < 2 {
            return bad("k2 must be >= 2".to_string());
        }
        if self.method == RecoveryMethod::None && self.missing_rates.iter().any(|&r| r > 0.0) {
            return bad("method `none` requires every missing rate to be 0".to_string());
        }
        if !(self.vacation_mean >= 0.0 && self.vacation_mean.is_finite()) {
            return bad("vacation_mean must be >= 0".to_string());
        }
        Ok(())
    }
}

/// `⌈pct/100 · n⌉`, tolerant to representation error.
pub fn sensor_count(pct: f64, n: usize) -> usize {
    let raw = pct / 100.0 * n as f64;
    ((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize).min(n)
}
