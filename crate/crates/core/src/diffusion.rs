//! Rumor cascades over Gaussian edge delays, sensor observations and
//! missingness.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::paths::dijkstra_with;
use crate::graph::{NodeId, SocialGraph};
use crate::scalar::Real;

/// Maximum resampling attempts for a positive Gaussian delay.
const MAX_DELAY_DRAWS: usize = 64;

/// Mixes a base seed with stream coordinates (SplitMix64 finalizer), so
/// per-trial and per-stage generators are independent of evaluation order.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw of `N(mean, variance)` conditioned on being positive, by
/// rejection; after 64 failed draws falls back to `mean / 1000`.
pub fn sample_positive_delay<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return mean;
    }
    let sd = variance.sqrt();
    for _ in 0..MAX_DELAY_DRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + sd * z;
        if x > 0.0 {
            return x;
        }
    }
    mean / 1000.0
}

/// A diffusion: source, start epoch and absolute arrival times of every
/// reached node.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade<T> {
    pub source: NodeId,
    pub start_epoch: T,
    pub arrival: BTreeMap<NodeId, T>,
    pub seed: Option<u64>,
    /// Consistency problems noticed while ingesting real data.
    pub warnings: Vec<String>,
}

impl<T: Real> Cascade<T> {
    pub fn arrival_of(&self, node: NodeId) -> Option<T> {
        self.arrival.get(&node).copied()
    }

    /// Same cascade with every epoch moved by `delta`.
    pub fn shifted(&self, delta: T) -> Self {
        Self {
            source: self.source,
            start_epoch: self.start_epoch + delta,
            arrival: self.arrival.iter().map(|(&k, &t)| (k, t + delta)).collect(),
            seed: self.seed,
            warnings: self.warnings.clone(),
        }
    }

    /// Writes the `source <id> <start>` / `<id> <time>` text format. Floats
    /// use shortest round-trip formatting, so a reload is bit-exact.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "source {} {}", self.source, self.start_epoch)?;
        for (id, t) in &self.arrival {
            writeln!(out, "{id} {t}")?;
        }
        Ok(())
    }
}

/// Propagates a rumor from `source`: every edge draws one positive delay,
/// and arrivals are first-arrival times over the sampled realization.
pub fn simulate_cascade<T: Real>(g: &SocialGraph<T>, source: NodeId, start_epoch: T, seed: u64) -> Result<Cascade<T>> {
    let root = g.require(source)?;
    let mut rng = rng_from_seed(seed);
    let sampled: Vec<T> = g
        .edges()
        .iter()
        .map(|e| {
            T::lit(sample_positive_delay(
                &mut rng,
                e.delay.mean.as_f64(),
                e.delay.variance.as_f64(),
            ))
        })
        .collect();
    let res = dijkstra_with(g, root, |e| sampled[e]);
    let arrival = res
        .order
        .iter()
        .map(|&v| (g.id(v), start_epoch + res.dist[v]))
        .collect();
    Ok(Cascade {
        source,
        start_epoch,
        arrival,
        seed: Some(seed),
        warnings: Vec::new(),
    })
}

/// Inter-arrival vector relative to the reference sensor `l₁`.
///
/// Entry `i` belongs to `sensors[i]`; missing entries hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationVector<T> {
    pub reference: NodeId,
    pub sensors: Vec<NodeId>,
    pub values: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Real> ObservationVector<T> {
    /// A fully observed vector.
    pub fn complete(reference: NodeId, sensors: Vec<NodeId>, values: Vec<T>) -> Result<Self> {
        if sensors.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} sensors but {} values",
                sensors.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite observation {v}")));
        }
        let mask = vec![true; values.len()];
        Ok(Self {
            reference,
            sensors,
            values,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn missing_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.mask[i]).collect()
    }

    pub fn present_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    /// Full sensor list `[l₁, l₂, …]`.
    pub fn all_sensors(&self) -> Vec<NodeId> {
        std::iter::once(self.reference)
            .chain(self.sensors.iter().copied())
            .collect()
    }
}

pub fn observe<T: Real>(c: &Cascade<T>, sensors: &[NodeId]) -> Result<ObservationVector<T>> {
    if sensors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sensors, got {}",
            sensors.len()
        )));
    }
    let unreached: Vec<NodeId> = sensors
        .iter()
        .copied()
        .filter(|s| c.arrival_of(*s).is_none_or(|t| !t.is_finite()))
        .collect();
    if !unreached.is_empty() {
        return Err(Error::Coverage(unreached));
    }
    let t1 = c.arrival[&sensors[0]];
    let values = sensors[1..].iter().map(|s| c.arrival[s] - t1).collect();
    ObservationVector::complete(sensors[0], sensors[1..].to_vec(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MissingMode {
    /// Uniformly chosen entries.
    Sporadic,
    /// One contiguous run of entries.
    Burst,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MissingnessSpec {
    pub mode: MissingMode,
    pub rate: f64,
    pub seed: u64,
}

impl MissingnessSpec {
    /// `⌈rate · len⌉`, tolerant to representation error in `rate · len`.
    pub fn missing_count(&self, len: usize) -> usize {
        let raw = self.rate * len as f64;
        let count = (raw - 1e-9 * raw.abs().max(1.0)).ceil().max(0.0) as usize;
        count.min(len)
    }
}

/// Masks entries of a complete observation vector. Unmasked values are
/// passed through untouched.
///
/// For a fixed seed the masks are nested across rates: sporadic masks are
/// prefixes of one random permutation and bursts share a relative start,
/// so experiments at different rates stay paired.
pub fn apply_missingness<T: Real>(o: &ObservationVector<T>, spec: &MissingnessSpec) -> Result<ObservationVector<T>> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidArgument(format!(
            "missing rate must be in [0, 1], got {}",
            spec.rate
        )));
    }
    if !o.is_complete() {
        return Err(Error::InvalidArgument(
            "observation already has missing entries".to_string(),
        ));
    }
    let len = o.len();
    let count = spec.missing_count(len);
    let mut rng = rng_from_seed(spec.seed);
    let removed: Vec<usize> = match spec.mode {
        MissingMode::Sporadic => {
            let mut order: Vec<usize> = (0..len).collect();
            order.shuffle(&mut rng);
            order.truncate(count);
            order
        }
        MissingMode::Burst => {
            let u: f64 = rng.random();
            let start = ((u * (len - count + 1) as f64) as usize).min(len - count);
            (start..start + count).collect()
        }
    };
    let mut out = o.clone();
    for i in removed {
        out.mask[i] = false;
        out.values[i] = T::nan();
    }
    Ok(out)
}

/// Parses a cascade: a `source <id> <start>` header, then `<id> <time>`
/// lines. `#` starts a comment.
pub fn load_cascade<T: Real, R: BufRead>(reader: R) -> Result<Cascade<T>> {
    let mut header: Option<(NodeId, T)> = None;
    let mut arrival = BTreeMap::new();
    let mut warnings = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let perr = |message: String| Error::Parse { line: lineno, message };
        let line = line.map_err(|e| perr(e.to_string()))?;
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let id = |s: &str| {
            s.parse::<u64>()
                .map(NodeId)
                .map_err(|_| perr(format!("invalid node id `{s}`")))
        };
        let num = |s: &str| s.parse::<T>().map_err(|_| perr(format!("invalid time `{s}`")));
        match header {
            None => {
                if fields.len() != 3 || fields[0] != "source" {
                    return Err(perr("expected `source <node_id> <start_time>` first".to_string()));
                }
                header = Some((id(fields[1])?, num(fields[2])?));
            }
            Some(_) => {
                if fields.len() != 2 {
                    return Err(perr(format!("expected `<node_id> <arrival_time>`, got `{content}`")));
                }
                let node = id(fields[0])?;
                let t = num(fields[1])?;
                if arrival.insert(node, t).is_some() {
                    return Err(perr(format!("duplicate node {node}")));
                }
            }
        }
    }
    let (source, start_epoch) = header.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `source` line".to_string(),
    })?;
    match arrival.get(&source) {
        None => {
            arrival.insert(source, start_epoch);
        }
        Some(&t) if t != start_epoch => {
            warnings.push(format!("source {source} arrives at {t}, start epoch is {start_epoch}"))
        }
        Some(_) => {}
    }
    for (node, &t) in &arrival {
        if t < start_epoch {
            warnings.push(format!("node {node} arrives at {t}, before start {start_epoch}"));
        }
    }
    Ok(Cascade {
        source,
        start_epoch,
        arrival,
        seed: None,
        warnings,
    })
}
