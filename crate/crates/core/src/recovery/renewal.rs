//! Residual-life correction for delays observed at random times in a
//! renewal process with vacations.
//!
//! Each cycle is a transmission lifetime `X` followed by a vacation `S`.
//! Inspected at a random time, the wait until the next renewal has mean
//! `E(L)/2 · (1 + Var(L)/E(L)²)` with `L = X + S`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};

use crate::diffusion::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::dn::{dn_complete, DnCompletion, DnOptions, PartialDelayMatrix};

/// First two moments of the pair lifetimes `X_ij` and vacations `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RenewalParams<T> {
    mean_x: Matrix<T>,
    var_x: Matrix<T>,
    mean_s: Vec<T>,
    var_s: Vec<T>,
}

impl<T: Real> RenewalParams<T> {
    pub fn new(mean_x: Matrix<T>, var_x: Matrix<T>, mean_s: Vec<T>, var_s: Vec<T>) -> Result<Self> {
        let (m, n) = (mean_x.rows(), mean_x.cols());
        if var_x.rows() != m || var_x.cols() != n || mean_s.len() != m || var_s.len() != m {
            return Err(Error::Dimension(format!(
                "moments must be {m}x{n} for X and length {m} for S"
            )));
        }
        let bad_mean = mean_x
            .as_slice()
            .iter()
            .chain(&mean_s)
            .find(|v| !v.is_finite() || **v < T::zero());
        if let Some(v) = bad_mean {
            return Err(Error::Validation(format!("means must be >= 0, found {v}")));
        }
        let bad_var = var_x
            .as_slice()
            .iter()
            .chain(&var_s)
            .find(|v| !v.is_finite() || **v < T::zero());
        if let Some(v) = bad_var {
            return Err(Error::Validation(format!("variances must be >= 0, found {v}")));
        }
        Ok(Self {
            mean_x,
            var_x,
            mean_s,
            var_s,
        })
    }

    pub fn rows(&self) -> usize {
        self.mean_x.rows()
    }

    pub fn cols(&self) -> usize {
        self.mean_x.cols()
    }

    pub fn mean_x(&self) -> &Matrix<T> {
        &self.mean_x
    }

    pub fn mean_s(&self) -> &[T] {
        &self.mean_s
    }

    /// `E(X_ij) + E(S_i)` for every pair.
    pub fn cycle_means(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows(), self.cols(), |i, j| self.mean_x[(i, j)] + self.mean_s[i])
    }
}

pub fn renewal_expected_residual<T: Real>(r: &RenewalParams<T>, i: usize, j: usize) -> Result<T> {
    if i >= r.rows() || j >= r.cols() {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) outside {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    let mean = r.mean_x[(i, j)] + r.mean_s[i];
    if mean <= T::zero() {
        return Err(Error::InvalidArgument(format!(
            "combined mean of pair ({i}, {j}) is zero"
        )));
    }
    let var = r.var_x[(i, j)] + r.var_s[i];
    Ok(mean / T::lit(2.0) * (T::one() + var / (mean * mean)))
}

/// Entrywise expected residual.
pub fn expected_residual_matrix<T: Real>(r: &RenewalParams<T>) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(r.rows(), r.cols());
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            out[(i, j)] = renewal_expected_residual(r, i, j)?;
        }
    }
    Ok(out)
}

/// [`dn_complete`] against the expected residuals instead of the means.
pub fn dn_complete_renewal<T: Real>(
    p: &PartialDelayMatrix<T>,
    r: &RenewalParams<T>,
    opts: &DnOptions,
) -> Result<DnCompletion<T>> {
    dn_complete(p, &expected_residual_matrix(r)?, opts)
}

/// A positive lifetime distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lifetime {
    Deterministic(f64),
    Exponential {
        mean: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal truncated to positive values by resampling.
    Gaussian {
        mean: f64,
        sd: f64,
    },
}

impl Lifetime {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Lifetime::Deterministic(v) => v > 0.0,
            Lifetime::Exponential { mean } => mean > 0.0,
            Lifetime::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            Lifetime::Uniform { lo, hi } => lo >= 0.0 && hi > lo,
            Lifetime::Gaussian { mean, sd } => mean > 0.0 && sd >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid lifetime {self:?}")))
        }
    }

    /// Nominal mean (for the Gaussian, before truncation).
    pub fn mean(&self) -> f64 {
        match *self {
            Lifetime::Deterministic(v) => v,
            Lifetime::Exponential { mean } => mean,
            Lifetime::Gamma { shape, scale } => shape * scale,
            Lifetime::Uniform { lo, hi } => (lo + hi) / 2.0,
            Lifetime::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Lifetime::Deterministic(_) => 0.0,
            Lifetime::Exponential { mean } => mean * mean,
            Lifetime::Gamma { shape, scale } => shape * scale * scale,
            Lifetime::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Lifetime::Gaussian { sd, .. } => sd * sd,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Lifetime::Deterministic(v) => v,
            Lifetime::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            Lifetime::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
            Lifetime::Uniform { lo, hi } => Uniform::new(lo, hi).expect("validated").sample(rng),
            Lifetime::Gaussian { mean, sd } => crate::diffusion::sample_positive_delay(rng, mean, sd * sd),
        }
    }
}

/// Transmission lifetimes, optionally alternating with vacations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VacationRenewal {
    pub transmission: Lifetime,
    pub vacation: Option<Lifetime>,
}

impl VacationRenewal {
    pub fn plain(lifetime: Lifetime) -> Self {
        Self {
            transmission: lifetime,
            vacation: None,
        }
    }

    pub fn cycle_mean(&self) -> f64 {
        self.transmission.mean() + self.vacation.map_or(0.0, |v| v.mean())
    }

    pub fn cycle_variance(&self) -> f64 {
        self.transmission.variance() + self.vacation.map_or(0.0, |v| v.variance())
    }

    pub fn sample_cycle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.transmission.sample(rng);
        x + self.vacation.map_or(0.0, |v| v.sample(rng))
    }

    /// One residual wait seen at a uniform time in
    /// `[0, warmup_cycles · E(L))`.
    pub fn sample_residual<R: Rng + ?Sized>(&self, rng: &mut R, warmup_cycles: usize) -> f64 {
        let inspect = rng.random::<f64>() * warmup_cycles as f64 * self.cycle_mean();
        let mut epoch = 0.0;
        loop {
            epoch += self.sample_cycle(rng);
            if epoch > inspect {
                return epoch - inspect;
            }
        }
    }
}

/// Monte Carlo estimate of the mean residual wait.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualEstimate {
    pub mean: f64,
    pub inspections: usize,
    pub renewals: usize,
    /// Fewer than 100 renewals were expected within the horizon.
    pub short_horizon: bool,
}

/// Simulates renewal epochs up to `horizon` and averages the wait to the
/// next epoch at `samples` uniformly random inspection times in
/// `[0, horizon)`.
pub fn simulate_renewal_residual(
    process: &VacationRenewal,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<ResidualEstimate> {
    process.transmission.validate()?;
    if let Some(v) = process.vacation {
        v.validate()?;
    }
    if !(horizon > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument(
            "horizon must be positive and samples nonzero".to_string(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut times: Vec<f64> = (0..samples).map(|_| rng.random::<f64>() * horizon).collect();
    times.sort_by(f64::total_cmp);

    let mut epoch = 0.0;
    let mut renewals = 0usize;
    let mut total = 0.0;
    for &t in &times {
        while epoch <= t {
            let step = process.sample_cycle(&mut rng);
            if !(step > 0.0) {
                return Err(Error::InvalidArgument(format!("non-positive lifetime {step}")));
            }
            epoch += step;
            renewals += 1;
        }
        total += epoch - t;
    }
    let expected = horizon / process.cycle_mean();
    let short_horizon = expected < 100.0;
    if short_horizon {
        log::warn!("only {expected:.1} renewals expected before the horizon");
    }
    Ok(ResidualEstimate {
        mean: total / samples as f64,
        inspections: samples,
        renewals,
        short_horizon,
    })
}
