//! Rank-one completion of the unknown block of a block-clique delay
//! matrix, and diagonal loading for its condition test.
//!
//! The full matrix is laid out as
//!
//! ```text
//!     ⎡ A   c   X ⎤
//! D = ⎢ cᵀ  e   dᵀ⎥
//!     ⎣ Xᵀ  d   B ⎦
//! ```
//!
//! with `A` of size `m × m`, `B` of size `n × n` and `X` unknown.

use crate::error::{Error, Result};
use crate::linalg::{norm2, symmetric_eigenvalues, Matrix};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct PartialDelayMatrix<T> {
    a: Matrix<T>,
    c: Vec<T>,
    e: T,
    d: Vec<T>,
    b: Matrix<T>,
}

impl<T: Real> PartialDelayMatrix<T> {
    pub fn from_blocks(a: Matrix<T>, c: Vec<T>, e: T, d: Vec<T>, b: Matrix<T>) -> Result<Self> {
        if !a.is_square() || a.rows() != c.len() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, c has {} entries",
                a.rows(),
                a.cols(),
                c.len()
            )));
        }
        if !b.is_square() || b.rows() != d.len() {
            return Err(Error::Dimension(format!(
                "B is {}x{}, d has {} entries",
                b.rows(),
                b.cols(),
                d.len()
            )));
        }
        if c.is_empty() || d.is_empty() {
            return Err(Error::Dimension(
                "both cliques need at least one extra node".to_string(),
            ));
        }
        let sym_tol = T::lit(1e-12);
        if !a.is_symmetric(sym_tol) || !b.is_symmetric(sym_tol) {
            return Err(Error::Validation("A and B must be symmetric".to_string()));
        }
        let known = a.as_slice().iter().chain(&c).chain([&e]).chain(&d).chain(b.as_slice());
        if let Some(v) = known.into_iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::Validation(format!(
                "delay entries must be finite and >= 0, found {v}"
            )));
        }
        Ok(Self { a, c, e, d, b })
    }

    /// Splits a full `(m+1+n)`-square matrix; its `X` block is ignored.
    pub fn from_full(full: &Matrix<T>, m: usize) -> Result<Self> {
        if !full.is_square() || full.rows() < m + 2 {
            return Err(Error::Dimension(format!(
                "need a square matrix larger than {}, got {}x{}",
                m + 1,
                full.rows(),
                full.cols()
            )));
        }
        let size = full.rows();
        let n = size - m - 1;
        let left: Vec<usize> = (0..m).collect();
        let right: Vec<usize> = (m + 1..size).collect();
        let a = full.select(&left, &left);
        let b = full.select(&right, &right);
        let c = left.iter().map(|&i| full[(i, m)]).collect();
        let d = right.iter().map(|&j| full[(m, j)]).collect();
        debug_assert_eq!(right.len(), n);
        Self::from_blocks(a, c, full[(m, m)], d, b)
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn dimension(&self) -> usize {
        self.m() + 1 + self.n()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn e(&self) -> T {
        self.e
    }

    /// Full symmetric matrix with `x` in the unknown block.
    pub fn assemble(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let (m, n) = (self.m(), self.n());
        if x.rows() != m || x.cols() != n {
            return Err(Error::Dimension(format!("X must be {m}x{n}")));
        }
        Ok(Matrix::from_fn(self.dimension(), self.dimension(), |i, j| {
            self.entry(x, i, j)
        }))
    }

    fn entry(&self, x: &Matrix<T>, i: usize, j: usize) -> T {
        let m = self.m();
        match (i.cmp(&m), j.cmp(&m)) {
            (std::cmp::Ordering::Less, std::cmp::Ordering::Less) => self.a[(i, j)],
            (std::cmp::Ordering::Less, std::cmp::Ordering::Equal) => self.c[i],
            (std::cmp::Ordering::Less, std::cmp::Ordering::Greater) => x[(i, j - m - 1)],
            (std::cmp::Ordering::Equal, std::cmp::Ordering::Less) => self.c[j],
            (std::cmp::Ordering::Equal, std::cmp::Ordering::Equal) => self.e,
            (std::cmp::Ordering::Equal, std::cmp::Ordering::Greater) => self.d[j - m - 1],
            (std::cmp::Ordering::Greater, std::cmp::Ordering::Less) => x[(j, i - m - 1)],
            (std::cmp::Ordering::Greater, std::cmp::Ordering::Equal) => self.d[i - m - 1],
            (std::cmp::Ordering::Greater, std::cmp::Ordering::Greater) => self.b[(i - m - 1, j - m - 1)],
        }
    }
}

/// How `c` and `d` enter the fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DnScaling {
    /// Fit `αβᵀ` to `EX` and return `X_ij = α_i c_i d_j β_j`.
    #[default]
    Literal,
    /// Fit `αβᵀ` to `EX_ij / (c_i d_j)`, so that `X ≈ EX`.
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DnOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub scaling: DnScaling,
}

impl Default for DnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 1000,
            scaling: DnScaling::Literal,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DnCompletion<T> {
    /// The filled `m × n` block.
    pub block: Matrix<T>,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub iterations: usize,
    /// `‖αβᵀ - target‖_F / ‖target‖_F` at the last iterate.
    pub residual: T,
}

impl<T: Real> DnCompletion<T> {
    /// `αβᵀ`, which is what the fit matches; factors alone are defined
    /// only up to `(γα, β/γ)`.
    pub fn product(&self) -> Matrix<T> {
        Matrix::from_fn(self.alpha.len(), self.beta.len(), |i, j| self.alpha[i] * self.beta[j])
    }
}

/// Alternating updates `α ← EXβ/‖β‖²`, `β ← EXᵀα/‖α‖²` from
/// `β⁰ = 1/√n`, which is a power iteration for the dominant singular pair.
pub fn dn_complete<T: Real>(p: &PartialDelayMatrix<T>, ex: &Matrix<T>, opts: &DnOptions) -> Result<DnCompletion<T>> {
    let (m, n) = (p.m(), p.n());
    if ex.rows() != m || ex.cols() != n {
        return Err(Error::Dimension(format!(
            "EX is {}x{}, expected {m}x{n}",
            ex.rows(),
            ex.cols()
        )));
    }
    if p.c.iter().chain(&p.d).any(|v| *v <= T::zero()) {
        return Err(Error::InvalidArgument("c and d must be strictly positive".to_string()));
    }
    if ex.as_slice().iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidArgument(
            "EX must be finite and entrywise >= 0".to_string(),
        ));
    }
    let target = match opts.scaling {
        DnScaling::Literal => ex.clone(),
        DnScaling::Normalized => Matrix::from_fn(m, n, |i, j| ex[(i, j)] / (p.c[i] * p.d[j])),
    };
    let target_norm = target.frobenius_norm();
    if target_norm == T::zero() {
        return Err(Error::Degenerate("EX is the zero matrix".to_string()));
    }

    let tol = T::lit(opts.tol);
    let mut beta = vec![T::one() / T::of_usize(n).sqrt(); n];
    let mut alpha = vec![T::zero(); m];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let bb = norm2(&beta).powi(2);
        let new_alpha: Vec<T> = target.mul_vec(&beta).into_iter().map(|v| v / bb).collect();
        let aa = norm2(&new_alpha).powi(2);
        if aa == T::zero() {
            return Err(Error::Degenerate("α collapsed to zero".to_string()));
        }
        let new_beta: Vec<T> = target.tr_mul_vec(&new_alpha).into_iter().map(|v| v / aa).collect();
        if norm2(&new_beta) == T::zero() {
            return Err(Error::Degenerate("β collapsed to zero".to_string()));
        }
        let change = alpha
            .iter()
            .zip(&new_alpha)
            .chain(beta.iter().zip(&new_beta))
            .fold(T::zero(), |acc, (o, v)| acc + (*o - *v).powi(2))
            .sqrt();
        let size = (norm2(&new_alpha).powi(2) + norm2(&new_beta).powi(2)).sqrt();
        alpha = new_alpha;
        beta = new_beta;
        if change <= tol * size {
            converged = true;
            break;
        }
    }

    let residual = Matrix::from_fn(m, n, |i, j| alpha[i] * beta[j])
        .sub(&target)
        .frobenius_norm()
        / target_norm;
    if !converged {
        return Err(Error::Convergence {
            iterations,
            residual: residual.as_f64(),
        });
    }
    let block = Matrix::from_fn(m, n, |i, j| alpha[i] * p.c[i] * p.d[j] * beta[j]);
    Ok(DnCompletion {
        block,
        alpha,
        beta,
        iterations,
        residual,
    })
}

/// Result of diagonal loading.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDelayMatrix<T> {
    pub matrix: PartialDelayMatrix<T>,
    /// Amount added to every diagonal entry of `D`.
    pub shift: T,
    pub condition_before: T,
    pub condition_after: T,
}

/// Absolute tolerance of the bisection on the shift.
pub const LOADING_TOLERANCE: f64 = 1e-7;

fn shifted_condition<T: Real>(lmin: T, lmax: T, delta: T) -> T {
    let lo = lmin + delta;
    let hi = lmax + delta;
    if hi <= T::zero() && lo >= hi {
        // zero matrix
        return T::one();
    }
    if lo <= T::zero() {
        T::infinity()
    } else {
        hi / lo
    }
}

/// If `cond(cov) ≥ 2`, finds by bisection the smallest `δ` for which
/// `cond(cov + δI) < 2` and adds it to the diagonal of `D`.
pub fn condition_check_and_load<T: Real>(p: &PartialDelayMatrix<T>, cov: &Matrix<T>) -> Result<LoadedDelayMatrix<T>> {
    if !cov.is_square() || cov.rows() == 0 {
        return Err(Error::Dimension(
            "covariance must be a non-empty square matrix".to_string(),
        ));
    }
    let scale = cov.as_slice().iter().fold(T::one(), |a, v| a.max(v.abs()));
    if !cov.is_symmetric(T::lit(1e-12) * scale) {
        return Err(Error::Validation("covariance must be symmetric".to_string()));
    }
    let eig = symmetric_eigenvalues(cov);
    let (lmin, lmax) = (eig[0], eig[eig.len() - 1]);
    let two = T::lit(2.0);
    let before = shifted_condition(lmin, lmax, T::zero());
    if before < two {
        return Ok(LoadedDelayMatrix {
            matrix: p.clone(),
            shift: T::zero(),
            condition_before: before,
            condition_after: before,
        });
    }

    let mut lo = T::zero();
    let mut hi = lmax.abs().max(T::one());
    while shifted_condition(lmin, lmax, hi) >= two {
        lo = hi;
        hi *= two;
    }
    let step = T::lit(LOADING_TOLERANCE).max(T::epsilon() * hi * T::lit(4.0));
    while hi - lo > step {
        let mid = (lo + hi) / two;
        if shifted_condition(lmin, lmax, mid) < two {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut loaded = p.clone();
    loaded.a.add_to_diagonal(hi);
    loaded.b.add_to_diagonal(hi);
    loaded.e += hi;
    Ok(LoadedDelayMatrix {
        matrix: loaded,
        shift: hi,
        condition_before: before,
        condition_after: shifted_condition(lmin, lmax, hi),
    })
}
