//! Compressed-sensing recovery of sporadically missing observations.

use crate::diffusion::ObservationVector;
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, symmetric_eigen, Matrix};
use crate::scalar::Real;

use super::simplex;

/// Equality tolerance for basis pursuit.
pub const BP_TOLERANCE: f64 = 1e-8;

/// Rows of the identity kept for the present entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionMatrix {
    cols: usize,
    kept: Vec<usize>,
}

impl SelectionMatrix {
    pub fn rows(&self) -> usize {
        self.kept.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept
    }

    pub fn apply<T: Real>(&self, v: &[T]) -> Vec<T> {
        self.kept.iter().map(|&i| v[i]).collect()
    }

    pub fn to_matrix<T: Real>(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows(), self.cols, |r, c| {
            if self.kept[r] == c {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// `φψ`, computed by row selection.
    pub fn times<T: Real>(&self, psi: &Matrix<T>) -> Matrix<T> {
        let all: Vec<usize> = (0..psi.cols()).collect();
        psi.select(&self.kept, &all)
    }
}

/// `mask[i]` is true where the entry was observed.
pub fn build_selection_matrix(mask: &[bool]) -> Result<SelectionMatrix> {
    let kept: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if kept.is_empty() {
        return Err(Error::Unrecoverable);
    }
    Ok(SelectionMatrix { cols: mask.len(), kept })
}

/// An orthonormal `K × K` matrix `ψ` with `Δt = ψ x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsifyingBasis<T> {
    psi: Matrix<T>,
}

impl<T: Real> SparsifyingBasis<T> {
    /// Orthonormal DCT-II; column `k` is the `k`-th cosine mode.
    pub fn dct(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("basis size must be >= 1".to_string()));
        }
        let kk = T::of_usize(k);
        let first = (T::one() / kk).sqrt();
        let rest = (T::lit(2.0) / kk).sqrt();
        let psi = Matrix::from_fn(k, k, |i, j| {
            if j == 0 {
                first
            } else {
                let arg = T::PI() * (T::of_usize(i) + T::lit(0.5)) * T::of_usize(j) / kk;
                rest * arg.cos()
            }
        });
        Ok(Self { psi })
    }

    pub fn identity(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("basis size must be >= 1".to_string()));
        }
        Ok(Self {
            psi: Matrix::identity(k),
        })
    }

    /// Principal directions of a set of example vectors: eigenvectors of
    /// `Σ s sᵀ`, strongest first. Vectors resembling the examples are
    /// then concentrated in the leading coefficients.
    pub fn principal(examples: &[Vec<T>]) -> Result<Self> {
        let k = examples.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidArgument("need non-empty example vectors".to_string()));
        }
        if examples.iter().any(|e| e.len() != k) {
            return Err(Error::Dimension("example vectors differ in length".to_string()));
        }
        let mut gram = Matrix::zeros(k, k);
        for e in examples {
            for i in 0..k {
                for j in i..k {
                    gram[(i, j)] += e[i] * e[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                gram[(i, j)] = gram[(j, i)];
            }
        }
        let (_, vectors) = symmetric_eigen(&gram);
        Ok(Self {
            psi: Matrix::from_fn(k, k, |r, c| vectors[(r, k - 1 - c)]),
        })
    }

    /// Wraps a caller-supplied basis after checking `ψᵀψ = I`.
    pub fn from_matrix(psi: Matrix<T>) -> Result<Self> {
        if !psi.is_square() || psi.rows() == 0 {
            return Err(Error::Dimension("basis must be a non-empty square matrix".to_string()));
        }
        let gram = psi.transpose().matmul(&psi);
        let dev = gram.sub(&Matrix::identity(psi.rows()));
        let worst = norm_inf(dev.as_slice());
        if worst > T::lit(1e-10).max(T::lit(100.0) * T::epsilon()) {
            return Err(Error::Validation(format!(
                "basis is not orthonormal (max deviation {worst})"
            )));
        }
        Ok(Self { psi })
    }

    pub fn size(&self) -> usize {
        self.psi.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.psi
    }

    pub fn synthesize(&self, x: &[T]) -> Vec<T> {
        self.psi.mul_vec(x)
    }

    pub fn analyze(&self, v: &[T]) -> Vec<T> {
        self.psi.tr_mul_vec(v)
    }
}

/// `min ‖x‖₁  s.t.  θx = y`, solved as a linear program over `x = u - v`.
pub fn basis_pursuit<T: Real>(theta: &Matrix<T>, y: &[T], tol: T) -> Result<Vec<T>> {
    if theta.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "θ has {} rows, y has {} entries",
            theta.rows(),
            y.len()
        )));
    }
    let (l, k) = (theta.rows(), theta.cols());
    let a = Matrix::from_fn(l, 2 * k, |r, c| if c < k { theta[(r, c)] } else { -theta[(r, c - k)] });
    let cost = vec![T::one(); 2 * k];
    let cap = 50 * (l + 2 * k) + 100;
    let out = simplex::minimize(&a, y, &cost, cap)?;
    let x: Vec<T> = (0..k).map(|j| out.z[j] - out.z[j + k]).collect();

    let resid: Vec<T> = theta.mul_vec(&x).iter().zip(y).map(|(a, b)| *a - *b).collect();
    let worst = norm_inf(&resid);
    if worst > tol {
        return Err(Error::Infeasible {
            residual: worst.as_f64(),
        });
    }
    log::trace!("basis pursuit: {} pivots, residual {worst}", out.iterations);
    Ok(x)
}

/// Fills missing entries with `ψ x_opt`; present entries are copied
/// unchanged.
pub fn cs_recover<T: Real>(obs: &ObservationVector<T>, basis: &SparsifyingBasis<T>) -> Result<ObservationVector<T>> {
    if basis.size() != obs.len() {
        return Err(Error::Dimension(format!(
            "basis of size {} for {} entries",
            basis.size(),
            obs.len()
        )));
    }
    let missing = obs.missing_indices();
    if missing.is_empty() {
        return Ok(obs.clone());
    }
    let phi = build_selection_matrix(&obs.mask)?;
    let theta = phi.times(basis.matrix());
    let y = phi.apply(&obs.values);
    let x = basis_pursuit(&theta, &y, T::lit(BP_TOLERANCE))?;
    let estimate = basis.synthesize(&x);
    let mut out = obs.clone();
    for i in missing {
        out.values[i] = estimate[i];
        out.mask[i] = true;
    }
    Ok(out)
}

/// [`cs_recover`] on `Δt - center`: the basis then only has to represent
/// the deviation from a typical vector. Present entries are copied
/// unchanged.
pub fn cs_recover_centered<T: Real>(
    obs: &ObservationVector<T>,
    basis: &SparsifyingBasis<T>,
    center: &[T],
) -> Result<ObservationVector<T>> {
    if center.len() != obs.len() {
        return Err(Error::Dimension(format!(
            "center of length {} for {} entries",
            center.len(),
            obs.len()
        )));
    }
    let mut shifted = obs.clone();
    for (v, &c) in shifted.values.iter_mut().zip(center) {
        *v -= c;
    }
    let mut out = cs_recover(&shifted, basis)?;
    for (i, v) in out.values.iter_mut().enumerate() {
        *v = if obs.mask[i] { obs.values[i] } else { *v + center[i] };
    }
    Ok(out)
}
