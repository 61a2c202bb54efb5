//! Revised two-phase simplex for `min cᵀz  s.t.  Az = b, z ≥ 0`.
//!
//! The basis is refactorized from the original data at every step, so
//! round-off does not accumulate across pivots. Bland's rule picks both
//! the entering and the leaving variable, which rules out cycling.

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Matrix};
use crate::scalar::Real;

pub(crate) struct LpOutcome<T> {
    pub z: Vec<T>,
    pub iterations: usize,
}

struct Program<'a, T> {
    /// `[±A | I]` with rows signed so that the right-hand side is `≥ 0`.
    a: Matrix<T>,
    b: Vec<T>,
    cost: &'a [T],
    n: usize,
    rows: Vec<usize>,
    basis: Vec<usize>,
    tol: T,
}

impl<T: Real> Program<'_, T> {
    fn basis_matrix(&self) -> Matrix<T> {
        self.a.select(&self.rows, &self.basis)
    }

    fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|&r| self.a[(r, j)]).collect()
    }

    fn rhs(&self) -> Vec<T> {
        self.rows.iter().map(|&r| self.b[r]).collect()
    }

    fn singular() -> Error {
        Error::Degenerate("singular simplex basis".to_string())
    }

    fn basic_values(&self) -> Result<Vec<T>> {
        solve_dense(&self.basis_matrix(), &self.rhs()).ok_or_else(Self::singular)
    }

    /// Pivots until no variable in `0..allowed` has a negative reduced
    /// cost under `cost_of`. Returns the number of pivots.
    fn optimize(&mut self, allowed: usize, cost_of: &dyn Fn(usize) -> T, budget: usize) -> Result<usize> {
        for it in 0..=budget {
            let bm = self.basis_matrix();
            let xb = solve_dense(&bm, &self.rhs()).ok_or_else(Self::singular)?;
            let cb: Vec<T> = self.basis.iter().map(|&j| cost_of(j)).collect();
            let pi = solve_dense(&bm.transpose(), &cb).ok_or_else(Self::singular)?;
            let entering = (0..allowed).filter(|j| !self.basis.contains(j)).find_map(|j| {
                let d = cost_of(j)
                    - self
                        .rows
                        .iter()
                        .zip(&pi)
                        .fold(T::zero(), |acc, (&r, &p)| acc + p * self.a[(r, j)]);
                (d < -self.tol).then_some((j, d))
            });
            let Some((q, d)) = entering else {
                return Ok(it);
            };
            if it == budget {
                return Err(Error::Convergence {
                    iterations: budget,
                    residual: d.abs().as_f64(),
                });
            }
            let w = solve_dense(&bm, &self.column(q)).ok_or_else(Self::singular)?;
            let mut leave: Option<(usize, T)> = None;
            for (i, (&wi, &xi)) in w.iter().zip(&xb).enumerate() {
                if wi <= self.tol {
                    continue;
                }
                let ratio = xi.max(T::zero()) / wi;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((i, _)) = leave else {
                return Err(Error::Degenerate("linear program is unbounded".to_string()));
            };
            self.basis[i] = q;
        }
        unreachable!()
    }

    /// Replaces artificial variables left in the basis at zero level, or
    /// drops their rows when they are linear combinations of the others.
    fn purge_artificials(&mut self) -> Result<()> {
        let mut i = 0;
        while i < self.basis.len() {
            if self.basis[i] < self.n {
                i += 1;
                continue;
            }
            let bm = self.basis_matrix();
            let mut e = vec![T::zero(); self.basis.len()];
            e[i] = T::one();
            let rho = solve_dense(&bm.transpose(), &e).ok_or_else(Self::singular)?;
            let swap = (0..self.n).filter(|j| !self.basis.contains(j)).find(|&j| {
                let v = self
                    .rows
                    .iter()
                    .zip(&rho)
                    .fold(T::zero(), |acc, (&r, &p)| acc + p * self.a[(r, j)]);
                v.abs() > self.tol
            });
            match swap {
                Some(j) => {
                    self.basis[i] = j;
                    i += 1;
                }
                None => {
                    let art = self.basis.remove(i);
                    self.rows.retain(|&r| r != art - self.n);
                }
            }
        }
        Ok(())
    }
}

/// Solves the standard-form program. Rows of `a` may be linearly
/// dependent; inconsistent rows give [`Error::Infeasible`].
pub(crate) fn minimize<T: Real>(a: &Matrix<T>, b: &[T], c: &[T], max_iter: usize) -> Result<LpOutcome<T>> {
    let (m, n) = (a.rows(), a.cols());
    debug_assert_eq!(b.len(), m);
    debug_assert_eq!(c.len(), n);
    let scale = a.as_slice().iter().chain(b).fold(T::one(), |acc, v| acc.max(v.abs()));
    let tol = T::lit(1e-9).max(T::lit(1e3) * T::epsilon()) * scale;

    let sign: Vec<T> = b
        .iter()
        .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
        .collect();
    let ext = Matrix::from_fn(m, n + m, |r, j| {
        if j < n {
            sign[r] * a[(r, j)]
        } else if j - n == r {
            T::one()
        } else {
            T::zero()
        }
    });
    let mut lp = Program {
        a: ext,
        b: b.iter().zip(&sign).map(|(&v, &s)| v * s).collect(),
        cost: c,
        n,
        rows: (0..m).collect(),
        basis: (n..n + m).collect(),
        tol,
    };

    let phase_one = |j: usize| if j < n { T::zero() } else { T::one() };
    let mut iterations = lp.optimize(n + m, &phase_one, max_iter)?;
    let xb = lp.basic_values()?;
    let infeasibility = lp
        .basis
        .iter()
        .zip(&xb)
        .filter(|(&j, _)| j >= n)
        .fold(T::zero(), |acc, (_, &v)| acc + v.abs());
    let b_norm = b.iter().fold(T::zero(), |acc, v| acc + v.abs());
    if infeasibility > tol * (T::one() + b_norm) {
        return Err(Error::Infeasible {
            residual: infeasibility.as_f64(),
        });
    }
    lp.purge_artificials()?;

    let cost = lp.cost;
    let phase_two = |j: usize| cost[j];
    iterations += lp.optimize(n, &phase_two, max_iter.saturating_sub(iterations))?;

    let xb = lp.basic_values()?;
    let mut z = vec![T::zero(); n];
    for (&j, v) in lp.basis.iter().zip(xb) {
        z[j] = v.max(T::zero());
    }
    Ok(LpOutcome { z, iterations })
}
