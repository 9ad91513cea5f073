//! Global mode search by multi-start mean-shift.
//!
//! From a point `x` the fixed-point update is
//! `x ← (Σ_k r_k(x)·Σ_k⁻¹)⁻¹ · Σ_k r_k(x)·Σ_k⁻¹·μ_k`
//! with responsibilities `r_k(x) ∝ w_k·N(x; μ_k, Σ_k)`. Every component mean
//! seeds one ascent; the highest-density endpoint wins, ties broken by the
//! lexicographically smallest coordinates. Each ascent finishes with a few
//! safeguarded Newton steps on `log g`, which only ever accept an increase
//! in density and tighten the slow linear tail of mean-shift near merging
//! modes.

use std::cmp::Ordering;

use crate::gmm::linalg::{self, Matrix, Vector};
use crate::gmm::Gmm;
use crate::scalar::{lit, tol, Scalar};

pub const MODE_STEP_TOLERANCE: f64 = 1e-8;
pub const MODE_MAX_ITERATIONS: usize = 200;
const NEWTON_ITERATIONS: usize = 20;
const TIE_TOLERANCE: f64 = 1e-12;

/// Result of [`Gmm::mode`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T, const D: usize> {
    pub point: Vector<T, D>,
    pub density: T,
    pub log_density: T,
    /// `false` when the winning ascent hit the iteration cap before the step
    /// size fell below tolerance; `point` is then the best iterate found.
    pub converged: bool,
}

impl<T: Scalar, const D: usize> Gmm<T, D> {
    pub fn mode(&self) -> Mode<T, D> {
        let mut best: Option<Mode<T, D>> = None;
        for start in self.components().iter().filter(|c| c.weight() > T::zero()) {
            let candidate = self.ascend(*start.mean());
            best = Some(match best {
                None => candidate,
                Some(b) => pick(b, candidate),
            });
        }
        best.expect("a valid mixture has a component with positive weight")
    }

    fn ascend(&self, start: Vector<T, D>) -> Mode<T, D> {
        let step_tol = |x: &Vector<T, D>| {
            let scale = x.iter().fold(T::one(), |m, v| m.max(v.abs()));
            tol::<T>(MODE_STEP_TOLERANCE).max(T::epsilon() * lit(16.0) * scale)
        };
        let mut x = start;
        let mut converged = false;
        for _ in 0..MODE_MAX_ITERATIONS {
            let Some(next) = self.mean_shift_step(&x) else {
                break;
            };
            let step = linalg::norm(&linalg::sub(&next, &x));
            x = next;
            if step < step_tol(&x) {
                converged = true;
                break;
            }
        }
        let mut log_density = self.log_density(&x);
        for _ in 0..NEWTON_ITERATIONS {
            let Some(next) = self.newton_step(&x) else {
                break;
            };
            let next_ld = self.log_density(&next);
            if !(next_ld >= log_density) {
                break;
            }
            let step = linalg::norm(&linalg::sub(&next, &x));
            x = next;
            log_density = next_ld;
            if step < step_tol(&x) {
                converged = true;
                break;
            }
        }
        Mode {
            point: x,
            density: self.density(&x),
            log_density,
            converged,
        }
    }

    fn responsibilities(&self, x: &Vector<T, D>) -> Vec<T> {
        let logs: Vec<T> = self
            .components()
            .iter()
            .map(|c| {
                if c.weight() > T::zero() {
                    c.weight().ln() + c.log_pdf(x)
                } else {
                    T::neg_infinity()
                }
            })
            .collect();
        let max = logs.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut r: Vec<T> = logs.iter().map(|&l| (l - max).exp()).collect();
        let total: T = r.iter().copied().sum();
        r.iter_mut().for_each(|v| *v = *v / total);
        r
    }

    fn mean_shift_step(&self, x: &Vector<T, D>) -> Option<Vector<T, D>> {
        let r = self.responsibilities(x);
        let mut a: Matrix<T, D> = linalg::zeros();
        let mut b = [T::zero(); D];
        for (c, &rk) in self.components().iter().zip(&r) {
            if rk == T::zero() {
                continue;
            }
            let p = c.precision();
            let pm = linalg::mat_vec(p, c.mean());
            for i in 0..D {
                b[i] = b[i] + rk * pm[i];
                for j in 0..D {
                    a[i][j] = a[i][j] + rk * p[i][j];
                }
            }
        }
        let next = linalg::solve_spd(&a, &b)?;
        next.iter().all(|v| v.is_finite()).then_some(next)
    }

    /// Newton step on `log g` when the Hessian is negative definite.
    fn newton_step(&self, x: &Vector<T, D>) -> Option<Vector<T, D>> {
        let r = self.responsibilities(x);
        // gradient g = Σ r_k P_k (μ_k − x); Hessian H = Σ r_k (P_k d_k d_kᵀ P_k − P_k) − g gᵀ
        let mut grad = [T::zero(); D];
        let mut hess: Matrix<T, D> = linalg::zeros();
        for (c, &rk) in self.components().iter().zip(&r) {
            if rk == T::zero() {
                continue;
            }
            let pd = linalg::mat_vec(c.precision(), &linalg::sub(c.mean(), x));
            for i in 0..D {
                grad[i] = grad[i] + rk * pd[i];
                for j in 0..D {
                    hess[i][j] = hess[i][j] + rk * (pd[i] * pd[j] - c.precision()[i][j]);
                }
            }
        }
        let mut neg_hess: Matrix<T, D> = linalg::zeros();
        for i in 0..D {
            for j in 0..D {
                neg_hess[i][j] = -(hess[i][j] - grad[i] * grad[j]);
            }
        }
        let delta = linalg::solve_spd(&neg_hess, &grad)?;
        let mut next = *x;
        for (n, d) in next.iter_mut().zip(&delta) {
            *n = *n + *d;
        }
        next.iter().all(|v| v.is_finite()).then_some(next)
    }
}

fn pick<T: Scalar, const D: usize>(current: Mode<T, D>, candidate: Mode<T, D>) -> Mode<T, D> {
    let scale = T::one().max(current.log_density.abs());
    let diff = candidate.log_density - current.log_density;
    let tol = lit::<T>(TIE_TOLERANCE) * scale;
    let tie_break =
        diff.abs() <= tol && lexicographic(&candidate.point, &current.point) == Ordering::Less;
    if diff > tol || tie_break {
        candidate
    } else {
        current
    }
}

fn lexicographic<T: Scalar, const D: usize>(a: &Vector<T, D>, b: &Vector<T, D>) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}
