//! Gaussian mixture beliefs over one- or two-dimensional position.
//!
//! [`Gmm`] is immutable after construction and every stochastic routine takes
//! an explicit [`RngSeed`], so values can be shared freely across threads.

mod component;
pub mod linalg;
mod mode;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub use component::{analytic_kl_gaussian, GaussianComponent, MIN_COVARIANCE_EIGENVALUE};
pub use linalg::{Matrix, Vector};
pub use mode::{Mode, MODE_MAX_ITERATIONS, MODE_STEP_TOLERANCE};

use crate::rng::RngSeed;
use crate::scalar::{lit, to_f64, Scalar};

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmmError {
    #[error("mixture has no components")]
    Empty,
    #[error("dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("component weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("component weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("covariance is not symmetric")]
    AsymmetricCovariance,
    #[error("covariance is not positive definite (min eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("non-finite mean or covariance entry")]
    NonFinite,
    #[error("direction has norm {0}, expected a unit vector")]
    NonUnitDirection(f64),
    #[error("sample count must be at least 1")]
    ZeroSamples,
}

/// Weighted mixture of Gaussians in `D` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Gmm<T: Scalar, const D: usize> {
    components: Vec<GaussianComponent<T, D>>,
}

/// Mean and standard error of a Monte Carlo average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate<T> {
    pub value: T,
    /// Sample standard deviation of the averaged terms.
    pub std_dev: T,
    pub samples: usize,
}

impl<T: Scalar> MonteCarloEstimate<T> {
    pub fn std_error(&self) -> T {
        self.std_dev / lit::<T>(self.samples as f64).sqrt()
    }

    pub(crate) fn from_terms(terms: impl Iterator<Item = T>) -> Self {
        // Welford
        let mut n = 0usize;
        let mut mean = T::zero();
        let mut m2 = T::zero();
        for x in terms {
            n += 1;
            let delta = x - mean;
            mean = mean + delta / lit(n as f64);
            m2 = m2 + delta * (x - mean);
        }
        let std_dev = if n > 1 {
            (m2 / lit((n - 1) as f64)).sqrt()
        } else {
            T::zero()
        };
        Self {
            value: mean,
            std_dev,
            samples: n,
        }
    }
}

impl<T: Scalar, const D: usize> Gmm<T, D> {
    pub fn new(components: Vec<GaussianComponent<T, D>>) -> Result<Self, GmmError> {
        if components.is_empty() {
            return Err(GmmError::Empty);
        }
        let total: T = components.iter().map(|c| c.weight()).sum();
        if (total - T::one()).abs() > crate::scalar::tol::<T>(WEIGHT_SUM_TOLERANCE) {
            return Err(GmmError::WeightSum(to_f64(total)));
        }
        Ok(Self { components })
    }

    /// Builds a mixture after rescaling the weights to sum to one.
    pub fn normalized(components: Vec<GaussianComponent<T, D>>) -> Result<Self, GmmError> {
        if components.is_empty() {
            return Err(GmmError::Empty);
        }
        let total: T = components.iter().map(|c| c.weight()).sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(GmmError::WeightSum(to_f64(total)));
        }
        Self::new(
            components
                .iter()
                .map(|c| c.with_weight(c.weight() / total))
                .collect(),
        )
    }

    pub fn single(mean: Vector<T, D>, covariance: Matrix<T, D>) -> Result<Self, GmmError> {
        Self::new(vec![GaussianComponent::new(T::one(), mean, covariance)?])
    }

    pub fn components(&self) -> &[GaussianComponent<T, D>] {
        &self.components
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn density(&self, x: &Vector<T, D>) -> T {
        self.components
            .iter()
            .filter(|c| c.weight() > T::zero())
            .map(|c| c.weight() * c.pdf(x))
            .sum()
    }

    /// Log density by log-sum-exp over components; finite far into the tails.
    pub fn log_density(&self, x: &Vector<T, D>) -> T {
        // streaming log-sum-exp
        let mut max = T::neg_infinity();
        let mut sum = T::zero();
        for c in self.components.iter().filter(|c| c.weight() > T::zero()) {
            let t = c.weight().ln() + c.log_pdf(x);
            if t > max {
                sum = sum * (max - t).exp() + T::one();
                max = t;
            } else {
                sum = sum + (t - max).exp();
            }
        }
        max + sum.ln()
    }

    /// Analytic mixture mean `Σ w_k μ_k`.
    pub fn mean(&self) -> Vector<T, D> {
        let mut m = [T::zero(); D];
        for c in &self.components {
            for (mi, &ci) in m.iter_mut().zip(c.mean()) {
                *mi = *mi + c.weight() * ci;
            }
        }
        m
    }

    /// Analytic mixture covariance (law of total covariance).
    pub fn covariance(&self) -> Matrix<T, D> {
        let mu = self.mean();
        let mut out = linalg::zeros::<T, D>();
        for c in &self.components {
            let d = linalg::sub(c.mean(), &mu);
            for i in 0..D {
                for j in 0..D {
                    out[i][j] = out[i][j] + c.weight() * (c.covariance()[i][j] + d[i] * d[j]);
                }
            }
        }
        out
    }

    /// `n` draws: a categorical pick of component by weight, then a Gaussian
    /// draw through the component's Cholesky factor.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Vec<Vector<T, D>> {
        let mut cumulative = Vec::with_capacity(self.components.len());
        let mut acc = 0.0f64;
        for c in &self.components {
            acc += to_f64(c.weight());
            cumulative.push(acc);
        }
        let last_live = self
            .components
            .iter()
            .rposition(|c| c.weight() > T::zero())
            .unwrap_or(0);
        let mut rng = seed.rng();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cumulative
                    .iter()
                    .position(|&cw| u < cw)
                    .unwrap_or(last_live);
                let comp = &self.components[k];
                let mut z = [T::zero(); D];
                for zi in z.iter_mut() {
                    *zi = lit(rng.sample::<f64, _>(StandardNormal));
                }
                let lz = linalg::mat_vec(comp.cholesky(), &z);
                let mut x = *comp.mean();
                for (xi, &d) in x.iter_mut().zip(&lz) {
                    *xi = *xi + d;
                }
                x
            })
            .collect()
    }

    /// Monte Carlo estimate of `E_{x~g}[log g(x)]` (negative entropy).
    pub fn expected_log_density(
        &self,
        n: usize,
        seed: RngSeed,
    ) -> Result<MonteCarloEstimate<T>, GmmError> {
        if n == 0 {
            return Err(GmmError::ZeroSamples);
        }
        let samples = self.sample(n, seed);
        Ok(MonteCarloEstimate::from_terms(
            samples.iter().map(|x| self.log_density(x)),
        ))
    }

    /// Image of the mixture under `x ↦ A x + b`. `A` must be invertible.
    pub fn affine_map(&self, a: &Matrix<T, D>, b: &Vector<T, D>) -> Result<Self, GmmError> {
        let at = linalg::transpose(a);
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut mean = linalg::mat_vec(a, c.mean());
                for (m, &bi) in mean.iter_mut().zip(b) {
                    *m = *m + bi;
                }
                let mut cov = linalg::mat_mul(&linalg::mat_mul(a, c.covariance()), &at);
                symmetrize(&mut cov);
                GaussianComponent::new(c.weight(), mean, cov)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { components })
    }
}

impl<T: Scalar> Gmm<T, 2> {
    /// One-dimensional marginal along unit `direction`: each component maps
    /// to `(w, uᵀμ, uᵀΣu)`.
    pub fn marginal_along(&self, direction: [T; 2]) -> Result<Gmm<T, 1>, GmmError> {
        let len = linalg::norm(&direction);
        if !((len - T::one()).abs() <= crate::scalar::tol::<T>(1e-9)) {
            return Err(GmmError::NonUnitDirection(to_f64(len)));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let mean = linalg::dot(&direction, c.mean());
                let var = linalg::dot(&direction, &linalg::mat_vec(c.covariance(), &direction));
                GaussianComponent::new(c.weight(), [mean], [[var]])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Gmm { components })
    }

    /// Maps means by `R·μ + t` and covariances by `R·Σ·Rᵀ`, `R` the
    /// counter-clockwise rotation by `rotation` radians.
    pub fn rigid_transform(&self, rotation: T, translation: [T; 2]) -> Gmm<T, 2> {
        self.affine_map(&linalg::rotation(rotation), &translation)
            .expect("rotation preserves positive definiteness")
    }
}

fn symmetrize<T: Scalar, const D: usize>(m: &mut Matrix<T, D>) {
    for i in 0..D {
        for j in 0..i {
            let avg = (m[i][j] + m[j][i]) * lit(0.5);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
}
