use crate::gmm::linalg::{self, Matrix, Vector};
use crate::gmm::GmmError;
use crate::scalar::{lit, Scalar};

/// Minimum eigenvalue a covariance must exceed.
pub const MIN_COVARIANCE_EIGENVALUE: f64 = 1e-12;

/// One weighted multivariate Gaussian of a mixture.
///
/// The covariance is validated at construction and its Cholesky factor,
/// precision and log-normalizer are cached for density evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent<T: Scalar, const D: usize> {
    weight: T,
    mean: Vector<T, D>,
    covariance: Matrix<T, D>,
    chol: Matrix<T, D>,
    precision: Matrix<T, D>,
    log_norm: T,
}

impl<T: Scalar, const D: usize> GaussianComponent<T, D> {
    pub fn new(weight: T, mean: Vector<T, D>, covariance: Matrix<T, D>) -> Result<Self, GmmError> {
        if D != 1 && D != 2 {
            return Err(GmmError::UnsupportedDimension(D));
        }
        if !weight.is_finite() || weight < T::zero() {
            return Err(GmmError::InvalidWeight(crate::scalar::to_f64(weight)));
        }
        if mean.iter().any(|m| !m.is_finite())
            || covariance.iter().flatten().any(|c| !c.is_finite())
        {
            return Err(GmmError::NonFinite);
        }
        let scale = covariance
            .iter()
            .flatten()
            .fold(T::one(), |acc, c| acc.max(c.abs()));
        for i in 0..D {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs()
                    > crate::scalar::tol::<T>(1e-12) * scale
                {
                    return Err(GmmError::AsymmetricCovariance);
                }
            }
        }
        let min_eig = linalg::min_eigenvalue_symmetric(&covariance)
            .ok_or(GmmError::UnsupportedDimension(D))?;
        if !(min_eig > lit(MIN_COVARIANCE_EIGENVALUE)) {
            return Err(GmmError::NotPositiveDefinite(crate::scalar::to_f64(
                min_eig,
            )));
        }
        let chol = linalg::cholesky(&covariance).ok_or(GmmError::NotPositiveDefinite(
            crate::scalar::to_f64(min_eig),
        ))?;
        let precision = linalg::inverse_spd(&covariance).ok_or(GmmError::NotPositiveDefinite(
            crate::scalar::to_f64(min_eig),
        ))?;
        let half = lit::<T>(0.5);
        let dim = lit::<T>(D as f64);
        let log_norm =
            -half * (dim * (T::PI() + T::PI()).ln() + linalg::log_det_from_cholesky(&chol));
        Ok(Self {
            weight,
            mean,
            covariance,
            chol,
            precision,
            log_norm,
        })
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn mean(&self) -> &Vector<T, D> {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix<T, D> {
        &self.covariance
    }

    pub fn precision(&self) -> &Matrix<T, D> {
        &self.precision
    }

    pub(crate) fn cholesky(&self) -> &Matrix<T, D> {
        &self.chol
    }

    pub(crate) fn with_weight(&self, weight: T) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }

    /// Squared Mahalanobis distance of `x` from the mean.
    pub fn mahalanobis_sq(&self, x: &Vector<T, D>) -> T {
        let y = linalg::forward_solve(&self.chol, &linalg::sub(x, &self.mean));
        linalg::dot(&y, &y)
    }

    /// Log of the unweighted Gaussian density at `x`.
    pub fn log_pdf(&self, x: &Vector<T, D>) -> T {
        self.log_norm - lit::<T>(0.5) * self.mahalanobis_sq(x)
    }

    pub fn pdf(&self, x: &Vector<T, D>) -> T {
        self.log_pdf(x).exp()
    }
}

/// Closed-form `KL(p ‖ q)` between two Gaussians, ignoring weights.
pub fn analytic_kl_gaussian<T: Scalar, const D: usize>(
    p: &GaussianComponent<T, D>,
    q: &GaussianComponent<T, D>,
) -> T {
    let trace_term = linalg::trace(&linalg::mat_mul(&q.precision, &p.covariance));
    let quad = q.mahalanobis_sq(&p.mean);
    let log_det_ratio =
        linalg::log_det_from_cholesky(&q.chol) - linalg::log_det_from_cholesky(&p.chol);
    lit::<T>(0.5) * (trace_term + quad - lit(D as f64) + log_det_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(mean: f64, var: f64) -> GaussianComponent<f64, 1> {
        GaussianComponent::new(1.0, [mean], [[var]]).unwrap()
    }

    #[test]
    fn rejects_invalid_covariances() {
        assert!(matches!(
            GaussianComponent::new(1.0, [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]),
            Err(GmmError::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            GaussianComponent::new(1.0, [0.0, 0.0], [[1.0, 0.1], [0.0, 1.0]]),
            Err(GmmError::AsymmetricCovariance)
        ));
        assert!(matches!(
            GaussianComponent::new(1.0, [0.0], [[1e-13]]),
            Err(GmmError::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            GaussianComponent::new(-0.1, [0.0], [[1.0]]),
            Err(GmmError::InvalidWeight(_))
        ));
        assert!(matches!(
            GaussianComponent::new(1.0, [f64::NAN], [[1.0]]),
            Err(GmmError::NonFinite)
        ));
    }

    #[test]
    fn rejects_unsupported_dimension() {
        let r = GaussianComponent::new(
            1.0,
            [0.0; 3],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        );
        assert!(matches!(r, Err(GmmError::UnsupportedDimension(3))));
    }

    #[test]
    fn kl_of_identical_gaussians_is_zero() {
        let p =
            GaussianComponent::<f64, 2>::new(1.0, [0.3, -1.0], [[2.0, 0.4], [0.4, 1.0]]).unwrap();
        assert!(analytic_kl_gaussian(&p, &p).abs() < 1e-14);
    }

    #[test]
    fn kl_mean_shift_only() {
        assert!((analytic_kl_gaussian(&g1(1.0, 1.0), &g1(0.0, 1.0)) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn kl_narrowed_variance() {
        // 0.5·(0.25 − 1 + ln 4)
        let expected = 0.5 * (0.25 - 1.0 + 4f64.ln());
        assert!((expected - 0.318147).abs() < 1e-6);
        assert!((analytic_kl_gaussian(&g1(0.0, 0.25), &g1(0.0, 1.0)) - expected).abs() < 1e-14);
    }
}
