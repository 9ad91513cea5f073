//! Surprise measures over Gaussian-mixture beliefs.
//!
//! Probabilistic-mismatch measures score an observed position against a
//! prior: [`surprisal`], [`s8`] and [`residual_information`]. Belief-mismatch
//! measures compare a posterior with a prior about the same instant:
//! [`bayesian_surprise`] and [`antithesis`]. Values are in nats except S8,
//! which is in bits.
//!
//! The discretized measures approximate the mass of an `ε`-bin at `x` as
//! `g(x)·ε^d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmm::{Gmm, GmmError, MonteCarloEstimate, Vector};
use crate::rng::RngSeed;
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("bin size must be positive, got {0}")]
    BinSize(f64),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
    #[error(transparent)]
    Gmm(#[from] GmmError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Surprisal,
    S8,
    ResidualInformation,
    Bayesian,
    Antithesis,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Surprisal,
        Measure::S8,
        Measure::ResidualInformation,
        Measure::Bayesian,
        Measure::Antithesis,
    ];

    /// Belief-mismatch measures compare two beliefs; the rest score an observation.
    pub fn is_belief_mismatch(self) -> bool {
        matches!(self, Measure::Bayesian | Measure::Antithesis)
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Surprisal => "surprisal",
            Measure::S8 => "s8",
            Measure::ResidualInformation => "residual-information",
            Measure::Bayesian => "bayesian",
            Measure::Antithesis => "antithesis",
        }
    }

    pub fn unit(self) -> &'static str {
        if self == Measure::S8 {
            "bits"
        } else {
            "nats"
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "surprisal" => Measure::Surprisal,
            "s8" => Measure::S8,
            "residual-information" | "residual" => Measure::ResidualInformation,
            "bayesian" | "bayesian-surprise" | "kl" => Measure::Bayesian,
            "antithesis" => Measure::Antithesis,
            _ => return Err(MeasureError::UnknownMeasure(s.to_string())),
        })
    }
}

/// Parameters shared by all measures; each measure reads what it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureParams<T> {
    bin_size: T,
    mc_samples: usize,
    seed: RngSeed,
}

impl<T: Scalar> MeasureParams<T> {
    pub fn new(bin_size: T, mc_samples: usize, seed: RngSeed) -> Result<Self, MeasureError> {
        check_bin(bin_size)?;
        if mc_samples == 0 {
            return Err(MeasureError::ZeroSamples);
        }
        Ok(Self {
            bin_size,
            mc_samples,
            seed,
        })
    }

    pub fn bin_size(&self) -> T {
        self.bin_size
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn with_seed(self, seed: RngSeed) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurpriseValue<T> {
    pub value: T,
    pub measure: Measure,
    /// Set when a density underflowed or mode search did not converge.
    pub degraded: bool,
    /// Standard error of Monte Carlo measures.
    pub std_error: Option<T>,
}

impl<T: Scalar> SurpriseValue<T> {
    fn exact(measure: Measure, value: T, degraded: bool) -> Self {
        Self {
            value,
            measure,
            degraded,
            std_error: None,
        }
    }
}

fn check_bin<T: Scalar>(bin_size: T) -> Result<(), MeasureError> {
    if bin_size > T::zero() && bin_size.is_finite() {
        Ok(())
    } else {
        Err(MeasureError::BinSize(to_f64(bin_size)))
    }
}

fn log_bin_volume<T: Scalar, const D: usize>(bin_size: T) -> T {
    lit::<T>(D as f64) * bin_size.ln()
}

fn underflows<T: Scalar>(log_density: T) -> bool {
    log_density < T::min_positive_value().ln()
}

/// `−log P_ε(x)` with bin mass `g(x)·ε^d`, floored at 0 if the mass exceeds 1.
pub fn surprisal<T: Scalar, const D: usize>(
    prior: &Gmm<T, D>,
    x: &Vector<T, D>,
    bin_size: T,
) -> Result<SurpriseValue<T>, MeasureError> {
    check_bin(bin_size)?;
    let ld = prior.log_density(x);
    let value = (-(ld + log_bin_volume::<T, D>(bin_size))).max(T::zero());
    Ok(SurpriseValue::exact(
        Measure::Surprisal,
        value,
        !ld.is_finite(),
    ))
}

/// `log₂(1 + max P_ε − P_ε(x))` on the `ε`-discretized prior, masses clamped
/// to `[0, 1]` and the maximum taken at the prior's mode.
pub fn s8<T: Scalar, const D: usize>(
    prior: &Gmm<T, D>,
    x: &Vector<T, D>,
    bin_size: T,
) -> Result<SurpriseValue<T>, MeasureError> {
    check_bin(bin_size)?;
    let volume = bin_size.powi(D as i32);
    let mode = prior.mode();
    let mass = |density: T| (density * volume).max(T::zero()).min(T::one());
    let max_mass = mass(mode.density);
    let obs_mass = mass(prior.density(x));
    let value = (T::one() + max_mass - obs_mass).log2().max(T::zero());
    Ok(SurpriseValue::exact(Measure::S8, value, !mode.converged))
}

/// `log(max g / g(x))`, using densities directly. Zero at the mode and
/// invariant under invertible affine changes of coordinates.
///
/// Computed in the log domain, so the value stays finite when `g(x)`
/// underflows; such results carry the degraded flag.
pub fn residual_information<T: Scalar, const D: usize>(
    prior: &Gmm<T, D>,
    x: &Vector<T, D>,
) -> SurpriseValue<T> {
    let mode = prior.mode();
    let ld = prior.log_density(x);
    // an observation denser than the located mode bounds the true maximum from below
    let value = (mode.log_density - ld).max(T::zero());
    SurpriseValue::exact(
        Measure::ResidualInformation,
        value,
        !mode.converged || underflows(ld) || !ld.is_finite(),
    )
}

/// Monte Carlo `KL(posterior ‖ prior)` from `n` posterior samples, clamped at 0.
pub fn bayesian_surprise<T: Scalar, const D: usize>(
    prior: &Gmm<T, D>,
    posterior: &Gmm<T, D>,
    n: usize,
    seed: RngSeed,
) -> Result<SurpriseValue<T>, MeasureError> {
    if n == 0 {
        return Err(MeasureError::ZeroSamples);
    }
    let samples = posterior.sample(n, seed);
    let mut degraded = false;
    let est = MonteCarloEstimate::from_terms(samples.iter().map(|x| {
        let lp = prior.log_density(x);
        degraded |= underflows(lp);
        posterior.log_density(x) - lp
    }));
    Ok(SurpriseValue {
        value: est.value.max(T::zero()),
        measure: Measure::Bayesian,
        degraded,
        std_error: Some(est.std_error()),
    })
}

/// KL integral restricted to the region where the outcome was outside prior
/// expectations (`log g_prior(x) < E[log g_prior]`) and belief increased
/// (`g_post(x) > g_prior(x)`).
///
/// Posterior samples failing either condition contribute zero; the sum is
/// divided by the full sample count `n`. The expectation threshold is one
/// Monte Carlo estimate per call, from `n` prior samples under `seed`.
pub fn antithesis<T: Scalar, const D: usize>(
    prior: &Gmm<T, D>,
    posterior: &Gmm<T, D>,
    n: usize,
    seed: RngSeed,
) -> Result<SurpriseValue<T>, MeasureError> {
    if n == 0 {
        return Err(MeasureError::ZeroSamples);
    }
    let threshold = prior.expected_log_density(n, seed)?.value;
    let samples = posterior.sample(n, seed);
    let mut degraded = false;
    let est = MonteCarloEstimate::from_terms(samples.iter().map(|x| {
        let lp = prior.log_density(x);
        let lq = posterior.log_density(x);
        if lp < threshold && lq > lp {
            degraded |= underflows(lp);
            lq - lp
        } else {
            T::zero()
        }
    }));
    Ok(SurpriseValue {
        value: est.value.max(T::zero()),
        measure: Measure::Antithesis,
        degraded,
        std_error: Some(est.std_error()),
    })
}

/// What a measure is evaluated against.
#[derive(Clone, Copy, Debug)]
pub enum Evidence<'a, T: Scalar, const D: usize> {
    Observation(&'a Vector<T, D>),
    Posterior(&'a Gmm<T, D>),
}

/// Dispatches `measure` on `prior` and the matching kind of evidence.
///
/// # Panics
/// If the evidence kind does not match the measure's category.
pub fn evaluate<T: Scalar, const D: usize>(
    measure: Measure,
    prior: &Gmm<T, D>,
    evidence: Evidence<'_, T, D>,
    params: &MeasureParams<T>,
) -> Result<SurpriseValue<T>, MeasureError> {
    match (measure, evidence) {
        (Measure::Surprisal, Evidence::Observation(x)) => surprisal(prior, x, params.bin_size),
        (Measure::S8, Evidence::Observation(x)) => s8(prior, x, params.bin_size),
        (Measure::ResidualInformation, Evidence::Observation(x)) => {
            Ok(residual_information(prior, x))
        }
        (Measure::Bayesian, Evidence::Posterior(q)) => {
            bayesian_surprise(prior, q, params.mc_samples, params.seed)
        }
        (Measure::Antithesis, Evidence::Posterior(q)) => {
            antithesis(prior, q, params.mc_samples, params.seed)
        }
        (m, _) => panic!("evidence kind does not match measure {m}"),
    }
}
