//! Kinematic multi-hypothesis predictor.
//!
//! Each enabled [`Hypothesis`] rolls the agent's latest state forward over
//! the horizon grid and contributes one Gaussian per horizon. Hypotheses are
//! weighted by how well each explains the last second of history when rolled
//! backward (`w ∝ exp(−error / temperature)`), and those weights are shared
//! by every horizon. Uncertainty grows linearly with the horizon:
//! `σ_lon = base + growth·dt`, `σ_lat = ratio·σ_lon` (ratio 0.5 by default),
//! aligned to the hypothesis' heading at that horizon.
//!
//! Velocity comes from the recorded heading and speed of the latest state;
//! acceleration from a finite difference of the recorded speeds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beliefs::{Horizon, TimelineError, TrajectoryPrediction};
use crate::gmm::{linalg, GaussianComponent, Gmm, GmmError};
use crate::scalar::{lit, to_f64, Scalar};

pub const LANE_WIDTH: f64 = 3.5;
/// Duration of the lateral ramp of the maneuver hypotheses, seconds.
pub const MANEUVER_DURATION: f64 = 3.0;
/// Deceleration of the hard-stop hypothesis, m/s².
pub const HARD_STOP_DECELERATION: f64 = 6.0;
/// Span of history used to weight hypotheses, seconds.
pub const BACKCAST_WINDOW: f64 = 1.0;
const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("no hypotheses enabled")]
    NoHypotheses,
    #[error("invalid predictor config: {0}")]
    InvalidConfig(String),
    #[error("history is not strictly increasing in time at index {0}")]
    NotChronological(usize),
    #[error("agent state at index {0} has a non-finite field or negative speed")]
    InvalidState(usize),
    #[error(transparent)]
    Belief(#[from] GmmError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Observed kinematic state of an agent in the world frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState<T> {
    pub t: T,
    pub position: [T; 2],
    /// Radians counter-clockwise from world +x.
    pub heading: T,
    pub speed: T,
}

impl<T: Scalar> AgentState<T> {
    pub fn new(t: T, position: [T; 2], heading: T, speed: T) -> Self {
        Self {
            t,
            position,
            heading,
            speed,
        }
    }

    fn is_valid(&self) -> bool {
        self.t.is_finite()
            && self.position.iter().all(|p| p.is_finite())
            && self.heading.is_finite()
            && self.speed.is_finite()
            && self.speed >= T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    ConstantVelocity,
    ConstantAcceleration,
    ManeuverLeft,
    ManeuverRight,
    HardStop,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [
        Hypothesis::ConstantVelocity,
        Hypothesis::ConstantAcceleration,
        Hypothesis::ManeuverLeft,
        Hypothesis::ManeuverRight,
        Hypothesis::HardStop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::ConstantVelocity => "constant_velocity",
            Hypothesis::ConstantAcceleration => "constant_acceleration",
            Hypothesis::ManeuverLeft => "maneuver_left",
            Hypothesis::ManeuverRight => "maneuver_right",
            Hypothesis::HardStop => "hard_stop",
        }
    }

    fn needs_acceleration(self) -> bool {
        self == Hypothesis::ConstantAcceleration
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hypothesis {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.name() == norm)
            .ok_or_else(|| PredictError::InvalidConfig(format!("unknown hypothesis {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorConfig<T> {
    hypotheses: Vec<Hypothesis>,
    horizon_grid: Vec<T>,
    base_sigma: T,
    growth_rate: T,
    weight_temperature: T,
    lateral_ratio: T,
}

impl<T: Scalar> PredictorConfig<T> {
    pub fn new(
        hypotheses: Vec<Hypothesis>,
        horizon_grid: Vec<T>,
        base_sigma: T,
        growth_rate: T,
        weight_temperature: T,
    ) -> Result<Self, PredictError> {
        let mut hypotheses = hypotheses;
        hypotheses.sort();
        hypotheses.dedup();
        if hypotheses.is_empty() {
            return Err(PredictError::NoHypotheses);
        }
        if horizon_grid.is_empty()
            || horizon_grid
                .iter()
                .any(|d| !d.is_finite() || *d < T::zero())
        {
            return Err(PredictError::InvalidConfig(
                "horizon grid must be non-empty and non-negative".into(),
            ));
        }
        if horizon_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PredictError::InvalidConfig(
                "horizon grid must be strictly increasing".into(),
            ));
        }
        if !(base_sigma > T::zero()) || !base_sigma.is_finite() {
            return Err(PredictError::InvalidConfig(format!(
                "base_sigma must be positive, got {base_sigma}"
            )));
        }
        if !(growth_rate >= T::zero()) || !growth_rate.is_finite() {
            return Err(PredictError::InvalidConfig(format!(
                "growth_rate must be non-negative, got {growth_rate}"
            )));
        }
        if !(weight_temperature > T::zero()) || !weight_temperature.is_finite() {
            return Err(PredictError::InvalidConfig(format!(
                "weight_temperature must be positive, got {weight_temperature}"
            )));
        }
        Ok(Self {
            hypotheses,
            horizon_grid,
            base_sigma,
            growth_rate,
            weight_temperature,
            lateral_ratio: lit(0.5),
        })
    }

    /// Ratio of lateral to longitudinal standard deviation, in `(0, 1]`.
    pub fn with_lateral_ratio(mut self, ratio: T) -> Result<Self, PredictError> {
        if !(ratio > T::zero() && ratio <= T::one()) {
            return Err(PredictError::InvalidConfig(format!(
                "lateral ratio must be in (0, 1], got {ratio}"
            )));
        }
        self.lateral_ratio = ratio;
        Ok(self)
    }

    /// `n` horizons at `step, 2·step, …, n·step`.
    pub fn uniform_grid(step: T, n: usize) -> Vec<T> {
        (1..=n).map(|k| step * lit(k as f64)).collect()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn horizon_grid(&self) -> &[T] {
        &self.horizon_grid
    }

    pub fn base_sigma(&self) -> T {
        self.base_sigma
    }

    pub fn growth_rate(&self) -> T {
        self.growth_rate
    }

    pub fn weight_temperature(&self) -> T {
        self.weight_temperature
    }

    pub fn lateral_ratio(&self) -> T {
        self.lateral_ratio
    }

    fn sigma(&self, dt: T) -> T {
        self.base_sigma + self.growth_rate * dt
    }
}

impl<T: Scalar> Default for PredictorConfig<T> {
    /// All hypotheses, horizons every 0.1 s out to 5 s, σ = 0.3 + 0.3·dt m,
    /// temperature 0.05.
    fn default() -> Self {
        Self::new(
            Hypothesis::ALL.to_vec(),
            Self::uniform_grid(lit(0.1), 50),
            lit(0.3),
            lit(0.3),
            lit(0.05),
        )
        .expect("default predictor config is valid")
    }
}

/// Kinematic quantities of the latest state that rollouts start from.
#[derive(Clone, Copy, Debug)]
struct Anchor<T> {
    position: [T; 2],
    heading: T,
    speed: T,
    acceleration: T,
}

/// Displacement in the anchor's heading frame plus heading change.
#[derive(Clone, Copy, Debug)]
struct Offset<T> {
    longitudinal: T,
    lateral: T,
    heading: T,
}

fn smoothstep<T: Scalar>(u: T) -> T {
    let u = u.max(T::zero()).min(T::one());
    u * u * (lit::<T>(3.0) - lit::<T>(2.0) * u)
}

fn smoothstep_slope<T: Scalar>(u: T) -> T {
    if u <= T::zero() || u >= T::one() {
        T::zero()
    } else {
        lit::<T>(6.0) * u * (T::one() - u)
    }
}

/// Distance covered over `s ≥ 0` seconds at initial speed `v` and constant
/// acceleration `a`, never reversing.
fn travelled<T: Scalar>(v: T, a: T, s: T) -> T {
    if a < T::zero() {
        let stop = v / -a;
        let s = s.min(stop);
        v * s + lit::<T>(0.5) * a * s * s
    } else {
        v * s + lit::<T>(0.5) * a * s * s
    }
}

impl Hypothesis {
    fn acceleration<T: Scalar>(self, anchor: &Anchor<T>) -> T {
        match self {
            Hypothesis::ConstantAcceleration => anchor.acceleration,
            Hypothesis::HardStop => -lit::<T>(HARD_STOP_DECELERATION),
            _ => T::zero(),
        }
    }

    fn lateral_sign<T: Scalar>(self) -> T {
        match self {
            Hypothesis::ManeuverLeft => T::one(),
            Hypothesis::ManeuverRight => -T::one(),
            _ => T::zero(),
        }
    }

    /// Offset `s ≥ 0` seconds ahead.
    fn forward<T: Scalar>(self, anchor: &Anchor<T>, s: T) -> Offset<T> {
        let a = self.acceleration(anchor);
        let longitudinal = travelled(anchor.speed, a, s);
        let sign = self.lateral_sign::<T>();
        if sign == T::zero() {
            return Offset {
                longitudinal,
                lateral: T::zero(),
                heading: T::zero(),
            };
        }
        let duration = lit::<T>(MANEUVER_DURATION);
        let width = lit::<T>(LANE_WIDTH);
        let u = s / duration;
        let lateral = sign * width * smoothstep(u);
        let lateral_rate = sign * width * smoothstep_slope(u) / duration;
        let heading = if lateral_rate == T::zero() {
            T::zero()
        } else {
            lateral_rate.atan2(anchor.speed)
        };
        Offset {
            longitudinal,
            lateral,
            heading,
        }
    }

    /// Offset `tau ≥ 0` seconds in the past: the motion model run backward
    /// from the anchor. Maneuver profiles use their odd extension, so a
    /// leftward maneuver implies the agent came from the right.
    fn backward<T: Scalar>(self, anchor: &Anchor<T>, tau: T) -> Offset<T> {
        let a = self.acceleration(anchor);
        // looking back, speed evolves as v − a·σ; a positive a runs it down to rest
        let longitudinal = -travelled(anchor.speed, -a, tau);
        let sign = self.lateral_sign::<T>();
        let lateral = -sign * lit::<T>(LANE_WIDTH) * smoothstep(tau / lit(MANEUVER_DURATION));
        Offset {
            longitudinal,
            lateral,
            heading: T::zero(),
        }
    }
}

fn to_world<T: Scalar>(anchor: &Anchor<T>, offset: &Offset<T>) -> [T; 2] {
    let (s, c) = anchor.heading.sin_cos();
    [
        anchor.position[0] + c * offset.longitudinal - s * offset.lateral,
        anchor.position[1] + s * offset.longitudinal + c * offset.lateral,
    ]
}

fn validate_history<T: Scalar>(history: &[AgentState<T>]) -> Result<(), PredictError> {
    if let Some(i) = history.iter().position(|s| !s.is_valid()) {
        return Err(PredictError::InvalidState(i));
    }
    if let Some(i) = history.windows(2).position(|w| !(w[1].t > w[0].t)) {
        return Err(PredictError::NotChronological(i + 1));
    }
    Ok(())
}

fn anchor<T: Scalar>(
    history: &[AgentState<T>],
    need_acceleration: bool,
) -> Result<Anchor<T>, PredictError> {
    let needed = if need_acceleration { 3 } else { 2 };
    if history.len() < needed {
        return Err(PredictError::InsufficientHistory(format!(
            "need {needed} states, have {}",
            history.len()
        )));
    }
    let last = history[history.len() - 1];
    let acceleration = if need_acceleration {
        // central difference of recorded speed around the previous sample
        let earlier = history[history.len() - 3];
        (last.speed - earlier.speed) / (last.t - earlier.t)
    } else {
        T::zero()
    };
    Ok(Anchor {
        position: last.position,
        heading: last.heading,
        speed: last.speed,
        acceleration,
    })
}

fn backcast_error<T: Scalar>(
    history: &[AgentState<T>],
    anchor: &Anchor<T>,
    hypothesis: Hypothesis,
) -> Result<T, PredictError> {
    let now = history[history.len() - 1].t;
    let window = lit::<T>(BACKCAST_WINDOW);
    if history[0].t > now - window + lit(TIME_TOLERANCE) {
        return Err(PredictError::InsufficientHistory(format!(
            "need {BACKCAST_WINDOW} s of history, have {} s",
            to_f64(now - history[0].t)
        )));
    }
    let past: Vec<&AgentState<T>> = history
        .iter()
        .rev()
        .skip(1)
        .take_while(|s| s.t >= now - window - lit(TIME_TOLERANCE))
        .collect();
    let total: T = past
        .iter()
        .map(|s| {
            let predicted = to_world(anchor, &hypothesis.backward(anchor, now - s.t));
            linalg::norm(&linalg::sub(&predicted, &s.position))
        })
        .sum();
    Ok(total / lit(past.len() as f64))
}

/// Mean distance between the hypothesis rolled backward over the last second
/// and the recorded positions there (the latest state itself excluded).
pub fn backcast_fit_error<T: Scalar>(
    history: &[AgentState<T>],
    hypothesis: Hypothesis,
) -> Result<T, PredictError> {
    validate_history(history)?;
    let anchor = anchor(history, hypothesis.needs_acceleration())?;
    backcast_error(history, &anchor, hypothesis)
}

/// Softmax weights `∝ exp(−error/temperature)`.
fn hypothesis_weights<T: Scalar>(errors: &[T], temperature: T) -> Vec<T> {
    let best = errors.iter().fold(T::infinity(), |m, &e| m.min(e));
    let raw: Vec<T> = errors
        .iter()
        .map(|&e| (-(e - best) / temperature).exp())
        .collect();
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Predicts the agent's future position from `history` (oldest first).
pub fn predict<T: Scalar>(
    agent_id: &str,
    history: &[AgentState<T>],
    config: &PredictorConfig<T>,
) -> Result<TrajectoryPrediction<T>, PredictError> {
    validate_history(history)?;
    let hypotheses = config.hypotheses();
    let anchor = anchor(history, hypotheses.iter().any(|h| h.needs_acceleration()))?;
    let weights = if hypotheses.len() == 1 {
        vec![T::one()]
    } else {
        let errors = hypotheses
            .iter()
            .map(|&h| backcast_error(history, &anchor, h))
            .collect::<Result<Vec<_>, _>>()?;
        hypothesis_weights(&errors, config.weight_temperature())
    };
    let horizons = config
        .horizon_grid()
        .iter()
        .map(|&dt| {
            let sigma = config.sigma(dt);
            let lateral_sigma = sigma * config.lateral_ratio();
            let body_cov = [
                [sigma * sigma, T::zero()],
                [T::zero(), lateral_sigma * lateral_sigma],
            ];
            let components = hypotheses
                .iter()
                .zip(&weights)
                .map(|(&h, &w)| {
                    let offset = h.forward(&anchor, dt);
                    let r = linalg::rotation(anchor.heading + offset.heading);
                    let mut cov =
                        linalg::mat_mul(&linalg::mat_mul(&r, &body_cov), &linalg::transpose(&r));
                    let off_diag = (cov[0][1] + cov[1][0]) * lit(0.5);
                    cov[0][1] = off_diag;
                    cov[1][0] = off_diag;
                    GaussianComponent::new(w, to_world(&anchor, &offset), cov)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Horizon {
                dt,
                belief: Gmm::new(components)?,
            })
        })
        .collect::<Result<Vec<_>, PredictError>>()?;
    Ok(TrajectoryPrediction::new(
        history[history.len() - 1].t,
        agent_id,
        horizons,
    )?)
}

#[cfg(test)]
mod tests;
