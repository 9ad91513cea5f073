//! Prediction timelines and the `(h, z)` alignment that selects which beliefs
//! a surprise measure compares.
//!
//! A [`TrajectoryPrediction`] is everything the predictor emitted at one
//! instant: a belief per future horizon. A [`BeliefTimeline`] stores one
//! agent's predictions at a constant cadence `Δt` and answers two queries:
//!
//! * [`BeliefTimeline::align_probabilistic`]: the belief generated at `t − h`
//!   about time `t`, to be scored against the observation at `t`;
//! * [`BeliefTimeline::align_belief_mismatch`]: the beliefs generated at
//!   `t − h` and at `t`, both about time `t + z`.
//!
//! Lookups are exact-match within `Δt/2`; a missing prediction or horizon is
//! an [`AlignmentError`], never a nearest-neighbour substitute.

mod exchange;
mod frame;

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

pub use exchange::{
    read_timeline, write_timeline, ComponentRecord, ExchangeError, HorizonRecord, PredictionRecord,
};
pub use frame::{body_frame_decompose, wrap_angle, BodyFrameMarginals, ObserverPose};

use crate::gmm::Gmm;
use crate::scalar::{lit, to_f64, Scalar};

/// Allowed jitter in the prediction cadence, seconds.
pub const CADENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("prediction has no horizons")]
    NoHorizons,
    #[error("horizon offsets must be non-negative and strictly increasing (at index {0})")]
    HorizonOrder(usize),
    #[error("prediction for agent {found:?} pushed onto timeline of {expected:?}")]
    AgentMismatch { expected: String, found: String },
    #[error("prediction generated at {found} s does not follow {last} s")]
    NotIncreasing { last: f64, found: f64 },
    #[error("prediction cadence changed from {expected} s to {found} s")]
    IrregularCadence { expected: f64, found: f64 },
    #[error("retention window must be positive, got {0}")]
    Retention(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("alignment gap: timeline is empty")]
    EmptyTimeline,
    #[error("alignment gap: no prediction generated at t = {generated_at} s")]
    MissingPrediction { generated_at: f64 },
    #[error("alignment gap: prediction generated at t = {generated_at} s has no horizon {horizon} s (about t = {about} s)")]
    MissingHorizon {
        generated_at: f64,
        horizon: f64,
        about: f64,
    },
}

/// Belief about the agent's position `dt` seconds after generation.
#[derive(Clone, Debug, PartialEq)]
pub struct Horizon<T: Scalar> {
    pub dt: T,
    pub belief: Gmm<T, 2>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPrediction<T: Scalar> {
    generated_at: T,
    agent_id: String,
    horizons: Vec<Horizon<T>>,
}

impl<T: Scalar> TrajectoryPrediction<T> {
    pub fn new(
        generated_at: T,
        agent_id: impl Into<String>,
        horizons: Vec<Horizon<T>>,
    ) -> Result<Self, TimelineError> {
        if horizons.is_empty() {
            return Err(TimelineError::NoHorizons);
        }
        if horizons[0].dt < T::zero() || !horizons[0].dt.is_finite() {
            return Err(TimelineError::HorizonOrder(0));
        }
        if let Some(i) = horizons.windows(2).position(|w| !(w[1].dt > w[0].dt)) {
            return Err(TimelineError::HorizonOrder(i + 1));
        }
        Ok(Self {
            generated_at,
            agent_id: agent_id.into(),
            horizons,
        })
    }

    pub fn generated_at(&self) -> T {
        self.generated_at
    }

    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn horizons(&self) -> &[Horizon<T>] {
        &self.horizons
    }

    /// Horizon closest to `dt` within `tolerance`.
    pub fn horizon(&self, dt: T, tolerance: T) -> Option<&Horizon<T>> {
        let idx = self.horizons.partition_point(|h| h.dt < dt);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.horizons.get(i))
            .filter(|h| (h.dt - dt).abs() <= tolerance)
            .min_by(|a, b| {
                (a.dt - dt)
                    .abs()
                    .partial_cmp(&(b.dt - dt).abs())
                    .expect("finite horizons")
            })
    }
}

/// Append-only store of one agent's predictions at constant cadence.
///
/// With a retention window, predictions older than `latest − retention` are
/// dropped on push.
#[derive(Clone, Debug)]
pub struct BeliefTimeline<T: Scalar> {
    agent_id: String,
    predictions: VecDeque<Arc<TrajectoryPrediction<T>>>,
    cadence: Option<T>,
    retention: Option<T>,
}

impl<T: Scalar> BeliefTimeline<T> {
    pub fn new(agent_id: impl Into<String>) -> Self {
        Self {
            agent_id: agent_id.into(),
            predictions: VecDeque::new(),
            cadence: None,
            retention: None,
        }
    }

    /// Keeps only `retention` seconds of predictions behind the newest one.
    /// Queries need `retention ≥ max(h) + Δt`.
    pub fn with_retention(mut self, retention: T) -> Result<Self, TimelineError> {
        if !(retention > T::zero()) {
            return Err(TimelineError::Retention(to_f64(retention)));
        }
        self.retention = Some(retention);
        Ok(self)
    }

    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn cadence(&self) -> Option<T> {
        self.cadence
    }

    pub fn predictions(&self) -> impl Iterator<Item = &TrajectoryPrediction<T>> {
        self.predictions.iter().map(|p| p.as_ref())
    }

    pub fn push(&mut self, prediction: TrajectoryPrediction<T>) -> Result<(), TimelineError> {
        if prediction.agent_id != self.agent_id {
            return Err(TimelineError::AgentMismatch {
                expected: self.agent_id.clone(),
                found: prediction.agent_id.clone(),
            });
        }
        if let Some(last) = self.predictions.back() {
            let step = prediction.generated_at - last.generated_at;
            if !(step > T::zero()) {
                return Err(TimelineError::NotIncreasing {
                    last: to_f64(last.generated_at),
                    found: to_f64(prediction.generated_at),
                });
            }
            match self.cadence {
                Some(c) if (step - c).abs() > lit(CADENCE_TOLERANCE) => {
                    return Err(TimelineError::IrregularCadence {
                        expected: to_f64(c),
                        found: to_f64(step),
                    })
                }
                Some(_) => {}
                None => self.cadence = Some(step),
            }
        }
        let newest = prediction.generated_at;
        self.predictions.push_back(Arc::new(prediction));
        if let Some(retention) = self.retention {
            let slack = self.cadence.map_or(T::zero(), |c| c * lit(0.5));
            while self
                .predictions
                .front()
                .is_some_and(|p| p.generated_at < newest - retention - slack)
            {
                self.predictions.pop_front();
            }
        }
        Ok(())
    }

    fn tolerance(&self) -> T {
        self.cadence
            .map_or(lit(CADENCE_TOLERANCE), |c| c * lit(0.5))
    }

    /// Prediction generated at `time` (within `Δt/2`).
    pub fn prediction_at(&self, time: T) -> Result<&TrajectoryPrediction<T>, AlignmentError> {
        let first = self
            .predictions
            .front()
            .ok_or(AlignmentError::EmptyTimeline)?;
        let missing = || AlignmentError::MissingPrediction {
            generated_at: to_f64(time),
        };
        let idx = match self.cadence {
            Some(c) => {
                let k = ((time - first.generated_at) / c).round();
                if k < T::zero() {
                    return Err(missing());
                }
                k.to_usize().ok_or_else(missing)?
            }
            None => 0,
        };
        let p = self.predictions.get(idx).ok_or_else(missing)?;
        if (p.generated_at - time).abs() <= self.tolerance() {
            Ok(p)
        } else {
            Err(missing())
        }
    }

    fn belief(&self, generated_at: T, horizon: T) -> Result<&Gmm<T, 2>, AlignmentError> {
        let p = self.prediction_at(generated_at)?;
        p.horizon(horizon, self.tolerance())
            .map(|h| &h.belief)
            .ok_or(AlignmentError::MissingHorizon {
                generated_at: to_f64(p.generated_at),
                horizon: to_f64(horizon),
                about: to_f64(generated_at + horizon),
            })
    }

    /// Prior about time `t`, generated at `t − h`.
    pub fn align_probabilistic(&self, t: T, h: T) -> Result<&Gmm<T, 2>, AlignmentError> {
        self.belief(t - h, h)
    }

    /// `(prior, posterior)` about `t + z`, generated at `t − h` and `t`.
    pub fn align_belief_mismatch(
        &self,
        t: T,
        h: T,
        z: T,
    ) -> Result<(&Gmm<T, 2>, &Gmm<T, 2>), AlignmentError> {
        let prior = self.belief(t - h, h + z)?;
        let posterior = self.belief(t, z)?;
        Ok((prior, posterior))
    }
}
