//! Prediction-exchange documents: a JSON list of prediction records for one
//! agent, so predictions computed elsewhere can replace the built-in predictor.
//!
//! ```text
//! [{"generated_at": 0.0, "agent_id": "initiator",
//!   "horizons": [{"dt": 0.1, "components": [
//!       {"weight": 1.0, "mean": [x, y], "cov": [[a, b], [b, c]]}]}]}]
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BeliefTimeline, Horizon, TimelineError, TrajectoryPrediction};
use crate::gmm::{GaussianComponent, Gmm, GmmError};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("malformed prediction document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("prediction document is empty")]
    Empty,
    #[error("record {record}: horizon {horizon}: {source}")]
    Belief {
        record: usize,
        horizon: usize,
        source: GmmError,
    },
    #[error("record {record}: {source}")]
    Timeline {
        record: usize,
        source: TimelineError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentRecord {
    pub weight: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonRecord {
    pub dt: f64,
    pub components: Vec<ComponentRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub generated_at: f64,
    pub agent_id: String,
    pub horizons: Vec<HorizonRecord>,
}

impl<T: Scalar> From<&TrajectoryPrediction<T>> for PredictionRecord {
    fn from(p: &TrajectoryPrediction<T>) -> Self {
        let f = to_f64::<T>;
        PredictionRecord {
            generated_at: f(p.generated_at()),
            agent_id: p.agent_id().to_string(),
            horizons: p
                .horizons()
                .iter()
                .map(|h| HorizonRecord {
                    dt: f(h.dt),
                    components: h
                        .belief
                        .components()
                        .iter()
                        .map(|c| ComponentRecord {
                            weight: f(c.weight()),
                            mean: c.mean().map(f),
                            cov: c.covariance().map(|row| row.map(f)),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl PredictionRecord {
    pub fn to_prediction<T: Scalar>(
        &self,
        record: usize,
    ) -> Result<TrajectoryPrediction<T>, ExchangeError> {
        let horizons = self
            .horizons
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let belief = h
                    .components
                    .iter()
                    .map(|c| {
                        GaussianComponent::new(
                            lit(c.weight),
                            c.mean.map(lit),
                            c.cov.map(|row| row.map(lit)),
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .and_then(Gmm::new)
                    .map_err(|source| ExchangeError::Belief {
                        record,
                        horizon: i,
                        source,
                    })?;
                Ok(Horizon {
                    dt: lit(h.dt),
                    belief,
                })
            })
            .collect::<Result<Vec<_>, ExchangeError>>()?;
        TrajectoryPrediction::new(lit(self.generated_at), self.agent_id.clone(), horizons)
            .map_err(|source| ExchangeError::Timeline { record, source })
    }
}

/// Parses a prediction document into a timeline; all records must share one
/// agent id and a constant cadence.
pub fn read_timeline<T: Scalar, R: Read>(reader: R) -> Result<BeliefTimeline<T>, ExchangeError> {
    let records: Vec<PredictionRecord> = serde_json::from_reader(reader)?;
    let first = records.first().ok_or(ExchangeError::Empty)?;
    let mut timeline = BeliefTimeline::new(first.agent_id.clone());
    for (i, r) in records.iter().enumerate() {
        timeline
            .push(r.to_prediction(i)?)
            .map_err(|source| ExchangeError::Timeline { record: i, source })?;
    }
    Ok(timeline)
}

pub fn write_timeline<T: Scalar, W: Write>(
    timeline: &BeliefTimeline<T>,
    writer: W,
) -> Result<(), ExchangeError> {
    let records: Vec<PredictionRecord> =
        timeline.predictions().map(PredictionRecord::from).collect();
    serde_json::to_writer_pretty(writer, &records)?;
    Ok(())
}
