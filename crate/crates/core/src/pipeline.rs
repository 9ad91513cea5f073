//! Surprise time series over a scene, peak reporting and `(h, z)` sweeps.
//!
//! The initiator's beliefs come from a [`BeliefTimeline`] (built with the
//! kinematic predictor or loaded from a prediction file). At every grid time
//! the aligned beliefs and the initiator's observed position are moved into
//! the responder's body frame at that time, reduced to the requested
//! [`Axis`], and scored. Timestamps without aligned beliefs are skipped.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beliefs::{body_frame_decompose, BeliefTimeline, ObserverPose, TimelineError};
use crate::gmm::{Gmm, Vector};
use crate::measures::{evaluate, Evidence, Measure, MeasureError, MeasureParams, SurpriseValue};
use crate::predictor::{predict, AgentState, PredictError, PredictorConfig};
use crate::rng::RngSeed;
use crate::scalar::{lit, Scalar};
use crate::scenarios::{Scene, TIME_TOLERANCE};

/// Fraction of a series, from its start, used as the quiet baseline.
pub const BASELINE_FRACTION: f64 = 0.4;
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 5.0;
/// Floor on the baseline median when forming the onset threshold.
pub const MIN_BASELINE: f64 = 1e-6;

pub const SERIES_HEADER: [&str; 6] = ["t", "value", "measure", "axis", "h", "z"];
pub const SWEEP_HEADER: [&str; 7] = [
    "measure",
    "axis",
    "h",
    "z",
    "peak_time",
    "peak_value",
    "onset_time",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown agent id {0:?}")]
    UnknownAgent(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no {measure} values: no timestamp has aligned beliefs for h = {h} s, z = {z} s")]
    EmptySeries { measure: Measure, h: f64, z: f64 },
    #[error("no predictions could be made for agent {agent:?}: {source}")]
    NoPredictions { agent: String, source: PredictError },
    #[error("timeline is for agent {found:?}, expected {expected:?}")]
    TimelineAgent { expected: String, found: String },
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which body-frame coordinate of the initiator is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Lateral,
    Longitudinal,
    Planar,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Lateral, Axis::Longitudinal, Axis::Planar];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Lateral => "lateral",
            Axis::Longitudinal => "longitudinal",
            Axis::Planar => "planar",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| PipelineError::InvalidParams(format!("unknown axis {s:?}")))
    }
}

/// History window `h`, lookahead `z`, axis and measure parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams<T> {
    h: T,
    z: T,
    axis: Axis,
    measure: MeasureParams<T>,
}

impl<T: Scalar> SeriesParams<T> {
    pub fn new(h: T, z: T, axis: Axis, measure: MeasureParams<T>) -> Result<Self, PipelineError> {
        if !(h >= T::zero()) || !h.is_finite() {
            return Err(PipelineError::InvalidParams(format!(
                "h must be non-negative, got {h}"
            )));
        }
        if !(z >= T::zero()) || !z.is_finite() {
            return Err(PipelineError::InvalidParams(format!(
                "z must be non-negative, got {z}"
            )));
        }
        Ok(Self {
            h,
            z,
            axis,
            measure,
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn z(&self) -> T {
        self.z
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn measure_params(&self) -> &MeasureParams<T> {
        &self.measure
    }

    pub fn with_window(self, h: T, z: T) -> Result<Self, PipelineError> {
        Self::new(h, z, self.axis, self.measure)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurpriseSeries<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Values whose computation hit a numerical limit (see [`SurpriseValue`]).
    pub degraded: Vec<bool>,
    pub measure: Measure,
    pub params: SeriesParams<T>,
}

impl<T: Scalar> SurpriseSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Fraction of values that are exactly zero.
    pub fn zero_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|v| **v == T::zero()).count() as f64 / self.values.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakReport<T> {
    pub peak_time: T,
    pub peak_value: T,
    pub baseline_median: T,
    pub onset_time: Option<T>,
}

/// Median of a non-empty slice.
pub fn median<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * lit(0.5)
    }
}

/// Peak is the first global maximum. The baseline is the median of the first
/// 40% of values (at least one); onset is the first time a value exceeds
/// `threshold_factor · max(baseline, 1e-6)`.
///
/// # Panics
/// On an empty series.
pub fn peak_detect<T: Scalar>(series: &SurpriseSeries<T>, threshold_factor: T) -> PeakReport<T> {
    peak_detect_with_baseline(series, threshold_factor, BASELINE_FRACTION)
}

/// [`peak_detect`] with the baseline taken over the first
/// `baseline_fraction` of the series (clamped to at least one value).
///
/// # Panics
/// On an empty series.
pub fn peak_detect_with_baseline<T: Scalar>(
    series: &SurpriseSeries<T>,
    threshold_factor: T,
    baseline_fraction: f64,
) -> PeakReport<T> {
    assert!(!series.is_empty(), "peak_detect needs a non-empty series");
    let values = &series.values;
    let n_base = ((values.len() as f64 * baseline_fraction).ceil() as usize).clamp(1, values.len());
    let baseline_median = median(&values[..n_base]);
    let threshold = threshold_factor * baseline_median.max(lit(MIN_BASELINE));
    let mut peak = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[peak] {
            peak = i;
        }
    }
    let onset_time = values
        .iter()
        .position(|v| *v > threshold)
        .map(|i| series.times[i]);
    PeakReport {
        peak_time: series.times[peak],
        peak_value: values[peak],
        baseline_median,
        onset_time,
    }
}

/// Predicts from the agent's history at every grid time that has enough of
/// it. Predictions are made in parallel and pushed in time order.
pub fn build_timeline<T: Scalar>(
    scene: &Scene<T>,
    agent_id: &str,
    config: &PredictorConfig<T>,
) -> Result<BeliefTimeline<T>, PipelineError> {
    let states = scene
        .agent(agent_id)
        .ok_or_else(|| PipelineError::UnknownAgent(agent_id.to_string()))?;
    let predictions: Vec<_> = (1..=states.len())
        .into_par_iter()
        .map(|k| predict(agent_id, &states[..k], config))
        .collect();
    let mut timeline = BeliefTimeline::new(agent_id);
    let mut last_err = None;
    for p in predictions {
        match p {
            Ok(p) => timeline.push(p)?,
            Err(e @ PredictError::InsufficientHistory(_)) if timeline.is_empty() => {
                last_err = Some(e)
            }
            Err(e) => return Err(e.into()),
        }
    }
    if timeline.is_empty() {
        let source = last_err.unwrap_or(PredictError::InsufficientHistory(
            "agent has no states".into(),
        ));
        return Err(PipelineError::NoPredictions {
            agent: agent_id.to_string(),
            source,
        });
    }
    Ok(timeline)
}

/// Grid time and value of one series point.
type PointResult<T> = Result<(T, SurpriseValue<T>), MeasureError>;

fn observer_at<T: Scalar>(states: &[AgentState<T>], t: T, dt: T) -> Option<ObserverPose<T>> {
    let k = ((t - states.first()?.t) / dt).round();
    let s = states.get(k.to_usize()?)?;
    ((s.t - t).abs() <= lit(TIME_TOLERANCE)).then(|| ObserverPose::new(s.position, s.heading))
}

fn score_belief<T: Scalar>(
    measure: Measure,
    prior: &Gmm<T, 2>,
    posterior: &Gmm<T, 2>,
    pose: &ObserverPose<T>,
    axis: Axis,
    params: &MeasureParams<T>,
) -> Result<SurpriseValue<T>, MeasureError> {
    match axis {
        Axis::Planar => evaluate(
            measure,
            &pose.belief_to_body(prior),
            Evidence::Posterior(&pose.belief_to_body(posterior)),
            params,
        ),
        _ => {
            let p = body_frame_decompose(prior, pose);
            let q = body_frame_decompose(posterior, pose);
            let (p, q) = if axis == Axis::Lateral {
                (p.lateral, q.lateral)
            } else {
                (p.longitudinal, q.longitudinal)
            };
            evaluate(measure, &p, Evidence::Posterior(&q), params)
        }
    }
}

fn score_observation<T: Scalar>(
    measure: Measure,
    prior: &Gmm<T, 2>,
    position: &Vector<T, 2>,
    pose: &ObserverPose<T>,
    axis: Axis,
    params: &MeasureParams<T>,
) -> Result<SurpriseValue<T>, MeasureError> {
    let body = pose.to_body(position);
    match axis {
        Axis::Planar => evaluate(
            measure,
            &pose.belief_to_body(prior),
            Evidence::Observation(&body),
            params,
        ),
        Axis::Lateral => evaluate(
            measure,
            &body_frame_decompose(prior, pose).lateral,
            Evidence::Observation(&[body[1]]),
            params,
        ),
        Axis::Longitudinal => evaluate(
            measure,
            &body_frame_decompose(prior, pose).longitudinal,
            Evidence::Observation(&[body[0]]),
            params,
        ),
    }
}

/// Surprise of the initiator's behaviour as seen by the responder, with the
/// initiator's beliefs taken from `timeline`. The Monte Carlo seed at grid
/// index `k` is `params.seed.derive(k)`.
pub fn surprise_series_with_timeline<T: Scalar>(
    scene: &Scene<T>,
    timeline: &BeliefTimeline<T>,
    initiator_id: &str,
    responder_id: &str,
    measure: Measure,
    params: &SeriesParams<T>,
) -> Result<SurpriseSeries<T>, PipelineError> {
    let initiator = scene
        .agent(initiator_id)
        .ok_or_else(|| PipelineError::UnknownAgent(initiator_id.to_string()))?;
    let responder = scene
        .agent(responder_id)
        .ok_or_else(|| PipelineError::UnknownAgent(responder_id.to_string()))?;
    if timeline.agent_id() != initiator_id {
        return Err(PipelineError::TimelineAgent {
            expected: initiator_id.to_string(),
            found: timeline.agent_id().to_string(),
        });
    }
    let base_seed = params.measure.seed();
    let results: Vec<Option<PointResult<T>>> = initiator
        .par_iter()
        .enumerate()
        .map(|(k, state)| {
            let t = state.t;
            let pose = observer_at(responder, t, scene.dt())?;
            let mp = params
                .measure
                .with_seed(RngSeed::derive(base_seed, k as u64));
            let value = if measure.is_belief_mismatch() {
                let (prior, posterior) =
                    timeline.align_belief_mismatch(t, params.h, params.z).ok()?;
                score_belief(measure, prior, posterior, &pose, params.axis, &mp)
            } else {
                let prior = timeline.align_probabilistic(t, params.h).ok()?;
                score_observation(measure, prior, &state.position, &pose, params.axis, &mp)
            };
            Some(value.map(|v| (t, v)))
        })
        .collect();
    let mut series = SurpriseSeries {
        times: Vec::new(),
        values: Vec::new(),
        degraded: Vec::new(),
        measure,
        params: *params,
    };
    for r in results.into_iter().flatten() {
        let (t, v) = r?;
        series.times.push(t);
        series.values.push(v.value);
        series.degraded.push(v.degraded);
    }
    if series.is_empty() {
        return Err(PipelineError::EmptySeries {
            measure,
            h: crate::scalar::to_f64(params.h),
            z: crate::scalar::to_f64(params.z),
        });
    }
    Ok(series)
}

/// [`surprise_series_with_timeline`] with the initiator's timeline built by
/// the kinematic predictor.
pub fn surprise_series<T: Scalar>(
    scene: &Scene<T>,
    initiator_id: &str,
    responder_id: &str,
    measure: Measure,
    params: &SeriesParams<T>,
    predictor: &PredictorConfig<T>,
) -> Result<SurpriseSeries<T>, PipelineError> {
    if scene.agent(responder_id).is_none() {
        return Err(PipelineError::UnknownAgent(responder_id.to_string()));
    }
    let timeline = build_timeline(scene, initiator_id, predictor)?;
    surprise_series_with_timeline(
        scene,
        &timeline,
        initiator_id,
        responder_id,
        measure,
        params,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell<T> {
    pub series: SurpriseSeries<T>,
    pub report: PeakReport<T>,
}

impl<T: Scalar> SweepCell<T> {
    pub fn h(&self) -> T {
        self.series.params.h
    }

    pub fn z(&self) -> T {
        self.series.params.z
    }
}

/// One series and peak report per `(h, z)`, ordered by `h` then `z` as given.
#[allow(clippy::too_many_arguments)]
pub fn parameter_sweep<T: Scalar>(
    scene: &Scene<T>,
    timeline: &BeliefTimeline<T>,
    initiator_id: &str,
    responder_id: &str,
    measure: Measure,
    h_list: &[T],
    z_list: &[T],
    params: &SeriesParams<T>,
    threshold_factor: T,
    baseline_fraction: f64,
) -> Result<Vec<SweepCell<T>>, PipelineError> {
    if h_list.is_empty() || z_list.is_empty() {
        return Err(PipelineError::InvalidParams(
            "sweep needs at least one h and one z".into(),
        ));
    }
    if !(baseline_fraction > 0.0 && baseline_fraction <= 1.0) {
        return Err(PipelineError::InvalidParams(format!(
            "baseline fraction must be in (0, 1], got {baseline_fraction}"
        )));
    }
    let cells: Vec<(T, T)> = h_list
        .iter()
        .flat_map(|&h| z_list.iter().map(move |&z| (h, z)))
        .collect();
    cells
        .into_iter()
        .map(|(h, z)| {
            let p = params.with_window(h, z)?;
            let series = surprise_series_with_timeline(
                scene,
                timeline,
                initiator_id,
                responder_id,
                measure,
                &p,
            )?;
            let report = peak_detect_with_baseline(&series, threshold_factor, baseline_fraction);
            Ok(SweepCell { series, report })
        })
        .collect()
}

/// Writes `t,value,measure,axis,h,z` rows.
pub fn write_series_csv<T: Scalar, W: Write>(
    series: &SurpriseSeries<T>,
    writer: W,
) -> Result<(), PipelineError> {
    let mut out = std::io::BufWriter::new(writer);
    writeln!(out, "{}", SERIES_HEADER.join(","))?;
    for (t, v) in series.times.iter().zip(&series.values) {
        writeln!(
            out,
            "{t:.6},{v},{},{},{},{}",
            series.measure, series.params.axis, series.params.h, series.params.z
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes one `measure,axis,h,z,peak_time,peak_value,onset_time` row per
/// cell; a missing onset is an empty field.
pub fn write_sweep_csv<T: Scalar, W: Write>(
    cells: &[SweepCell<T>],
    writer: W,
) -> Result<(), PipelineError> {
    let mut out = std::io::BufWriter::new(writer);
    writeln!(out, "{}", SWEEP_HEADER.join(","))?;
    for c in cells {
        let onset = c
            .report
            .onset_time
            .map(|t| format!("{t:.6}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{}",
            c.series.measure,
            c.series.params.axis,
            c.h(),
            c.z(),
            c.report.peak_time,
            c.report.peak_value,
            onset
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
