//! Surprise measures over Gaussian-mixture beliefs about where other road
//! users will be.
//!
//! * [`gmm`]: 1D/2D Gaussian mixtures (density, sampling, mode search).
//! * [`measures`]: surprisal, S8, residual information, Bayesian surprise and
//!   antithesis.
//! * [`beliefs`]: prediction timelines, `(h, z)` alignment, body-frame
//!   decomposition and the prediction exchange file.
//! * [`predictor`]: a kinematic multi-hypothesis trajectory predictor.
//! * [`scenarios`]: synthetic cut-in / hard-brake / cruise scenes and the
//!   trajectory log format.
//! * [`pipeline`]: surprise time series, peak reports and parameter sweeps.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiations.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beliefs;
pub mod gmm;
pub mod measures;
pub mod pipeline;
pub mod predictor;
pub mod rng;
pub mod scalar;
pub mod scenarios;

pub use beliefs::{AlignmentError, BeliefTimeline, ObserverPose, TrajectoryPrediction};
pub use gmm::{analytic_kl_gaussian, GaussianComponent, Gmm, GmmError, Mode, MonteCarloEstimate};
pub use measures::{Measure, MeasureError, MeasureParams, SurpriseValue};
pub use pipeline::{
    build_timeline, parameter_sweep, peak_detect, peak_detect_with_baseline, surprise_series,
    surprise_series_with_timeline, Axis, PeakReport, PipelineError, SeriesParams, SurpriseSeries,
    SweepCell,
};
pub use predictor::{
    backcast_fit_error, predict, AgentState, Hypothesis, PredictError, PredictorConfig,
};
pub use rng::RngSeed;
pub use scalar::Scalar;
pub use scenarios::{
    generate, read_trajectory_log, write_trajectory_log, ScenarioConfig, ScenarioError,
    ScenarioKind, Scene,
};

pub type Gmm1 = Gmm<f64, 1>;
pub type Gmm2 = Gmm<f64, 2>;
pub type Gmm1f32 = Gmm<f32, 1>;
pub type Gmm2f32 = Gmm<f32, 2>;
pub type Component1 = GaussianComponent<f64, 1>;
pub type Component2 = GaussianComponent<f64, 2>;
pub type Timeline = BeliefTimeline<f64>;
pub type Prediction = TrajectoryPrediction<f64>;
pub type State = AgentState<f64>;
pub type SceneF64 = Scene<f64>;
pub type Series = SurpriseSeries<f64>;
