use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use surprise_core::{Axis, Measure, ScenarioKind};

#[derive(Debug, Parser)]
#[command(
    name = "surprise",
    version,
    about = "Surprise measures for agent behaviour in traffic scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene and write it as a trajectory log
    Scenario(ScenarioArgs),
    /// Compute a surprise time series from a trajectory log
    Surprise(SurpriseArgs),
    /// Sweep history window and lookahead, writing one peak summary row per pair
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(alias = "cut_in")]
    CutIn,
    #[value(alias = "hard_brake")]
    HardBrake,
    #[value(alias = "baseline_cruise")]
    BaselineCruise,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::CutIn => ScenarioKind::CutIn,
            KindArg::HardBrake => ScenarioKind::HardBrake,
            KindArg::BaselineCruise => ScenarioKind::BaselineCruise,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Surprisal,
    S8,
    #[value(alias = "residual", alias = "residual_information")]
    ResidualInformation,
    #[value(alias = "kl", alias = "bayesian-surprise", alias = "bayesian_surprise")]
    Bayesian,
    Antithesis,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Surprisal => Measure::Surprisal,
            MeasureArg::S8 => Measure::S8,
            MeasureArg::ResidualInformation => Measure::ResidualInformation,
            MeasureArg::Bayesian => Measure::Bayesian,
            MeasureArg::Antithesis => Measure::Antithesis,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Lateral,
    Longitudinal,
    Planar,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Lateral => Axis::Lateral,
            AxisArg::Longitudinal => Axis::Longitudinal,
            AxisArg::Planar => Axis::Planar,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scene archetype [required here or in the config file]
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Output trajectory log [required here or in the config file]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maneuver onset in seconds [default: 5 for cut-in and cruise, 5.5 for hard-brake]
    #[arg(long)]
    pub t_maneuver: Option<f64>,
    /// Speed of both vehicles in m/s [default: 10]
    #[arg(long)]
    pub initiator_speed: Option<f64>,
    /// Initial distance of the initiator ahead of the responder in m [default: 20]
    #[arg(long)]
    pub responder_gap: Option<f64>,
    /// Lane width in m [default: 3.5]
    #[arg(long)]
    pub lane_width: Option<f64>,
    /// Sampling interval in s [default: 0.1]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Scene length in s [default: 12]
    #[arg(long)]
    pub duration: Option<f64>,
    /// Standard deviation of position noise in m [default: 0.05]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Noise seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file whose keys mirror these flags; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Flags shared by `surprise` and `sweep`.
#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Trajectory log to analyse [required here or in the config file]
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Surprise measure [required here or in the config file]
    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,
    /// Agent whose behaviour is scored [default: initiator]
    #[arg(long)]
    pub initiator: Option<String>,
    /// Agent whose body frame is used [default: responder]
    #[arg(long)]
    pub responder: Option<String>,
    /// Body-frame axis [default: lateral]
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    /// Bin size ε in m for surprisal and S8 [default: 0.1]
    #[arg(long)]
    pub bin_size: Option<f64>,
    /// Monte Carlo samples for Bayesian surprise and antithesis [default: 4096]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte Carlo seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Onset threshold as a multiple of the baseline median [default: 5]
    #[arg(long)]
    pub threshold_factor: Option<f64>,
    /// Leading fraction of the series used as baseline [default: 0.4]
    #[arg(long)]
    pub baseline_fraction: Option<f64>,
    /// Prediction exchange file (JSON) to use instead of the built-in predictor
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Predictor hypotheses, comma separated [default: all five]
    #[arg(long, value_delimiter = ',')]
    pub hypotheses: Option<Vec<String>>,
    /// Predictor position σ at horizon 0 in m [default: 0.3]
    #[arg(long)]
    pub base_sigma: Option<f64>,
    /// Predictor σ growth per second of horizon in m/s [default: 0.3]
    #[arg(long)]
    pub growth_rate: Option<f64>,
    /// Predictor hypothesis weight temperature [default: 0.05]
    #[arg(long)]
    pub weight_temperature: Option<f64>,
    /// Predictor horizon spacing in s [default: 0.1]
    #[arg(long)]
    pub horizon_step: Option<f64>,
    /// Number of predictor horizons [default: 50]
    #[arg(long)]
    pub horizon_count: Option<usize>,
    /// Output table [required here or in the config file]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file whose keys mirror these flags; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurpriseArgs {
    /// History window h in s [default: 2; 1 for surprisal, s8 and residual-information]
    #[arg(long)]
    pub h: Option<f64>,
    /// Lookahead z in s [default: 0.2]
    #[arg(long)]
    pub z: Option<f64>,
    #[command(flatten)]
    pub common: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// History windows in s, comma separated [required here or in the config file]
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    /// Lookaheads in s, comma separated [default: 0.2]
    #[arg(long, value_delimiter = ',')]
    pub z: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: AnalysisArgs,
}
