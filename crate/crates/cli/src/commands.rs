use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use surprise_core::beliefs::read_timeline;
use surprise_core::pipeline::{
    write_series_csv, write_sweep_csv, BASELINE_FRACTION, DEFAULT_THRESHOLD_FACTOR,
};
use surprise_core::scenarios::{INITIATOR, RESPONDER};
use surprise_core::{
    build_timeline, generate, parameter_sweep, peak_detect_with_baseline, read_trajectory_log,
    surprise_series_with_timeline, write_trajectory_log, Axis, BeliefTimeline, Hypothesis, Measure,
    MeasureParams, PipelineError, PredictorConfig, RngSeed, ScenarioConfig, ScenarioKind, Scene,
    SeriesParams,
};

use crate::args::{AnalysisArgs, ScenarioArgs, SurpriseArgs, SweepArgs};
use crate::config::RunConfig;

pub const DEFAULT_H_BELIEF: f64 = 2.0;
pub const DEFAULT_H_PROBABILISTIC: f64 = 1.0;
pub const DEFAULT_Z: f64 = 0.2;
pub const DEFAULT_BIN_SIZE: f64 = 0.1;
pub const DEFAULT_SAMPLES: usize = 4096;

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| {
        anyhow!("missing --{name} (give the flag or set `{name}` in the config file)")
    })
}

fn parse_named<T: FromStr>(value: Option<String>, what: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .map(|v| T::from_str(&v).map_err(|e| anyhow!("{what}: {e}")))
        .transpose()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(mut writer: BufWriter<File>, path: &Path) -> Result<()> {
    writer
        .flush()
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn scenario(args: ScenarioArgs) -> Result<()> {
    let file = RunConfig::load(args.config.as_deref())?;
    let kind: ScenarioKind = match args.kind {
        Some(k) => k.into(),
        None => required(None, parse_named(file.kind.clone(), "kind")?, "kind")?,
    };
    let out = required(args.out, file.out.clone(), "out")?;
    let defaults = ScenarioConfig::<f64>::new(kind);
    let config = ScenarioConfig {
        kind,
        t_maneuver: args
            .t_maneuver
            .or(file.t_maneuver)
            .unwrap_or(defaults.t_maneuver),
        initiator_speed: args
            .initiator_speed
            .or(file.initiator_speed)
            .unwrap_or(defaults.initiator_speed),
        responder_gap: args
            .responder_gap
            .or(file.responder_gap)
            .unwrap_or(defaults.responder_gap),
        lane_width: args
            .lane_width
            .or(file.lane_width)
            .unwrap_or(defaults.lane_width),
        dt: args.dt.or(file.dt).unwrap_or(defaults.dt),
        duration: args.duration.or(file.duration).unwrap_or(defaults.duration),
        noise_sigma: args
            .noise_sigma
            .or(file.noise_sigma)
            .unwrap_or(defaults.noise_sigma),
        seed: RngSeed(args.seed.or(file.seed).unwrap_or(0)),
    };
    let scene = generate(&config)?;
    let mut writer = create(&out)?;
    write_trajectory_log(&scene, &mut writer)?;
    finish(writer, &out)
}

/// Settings shared by `surprise` and `sweep` after merging flags and file.
struct Analysis {
    scene: Scene<f64>,
    timeline: BeliefTimeline<f64>,
    measure: Measure,
    initiator: String,
    responder: String,
    axis: Axis,
    measure_params: MeasureParams<f64>,
    threshold_factor: f64,
    baseline_fraction: f64,
    out: PathBuf,
}

fn predictor_config(args: &AnalysisArgs, file: &RunConfig) -> Result<PredictorConfig<f64>> {
    let defaults = PredictorConfig::<f64>::default();
    let hypotheses = match args.hypotheses.clone().or_else(|| file.hypotheses.clone()) {
        Some(names) => names
            .iter()
            .map(|n| Hypothesis::from_str(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => defaults.hypotheses().to_vec(),
    };
    let step = args.horizon_step.or(file.horizon_step).unwrap_or(0.1);
    let count = args
        .horizon_count
        .or(file.horizon_count)
        .unwrap_or(defaults.horizon_grid().len());
    if !(step > 0.0 && step.is_finite()) || count == 0 {
        bail!("horizon-step must be positive and horizon-count at least 1");
    }
    Ok(PredictorConfig::new(
        hypotheses,
        PredictorConfig::uniform_grid(step, count),
        args.base_sigma
            .or(file.base_sigma)
            .unwrap_or(defaults.base_sigma()),
        args.growth_rate
            .or(file.growth_rate)
            .unwrap_or(defaults.growth_rate()),
        args.weight_temperature
            .or(file.weight_temperature)
            .unwrap_or(defaults.weight_temperature()),
    )?)
}

fn analysis(args: AnalysisArgs, file: &RunConfig) -> Result<Analysis> {
    let measure: Measure = match args.measure {
        Some(m) => m.into(),
        None => required(
            None,
            parse_named(file.measure.clone(), "measure")?,
            "measure",
        )?,
    };
    let axis: Axis = match args.axis {
        Some(a) => a.into(),
        None => parse_named(file.axis.clone(), "axis")?.unwrap_or_default(),
    };
    let measure_params = MeasureParams::new(
        args.bin_size.or(file.bin_size).unwrap_or(DEFAULT_BIN_SIZE),
        args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
        RngSeed(args.seed.or(file.seed).unwrap_or(0)),
    )?;
    let threshold_factor = args
        .threshold_factor
        .or(file.threshold_factor)
        .unwrap_or(DEFAULT_THRESHOLD_FACTOR);
    if !(threshold_factor > 0.0 && threshold_factor.is_finite()) {
        bail!("threshold-factor must be positive, got {threshold_factor}");
    }
    let baseline_fraction = args
        .baseline_fraction
        .or(file.baseline_fraction)
        .unwrap_or(BASELINE_FRACTION);
    if !(baseline_fraction > 0.0 && baseline_fraction <= 1.0) {
        bail!("baseline-fraction must be in (0, 1], got {baseline_fraction}");
    }
    let predictor = predictor_config(&args, file)?;
    let out = required(args.out.clone(), file.out.clone(), "out")?;
    let log = required(args.log.clone(), file.log.clone(), "log")?;
    let initiator = args
        .initiator
        .clone()
        .or_else(|| file.initiator.clone())
        .unwrap_or_else(|| INITIATOR.into());
    let responder = args
        .responder
        .clone()
        .or_else(|| file.responder.clone())
        .unwrap_or_else(|| RESPONDER.into());

    let reader = File::open(&log).with_context(|| format!("cannot open {}", log.display()))?;
    let scene: Scene<f64> = read_trajectory_log(BufReader::new(reader))
        .with_context(|| format!("cannot parse {}", log.display()))?;
    for id in [&initiator, &responder] {
        if scene.agent(id).is_none() {
            return Err(PipelineError::UnknownAgent(id.clone()).into());
        }
    }
    let predictions = args
        .predictions
        .clone()
        .or_else(|| file.predictions.clone());
    let timeline = match predictions {
        Some(path) => {
            let reader =
                File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
            read_timeline(BufReader::new(reader))
                .with_context(|| format!("cannot parse {}", path.display()))?
        }
        None => build_timeline(&scene, &initiator, &predictor)?,
    };
    Ok(Analysis {
        scene,
        timeline,
        measure,
        initiator,
        responder,
        axis,
        measure_params,
        threshold_factor,
        baseline_fraction,
        out,
    })
}

pub fn surprise(args: SurpriseArgs) -> Result<()> {
    let file = RunConfig::load(args.common.config.as_deref())?;
    let h_file = match file.h.clone().map(|h| h.into_vec()) {
        Some(v) if v.len() == 1 => Some(v[0]),
        Some(_) => bail!("`h` in the config file must be a single number for this command"),
        None => None,
    };
    let z_file = match file.z.clone().map(|z| z.into_vec()) {
        Some(v) if v.len() == 1 => Some(v[0]),
        Some(_) => bail!("`z` in the config file must be a single number for this command"),
        None => None,
    };
    let a = analysis(args.common, &file)?;
    let default_h = if a.measure.is_belief_mismatch() {
        DEFAULT_H_BELIEF
    } else {
        DEFAULT_H_PROBABILISTIC
    };
    let params = SeriesParams::new(
        args.h.or(h_file).unwrap_or(default_h),
        args.z.or(z_file).unwrap_or(DEFAULT_Z),
        a.axis,
        a.measure_params,
    )?;
    let series = surprise_series_with_timeline(
        &a.scene,
        &a.timeline,
        &a.initiator,
        &a.responder,
        a.measure,
        &params,
    )?;
    let mut writer = create(&a.out)?;
    write_series_csv(&series, &mut writer)?;
    finish(writer, &a.out)?;
    let report = peak_detect_with_baseline(&series, a.threshold_factor, a.baseline_fraction);
    let onset = report
        .onset_time
        .map_or_else(|| "none".to_string(), |t| format!("{t:.6}"));
    eprintln!(
        "{} {}: {} values, peak {} at t = {:.6}, onset {}",
        a.measure,
        a.axis,
        series.len(),
        report.peak_value,
        report.peak_time,
        onset
    );
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let file = RunConfig::load(args.common.config.as_deref())?;
    let h_list = required(args.h, file.h.clone().map(|h| h.into_vec()), "h")?;
    let z_list = args
        .z
        .or_else(|| file.z.clone().map(|z| z.into_vec()))
        .unwrap_or_else(|| vec![DEFAULT_Z]);
    if h_list.is_empty() || z_list.is_empty() {
        bail!("--h and --z need at least one value each");
    }
    let a = analysis(args.common, &file)?;
    let params = SeriesParams::new(h_list[0], z_list[0], a.axis, a.measure_params)?;
    let cells = parameter_sweep(
        &a.scene,
        &a.timeline,
        &a.initiator,
        &a.responder,
        a.measure,
        &h_list,
        &z_list,
        &params,
        a.threshold_factor,
        a.baseline_fraction,
    )?;
    let mut writer = create(&a.out)?;
    write_sweep_csv(&cells, &mut writer)?;
    finish(writer, &a.out)
}
