//! Synthetic two-agent scenes and trajectory logs.
//!
//! Every scene has a `responder` driving along world +x in the lane centred
//! on `y = 0`, and an `initiator` that performs the event:
//!
//! * `cut_in`: the initiator cruises `responder_gap` metres ahead in the lane
//!   to the right (`y = −lane_width`) and, from `t_maneuver`, shifts one lane
//!   to the left over 1.5 s along a cubic ease-in-out.
//! * `hard_brake`: the initiator leads in-lane and brakes at 7 m/s² from
//!   `t_maneuver` until stopped. The responder reacts one second later with
//!   the same deceleration.
//! * `baseline_cruise`: both agents hold their speed in their own lanes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beliefs::wrap_angle;
use crate::gmm::linalg;
use crate::predictor::AgentState;
use crate::rng::RngSeed;
use crate::scalar::{lit, to_f64, Scalar};

mod log;

pub use log::{read_trajectory_log, write_trajectory_log, LOG_HEADER};

pub const INITIATOR: &str = "initiator";
pub const RESPONDER: &str = "responder";
pub const CUT_IN_DURATION: f64 = 1.5;
pub const BRAKE_DECELERATION: f64 = 7.0;
/// Delay between the initiator's and the responder's braking onset.
pub const RESPONDER_REACTION_TIME: f64 = 1.0;
/// Timestamps closer than this are treated as identical.
pub const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("invalid geometry: responder_gap must be positive, got {0}")]
    Geometry(f64),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: timestamp for agent {agent:?} does not increase")]
    NonMonotone { line: u64, agent: String },
    #[error("trajectory log: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    CutIn,
    HardBrake,
    BaselineCruise,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::CutIn,
        ScenarioKind::HardBrake,
        ScenarioKind::BaselineCruise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::CutIn => "cut_in",
            ScenarioKind::HardBrake => "hard_brake",
            ScenarioKind::BaselineCruise => "baseline_cruise",
        }
    }

    /// Maneuver onset used when none is given.
    pub fn default_maneuver_time(self) -> f64 {
        match self {
            ScenarioKind::HardBrake => 5.5,
            _ => 5.0,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ScenarioError;

    /// Accepts `cut_in` as well as `cut-in`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| ScenarioError::InvalidConfig(format!("unknown scenario kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig<T> {
    pub kind: ScenarioKind,
    pub t_maneuver: T,
    pub initiator_speed: T,
    pub responder_gap: T,
    pub lane_width: T,
    pub dt: T,
    pub duration: T,
    pub noise_sigma: T,
    pub seed: RngSeed,
}

impl<T: Scalar> ScenarioConfig<T> {
    /// Defaults: 10 m/s, 20 m gap, 3.5 m lanes, 0.1 s steps over 12 s and
    /// 0.05 m of position noise.
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            t_maneuver: lit(kind.default_maneuver_time()),
            initiator_speed: lit(10.0),
            responder_gap: lit(20.0),
            lane_width: lit(3.5),
            dt: lit(0.1),
            duration: lit(12.0),
            noise_sigma: lit(0.05),
            seed: RngSeed::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            self.t_maneuver,
            self.initiator_speed,
            self.responder_gap,
            self.lane_width,
            self.dt,
            self.duration,
            self.noise_sigma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ScenarioError::InvalidConfig(
                "all parameters must be finite".into(),
            ));
        }
        if !(self.responder_gap > T::zero()) {
            return Err(ScenarioError::Geometry(to_f64(self.responder_gap)));
        }
        if !(self.dt > T::zero()) {
            return Err(ScenarioError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.duration >= self.dt) {
            return Err(ScenarioError::InvalidConfig(format!(
                "duration {} is shorter than dt",
                self.duration
            )));
        }
        if !(self.t_maneuver > T::zero() && self.t_maneuver < self.duration) {
            return Err(ScenarioError::InvalidConfig(format!(
                "t_maneuver must lie in (0, duration), got {}",
                self.t_maneuver
            )));
        }
        if self.initiator_speed < T::zero() {
            return Err(ScenarioError::InvalidConfig(
                "initiator_speed must be non-negative".into(),
            ));
        }
        if !(self.lane_width > T::zero()) {
            return Err(ScenarioError::InvalidConfig(
                "lane_width must be positive".into(),
            ));
        }
        if self.noise_sigma < T::zero() {
            return Err(ScenarioError::InvalidConfig(
                "noise_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Time-aligned agent trajectories sampled every `dt` seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    agents: BTreeMap<String, Vec<AgentState<T>>>,
    dt: T,
    duration: T,
}

impl<T: Scalar> Scene<T> {
    pub fn new(agents: BTreeMap<String, Vec<AgentState<T>>>, dt: T) -> Result<Self, ScenarioError> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(ScenarioError::InvalidScene(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if agents.is_empty() {
            return Err(ScenarioError::InvalidScene("no agents".into()));
        }
        let tol: T = lit(TIME_TOLERANCE);
        for (id, states) in &agents {
            if states.is_empty() {
                return Err(ScenarioError::InvalidScene(format!(
                    "agent {id:?} has no states"
                )));
            }
            let bad = states.iter().any(|s| {
                !(s.t.is_finite()
                    && s.position.iter().all(|p| p.is_finite())
                    && s.heading.is_finite()
                    && s.speed.is_finite()
                    && s.speed >= T::zero())
            });
            if bad {
                return Err(ScenarioError::InvalidScene(format!(
                    "agent {id:?} has an invalid state"
                )));
            }
            if states
                .windows(2)
                .any(|w| (w[1].t - w[0].t - dt).abs() > tol)
            {
                return Err(ScenarioError::InvalidScene(format!(
                    "agent {id:?} is not sampled every {dt} s"
                )));
            }
        }
        let start = agents.values().map(|s| s[0].t).fold(T::infinity(), T::min);
        let end = agents
            .values()
            .map(|s| s[s.len() - 1].t)
            .fold(T::neg_infinity(), T::max);
        let latest_start = agents
            .values()
            .map(|s| s[0].t)
            .fold(T::neg_infinity(), T::max);
        let earliest_end = agents
            .values()
            .map(|s| s[s.len() - 1].t)
            .fold(T::infinity(), T::min);
        if latest_start > earliest_end + tol {
            return Err(ScenarioError::InvalidScene(
                "agent time ranges do not overlap".into(),
            ));
        }
        let first = agents.values().next().expect("non-empty")[0].t;
        for (id, states) in &agents {
            let steps = (states[0].t - first) / dt;
            if (steps - steps.round()).abs() * dt > tol {
                return Err(ScenarioError::InvalidScene(format!(
                    "agent {id:?} is off the common time grid"
                )));
            }
        }
        Ok(Self {
            agents,
            dt,
            duration: end - start,
        })
    }

    pub fn agent(&self, id: &str) -> Option<&[AgentState<T>]> {
        self.agents.get(id).map(Vec::as_slice)
    }

    pub fn agents(&self) -> &BTreeMap<String, Vec<AgentState<T>>> {
        &self.agents
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &str> {
        self.agents.keys().map(String::as_str)
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    /// Rotates every trajectory by `rotation` radians about the origin, then
    /// translates it.
    pub fn rigid_transform(&self, rotation: T, translation: [T; 2]) -> Self {
        let r = linalg::rotation(rotation);
        let agents = self
            .agents
            .iter()
            .map(|(id, states)| {
                let moved = states
                    .iter()
                    .map(|s| {
                        let p = linalg::mat_vec(&r, &s.position);
                        AgentState::new(
                            s.t,
                            [p[0] + translation[0], p[1] + translation[1]],
                            wrap_angle(s.heading + rotation),
                            s.speed,
                        )
                    })
                    .collect();
                (id.clone(), moved)
            })
            .collect();
        Self {
            agents,
            dt: self.dt,
            duration: self.duration,
        }
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn smoothstep_slope(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        6.0 * u * (1.0 - u)
    }
}

/// Position along the lane and speed for a vehicle braking from `onset`.
fn braking(v: f64, onset: f64, t: f64) -> (f64, f64) {
    if t <= onset {
        return (v * t, v);
    }
    let s = (t - onset).min(v / BRAKE_DECELERATION);
    (
        v * onset + v * s - 0.5 * BRAKE_DECELERATION * s * s,
        v - BRAKE_DECELERATION * s,
    )
}

/// Noise-free state of one agent at time `t`, computed in f64.
fn kinematics(cfg: &ScenarioConfig<f64>, agent: &str, t: f64) -> AgentState<f64> {
    let v = cfg.initiator_speed;
    let responder = agent == RESPONDER;
    match cfg.kind {
        ScenarioKind::CutIn if !responder => {
            let u = (t - cfg.t_maneuver) / CUT_IN_DURATION;
            let y = -cfg.lane_width + cfg.lane_width * smoothstep(u);
            let vy = cfg.lane_width * smoothstep_slope(u) / CUT_IN_DURATION;
            AgentState::new(t, [cfg.responder_gap + v * t, y], vy.atan2(v), v.hypot(vy))
        }
        ScenarioKind::HardBrake => {
            let (onset, offset) = if responder {
                (cfg.t_maneuver + RESPONDER_REACTION_TIME, 0.0)
            } else {
                (cfg.t_maneuver, cfg.responder_gap)
            };
            let (x, speed) = braking(v, onset, t);
            AgentState::new(t, [offset + x, 0.0], 0.0, speed)
        }
        ScenarioKind::BaselineCruise if !responder => {
            AgentState::new(t, [cfg.responder_gap + v * t, -cfg.lane_width], 0.0, v)
        }
        _ => AgentState::new(t, [v * t, 0.0], 0.0, v),
    }
}

/// Builds the scene described by `config`. Position noise is drawn per agent
/// (sorted by id) and per step, x before y.
pub fn generate<T: Scalar>(config: &ScenarioConfig<T>) -> Result<Scene<T>, ScenarioError> {
    config.validate()?;
    let cfg = ScenarioConfig {
        kind: config.kind,
        t_maneuver: to_f64(config.t_maneuver),
        initiator_speed: to_f64(config.initiator_speed),
        responder_gap: to_f64(config.responder_gap),
        lane_width: to_f64(config.lane_width),
        dt: to_f64(config.dt),
        duration: to_f64(config.duration),
        noise_sigma: to_f64(config.noise_sigma),
        seed: config.seed,
    };
    let ratio = cfg.duration / cfg.dt;
    // a duration meant as a whole number of steps may miss it by rounding
    let steps = if (ratio - ratio.round()).abs() < 1e-3 {
        ratio.round()
    } else {
        ratio.floor()
    } as usize;
    let mut rng = cfg.seed.rng();
    let mut agents = BTreeMap::new();
    for id in [INITIATOR, RESPONDER] {
        let states = (0..=steps)
            .map(|k| {
                let s = kinematics(&cfg, id, k as f64 * cfg.dt);
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                AgentState::new(
                    lit(s.t),
                    [
                        lit(s.position[0] + cfg.noise_sigma * nx),
                        lit(s.position[1] + cfg.noise_sigma * ny),
                    ],
                    lit(s.heading),
                    lit(s.speed),
                )
            })
            .collect();
        agents.insert(id.to_string(), states);
    }
    Scene::new(agents, config.dt)
}
