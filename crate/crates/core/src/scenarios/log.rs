//! Trajectory log text format: a comma-separated table with header
//! `t,agent_id,x,y,heading,speed`, one row per agent and timestamp.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{ScenarioError, Scene, TIME_TOLERANCE};
use crate::beliefs::wrap_angle;
use crate::predictor::AgentState;
use crate::scalar::{lit, to_f64, Scalar};

pub const LOG_HEADER: [&str; 6] = ["t", "agent_id", "x", "y", "heading", "speed"];

/// Writes rows sorted by time, then agent id. Times are printed with nine
/// decimals; every other number in shortest round-trip form.
pub fn write_trajectory_log<T: Scalar, W: Write>(
    scene: &Scene<T>,
    writer: W,
) -> Result<(), ScenarioError> {
    let mut rows: Vec<(f64, &str, &AgentState<T>)> = scene
        .agents()
        .iter()
        .flat_map(|(id, states)| states.iter().map(move |s| (to_f64(s.t), id.as_str(), s)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(LOG_HEADER)?;
    for (t, id, s) in rows {
        out.write_record([
            format!("{t:.9}"),
            id.to_string(),
            s.position[0].to_string(),
            s.position[1].to_string(),
            s.heading.to_string(),
            s.speed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

struct Row {
    line: u64,
    state: AgentState<f64>,
}

fn parse_field(record: &csv::StringRecord, index: usize, line: u64) -> Result<f64, ScenarioError> {
    let raw = record[index].trim();
    let value: f64 = raw.parse().map_err(|_| ScenarioError::Malformed {
        line,
        message: format!("column {:?} is not a number: {raw:?}", LOG_HEADER[index]),
    })?;
    if !value.is_finite() {
        return Err(ScenarioError::Malformed {
            line,
            message: format!("column {:?} is not finite", LOG_HEADER[index]),
        });
    }
    Ok(value)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn interpolate(a: &AgentState<f64>, b: &AgentState<f64>, t: f64) -> AgentState<f64> {
    let u = (t - a.t) / (b.t - a.t);
    let mix = |x: f64, y: f64| x + u * (y - x);
    AgentState::new(
        t,
        [
            mix(a.position[0], b.position[0]),
            mix(a.position[1], b.position[1]),
        ],
        wrap_angle(a.heading + u * wrap_angle(b.heading - a.heading)),
        mix(a.speed, b.speed),
    )
}

/// Resamples `rows` onto `origin + k·dt`, keeping rows that sit within
/// 1e-6 s of a grid time and interpolating linearly between neighbours
/// otherwise (headings along the shorter arc).
fn resample(rows: &[Row], origin: f64, dt: f64) -> Vec<AgentState<f64>> {
    let first = rows[0].state.t;
    let last = rows[rows.len() - 1].state.t;
    let k0 = ((first - origin) / dt - TIME_TOLERANCE / dt)
        .ceil()
        .max(0.0) as usize;
    let k1 = ((last - origin) / dt + TIME_TOLERANCE / dt).floor() as usize;
    let mut out = Vec::with_capacity(k1.saturating_sub(k0) + 1);
    let mut j = 0;
    for k in k0..=k1 {
        let t = origin + k as f64 * dt;
        while j + 1 < rows.len() && rows[j + 1].state.t <= t + TIME_TOLERANCE {
            j += 1;
        }
        let here = &rows[j].state;
        let state = if (here.t - t).abs() <= TIME_TOLERANCE || j + 1 == rows.len() {
            AgentState { t, ..*here }
        } else {
            interpolate(here, &rows[j + 1].state, t)
        };
        out.push(state);
    }
    out
}

/// Parses a trajectory log. The sampling interval is the median spacing of
/// consecutive rows per agent, refined so the longest track spans a whole
/// number of steps; the grid starts at the earliest timestamp.
pub fn read_trajectory_log<T: Scalar, R: Read>(reader: R) -> Result<Scene<T>, ScenarioError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv_reader.records();
    let header = records.next().ok_or(ScenarioError::Malformed {
        line: 1,
        message: "empty document".into(),
    })??;
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != LOG_HEADER {
        return Err(ScenarioError::Malformed {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                LOG_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut by_agent: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != LOG_HEADER.len() {
            return Err(ScenarioError::Malformed {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    LOG_HEADER.len(),
                    record.len()
                ),
            });
        }
        let agent = record[1].trim().to_string();
        if agent.is_empty() {
            return Err(ScenarioError::Malformed {
                line,
                message: "empty agent_id".into(),
            });
        }
        let state = AgentState::new(
            parse_field(&record, 0, line)?,
            [
                parse_field(&record, 2, line)?,
                parse_field(&record, 3, line)?,
            ],
            parse_field(&record, 4, line)?,
            parse_field(&record, 5, line)?,
        );
        if state.speed < 0.0 {
            return Err(ScenarioError::Malformed {
                line,
                message: "negative speed".into(),
            });
        }
        let rows = by_agent.entry(agent.clone()).or_default();
        if rows.last().is_some_and(|prev| state.t <= prev.state.t) {
            return Err(ScenarioError::NonMonotone { line, agent });
        }
        rows.push(Row { line, state });
    }
    if by_agent.is_empty() {
        return Err(ScenarioError::Malformed {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let gaps: Vec<f64> = by_agent
        .values()
        .flat_map(|rows| rows.windows(2).map(|w| w[1].state.t - w[0].state.t))
        .collect();
    if gaps.is_empty() {
        let line = by_agent.values().next().map_or(2, |r| r[0].line);
        return Err(ScenarioError::Malformed {
            line,
            message: "need at least two rows for one agent".into(),
        });
    }
    let rough = median(gaps);
    // refine on the longest track so the grid does not drift over many steps
    let span = by_agent
        .values()
        .map(|r| r[r.len() - 1].state.t - r[0].state.t)
        .fold(0.0, f64::max);
    let dt = span / (span / rough).round().max(1.0);
    let origin = by_agent
        .values()
        .map(|r| r[0].state.t)
        .fold(f64::INFINITY, f64::min);
    let agents = by_agent
        .iter()
        .map(|(id, rows)| {
            let states = resample(rows, origin, dt)
                .into_iter()
                .map(|s| {
                    AgentState::new(
                        lit(s.t),
                        [lit(s.position[0]), lit(s.position[1])],
                        lit(s.heading),
                        lit(s.speed),
                    )
                })
                .collect::<Vec<_>>();
            if states.is_empty() {
                return Err(ScenarioError::Malformed {
                    line: rows[0].line,
                    message: format!("agent {id:?} has no samples on the {dt} s grid"),
                });
            }
            Ok((id.clone(), states))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    Scene::new(agents, lit(dt))
}
