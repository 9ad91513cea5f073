use proptest::prelude::*;

use super::*;
use crate::gmm::linalg::trace;

fn straight_history(speed: f64, heading: f64, n: usize, dt: f64) -> Vec<AgentState<f64>> {
    let (s, c) = heading.sin_cos();
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            AgentState::new(t, [c * speed * t, s * speed * t], heading, speed)
        })
        .collect()
}

fn decelerating_history(v0: f64, a: f64, n: usize, dt: f64) -> Vec<AgentState<f64>> {
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            AgentState::new(t, [v0 * t - 0.5 * a * t * t, 0.0], 0.0, v0 - a * t)
        })
        .collect()
}

fn only(h: Hypothesis) -> PredictorConfig<f64> {
    PredictorConfig::new(vec![h], vec![0.5, 1.0, 2.0], 0.3, 0.3, 0.1).unwrap()
}

#[test]
fn constant_velocity_mean_after_two_seconds() {
    let history = vec![
        AgentState::new(-0.1, [-0.1, 0.0], 0.0, 1.0),
        AgentState::new(0.0, [0.0, 0.0], 0.0, 1.0),
    ];
    let p = predict("a", &history, &only(Hypothesis::ConstantVelocity)).unwrap();
    let h = p.horizon(2.0, 1e-9).unwrap();
    assert_eq!(h.belief.components().len(), 1);
    let m = h.belief.components()[0].mean();
    assert!((m[0] - 2.0).abs() < 1e-12 && m[1].abs() < 1e-12, "{m:?}");
    assert_eq!(h.belief.components()[0].weight(), 1.0);
}

#[test]
fn trace_grows_along_horizon_grid() {
    let history = straight_history(10.0, 0.3, 20, 0.1);
    let p = predict("a", &history, &PredictorConfig::default()).unwrap();
    let traces: Vec<f64> = p
        .horizons()
        .iter()
        .map(|h| trace(&h.belief.covariance()))
        .collect();
    assert!(traces.windows(2).all(|w| w[1] > w[0]));
    // per-component covariance grows too
    for k in 0..5 {
        let tr: Vec<f64> = p
            .horizons()
            .iter()
            .map(|h| trace(h.belief.components()[k].covariance()))
            .collect();
        assert!(tr.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn weights_sum_to_one_per_horizon() {
    let history = decelerating_history(12.0, 2.0, 25, 0.1);
    let p = predict("a", &history, &PredictorConfig::default()).unwrap();
    for h in p.horizons() {
        let s: f64 = h.belief.components().iter().map(|c| c.weight()).sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(h.belief.components().len(), 5);
    }
}

#[test]
fn covariance_is_aligned_with_travel_direction() {
    let heading = 0.7;
    let history = straight_history(5.0, heading, 3, 0.1);
    let cfg =
        PredictorConfig::new(vec![Hypothesis::ConstantVelocity], vec![1.0], 0.2, 0.4, 0.1).unwrap();
    let p = predict("a", &history, &cfg).unwrap();
    let c = &p.horizons()[0].belief.components()[0];
    let sigma = 0.6;
    let dir = [heading.cos(), heading.sin()];
    let normal = [-heading.sin(), heading.cos()];
    let quad = |u: [f64; 2]| {
        let s = c.covariance();
        u[0] * (s[0][0] * u[0] + s[0][1] * u[1]) + u[1] * (s[1][0] * u[0] + s[1][1] * u[1])
    };
    assert!((quad(dir) - sigma * sigma).abs() < 1e-12);
    assert!((quad(normal) - 0.25 * sigma * sigma).abs() < 1e-12);
}

#[test]
fn hypothesis_rollouts() {
    let history = straight_history(10.0, 0.0, 12, 0.1);
    let t0 = history.last().unwrap().t;
    let x0 = history.last().unwrap().position[0];
    let mean_at = |h: Hypothesis, dt: f64| {
        let cfg = PredictorConfig::new(vec![h], vec![dt], 0.3, 0.3, 0.1).unwrap();
        let p = predict("a", &history, &cfg).unwrap();
        assert_eq!(p.generated_at(), t0);
        let m = p.horizons()[0].belief.components()[0].mean();
        [m[0] - x0, m[1]]
    };
    // hard stop: 10 m/s at 6 m/s² stops after 100/12 m
    let stop = mean_at(Hypothesis::HardStop, 1.0);
    assert!((stop[0] - 7.0).abs() < 1e-12);
    let stopped = mean_at(Hypothesis::HardStop, 4.0);
    assert!((stopped[0] - 100.0 / 12.0).abs() < 1e-12);
    let left = mean_at(Hypothesis::ManeuverLeft, 1.5);
    assert!((left[0] - 15.0).abs() < 1e-12 && (left[1] - 1.75).abs() < 1e-12);
    let right = mean_at(Hypothesis::ManeuverRight, 4.0);
    assert!((right[0] - 40.0).abs() < 1e-12 && (right[1] + 3.5).abs() < 1e-12);
    let ca = mean_at(Hypothesis::ConstantAcceleration, 2.0);
    assert!((ca[0] - 20.0).abs() < 1e-9);
}

#[test]
fn constant_acceleration_uses_speed_difference() {
    let history = decelerating_history(12.0, 2.0, 11, 0.1);
    let cfg = PredictorConfig::new(
        vec![Hypothesis::ConstantAcceleration],
        vec![2.0, 10.0],
        0.3,
        0.3,
        0.1,
    )
    .unwrap();
    let p = predict("a", &history, &cfg).unwrap();
    let last = history.last().unwrap();
    let v = last.speed;
    let m = p.horizons()[0].belief.components()[0].mean();
    assert!((m[0] - last.position[0] - (v * 2.0 - 4.0)).abs() < 1e-9);
    // never reverses: stops after v²/(2a)
    let m = p.horizons()[1].belief.components()[0].mean();
    assert!((m[0] - last.position[0] - v * v / 4.0).abs() < 1e-9);
}

#[test]
fn maneuver_heading_follows_lateral_velocity() {
    let history = straight_history(10.0, 0.0, 3, 0.1);
    let cfg =
        PredictorConfig::new(vec![Hypothesis::ManeuverLeft], vec![1.5], 0.3, 0.3, 0.1).unwrap();
    let p = predict("a", &history, &cfg).unwrap();
    let c = &p.horizons()[0].belief.components()[0];
    // lateral rate at mid-ramp is 1.5·3.5/3 m/s
    let heading = (1.75_f64).atan2(10.0);
    let s = c.covariance();
    let angle = 0.5 * (2.0 * s[0][1]).atan2(s[0][0] - s[1][1]);
    assert!((angle - heading).abs() < 1e-9, "{angle} vs {heading}");
}

#[test]
fn backcast_examples() {
    let history = straight_history(8.0, 0.4, 15, 0.1);
    let cv = backcast_fit_error(&history, Hypothesis::ConstantVelocity).unwrap();
    assert!(cv.abs() < 1e-12, "{cv}");
    let stop = backcast_fit_error(&history, Hypothesis::HardStop).unwrap();
    assert!(stop > 0.0);

    let braking = decelerating_history(15.0, 4.0, 20, 0.1);
    let ca = backcast_fit_error(&braking, Hypothesis::ConstantAcceleration).unwrap();
    let cv = backcast_fit_error(&braking, Hypothesis::ConstantVelocity).unwrap();
    assert!(ca < cv, "ca {ca} cv {cv}");
}

#[test]
fn backcast_oracle_value() {
    // hard stop backward from a steady 8 m/s: the model puts the agent 3τ² further back
    let history = straight_history(8.0, 0.0, 11, 0.1);
    let expected: f64 = (1..=10)
        .map(|k| 3.0 * (k as f64 * 0.1).powi(2))
        .sum::<f64>()
        / 10.0;
    let got = backcast_fit_error(&history, Hypothesis::HardStop).unwrap();
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
}

#[test]
fn backcast_needs_one_second() {
    let history = straight_history(8.0, 0.0, 10, 0.1);
    assert!(matches!(
        backcast_fit_error(&history, Hypothesis::ConstantVelocity),
        Err(PredictError::InsufficientHistory(_))
    ));
    assert!(matches!(
        predict("a", &history, &PredictorConfig::default()),
        Err(PredictError::InsufficientHistory(_))
    ));
    // a lone hypothesis needs no backcast
    assert!(predict("a", &history, &only(Hypothesis::ConstantVelocity)).is_ok());
}

#[test]
fn decelerating_history_favours_braking_models() {
    let history = decelerating_history(15.0, 4.0, 20, 0.1);
    let p = predict("a", &history, &PredictorConfig::default()).unwrap();
    let w = |h: Hypothesis| {
        let i = PredictorConfig::<f64>::default()
            .hypotheses()
            .iter()
            .position(|&x| x == h)
            .unwrap();
        p.horizons()[0].belief.components()[i].weight()
    };
    assert!(w(Hypothesis::ConstantAcceleration) > w(Hypothesis::ConstantVelocity));
}

#[test]
fn rejects_bad_inputs() {
    let h = [AgentState::new(0.0, [0.0, 0.0], 0.0, 1.0)];
    assert!(matches!(
        predict("a", &h, &only(Hypothesis::ConstantVelocity)),
        Err(PredictError::InsufficientHistory(_))
    ));
    let h2 = straight_history(1.0, 0.0, 2, 0.1);
    assert!(matches!(
        predict("a", &h2, &only(Hypothesis::ConstantAcceleration)),
        Err(PredictError::InsufficientHistory(_))
    ));
    let mut bad = straight_history(1.0, 0.0, 3, 0.1);
    bad[1].speed = -1.0;
    assert_eq!(
        predict("a", &bad, &only(Hypothesis::ConstantVelocity)),
        Err(PredictError::InvalidState(1))
    );
    let mut back = straight_history(1.0, 0.0, 3, 0.1);
    back[2].t = 0.1;
    assert_eq!(
        predict("a", &back, &only(Hypothesis::ConstantVelocity)),
        Err(PredictError::NotChronological(2))
    );

    assert_eq!(
        PredictorConfig::<f64>::new(vec![], vec![1.0], 0.3, 0.3, 0.1),
        Err(PredictError::NoHypotheses)
    );
    let cv = vec![Hypothesis::ConstantVelocity];
    assert!(PredictorConfig::<f64>::new(cv.clone(), vec![1.0, 1.0], 0.3, 0.3, 0.1).is_err());
    assert!(PredictorConfig::<f64>::new(cv.clone(), vec![1.0], 0.0, 0.3, 0.1).is_err());
    assert!(PredictorConfig::<f64>::new(cv.clone(), vec![1.0], 0.3, -0.1, 0.1).is_err());
    assert!(PredictorConfig::<f64>::new(cv.clone(), vec![1.0], 0.3, 0.3, 0.0).is_err());
    assert!(PredictorConfig::<f64>::new(cv, vec![], 0.3, 0.3, 0.1).is_err());
}

#[test]
fn hypothesis_names_round_trip() {
    for h in Hypothesis::ALL {
        assert_eq!(h.name().parse::<Hypothesis>().unwrap(), h);
    }
    assert_eq!(
        "hard-stop".parse::<Hypothesis>().unwrap(),
        Hypothesis::HardStop
    );
    assert!("teleport".parse::<Hypothesis>().is_err());
}

#[test]
fn single_precision_prediction() {
    let history: Vec<AgentState<f32>> = (0..12)
        .map(|k| AgentState::new(k as f32 * 0.1, [k as f32, 0.0], 0.0, 10.0))
        .collect();
    let p = predict("a", &history, &PredictorConfig::<f32>::default()).unwrap();
    assert_eq!(p.horizons().len(), 50);
}

fn wiggly_history(seed: &[f64]) -> Vec<AgentState<f64>> {
    let mut pos = [seed[0], seed[1]];
    let mut heading = seed[2];
    let mut speed = 5.0 + seed[3].abs();
    let mut out = Vec::new();
    for k in 0..15 {
        let t = k as f64 * 0.1;
        out.push(AgentState::new(t, pos, heading, speed));
        heading += 0.02 * seed[4];
        speed = (speed + 0.1 * seed[5]).max(0.0);
        pos = [
            pos[0] + 0.1 * speed * heading.cos(),
            pos[1] + 0.1 * speed * heading.sin(),
        ];
    }
    out
}

proptest! {
    #[test]
    fn prediction_is_rigidly_equivariant(
        seed in proptest::collection::vec(-3.0f64..3.0, 6),
        angle in -3.0f64..3.0,
        tx in -50.0f64..50.0,
        ty in -50.0f64..50.0,
    ) {
        let history = wiggly_history(&seed);
        let (s, c) = angle.sin_cos();
        let moved: Vec<_> = history
            .iter()
            .map(|st| AgentState::new(
                st.t,
                [c * st.position[0] - s * st.position[1] + tx, s * st.position[0] + c * st.position[1] + ty],
                st.heading + angle,
                st.speed,
            ))
            .collect();
        let cfg = PredictorConfig::default();
        let a = predict("a", &history, &cfg).unwrap();
        let b = predict("a", &moved, &cfg).unwrap();
        for (ha, hb) in a.horizons().iter().zip(b.horizons()) {
            let expected = ha.belief.rigid_transform(angle, [tx, ty]);
            for (ca, cb) in expected.components().iter().zip(hb.belief.components()) {
                prop_assert!((ca.weight() - cb.weight()).abs() < 1e-9);
                for i in 0..2 {
                    prop_assert!((ca.mean()[i] - cb.mean()[i]).abs() < 1e-9);
                    for j in 0..2 {
                        prop_assert!((ca.covariance()[i][j] - cb.covariance()[i][j]).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn prediction_is_deterministic(seed in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let history = wiggly_history(&seed);
        let cfg = PredictorConfig::default();
        prop_assert_eq!(predict("a", &history, &cfg).unwrap(), predict("a", &history, &cfg).unwrap());
    }

    #[test]
    fn lone_hypothesis_has_unit_weight(seed in proptest::collection::vec(-3.0f64..3.0, 6), k in 0usize..5) {
        let history = wiggly_history(&seed);
        let p = predict("a", &history, &only(Hypothesis::ALL[k])).unwrap();
        for h in p.horizons() {
            prop_assert_eq!(h.belief.components()[0].weight(), 1.0);
        }
    }
}
