use proptest::prelude::*;
use wormbot::hydro::{reduced_turn_derivatives, ThrustCommand, TurnState};
use wormbot::integrator::{integrate, IntegratorConfig, Method};
use wormbot::profile::reference_params;
use wormbot::steady::{steady_surge_speed, steady_turn, sweep_turn_map, SweepTolerances, TurnSense};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn surge_speed_is_odd_and_increasing(a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let p = reference_params();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let v_lo = steady_surge_speed(&p, lo).unwrap();
        let v_hi = steady_surge_speed(&p, hi).unwrap();
        prop_assert!(v_lo <= v_hi);
        prop_assert_eq!(steady_surge_speed(&p, -a).unwrap(), -steady_surge_speed(&p, a).unwrap());
    }

    #[test]
    fn swapping_thrusters_mirrors_the_turn(fl in -10.0f64..10.0, fr in -10.0f64..10.0) {
        let p = reference_params();
        let cmd = ThrustCommand::lateral(fl, fr);
        match (steady_turn(&p, &cmd), steady_turn(&p, &cmd.mirrored())) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.u_ss, b.u_ss);
                prop_assert_eq!(a.r_ss, -b.r_ss);
                prop_assert_eq!(a.diameter, b.diameter);
                prop_assert_eq!(a.turn_sense.flipped(), b.turn_sense);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "asymmetric outcome {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn steady_turn_balances_the_reduced_model(fl in 0.5f64..10.0, fr in -10.0f64..10.0) {
        let p = reference_params();
        let cmd = ThrustCommand::lateral(fl, fr);
        prop_assume!(fl + fr > 0.1);
        if let Ok(turn) = steady_turn(&p, &cmd) {
            let d = reduced_turn_derivatives(
                &TurnState { xi: 0.0, eta: 0.0, alpha: 0.0, u: turn.u_ss, r: turn.r_ss },
                &p,
                &cmd,
            );
            prop_assert!(d.u.abs() < 1e-12 && d.r.abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transients_settle_on_the_steady_turn(fl in 1.0f64..10.0, fr in -4.0f64..10.0) {
        let p = reference_params();
        let cmd = ThrustCommand::lateral(fl, fr);
        let turn = steady_turn(&p, &cmd).unwrap();
        let traj = integrate(
            |_t, y: &[f64; 5]| reduced_turn_derivatives(&TurnState::from_array(y), &p, &cmd).to_array(),
            [0.0; 5],
            (0.0, 120.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let last = traj.final_state().unwrap();
        prop_assert!((last[3] - turn.u_ss).abs() <= 1e-4 * turn.u_ss.abs().max(1e-3));
        prop_assert!((last[4] - turn.r_ss).abs() <= 1e-4 * turn.r_ss.abs().max(1e-3));
    }
}

#[test]
fn sweep_sign_pattern() {
    let grid = sweep_turn_map(
        &reference_params(),
        (-10.0, 10.0),
        (-10.0, 10.0),
        21,
        SweepTolerances::default(),
    )
    .unwrap();
    for cell in &grid.cells {
        let net = cell.f_left + cell.f_right;
        let yaw = cell.f_left - cell.f_right;
        if net.abs() > 1e-9 && yaw.abs() > 1e-9 {
            // sense follows the bow rotation: more left thrust yaws right
            let expected = if yaw > 0.0 { TurnSense::Right } else { TurnSense::Left };
            assert_eq!(cell.turn_sense, Some(expected), "{cell:?}");
        }
    }
}

#[test]
fn course_rate_matches_body_speed() {
    // the inertial course velocity recovers the body surge speed
    let p = reference_params();
    let cmd = ThrustCommand::lateral(10.0, -5.0);
    let config = IntegratorConfig::default();
    let traj = integrate(
        |_t, y: &[f64; 5]| reduced_turn_derivatives(&TurnState::from_array(y), &p, &cmd).to_array(),
        [0.0; 5],
        (0.0, 20.0),
        &config,
    )
    .unwrap();
    let dt = config.output_dt;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let s = &traj.states[k];
        let xi_rate = (traj.states[k + 1][0] - traj.states[k - 1][0]) / (2.0 * dt);
        let eta_rate = (traj.states[k + 1][1] - traj.states[k - 1][1]) / (2.0 * dt);
        let (alpha, u) = (s[2], s[3]);
        worst = worst.max((xi_rate - u * alpha.cos()).abs());
        worst = worst.max((xi_rate.hypot(eta_rate) - u.abs()).abs());
        if alpha.cos().abs() > 0.2 {
            worst = worst.max((xi_rate / alpha.cos() - u).abs() * alpha.cos().abs());
        }
    }
    assert!(worst < 1e-4, "worst deviation {worst}");
}

#[test]
fn integrator_obeys_tolerance() {
    let decay = |_t: f64, y: &[f64; 1]| [-y[0]];
    let mut previous = f64::INFINITY;
    for rel_tol in [1e-4, 1e-6, 1e-8, 1e-10] {
        let config = IntegratorConfig {
            rel_tol,
            abs_tol: rel_tol * 1e-3,
            ..IntegratorConfig::default()
        };
        let traj = integrate(decay, [1.0], (0.0, 5.0), &config).unwrap();
        let err = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| ((s[0] - (-t).exp()) / (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 10.0 * rel_tol, "rel_tol {rel_tol}: error {err}");
        assert!(err < previous);
        previous = err;
    }
}

#[test]
fn integration_is_deterministic() {
    let p = reference_params();
    let cmd = ThrustCommand::lateral(7.0, 1.0);
    for method in [Method::Adaptive54, Method::FixedRk4] {
        let config = IntegratorConfig {
            method,
            h_init: 0.005,
            ..IntegratorConfig::default()
        };
        let run = || {
            integrate(
                |_t, y: &[f64; 5]| reduced_turn_derivatives(&TurnState::from_array(y), &p, &cmd).to_array(),
                [0.0; 5],
                (0.0, 10.0),
                &config,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.times.len(), 1001);
        assert!(a
            .states
            .iter()
            .flatten()
            .zip(b.states.iter().flatten())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
