//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed.

// frozen oracle digits are kept as produced
#![allow(clippy::excessive_precision)]

use std::collections::HashSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use wormbot::gait::{
    average_speed, effective_stroke_from_measurement, gait_catalog, simulate_gait, validate_gait, GaitSpec,
};
use wormbot::hydro::{
    heave_derivative, horizontal_derivatives, reduced_turn_derivatives, spheroid_added_mass, surge_derivative,
    vertical_derivatives, HorizontalState, HydroParams, SpheroidCoefficients, SpheroidGeometry, ThrustCommand,
    TurnState, VerticalState,
};
use wormbot::integrator::{integrate, step_rk4, IntegratorConfig};
use wormbot::mode::{Environment, Mode, ModeState, PropellerGeometry};
use wormbot::profile::reference_params;
use wormbot::scenario::{compute_scenario, parse_config};
use wormbot::steady::{
    calibrate, steady_heave_speed, steady_surge_speed, steady_turn, sweep_turn_map, CalibrationOptions,
    CalibrationTargets, Region, SweepTolerances,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within_budget(elapsed: Duration, budget_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < budget_s, || {
        format!("runtime {:.2} s exceeds {budget_s} s", elapsed.as_secs_f64())
    })
}

fn calibration_round_trip() -> Outcome {
    let start = Instant::now();
    let targets = CalibrationTargets::default();
    let cal = calibrate(
        &targets,
        &CalibrationOptions::default(),
        &HydroParams::prototype_rigid_body().with_envelope(),
    )
    .map_err(|e| e.to_string())?;
    let p = cal.params;
    let surge = steady_surge_speed(&p, 0.6).map_err(|e| e.to_string())?;
    let heave = steady_heave_speed(&p, 2.0).map_err(|e| e.to_string())?;
    let turn = steady_turn(&p, &ThrustCommand::lateral(10.0, -5.0)).map_err(|e| e.to_string())?;
    let errs = [
        rel(surge, 0.374),
        rel(heave, 0.234),
        rel(turn.u_ss, 1.079),
        rel(turn.diameter, 1.733),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check(worst <= 1e-10, || format!("worst relative error {worst:e}"))?;
    within_budget(start.elapsed(), 1.0)?;
    Ok(format!("worst relative error {worst:.1e}"))
}

trait WithEnvelope {
    fn with_envelope(self) -> Self;
}

impl WithEnvelope for HydroParams {
    fn with_envelope(mut self) -> Self {
        self.added = spheroid_added_mass(&SpheroidGeometry::robot_envelope()).unwrap();
        self
    }
}

fn computed(doc: &str) -> Result<toml::Table, String> {
    let cfg = parse_config(doc).map_err(|e| e.to_string())?;
    let results = compute_scenario(&cfg).map_err(|e| e.to_string())?;
    results.summary["computed"]
        .as_table()
        .cloned()
        .ok_or_else(|| "summary has no computed table".into())
}

fn float(t: &toml::Table, key: &str) -> Result<f64, String> {
    t.get(key)
        .and_then(|v| v.as_float())
        .ok_or_else(|| format!("summary lacks {key}"))
}

fn transient_convergence() -> Outcome {
    let start = Instant::now();
    let turn = computed("[scenario.maneuver]\nmodel = \"turn\"\nf_left = 10.0\nf_right = -5.0\nduration = 120.0\n")?;
    let speed = float(&turn, "steady_speed_mps")?;
    let diameter = float(&turn, "fitted_diameter_m")?;
    check(rel(speed, 1.079) <= 0.005, || format!("turn speed {speed}"))?;
    check(rel(diameter, 1.733) <= 0.01, || format!("turn diameter {diameter}"))?;
    within_budget(start.elapsed(), 10.0)?;

    let start = Instant::now();
    let surge = computed("[scenario.maneuver]\nmodel = \"surge\"\nf_left = 0.3\nf_right = 0.3\nduration = 120.0\n")?;
    let surge_speed = float(&surge, "steady_speed_mps")?;
    check(rel(surge_speed, 0.374) <= 0.005, || {
        format!("surge speed {surge_speed}")
    })?;
    within_budget(start.elapsed(), 10.0)?;

    let start = Instant::now();
    let heave = computed("[scenario.maneuver]\nmodel = \"heave\"\nf_front = 1.0\nf_back = 1.0\nduration = 120.0\n")?;
    let heave_speed = float(&heave, "steady_speed_mps")?;
    check(rel(heave_speed, 0.234) <= 0.005, || {
        format!("heave speed {heave_speed}")
    })?;
    within_budget(start.elapsed(), 10.0)?;
    Ok(format!(
        "turn {speed:.5} m/s, D = {diameter:.5} m; surge {surge_speed:.5} m/s; heave {heave_speed:.5} m/s"
    ))
}

fn gait_catalog_endpoints() -> Outcome {
    let rows = gait_catalog(0.02773, 1.0).map_err(|e| e.to_string())?;
    check(rows.len() == 6, || format!("{} rows", rows.len()))?;
    let cmps = |na: usize, nr: usize| {
        rows.iter()
            .find(|r| r.spec.n_anchor == na && r.spec.n_relax == nr)
            .map(|r| r.speed_mps * 100.0)
            .unwrap()
    };
    let fast = cmps(1, 2);
    let slow = cmps(4, 1);
    check((fast - 2.773).abs() < 5e-4, || format!("gait (1,2) {fast} cm/s"))?;
    check((slow - 0.462).abs() < 5e-4, || format!("gait (4,1) {slow} cm/s"))?;
    let max = rows.iter().map(|r| r.speed_mps).fold(0.0, f64::max) * 100.0;
    let min = rows.iter().map(|r| r.speed_mps).fold(f64::INFINITY, f64::min) * 100.0;
    check(max == fast && min == slow, || "endpoints are not the extremes".into())?;
    let period = GaitSpec::six_segment(1, 1).period();
    check((period - 6.0).abs() < 1e-12, || format!("gait-1 period {period}"))?;
    Ok(format!("{fast:.4} / {slow:.4} cm/s, gait-1 period {period} s"))
}

fn gait_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for n in 2..=12 {
        for k in 1..=n {
            for na in 1..=n {
                for nr in 1..=n {
                    let spec = GaitSpec {
                        n_segments: n,
                        k_modules: k,
                        n_anchor: na,
                        n_relax: nr,
                        delta_l: 0.02773,
                        delta_t: 1.0,
                        cycles: 2,
                    };
                    if validate_gait(&spec).is_err() {
                        continue;
                    }
                    count += 1;
                    let sim = simulate_gait(&spec, 0.08).map_err(|e| format!("{spec:?}: {e}"))?;
                    let closed = average_speed(&spec).map_err(|e| e.to_string())?;
                    let got = sim.average_speed();
                    let ok = if closed == 0.0 {
                        got.abs() <= 1e-15
                    } else {
                        rel(got, closed) <= 1e-12
                    };
                    check(ok, || format!("N={n} k={k} nA={na} nR={nr}: {got} vs {closed}"))?;
                }
            }
        }
    }
    check(count == 182, || format!("{count} admissible gaits, expected 182"))?;
    within_budget(start.elapsed(), 5.0)?;
    Ok(format!("{count} admissible gaits agree"))
}

fn slip_analysis() -> Outcome {
    let slip = effective_stroke_from_measurement(&GaitSpec::six_segment(1, 1), 7.13e-3).map_err(|e| e.to_string())?;
    let mm = slip.effective_stroke * 1e3;
    check((mm - 10.70).abs() <= 0.01, || format!("effective stroke {mm} mm"))?;
    Ok(format!(
        "effective stroke {mm:.4} mm, slip ratio {:.4}",
        slip.slip_ratio
    ))
}

/// Trapezoid rule in `y` with `λ = b² e^y`; exponentially convergent here.
fn shape_integrals(a: f64, b: f64) -> (f64, f64) {
    let (a2, b2) = (a * a, b * b);
    let h = 1e-3;
    let (mut alpha, mut beta) = (0.0, 0.0);
    let n = (100.0 / h) as i64;
    for i in -n..=n {
        let lam = b2 * (i as f64 * h).exp();
        let ra = (a2 + lam).sqrt();
        alpha += lam / (ra * ra * ra * (b2 + lam));
        beta += lam / (ra * (b2 + lam) * (b2 + lam));
    }
    (a * b2 * alpha * h, a * b2 * beta * h)
}

fn added_mass_limits() -> Outcome {
    let sphere = SpheroidGeometry {
        semi_major: 0.2,
        semi_minor: 0.2,
        fluid_density: 1000.0,
    };
    let added = spheroid_added_mass(&sphere).map_err(|e| e.to_string())?;
    let m_f = sphere.displaced_mass();
    check((added.lambda11 / m_f - 0.5).abs() <= 1e-10, || "sphere k1".into())?;
    check((added.lambda22 / m_f - 0.5).abs() <= 1e-10, || "sphere k2".into())?;
    check(added.lambda55.abs() <= 1e-10, || "sphere k'".into())?;
    let c0 = SpheroidCoefficients::from_eccentricity(0.0);
    check(
        (c0.k1 - 0.5).abs() <= 1e-10 && (c0.k2 - 0.5).abs() <= 1e-10 && c0.k_rot.abs() <= 1e-10,
        || "zero-eccentricity limit".into(),
    )?;

    let env = SpheroidGeometry::robot_envelope();
    let c = SpheroidCoefficients::from_eccentricity(env.eccentricity());
    let (alpha, beta) = shape_integrals(env.semi_major, env.semi_minor);
    let e2 = env.eccentricity().powi(2);
    let k_rot = e2 * e2 * (beta - alpha) / ((2.0 - e2) * (2.0 * e2 - (2.0 - e2) * (beta - alpha)));
    let pairs = [
        ("alpha0", c.alpha0, alpha),
        ("beta0", c.beta0, beta),
        ("k1", c.k1, alpha / (2.0 - alpha)),
        ("k2", c.k2, beta / (2.0 - beta)),
        ("k'", c.k_rot, k_rot),
        // arbitrary-precision quadrature, frozen
        ("alpha0 (mp)", c.alpha0, 0.027776767533724723778),
        ("beta0 (mp)", c.beta0, 0.98611161623313763811),
        ("k1 (mp)", c.k1, 0.014083987591500853273),
        ("k2 (mp)", c.k2, 0.97260372248222559061),
        ("k' (mp)", c.k_rot, 0.91922330896136954685),
    ];
    let mut worst: f64 = 0.0;
    for (name, got, want) in pairs {
        let r = rel(got, want);
        check(r <= 1e-9, || format!("{name}: {got} vs {want}"))?;
        worst = worst.max(r);
    }
    let lam = spheroid_added_mass(&env).map_err(|e| e.to_string())?;
    for (name, got, want) in [
        ("lambda11", lam.lambda11, 0.10894508764063295588),
        ("lambda22", lam.lambda22, 7.5234657157306045603),
        ("lambda55", lam.lambda55, 0.64230465153876699905),
    ] {
        check(rel(got, want) <= 1e-9, || format!("{name}: {got} vs {want}"))?;
    }
    Ok(format!("sphere exact; envelope worst relative deviation {worst:.1e}"))
}

fn integrator_order() -> Outcome {
    let mut f = |_t: f64, y: &[f64; 1]| [-y[0]];
    let err = |h: f64, f: &mut dyn FnMut(f64, &[f64; 1]) -> [f64; 1]| {
        let n = (1.0 / h).round() as usize;
        let mut y = [1.0];
        let mut g = |t: f64, y: &[f64; 1]| f(t, y);
        for i in 0..n {
            y = step_rk4(&mut g, i as f64 * h, &y, h).unwrap();
        }
        (y[0] - (-1.0f64).exp()).abs()
    };
    let hs = [0.2, 0.1, 0.05, 0.025];
    let errors: Vec<f64> = hs.iter().map(|&h| err(h, &mut f)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    check(ratios.iter().all(|&r| r >= 14.0), || format!("ratios {ratios:?}"))?;

    let config = IntegratorConfig {
        output_dt: 2.0 * PI / 1000.0,
        ..IntegratorConfig::default()
    };
    let traj =
        integrate(|_t, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], (0.0, 2.0 * PI), &config).map_err(|e| e.to_string())?;
    let drift = traj
        .states
        .iter()
        .map(|s| (0.5 * (s[0] * s[0] + s[1] * s[1]) - 0.5).abs())
        .fold(0.0, f64::max);
    check(drift <= 1e-6, || format!("energy drift {drift:e}"))?;
    Ok(format!(
        "RK4 halving ratios {:.2}/{:.2}/{:.2}; energy drift {drift:.1e}",
        ratios[0], ratios[1], ratios[2]
    ))
}

fn sweep_structure() -> Outcome {
    let start = Instant::now();
    let params = reference_params();
    let grid = sweep_turn_map(&params, (-10.0, 10.0), (-10.0, 10.0), 101, SweepTolerances::default())
        .map_err(|e| e.to_string())?;
    let n = 101;
    for i in 0..n {
        let anti = grid.cell(i, n - 1 - i);
        check(anti.region == Region::InfinitesimalRegion && anti.speed == 0.0, || {
            format!("F_L = -F_R cell {i}: {anti:?}")
        })?;
        let diag = grid.cell(i, i);
        if diag.f_left != 0.0 {
            check(
                diag.region == Region::InfiniteRegion && diag.diameter == f64::INFINITY,
                || format!("F_L = F_R cell {i}: {diag:?}"),
            )?;
        }
        for j in 0..n {
            let a = grid.cell(i, j);
            let b = grid.cell(j, i);
            let same = a.region == b.region
                && (a.speed == b.speed || (a.speed.is_nan() && b.speed.is_nan()))
                && (a.diameter == b.diameter || (a.diameter.is_nan() && b.diameter.is_nan()))
                && a.turn_sense.map(|t| t.flipped()) == b.turn_sense;
            check(same, || format!("swap asymmetry at ({i}, {j}): {a:?} vs {b:?}"))?;
        }
    }
    let no_steady = grid.cells.iter().filter(|c| c.region == Region::NoSteadyState).count();
    within_budget(start.elapsed(), 5.0)?;
    Ok(format!("{} cells, {no_steady} without steady state", grid.cells.len()))
}

fn random_params(rng: &mut StdRng) -> HydroParams {
    let mut p = reference_params();
    let d = &mut p.horizontal;
    d.y_v = rng.random_range(0.0..5.0);
    d.y_v_abs_v = rng.random_range(0.0..20.0);
    d.n_r = rng.random_range(0.0..2.0);
    d.x_vv = rng.random_range(0.0..1.0);
    let v = &mut p.vertical;
    v.z_w = rng.random_range(0.0..5.0);
    v.z_abs_w = rng.random_range(0.0..5.0);
    v.z_ww = rng.random_range(0.0..5.0);
    v.m_q = rng.random_range(0.0..2.0);
    v.m_q_abs_q = rng.random_range(0.0..2.0);
    p
}

fn dissipation() -> Result<(usize, f64), String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let idle = ThrustCommand::lateral(0.0, 0.0);
    let mut worst = f64::NEG_INFINITY;
    let cases = 10_000;
    for _ in 0..cases {
        let p = random_params(&mut rng);
        let mut s = || rng.random_range(-3.0..3.0);
        let h = HorizontalState {
            xi: s(),
            eta: s(),
            alpha: s(),
            u: s(),
            v: s(),
            r: s(),
        };
        let d = horizontal_derivatives(&h, &p, &idle);
        let power_h = p.surge_inertia() * h.u * d.u + p.sway_inertia() * h.v * d.v + p.yaw_inertia() * h.r * d.r;
        let t = TurnState {
            xi: h.xi,
            eta: h.eta,
            alpha: h.alpha,
            u: h.u,
            r: h.r,
        };
        let dt = reduced_turn_derivatives(&t, &p, &idle);
        let power_t = p.surge_inertia() * t.u * dt.u + p.yaw_inertia() * t.r * dt.r;
        let vs = VerticalState {
            xi: h.xi,
            zeta: h.eta,
            theta: h.alpha,
            u: h.u,
            w: h.v,
            q: h.r,
        };
        let dv = vertical_derivatives(&vs, &p, &idle);
        let power_v =
            p.surge_inertia() * vs.u * dv.u + p.heave_inertia() * vs.w * dv.w + p.pitch_inertia() * vs.q * dv.q;
        let power_s = p.surge_inertia() * h.u * surge_derivative(h.u, &p, &idle);
        let power_z = p.heave_inertia() * h.v * heave_derivative(h.v, &p, &idle);
        for (name, power, scale) in [
            ("horizontal", power_h, 1.0 + h.u.abs() * h.v.abs() * h.r.abs() * 100.0),
            ("turn", power_t, 1.0),
            ("vertical", power_v, 1.0 + vs.u.abs() * vs.w.abs() * vs.q.abs() * 100.0),
            ("surge", power_s, 1.0),
            ("heave", power_z, 1.0),
        ] {
            let normalized = power / scale;
            worst = worst.max(normalized);
            check(normalized <= 1e-12, || {
                format!("{name} model gains energy at {h:?}: {power}")
            })?;
        }
    }
    Ok((cases, worst))
}

fn mirror_symmetry() -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let cases = 1_000;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    for _ in 0..cases {
        let p = random_params(&mut rng);
        let mut s = || rng.random_range(-3.0..3.0);
        let h = HorizontalState {
            xi: s(),
            eta: s(),
            alpha: s(),
            u: s(),
            v: s(),
            r: s(),
        };
        let cmd = ThrustCommand::lateral(s() * 3.0, s() * 3.0);
        let m = HorizontalState {
            eta: -h.eta,
            alpha: -h.alpha,
            v: -h.v,
            r: -h.r,
            ..h
        };
        let d = horizontal_derivatives(&h, &p, &cmd);
        let dm = horizontal_derivatives(&m, &p, &cmd.mirrored());
        let pairs = [
            (dm.xi, d.xi),
            (dm.eta, -d.eta),
            (dm.alpha, -d.alpha),
            (dm.u, d.u),
            (dm.v, -d.v),
            (dm.r, -d.r),
        ];
        check(pairs.iter().all(|&(a, b)| close(a, b)), || {
            format!("horizontal mirror fails at {h:?}")
        })?;

        let t = TurnState {
            xi: h.xi,
            eta: h.eta,
            alpha: h.alpha,
            u: h.u,
            r: h.r,
        };
        let tm = TurnState {
            eta: -t.eta,
            alpha: -t.alpha,
            r: -t.r,
            ..t
        };
        let dt = reduced_turn_derivatives(&t, &p, &cmd);
        let dtm = reduced_turn_derivatives(&tm, &p, &cmd.mirrored());
        let pairs = [
            (dtm.xi, dt.xi),
            (dtm.eta, -dt.eta),
            (dtm.alpha, -dt.alpha),
            (dtm.u, dt.u),
            (dtm.r, -dt.r),
        ];
        check(pairs.iter().all(|&(a, b)| close(a, b)), || {
            format!("turn mirror fails at {t:?}")
        })?;
    }
    Ok(cases)
}

fn reduction_consistency() -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let cases = 1_000;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    for _ in 0..cases {
        let mut p = random_params(&mut rng);
        // terms the one-dimensional heave model does not carry
        p.vertical.z_abs_w = 0.0;
        p.vertical.z_ww = 0.0;
        let mut s = || rng.random_range(-3.0..3.0);
        let (xi, eta, alpha, u, r, w) = (s(), s(), s(), s(), s(), s());
        let cmd = ThrustCommand {
            f_front: s(),
            f_back: s(),
            ..ThrustCommand::lateral(s() * 3.0, s() * 3.0)
        };

        // sway-free horizontal state evolves like the reduced turn model
        let full = horizontal_derivatives(
            &HorizontalState {
                xi,
                eta,
                alpha,
                u,
                v: 0.0,
                r,
            },
            &p,
            &cmd,
        );
        let red = reduced_turn_derivatives(&TurnState { xi, eta, alpha, u, r }, &p, &cmd);
        let pairs = [
            (full.xi, red.xi),
            (full.eta, red.eta),
            (full.alpha, red.alpha),
            (full.u, red.u),
            (full.r, red.r),
        ];
        check(pairs.iter().all(|&(a, b)| close(a, b)), || {
            format!("turn reduction at u={u} r={r}")
        })?;

        // straight, unrotated surge
        let straight = reduced_turn_derivatives(
            &TurnState {
                xi,
                eta,
                alpha: 0.0,
                u,
                r: 0.0,
            },
            &p,
            &cmd,
        );
        check(close(straight.u, surge_derivative(u, &p, &cmd)), || {
            format!("surge reduction at u={u}")
        })?;
        check(close(straight.xi, u), || "surge kinematics".into())?;

        // pure heave
        let vert = vertical_derivatives(
            &VerticalState {
                xi,
                zeta: eta,
                theta: 0.0,
                u: 0.0,
                w,
                q: 0.0,
            },
            &p,
            &cmd,
        );
        check(close(vert.w, heave_derivative(w, &p, &cmd)), || {
            format!("heave reduction at w={w}")
        })?;
        check(close(vert.zeta, w), || "heave kinematics".into())?;
    }
    Ok(cases)
}

#[derive(Clone, Copy)]
enum Event {
    Tick,
    RequestSwim,
    RequestCrawl,
    EnterPipe,
    EnterUnknownPipe,
    ExitPipe,
}

const EVENTS: [Event; 6] = [
    Event::Tick,
    Event::RequestSwim,
    Event::RequestCrawl,
    Event::EnterPipe,
    Event::EnterUnknownPipe,
    Event::ExitPipe,
];

fn apply(state: &ModeState, event: Event) -> ModeState {
    let result = match event {
        Event::Tick => return state.tick(1.0).unwrap(),
        Event::RequestSwim => state.request_transition(Mode::Swim),
        Event::RequestCrawl => state.request_transition(Mode::Crawl),
        Event::EnterPipe => state.set_environment(Environment::pipe(0.129)),
        Event::EnterUnknownPipe => state.set_environment(Environment {
            in_pipe: true,
            pipe_inner_diameter: None,
        }),
        Event::ExitPipe => state.set_environment(Environment::open_water()),
    };
    result.unwrap_or(*state)
}

fn key(s: &ModeState) -> (Mode, bool, u64, u64) {
    (
        s.mode,
        s.environment.in_pipe,
        s.environment.pipe_inner_diameter.map_or(u64::MAX, f64::to_bits),
        s.elapsed.to_bits(),
    )
}

fn mode_safe(s: &ModeState) -> Result<(), String> {
    check(!s.violates_clearance(), || format!("deployed in a pipe: {s:?}"))?;
    let cmd = s.constrain(&ThrustCommand {
        f_front: 1.0,
        f_back: 1.0,
        ..ThrustCommand::lateral(5.0, -5.0)
    });
    check(cmd.validate().is_ok(), || {
        format!("constrained command invalid in {s:?}")
    })?;
    if s.mode != Mode::Swim {
        check(cmd.f_left == 0.0 && cmd.f_right == 0.0, || {
            format!("lateral thrust in {s:?}")
        })?;
    }
    Ok(())
}

/// Every event sequence up to length 10 from each start; sequences reaching
/// an already-seen state at the same depth share their continuations.
fn mode_safety() -> Result<(usize, u64), String> {
    let geometry = PropellerGeometry::default();
    let starts = [
        ModeState::new(Mode::Crawl, Environment::open_water(), geometry).unwrap(),
        ModeState::new(Mode::Crawl, Environment::pipe(0.129), geometry).unwrap(),
        ModeState::new(Mode::Crawl, Environment::pipe(0.3), geometry).unwrap(),
        ModeState::new(Mode::Swim, Environment::open_water(), geometry).unwrap(),
    ];
    let mut frontier: Vec<(ModeState, u64)> = starts.iter().map(|s| (*s, 1)).collect();
    let mut seen: HashSet<(Mode, bool, u64, u64)> = HashSet::new();
    let mut sequences = 0u64;
    for s in &starts {
        mode_safe(s)?;
        seen.insert(key(s));
    }
    for _depth in 1..=10 {
        let mut next: Vec<(ModeState, u64)> = Vec::new();
        for (state, multiplicity) in &frontier {
            for event in EVENTS {
                let after = apply(state, event);
                mode_safe(&after)?;
                seen.insert(key(&after));
                match next.iter_mut().find(|(s, _)| key(s) == key(&after)) {
                    Some((_, m)) => *m += multiplicity,
                    None => next.push((after, *multiplicity)),
                }
            }
        }
        sequences = next.iter().map(|(_, m)| m).sum();
        frontier = next;
    }
    Ok((seen.len(), sequences))
}

fn property_suites() -> Outcome {
    let (n_diss, worst) = dissipation()?;
    let n_mirror = mirror_symmetry()?;
    let n_red = reduction_consistency()?;
    let (states, sequences) = mode_safety()?;
    Ok(format!(
        "dissipation {n_diss} states (max normalized power {worst:.1e}), mirror {n_mirror}, reduction {n_red}, \
         mode safety {sequences} sequences over {states} states"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 calibration round trip", calibration_round_trip),
        ("2 transient convergence", transient_convergence),
        ("3 gait catalog endpoints", gait_catalog_endpoints),
        ("4 gait oracle equivalence", gait_oracle_equivalence),
        ("5 slip analysis", slip_analysis),
        ("6 added-mass limits", added_mass_limits),
        ("7 integrator order and accuracy", integrator_order),
        ("8 sweep map structure", sweep_structure),
        ("9 property suites", property_suites),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2} s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name} ({secs:.2} s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
