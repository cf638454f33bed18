//! Scenario dispatch and artifact assembly.

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

use super::config::{
    CalibrateScenario, ConfigError, GaitScenario, ManeuverModel, ManeuverScenario, ModeSequence, Provenance,
    ResolvedRobot, RobotConfig, Scenario, ScenarioConfig, SteadyScenario, SweepKind, SweepScenario,
};
use super::output::{self, format_number, OutputError, Table as CsvTable};
use crate::gait::{average_speed, effective_stroke_from_measurement, gait_catalog, simulate_gait};
use crate::hydro::{
    heave_derivative, horizontal_derivatives, reduced_turn_derivatives, spheroid_added_mass, surge_derivative,
    thrust_resultants, vertical_derivatives, HeaveState, HorizontalState, HydroParams, SpheroidCoefficients,
    SpheroidGeometry, SurgeState, ThrustCommand, TurnState, VerticalState,
};
use crate::integrator::{detect_steady, integrate, IntegratorConfig, Steadiness, Trajectory};
use crate::mode::{Environment, Mode, ModeState, PropellerGeometry};
use crate::profile::{self, fingerprint, reference_params, LiteratureValue, MODEL_REVISION};
use crate::steady::{
    calibrate, fit_circle, steady_heave_speed, steady_surge_speed, steady_turn, sweep_thrust_velocity, sweep_turn_map,
    Region, SweepTolerances,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl RunError {
    /// Process exit status: 2 for configuration, 3 for numeric, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) | RunError::Output(OutputError::EmptyTrajectory) => 3,
            RunError::Output(_) => 1,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> RunError {
    RunError::Numeric(e.to_string())
}

/// Everything a scenario produces, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResults {
    pub summary: Table,
    pub trajectory: Option<Trajectory>,
    pub table: Option<CsvTable>,
    /// TOML `[robot]` block with calibrated coefficients.
    pub coefficients: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Table,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `output.dir` from the configuration.
    pub out_dir: Option<PathBuf>,
    /// Input files that must never be overwritten.
    pub protected: Vec<PathBuf>,
}

/// Computes and writes a scenario. The output directory is created if needed.
pub fn run_scenario(config: &ScenarioConfig, options: &RunOptions) -> Result<Artifacts, RunError> {
    config.validate()?;
    let dir = options.out_dir.clone().unwrap_or_else(|| config.output.dir.clone());
    let out = &config.output;
    let planned = |name: &str| dir.join(name);
    for (key, name) in out.file_names() {
        let target = planned(name);
        if options.protected.iter().any(|p| same_file(p, &target)) {
            return Err(ConfigError::InvariantViolation {
                field: format!("output.{key}"),
                detail: format!("{} would overwrite an input file", target.display()),
            }
            .into());
        }
    }

    let mut results = compute_scenario(config)?;
    std::fs::create_dir_all(&dir).map_err(|source| OutputError::Io {
        path: dir.clone(),
        source,
    })?;

    let mut files = Vec::new();
    let mut written = Table::new();
    if let Some(traj) = &results.trajectory {
        let path = planned(&out.trajectory);
        output::write_trajectory_sampled(traj, &path, out.sample_every)?;
        written.insert("trajectory".into(), Value::String(out.trajectory.clone()));
        files.push(path);
    }
    if let Some(table) = &results.table {
        let path = planned(&out.table);
        output::write_table(table, &path)?;
        written.insert("table".into(), Value::String(out.table.clone()));
        files.push(path);
    }
    if let Some(text) = &results.coefficients {
        let path = planned(&out.coefficients);
        output::write_file(&path, text)?;
        written.insert("coefficients".into(), Value::String(out.coefficients.clone()));
        files.push(path);
    }
    results.summary.insert("files".into(), Value::Table(written));
    let path = planned(&out.summary);
    output::emit_summary(&results.summary, &path)?;
    files.push(path);
    Ok(Artifacts {
        files,
        summary: results.summary,
    })
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Runs the numerics of a scenario without writing anything.
pub fn compute_scenario(config: &ScenarioConfig) -> Result<ScenarioResults, RunError> {
    let robot = config.robot.resolve()?;
    let mut results = match &config.scenario {
        Scenario::Maneuver(m) => run_maneuver(m, &robot.params, &config.integrator)?,
        Scenario::Steady(s) => run_steady(s, &robot.params)?,
        Scenario::Sweep(s) => run_sweep(s, &robot.params)?,
        Scenario::Gait(g) => run_gait(g)?,
        Scenario::Calibrate(c) => run_calibrate(c, &robot)?,
        Scenario::AddedMass(g) => run_added_mass(g)?,
    };
    let summary = &mut results.summary;
    let echo = Value::try_from(&config.scenario).expect("scenario serializes to TOML");
    summary.insert("scenario".into(), echo);
    summary.insert("model".into(), Value::Table(model_table(&robot.params)));
    if !matches!(
        config.scenario,
        Scenario::Gait(_) | Scenario::AddedMass(_) | Scenario::Calibrate(_)
    ) {
        summary.insert("coefficients".into(), Value::Table(coefficient_table(&robot.params)));
        summary.insert("provenance".into(), Value::Table(provenance_table(&robot)));
    }
    Ok(results)
}

fn model_table(params: &HydroParams) -> Table {
    let mut t = Table::new();
    t.insert("revision".into(), MODEL_REVISION.into());
    t.insert("params_fingerprint".into(), fingerprint(params).into());
    t.insert(
        "default_profile_fingerprint".into(),
        fingerprint(&reference_params()).into(),
    );
    t
}

fn coefficient_table(params: &HydroParams) -> Table {
    params
        .named_values()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::Float(v)))
        .collect()
}

fn provenance_table(robot: &ResolvedRobot) -> Table {
    robot
        .provenance
        .iter()
        .map(|(k, p)| (k.to_string(), Value::String(p.as_str().into())))
        .collect()
}

/// Adds `[reference]` values and matching `[reference_labels]` strings.
fn add_references(summary: &mut Table, refs: &[LiteratureValue]) {
    let mut values = Table::new();
    let mut labels = Table::new();
    for r in refs {
        values.insert(r.key.into(), Value::Float(r.value));
        labels.insert(r.key.into(), format!("{}; {}", r.kind.label(), r.note).into());
    }
    summary.insert("reference".into(), Value::Table(values));
    summary.insert("reference_labels".into(), Value::Table(labels));
}

fn nested_references(groups: &[(&str, &[LiteratureValue])]) -> (Table, Table) {
    let mut values = Table::new();
    let mut labels = Table::new();
    for (group, refs) in groups {
        let mut v = Table::new();
        let mut l = Table::new();
        for r in *refs {
            v.insert(r.key.into(), Value::Float(r.value));
            l.insert(r.key.into(), format!("{}; {}", r.kind.label(), r.note).into());
        }
        values.insert(group.to_string(), Value::Table(v));
        labels.insert(group.to_string(), Value::Table(l));
    }
    (values, labels)
}

fn relative_difference(computed: f64, reference: f64) -> f64 {
    (computed - reference).abs() / reference.abs()
}

#[derive(Debug, Clone, Copy)]
struct ModeSpan {
    start: f64,
    end: f64,
    mode: Mode,
}

/// Steps the mode controller on the output grid and returns constant-mode spans.
fn mode_timeline(
    seq: &ModeSequence,
    duration: f64,
    dt: f64,
    events: &mut Vec<Table>,
) -> Result<(Vec<ModeSpan>, Mode), RunError> {
    let pipe = Environment::pipe(seq.pipe_inner_diameter);
    let in_pipe_at = |t: f64| seq.exit_pipe_at.is_some_and(|exit| t < exit - 1e-12);
    let env0 = if in_pipe_at(0.0) {
        pipe
    } else {
        Environment::open_water()
    };
    let mut state = ModeState::new(seq.start, env0, PropellerGeometry::default())
        .map_err(numeric)?
        .with_transition_duration(seq.transition_duration);
    if state.violates_clearance() {
        return Err(ConfigError::InvariantViolation {
            field: "scenario.maneuver.mode.start".into(),
            detail: "deployed propellers do not fit the pipe".into(),
        }
        .into());
    }
    let mut log = |t: f64, event: &str, detail: String| {
        let mut e = Table::new();
        e.insert("t_s".into(), Value::Float(t));
        e.insert("event".into(), event.into());
        e.insert("detail".into(), detail.into());
        events.push(e);
    };
    let steps = (duration / dt).round() as usize;
    let mut spans: Vec<ModeSpan> = Vec::new();
    let mut last_rejection: Option<String> = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        if state.environment.in_pipe && !in_pipe_at(t) {
            state = state.set_environment(Environment::open_water()).map_err(numeric)?;
            log(t, "environment", "left pipe".into());
        }
        if state.mode == Mode::Crawl && t >= seq.request_swim_at - 1e-12 && last_rejection.as_deref() != Some("done") {
            match state.request_transition(Mode::Swim) {
                Ok(next) => {
                    log(
                        t,
                        "transition",
                        format!("{} -> {}", state.mode.as_str(), next.mode.as_str()),
                    );
                    state = next;
                    last_rejection = Some("done".into());
                }
                Err(rejection) => {
                    let text = rejection.to_string();
                    if last_rejection.as_deref() != Some(text.as_str()) {
                        log(t, "rejected", text.clone());
                        last_rejection = Some(text);
                    }
                }
            }
        }
        match spans.last_mut() {
            Some(span) if span.mode == state.mode => span.end = t + dt,
            _ => spans.push(ModeSpan {
                start: t,
                end: t + dt,
                mode: state.mode,
            }),
        }
        let before = state.mode;
        state = state.tick(dt).map_err(numeric)?;
        if state.mode != before {
            log(
                t + dt,
                "transition",
                format!("{} -> {}", before.as_str(), state.mode.as_str()),
            );
        }
    }
    Ok((spans, state.mode))
}

fn integrate_model(
    model: ManeuverModel,
    params: &HydroParams,
    cmd: &ThrustCommand,
    y0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory, RunError> {
    let p = *params;
    let c = *cmd;
    let traj = match model {
        ManeuverModel::Turn => {
            let y0: [f64; 5] = y0.try_into().expect("state length checked");
            integrate(
                move |_t, y: &[f64; 5]| reduced_turn_derivatives(&TurnState::from_array(y), &p, &c).to_array(),
                y0,
                span,
                cfg,
            )
            .map(|t| t.with_labels(&TurnState::LABELS))
        }
        ManeuverModel::Horizontal => {
            let y0: [f64; 6] = y0.try_into().expect("state length checked");
            integrate(
                move |_t, y: &[f64; 6]| horizontal_derivatives(&HorizontalState::from_array(y), &p, &c).to_array(),
                y0,
                span,
                cfg,
            )
            .map(|t| t.with_labels(&HorizontalState::LABELS))
        }
        ManeuverModel::Vertical => {
            let y0: [f64; 6] = y0.try_into().expect("state length checked");
            integrate(
                move |_t, y: &[f64; 6]| vertical_derivatives(&VerticalState::from_array(y), &p, &c).to_array(),
                y0,
                span,
                cfg,
            )
            .map(|t| t.with_labels(&VerticalState::LABELS))
        }
        ManeuverModel::Surge => {
            let y0: [f64; 2] = y0.try_into().expect("state length checked");
            integrate(
                move |_t, y: &[f64; 2]| [y[1], surge_derivative(y[1], &p, &c)],
                y0,
                span,
                cfg,
            )
            .map(|t| t.with_labels(&SurgeState::LABELS))
        }
        ManeuverModel::Heave => {
            let y0: [f64; 2] = y0.try_into().expect("state length checked");
            integrate(
                move |_t, y: &[f64; 2]| [y[1], heave_derivative(y[1], &p, &c)],
                y0,
                span,
                cfg,
            )
            .map(|t| t.with_labels(&HeaveState::LABELS))
        }
    };
    traj.map_err(numeric)
}

/// Integrates a maneuver, splitting at mode changes so the forcing is smooth on each piece.
pub fn simulate_maneuver(
    m: &ManeuverScenario,
    params: &HydroParams,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, Vec<Table>, Mode), RunError> {
    let cmd = m.command();
    let mut events = Vec::new();
    let (spans, final_mode) = match &m.mode {
        Some(seq) => mode_timeline(seq, m.duration, cfg.output_dt, &mut events)?,
        None => (
            vec![ModeSpan {
                start: 0.0,
                end: m.duration,
                mode: Mode::Swim,
            }],
            Mode::Swim,
        ),
    };
    let mode_state = |mode: Mode| ModeState {
        mode,
        environment: Environment::open_water(),
        geometry: PropellerGeometry::default(),
        transition_duration: 0.0,
        elapsed: 0.0,
    };
    let mut y0 = m.initial.clone().unwrap_or_else(|| vec![0.0; m.model.state_len()]);
    let mut traj: Option<Trajectory> = None;
    for span in spans {
        let piece_cmd = if m.mode.is_some() {
            mode_state(span.mode).constrain(&cmd)
        } else {
            cmd
        };
        let piece = integrate_model(m.model, params, &piece_cmd, &y0, (span.start, span.end), cfg)?;
        y0 = piece.final_state().expect("integrator returns samples").to_vec();
        traj = Some(match traj {
            None => piece,
            Some(mut acc) => {
                acc.times.extend_from_slice(&piece.times[1..]);
                acc.states.extend_from_slice(&piece.states[1..]);
                acc
            }
        });
    }
    let mut traj = traj.expect("at least one span");
    traj.push_metadata("model", m.model.as_str());
    traj.push_metadata("params_fingerprint", fingerprint(params));
    Ok((traj, events, final_mode))
}

fn steady_entry(summary: &mut Table, key: &str, s: Steadiness) -> Option<f64> {
    match s {
        Steadiness::Steady(v) => {
            summary.insert(key.into(), Value::Float(v));
            Some(v)
        }
        Steadiness::NotConverged { mean, spread } => {
            summary.insert(format!("{key}_window_mean"), Value::Float(mean));
            summary.insert(format!("{key}_window_spread"), Value::Float(spread));
            None
        }
    }
}

fn run_maneuver(
    m: &ManeuverScenario,
    params: &HydroParams,
    cfg: &IntegratorConfig,
) -> Result<ScenarioResults, RunError> {
    let (traj, events, final_mode) = simulate_maneuver(m, params, cfg)?;
    let steady = |idx: usize| detect_steady(&traj, idx, m.steady_window, m.steady_tol).map_err(numeric);
    let mut computed = Table::new();
    let mut summary = Table::new();
    let converged;
    // the command actually delivered at the end of the run
    let final_cmd = if m.mode.is_some() && final_mode != Mode::Swim {
        ThrustCommand {
            f_left: 0.0,
            f_right: 0.0,
            propellers_expanded: false,
            ..m.command()
        }
    } else {
        m.command()
    };

    match m.model {
        ManeuverModel::Turn | ManeuverModel::Horizontal => {
            let (u_idx, r_idx) = if m.model == ManeuverModel::Turn { (3, 4) } else { (3, 5) };
            let u = steady_entry(&mut computed, "u_ss_mps", steady(u_idx)?);
            let r = steady_entry(&mut computed, "r_ss_radps", steady(r_idx)?);
            let v = if m.model == ManeuverModel::Horizontal {
                steady_entry(&mut computed, "v_ss_mps", steady(4)?)
            } else {
                Some(0.0)
            };
            converged = u.is_some() && r.is_some() && v.is_some();
            if let (Some(u), Some(r), Some(v)) = (u, r, v) {
                computed.insert("steady_speed_mps".into(), Value::Float(u.hypot(v)));
                let t_end = traj.duration();
                let pts: Vec<(f64, f64)> = traj
                    .times
                    .iter()
                    .zip(&traj.states)
                    .filter(|(t, _)| **t >= 0.75 * t_end)
                    .map(|(_, s)| (s[0], s[1]))
                    .collect();
                if r.abs() > 1e-9 {
                    match fit_circle(&pts) {
                        Ok(fit) => {
                            computed.insert("fitted_diameter_m".into(), Value::Float(2.0 * fit.radius));
                            computed.insert("fitted_center_xi_m".into(), Value::Float(fit.center.0));
                            computed.insert("fitted_center_eta_m".into(), Value::Float(fit.center.1));
                            computed.insert("fit_rms_residual_m".into(), Value::Float(fit.rms_residual));
                        }
                        Err(e) => {
                            computed.insert("fit_note".into(), e.to_string().into());
                        }
                    }
                }
            }
            if m.model == ManeuverModel::Turn {
                match steady_turn(params, &final_cmd) {
                    Ok(pred) => {
                        computed.insert("predicted_speed_mps".into(), Value::Float(pred.tangential_speed));
                        computed.insert("predicted_diameter_m".into(), Value::Float(pred.diameter));
                        computed.insert("turn_sense".into(), pred.turn_sense.as_str().into());
                    }
                    Err(e) => {
                        computed.insert("prediction_note".into(), e.to_string().into());
                    }
                }
            }
            let reference_command = final_cmd.f_left == 10.0 && final_cmd.f_right == -5.0;
            if reference_command {
                add_references(
                    &mut summary,
                    &[
                        profile::TURN_DIAMETER_ODE,
                        profile::TURN_DIAMETER_CFD,
                        profile::TURN_SPEED_ODE,
                        profile::TURN_SPEED_CFD,
                    ],
                );
            }
            let fitted = computed.get("fitted_diameter_m").and_then(Value::as_float);
            if let (Some(d), true) = (fitted, reference_command) {
                let annotation = format!(
                    "computed {d:.4} m; ODE45 reference {} m; CFD reference {} m",
                    profile::TURN_DIAMETER_ODE.value,
                    profile::TURN_DIAMETER_CFD.value
                );
                computed.insert("diameter_annotation".into(), annotation.into());
                computed.insert(
                    "diameter_relative_difference_ode45".into(),
                    Value::Float(relative_difference(d, profile::TURN_DIAMETER_ODE.value)),
                );
            }
        }
        ManeuverModel::Surge | ManeuverModel::Heave => {
            let speed = steady_entry(&mut computed, "steady_speed_mps", steady(1)?);
            converged = speed.is_some();
            let (pred, refs, reference_command) = if m.model == ManeuverModel::Surge {
                let total = final_cmd.f_left + final_cmd.f_right;
                (
                    steady_surge_speed(params, total),
                    [profile::SURGE_SPEED_ODE, profile::SURGE_SPEED_CFD],
                    (total - 0.6).abs() < 1e-12,
                )
            } else {
                let total = final_cmd.f_front + final_cmd.f_back;
                (
                    steady_heave_speed(params, total),
                    [profile::HEAVE_SPEED_ODE, profile::HEAVE_SPEED_CFD],
                    (total - 2.0).abs() < 1e-12,
                )
            };
            computed.insert("predicted_speed_mps".into(), Value::Float(pred.map_err(numeric)?));
            // literature values only make sense next to the command they were reported for
            if reference_command {
                add_references(&mut summary, &refs);
            }
        }
        ManeuverModel::Vertical => {
            let u = steady_entry(&mut computed, "u_ss_mps", steady(3)?);
            let w = steady_entry(&mut computed, "w_ss_mps", steady(4)?);
            let q = steady_entry(&mut computed, "q_ss_radps", steady(5)?);
            converged = u.is_some() && w.is_some() && q.is_some();
            if let (Some(u), Some(w)) = (u, w) {
                computed.insert("steady_speed_mps".into(), Value::Float(u.hypot(w)));
            }
        }
    }
    computed.insert("steady_converged".into(), Value::Boolean(converged));
    computed.insert("samples".into(), Value::Integer(traj.len() as i64));
    summary.insert("computed".into(), Value::Table(computed));
    if !events.is_empty() {
        summary.insert(
            "mode_events".into(),
            Value::Array(events.into_iter().map(Value::Table).collect()),
        );
    }
    Ok(ScenarioResults {
        summary,
        trajectory: Some(traj),
        table: None,
        coefficients: None,
    })
}

fn run_steady(s: &SteadyScenario, params: &HydroParams) -> Result<ScenarioResults, RunError> {
    let cmd = s.command();
    let thrust = thrust_resultants(&cmd, params);
    let mut computed = Table::new();
    computed.insert("thrust_x_n".into(), Value::Float(thrust.x));
    computed.insert("thrust_z_n".into(), Value::Float(thrust.z));
    computed.insert("moment_m_nm".into(), Value::Float(thrust.m));
    computed.insert("moment_n_nm".into(), Value::Float(thrust.n));

    let turn = steady_turn(params, &cmd).map_err(numeric)?;
    let mut t = Table::new();
    t.insert("u_ss_mps".into(), Value::Float(turn.u_ss));
    t.insert("r_ss_radps".into(), Value::Float(turn.r_ss));
    t.insert("tangential_speed_mps".into(), Value::Float(turn.tangential_speed));
    t.insert("diameter_m".into(), Value::Float(turn.diameter));
    t.insert("turn_sense".into(), turn.turn_sense.as_str().into());
    computed.insert("turn".into(), Value::Table(t));
    computed.insert(
        "straight_surge_speed_mps".into(),
        Value::Float(steady_surge_speed(params, cmd.f_left + cmd.f_right).map_err(numeric)?),
    );
    computed.insert(
        "heave_speed_mps".into(),
        Value::Float(steady_heave_speed(params, cmd.f_front + cmd.f_back).map_err(numeric)?),
    );

    let mut summary = Table::new();
    summary.insert("computed".into(), Value::Table(computed));
    let (values, labels) = nested_references(&[
        (
            "turn",
            &[
                profile::TURN_DIAMETER_ODE,
                profile::TURN_DIAMETER_CFD,
                profile::TURN_SPEED_ODE,
                profile::TURN_SPEED_CFD,
            ],
        ),
        ("surge", &[profile::SURGE_SPEED_ODE, profile::SURGE_SPEED_CFD]),
        ("heave", &[profile::HEAVE_SPEED_ODE, profile::HEAVE_SPEED_CFD]),
    ]);
    summary.insert("reference".into(), Value::Table(values));
    summary.insert("reference_labels".into(), Value::Table(labels));
    Ok(ScenarioResults {
        summary,
        trajectory: None,
        table: None,
        coefficients: None,
    })
}

fn cell_or_empty(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn run_sweep(s: &SweepScenario, params: &HydroParams) -> Result<ScenarioResults, RunError> {
    let range = (s.force_min, s.force_max);
    let mut computed = Table::new();
    let mut summary = Table::new();
    let table = match s.kind {
        SweepKind::ThrustVelocity => {
            let rows = sweep_thrust_velocity(params, range, s.points).map_err(numeric)?;
            let mut table = CsvTable::new(&["force_n", "surge_speed_mps", "heave_speed_mps"]);
            for row in &rows {
                table.push(vec![
                    format_number(row.force),
                    cell_or_empty(row.surge_speed.clone().ok()),
                    cell_or_empty(row.heave_speed.clone().ok()),
                ]);
            }
            let last = rows.last().expect("at least two rows");
            computed.insert("rows".into(), Value::Integer(rows.len() as i64));
            if let Ok(v) = last.surge_speed {
                computed.insert("surge_speed_at_max_force_mps".into(), Value::Float(v));
            }
            if let Ok(v) = last.heave_speed {
                computed.insert("heave_speed_at_max_force_mps".into(), Value::Float(v));
            }
            let (values, labels) = nested_references(&[
                ("surge", &[profile::SURGE_SPEED_ODE, profile::SURGE_SPEED_CFD]),
                ("heave", &[profile::HEAVE_SPEED_ODE, profile::HEAVE_SPEED_CFD]),
            ]);
            summary.insert("reference".into(), Value::Table(values));
            summary.insert("reference_labels".into(), Value::Table(labels));
            table
        }
        SweepKind::TurnMap => {
            let grid = sweep_turn_map(params, range, range, s.points, SweepTolerances::default()).map_err(numeric)?;
            let mut table = CsvTable::new(&[
                "f_left_n",
                "f_right_n",
                "region",
                "speed_mps",
                "diameter_m",
                "ld",
                "turn_sense",
            ]);
            let mut counts = Table::new();
            let mut max_speed: f64 = 0.0;
            let mut min_diameter = f64::INFINITY;
            for cell in &grid.cells {
                table.push(vec![
                    format_number(cell.f_left),
                    format_number(cell.f_right),
                    cell.region.as_str().into(),
                    format_number(cell.speed),
                    format_number(cell.diameter),
                    cell_or_empty(cell.ld),
                    cell.turn_sense.map(|t| t.as_str().to_string()).unwrap_or_default(),
                ]);
                let count = counts.entry(cell.region.as_str()).or_insert(Value::Integer(0));
                *count = Value::Integer(count.as_integer().unwrap_or(0) + 1);
                if cell.region == Region::Finite {
                    max_speed = max_speed.max(cell.speed);
                    min_diameter = min_diameter.min(cell.diameter);
                }
            }
            computed.insert("cells".into(), Value::Integer(grid.cells.len() as i64));
            computed.insert("region_counts".into(), Value::Table(counts));
            computed.insert("max_finite_speed_mps".into(), Value::Float(max_speed));
            computed.insert("min_finite_diameter_m".into(), Value::Float(min_diameter));
            add_references(&mut summary, &[profile::TURN_DIAMETER_ODE, profile::TURN_DIAMETER_CFD]);
            table
        }
    };
    summary.insert("computed".into(), Value::Table(computed));
    Ok(ScenarioResults {
        summary,
        trajectory: None,
        table: Some(table),
        coefficients: None,
    })
}

fn run_gait(g: &GaitScenario) -> Result<ScenarioResults, RunError> {
    let spec = g.spec();
    let sim = simulate_gait(&spec, g.l_min).map_err(numeric)?;
    let closed_form = average_speed(&spec).map_err(numeric)?;
    let n = spec.n_segments;

    let mut labels = vec!["head_m".to_string(), "tail_m".to_string()];
    labels.extend((0..n).map(|i| format!("l{i}_m")));
    let states = sim
        .boundaries
        .iter()
        .zip(&sim.segment_lengths)
        .map(|(b, l)| {
            let mut row = vec![b[0], b[n]];
            row.extend_from_slice(l);
            row
        })
        .collect();
    let mut traj = Trajectory {
        labels,
        times: sim.times.clone(),
        states,
        metadata: Vec::new(),
    };
    traj.push_metadata(
        "gait",
        format!("N={} k={} nA={} nR={}", n, spec.k_modules, spec.n_anchor, spec.n_relax),
    );

    let mut computed = Table::new();
    computed.insert("period_s".into(), Value::Float(spec.period()));
    computed.insert("steps".into(), Value::Integer((sim.times.len() - 1) as i64));
    computed.insert("displacement_m".into(), Value::Float(sim.head_displacement()));
    computed.insert("simulated_speed_mps".into(), Value::Float(sim.average_speed()));
    computed.insert("closed_form_speed_mps".into(), Value::Float(closed_form));
    computed.insert("closed_form_speed_cmps".into(), Value::Float(closed_form * 100.0));
    if closed_form > 0.0 {
        computed.insert(
            "simulation_relative_difference".into(),
            Value::Float(relative_difference(sim.average_speed(), closed_form)),
        );
    }
    if let Some(measured) = g.measured_speed {
        let slip = effective_stroke_from_measurement(&spec, measured).map_err(numeric)?;
        computed.insert("measured_speed_mps".into(), Value::Float(measured));
        computed.insert("effective_stroke_m".into(), Value::Float(slip.effective_stroke));
        computed.insert("slip_ratio".into(), Value::Float(slip.slip_ratio));
    }

    let mut summary = Table::new();
    let table = if g.catalog {
        let rows = gait_catalog(spec.delta_l, spec.delta_t).map_err(numeric)?;
        let mut table = CsvTable::new(&["gait", "n_anchor", "n_relax", "period_s", "speed_mps", "speed_cmps"]);
        for row in &rows {
            table.push(vec![
                row.gait.to_string(),
                row.spec.n_anchor.to_string(),
                row.spec.n_relax.to_string(),
                format_number(row.spec.period()),
                format_number(row.speed_mps),
                format_number(row.speed_mps * 100.0),
            ]);
        }
        let max = rows.iter().map(|r| r.speed_mps).fold(f64::NEG_INFINITY, f64::max);
        let min = rows.iter().map(|r| r.speed_mps).fold(f64::INFINITY, f64::min);
        computed.insert("catalog_max_cmps".into(), Value::Float(max * 100.0));
        computed.insert("catalog_min_cmps".into(), Value::Float(min * 100.0));
        add_references(
            &mut summary,
            &[
                profile::GAIT_MEASURED_SPEED,
                profile::GAIT_MAX_SPEED,
                profile::GAIT_MIN_SPEED,
            ],
        );
        table
    } else {
        let mut table = CsvTable::new(&["step", "t_s", "phases"]);
        for (i, (t, phases)) in sim.times.iter().zip(&sim.phases).enumerate() {
            table.push(vec![
                i.to_string(),
                format_number(*t),
                phases.iter().map(|p| p.code()).collect(),
            ]);
        }
        add_references(&mut summary, &[profile::GAIT_MEASURED_SPEED]);
        table
    };
    summary.insert("computed".into(), Value::Table(computed));
    Ok(ScenarioResults {
        summary,
        trajectory: Some(traj),
        table: Some(table),
        coefficients: None,
    })
}

fn run_calibrate(c: &CalibrateScenario, robot: &ResolvedRobot) -> Result<ScenarioResults, RunError> {
    let cal = calibrate(&c.targets, &c.options(), &robot.params).map_err(numeric)?;
    let mut provenance = robot.provenance.clone();
    for key in ["x_uu", "x_rr", "n_r", "n_r_abs_r", "z_w", "z_w_abs_w"] {
        provenance.insert(key, Provenance::Calibrated);
    }
    let resolved = ResolvedRobot {
        params: cal.params,
        provenance,
    };

    let mut computed = Table::new();
    computed.insert(
        "max_relative_residual".into(),
        Value::Float(cal.max_relative_residual()),
    );
    let residuals = cal
        .residuals
        .iter()
        .map(|r| Value::try_from(r).expect("residual serializes"))
        .collect();
    computed.insert("residuals".into(), Value::Array(residuals));
    computed.insert(
        "notes".into(),
        Value::Array(cal.notes.iter().map(|n| Value::String(n.clone())).collect()),
    );

    let mut doc = Table::new();
    doc.insert(
        "robot".into(),
        Value::try_from(RobotConfig::from_params(&cal.params)).expect("robot block serializes"),
    );
    let coefficients = format!(
        "# calibrated coefficients, max relative residual {:.3e}\n{}",
        cal.max_relative_residual(),
        toml::to_string(&doc).expect("robot block serializes")
    );

    let mut summary = Table::new();
    summary.insert("computed".into(), Value::Table(computed));
    summary.insert("coefficients".into(), Value::Table(coefficient_table(&cal.params)));
    summary.insert("provenance".into(), Value::Table(provenance_table(&resolved)));
    Ok(ScenarioResults {
        summary,
        trajectory: None,
        table: None,
        coefficients: Some(coefficients),
    })
}

fn run_added_mass(geom: &SpheroidGeometry) -> Result<ScenarioResults, RunError> {
    let added = spheroid_added_mass(geom).map_err(numeric)?;
    let coeffs = if geom.semi_major == geom.semi_minor {
        None
    } else {
        Some(SpheroidCoefficients::from_eccentricity(geom.eccentricity()))
    };
    let mut computed = Table::new();
    computed.insert("eccentricity".into(), Value::Float(geom.eccentricity()));
    computed.insert("displaced_mass_kg".into(), Value::Float(geom.displaced_mass()));
    if let Some(c) = coeffs {
        computed.insert("alpha0".into(), Value::Float(c.alpha0));
        computed.insert("beta0".into(), Value::Float(c.beta0));
        computed.insert("k1".into(), Value::Float(c.k1));
        computed.insert("k2".into(), Value::Float(c.k2));
        computed.insert("k_rot".into(), Value::Float(c.k_rot));
    } else {
        computed.insert("k1".into(), Value::Float(0.5));
        computed.insert("k2".into(), Value::Float(0.5));
        computed.insert("k_rot".into(), Value::Float(0.0));
    }
    let added_table = Value::try_from(added).expect("added mass serializes");
    computed.insert("added_mass".into(), added_table);
    let mut summary = Table::new();
    summary.insert("computed".into(), Value::Table(computed));
    Ok(ScenarioResults {
        summary,
        trajectory: None,
        table: None,
        coefficients: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    #[test]
    fn swim_request_waits_for_pipe_exit() {
        let seq = ModeSequence {
            start: Mode::Crawl,
            request_swim_at: 0.0,
            exit_pipe_at: Some(1.0),
            pipe_inner_diameter: 0.129,
            transition_duration: 2.0,
        };
        let mut events = Vec::new();
        let (spans, final_mode) = mode_timeline(&seq, 5.0, 0.1, &mut events).unwrap();
        assert_eq!(final_mode, Mode::Swim);
        let modes: Vec<Mode> = spans.iter().map(|s| s.mode).collect();
        assert_eq!(modes, [Mode::Crawl, Mode::Expanding, Mode::Swim]);
        assert!((spans[1].start - 1.0).abs() < 1e-9);
        assert!((spans[2].start - 3.0).abs() < 1e-9);
        assert!((spans[2].end - 5.0).abs() < 1e-9);
        assert_eq!(events[0]["event"].as_str(), Some("rejected"));
        // one rejection logged, not one per sample
        assert_eq!(
            events
                .iter()
                .filter(|e| e["event"].as_str() == Some("rejected"))
                .count(),
            1
        );
    }

    #[test]
    fn crawl_phase_delivers_no_lateral_thrust() {
        let cfg = parse_config(
            "[scenario.maneuver]\nmodel = \"surge\"\nf_left = 0.3\nf_right = 0.3\nduration = 4.0\nsteady_window = 1.0\n\
             [scenario.maneuver.mode]\nrequest_swim_at = 2.0\n\
             [integrator]\noutput_dt = 0.5\n",
        )
        .unwrap();
        let Scenario::Maneuver(m) = &cfg.scenario else {
            unreachable!()
        };
        let (traj, events, final_mode) = simulate_maneuver(m, &reference_params(), &cfg.integrator).unwrap();
        assert_eq!(final_mode, Mode::Swim);
        assert_eq!(traj.len(), 9);
        // rest until the propellers finish deploying at t = 4
        assert!(traj.states.iter().all(|s| s[1] == 0.0));
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Numeric("x".into()).exit_code(), 3);
        assert_eq!(
            RunError::Config(ConfigError::UnknownKey {
                key: "k".into(),
                line: 1
            })
            .exit_code(),
            2
        );
        assert_eq!(RunError::Output(OutputError::EmptyTrajectory).exit_code(), 3);
    }
}
