//! Strict TOML scenario configuration.
//!
//! A document has up to four sections: `[robot]` (parameter overrides on top
//! of the reference profile), `[integrator]`, exactly one `[scenario.<kind>]`
//! block, and `[output]`. Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::{validate_gait, GaitSpec, DEFAULT_MIN_LENGTH_M, DEFAULT_STROKE_M};
use crate::hydro::{spheroid_added_mass, HydroParams, SpheroidGeometry, ThrustCommand};
use crate::integrator::IntegratorConfig;
use crate::mode::{Mode, DEFAULT_TRANSITION_S};
use crate::profile::{reference_params, TEST_PIPE_DIAMETER_M};
use crate::steady::{CalibrationOptions, CalibrationTargets, SplitPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { field: String, line: usize },
    #[error("line {line}: type mismatch: {detail}")]
    TypeMismatch { detail: String, line: usize },
    #[error("line {line}: syntax error: {detail}")]
    Syntax { detail: String, line: usize },
    #[error("invalid value for `{field}`: {detail}")]
    InvariantViolation { field: String, detail: String },
    #[error("scenario kind `{found}` cannot be run by the `{expected}` command")]
    WrongScenario { expected: String, found: String },
}

impl ConfigError {
    /// Stable machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::UnknownKey { .. } => "unknown-key",
            ConfigError::MissingField { .. } => "missing-field",
            ConfigError::TypeMismatch { .. } => "type-mismatch",
            ConfigError::Syntax { .. } => "syntax",
            ConfigError::InvariantViolation { .. } => "invariant-violation",
            ConfigError::WrongScenario { .. } => "wrong-scenario",
        }
    }

    fn invariant(field: impl Into<String>, detail: impl Into<String>) -> Self {
        ConfigError::InvariantViolation {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

/// Where a parameter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserSupplied,
    Calibrated,
    SpheroidDerived,
    /// Published prototype value (mass, inertia).
    Literature,
    /// Geometric inference or assumption (moment arms).
    Assumed,
    /// Never published; carried as zero.
    DefaultZero,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::UserSupplied => "user-supplied",
            Provenance::Calibrated => "calibrated",
            Provenance::SpheroidDerived => "spheroid-derived",
            Provenance::Literature => "literature",
            Provenance::Assumed => "assumed",
            Provenance::DefaultZero => "default-zero",
        }
    }
}

fn reference_provenance(key: &str) -> Provenance {
    match key {
        "mass" | "inertia_x" | "inertia_y" | "inertia_z" => Provenance::Literature,
        k if k.starts_with("lambda") => Provenance::SpheroidDerived,
        "x_uu" | "x_rr" | "n_r_abs_r" | "z_w_abs_w" => Provenance::Calibrated,
        k if k.starts_with("arm_") => Provenance::Assumed,
        _ => Provenance::DefaultZero,
    }
}

macro_rules! robot_block {
    ($($key:ident => $($path:ident).+;)*) => {
        /// Overrides applied on top of the reference profile. Every key is optional.
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RobotConfig {
            /// When present, λ11..λ66 are derived from this envelope
            /// (explicit `lambda*` keys still win).
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub spheroid: Option<SpheroidGeometry>,
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $key: Option<f64>,
            )*
        }

        impl RobotConfig {
            fn overrides(&self) -> Vec<(&'static str, f64)> {
                let mut out = Vec::new();
                $( if let Some(v) = self.$key { out.push((stringify!($key), v)); } )*
                out
            }

            fn apply(&self, params: &mut HydroParams) {
                $( if let Some(v) = self.$key { params.$($path).+ = v; } )*
            }

            /// A block that pins every parameter to `params`.
            pub fn from_params(params: &HydroParams) -> Self {
                Self {
                    spheroid: None,
                    $( $key: Some(params.$($path).+), )*
                }
            }
        }
    };
}

robot_block! {
    mass => mass;
    inertia_x => inertia_x;
    inertia_y => inertia_y;
    inertia_z => inertia_z;
    lambda11 => added.lambda11;
    lambda22 => added.lambda22;
    lambda33 => added.lambda33;
    lambda44 => added.lambda44;
    lambda55 => added.lambda55;
    lambda66 => added.lambda66;
    x_uu => horizontal.x_uu;
    x_vv => horizontal.x_vv;
    x_rr => horizontal.x_rr;
    x_vr => horizontal.x_vr;
    y_v => horizontal.y_v;
    y_r => horizontal.y_r;
    y_v_abs_v => horizontal.y_v_abs_v;
    y_r_abs_r => horizontal.y_r_abs_r;
    y_v_abs_r => horizontal.y_v_abs_r;
    n_v => horizontal.n_v;
    n_r => horizontal.n_r;
    n_v_abs_v => horizontal.n_v_abs_v;
    n_r_abs_r => horizontal.n_r_abs_r;
    n_v_abs_r => horizontal.n_v_abs_r;
    z_w => vertical.z_w;
    z_abs_w => vertical.z_abs_w;
    z_q => vertical.z_q;
    z_w_abs_w => vertical.z_w_abs_w;
    z_ww => vertical.z_ww;
    z_w_abs_q => vertical.z_w_abs_q;
    z_q_abs_q => vertical.z_q_abs_q;
    m_w => vertical.m_w;
    m_abs_w => vertical.m_abs_w;
    m_q => vertical.m_q;
    m_w_abs_w => vertical.m_w_abs_w;
    m_ww => vertical.m_ww;
    m_w_abs_q => vertical.m_w_abs_q;
    m_q_abs_q => vertical.m_q_abs_q;
    arm_left => arms.left;
    arm_right => arms.right;
    arm_front => arms.front;
    arm_back => arms.back;
}

/// Resolved robot parameters with per-key provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRobot {
    pub params: HydroParams,
    pub provenance: BTreeMap<&'static str, Provenance>,
}

impl RobotConfig {
    pub fn resolve(&self) -> Result<ResolvedRobot, ConfigError> {
        let mut params = reference_params();
        let mut provenance: BTreeMap<&'static str, Provenance> = params
            .named_values()
            .into_iter()
            .map(|(k, _)| (k, reference_provenance(k)))
            .collect();
        if let Some(geom) = &self.spheroid {
            params.added =
                spheroid_added_mass(geom).map_err(|e| ConfigError::invariant("robot.spheroid", e.to_string()))?;
            for key in ["lambda11", "lambda22", "lambda33", "lambda44", "lambda55", "lambda66"] {
                provenance.insert(key, Provenance::SpheroidDerived);
            }
        }
        self.apply(&mut params);
        for (key, _) in self.overrides() {
            provenance.insert(key, Provenance::UserSupplied);
        }
        params.validate().map_err(|e| match e {
            crate::hydro::HydroError::InvalidParameter { field, value, reason } => {
                ConfigError::invariant(format!("robot.{field}"), format!("{value} {reason}"))
            }
            other => ConfigError::invariant("robot", other.to_string()),
        })?;
        Ok(ResolvedRobot { params, provenance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverModel {
    /// Reduced surge–yaw model, sway dropped.
    Turn,
    /// Full surge–sway–yaw model.
    Horizontal,
    Surge,
    Heave,
    /// Surge–heave–pitch model.
    Vertical,
}

impl ManeuverModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ManeuverModel::Turn => "turn",
            ManeuverModel::Horizontal => "horizontal",
            ManeuverModel::Surge => "surge",
            ManeuverModel::Heave => "heave",
            ManeuverModel::Vertical => "vertical",
        }
    }

    pub fn state_len(self) -> usize {
        match self {
            ManeuverModel::Turn => 5,
            ManeuverModel::Horizontal | ManeuverModel::Vertical => 6,
            ManeuverModel::Surge | ManeuverModel::Heave => 2,
        }
    }
}

/// Optional crawl-to-swim sequence preceding the maneuver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSequence {
    #[serde(default = "default_start_mode")]
    pub start: Mode,
    /// Time the operator asks for swimming mode (s); retried every sample until accepted.
    #[serde(default)]
    pub request_swim_at: f64,
    /// Time the body leaves the pipe (s); absent means it starts in open water.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_pipe_at: Option<f64>,
    #[serde(default = "default_pipe_diameter")]
    pub pipe_inner_diameter: f64,
    #[serde(default = "default_transition")]
    pub transition_duration: f64,
}

fn default_start_mode() -> Mode {
    Mode::Crawl
}

fn default_pipe_diameter() -> f64 {
    TEST_PIPE_DIAMETER_M
}

fn default_transition() -> f64 {
    DEFAULT_TRANSITION_S
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverScenario {
    pub model: ManeuverModel,
    #[serde(default)]
    pub f_left: f64,
    #[serde(default)]
    pub f_right: f64,
    #[serde(default)]
    pub f_front: f64,
    #[serde(default)]
    pub f_back: f64,
    #[serde(default = "default_true")]
    pub propellers_expanded: bool,
    /// Simulated time (s).
    pub duration: f64,
    /// Initial state in trajectory column order; defaults to rest at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default = "default_steady_window")]
    pub steady_window: f64,
    #[serde(default = "default_steady_tol")]
    pub steady_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeSequence>,
}

fn default_steady_window() -> f64 {
    10.0
}

fn default_steady_tol() -> f64 {
    1e-3
}

impl ManeuverScenario {
    pub fn command(&self) -> ThrustCommand {
        ThrustCommand {
            f_left: self.f_left,
            f_right: self.f_right,
            f_front: self.f_front,
            f_back: self.f_back,
            propellers_expanded: self.propellers_expanded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyScenario {
    #[serde(default)]
    pub f_left: f64,
    #[serde(default)]
    pub f_right: f64,
    #[serde(default)]
    pub f_front: f64,
    #[serde(default)]
    pub f_back: f64,
}

impl SteadyScenario {
    pub fn command(&self) -> ThrustCommand {
        ThrustCommand {
            f_left: self.f_left,
            f_right: self.f_right,
            f_front: self.f_front,
            f_back: self.f_back,
            propellers_expanded: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ThrustVelocity,
    TurnMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    pub kind: SweepKind,
    #[serde(default = "default_force_min")]
    pub force_min: f64,
    #[serde(default = "default_force_max")]
    pub force_max: f64,
    /// Grid points per axis.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_force_min() -> f64 {
    -10.0
}

fn default_force_max() -> f64 {
    10.0
}

fn default_points() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitScenario {
    #[serde(default = "default_segments")]
    pub n_segments: usize,
    #[serde(default = "default_one")]
    pub k_modules: usize,
    #[serde(default = "default_one")]
    pub n_anchor: usize,
    #[serde(default = "default_one")]
    pub n_relax: usize,
    #[serde(default = "default_stroke")]
    pub delta_l: f64,
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    #[serde(default = "default_one")]
    pub cycles: usize,
    #[serde(default = "default_l_min")]
    pub l_min: f64,
    /// Observed speed (m/s) to invert for the effective stroke.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_speed: Option<f64>,
    /// Also tabulate the six single-module gaits of the six-segment robot.
    #[serde(default)]
    pub catalog: bool,
}

fn default_segments() -> usize {
    6
}

fn default_one() -> usize {
    1
}

fn default_stroke() -> f64 {
    DEFAULT_STROKE_M
}

fn default_delta_t() -> f64 {
    1.0
}

fn default_l_min() -> f64 {
    DEFAULT_MIN_LENGTH_M
}

impl GaitScenario {
    pub fn spec(&self) -> GaitSpec {
        GaitSpec {
            n_segments: self.n_segments,
            k_modules: self.k_modules,
            n_anchor: self.n_anchor,
            n_relax: self.n_relax,
            delta_l: self.delta_l,
            delta_t: self.delta_t,
            cycles: self.cycles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateScenario {
    #[serde(default)]
    pub targets: CalibrationTargets,
    #[serde(default = "default_policy")]
    pub heave: SplitPolicy,
    #[serde(default = "default_policy")]
    pub yaw: SplitPolicy,
}

fn default_policy() -> SplitPolicy {
    SplitPolicy::QuadraticOnly
}

impl CalibrateScenario {
    pub fn options(&self) -> CalibrationOptions {
        CalibrationOptions {
            heave: self.heave,
            yaw: self.yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Maneuver(ManeuverScenario),
    Steady(SteadyScenario),
    Sweep(SweepScenario),
    Gait(GaitScenario),
    Calibrate(CalibrateScenario),
    AddedMass(SpheroidGeometry),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Maneuver(_) => "maneuver",
            Scenario::Steady(_) => "steady",
            Scenario::Sweep(_) => "sweep",
            Scenario::Gait(_) => "gait",
            Scenario::Calibrate(_) => "calibrate",
            Scenario::AddedMass(_) => "added_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_table")]
    pub table: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_coefficients")]
    pub coefficients: String,
    /// Write every n-th sample of a trajectory.
    #[serde(default = "default_one")]
    pub sample_every: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_table() -> String {
    "table.csv".into()
}

fn default_summary() -> String {
    "summary.toml".into()
}

fn default_coefficients() -> String {
    "coefficients.toml".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            trajectory: default_trajectory(),
            table: default_table(),
            summary: default_summary(),
            coefficients: default_coefficients(),
            sample_every: 1,
        }
    }
}

impl OutputConfig {
    pub fn file_names(&self) -> [(&'static str, &str); 4] {
        [
            ("trajectory", &self.trajectory),
            ("table", &self.table),
            ("summary", &self.summary),
            ("coefficients", &self.coefficients),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub robot: RobotConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub scenario: Scenario,
    #[serde(default)]
    pub output: OutputConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text.get(..offset.min(text.len()))
        .unwrap_or(text)
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn classify(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    let message = err.message().to_string();
    if message.starts_with("unknown field") {
        ConfigError::UnknownKey {
            key: backticked(&message).unwrap_or(message),
            line,
        }
    } else if message.starts_with("missing field") {
        ConfigError::MissingField {
            field: backticked(&message).unwrap_or(message),
            line,
        }
    } else if message.starts_with("invalid type")
        || message.starts_with("invalid value")
        || message.starts_with("unknown variant")
        || message.starts_with("invalid length")
        || message.contains("wanted exactly 1 element")
    {
        ConfigError::TypeMismatch { detail: message, line }
    } else {
        ConfigError::Syntax { detail: message, line }
    }
}

/// Strict parse followed by invariant validation.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| classify(text, e))?;
    config.validate()?;
    Ok(config)
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invariant(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invariant(field, format!("must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.robot.resolve()?;
        self.integrator
            .validate()
            .map_err(|e| ConfigError::invariant("integrator", e.to_string()))?;
        self.validate_scenario()?;
        self.validate_output()
    }

    fn validate_scenario(&self) -> Result<(), ConfigError> {
        match &self.scenario {
            Scenario::Maneuver(m) => {
                for (name, v) in [
                    ("f_left", m.f_left),
                    ("f_right", m.f_right),
                    ("f_front", m.f_front),
                    ("f_back", m.f_back),
                ] {
                    finite(&format!("scenario.maneuver.{name}"), v)?;
                }
                m.command()
                    .validate()
                    .map_err(|e| ConfigError::invariant("scenario.maneuver.propellers_expanded", e.to_string()))?;
                positive("scenario.maneuver.duration", m.duration)?;
                let dt = self.integrator.output_dt;
                let n = (m.duration / dt).round();
                if (n * dt - m.duration).abs() > 1e-9 * m.duration.max(dt) {
                    return Err(ConfigError::invariant(
                        "scenario.maneuver.duration",
                        format!("{} s is not a whole multiple of output_dt {dt} s", m.duration),
                    ));
                }
                positive("scenario.maneuver.steady_window", m.steady_window)?;
                if m.steady_window > m.duration {
                    return Err(ConfigError::invariant(
                        "scenario.maneuver.steady_window",
                        "must not exceed the duration",
                    ));
                }
                positive("scenario.maneuver.steady_tol", m.steady_tol)?;
                if let Some(init) = &m.initial {
                    if init.len() != m.model.state_len() {
                        return Err(ConfigError::invariant(
                            "scenario.maneuver.initial",
                            format!(
                                "{} model needs {} values, got {}",
                                m.model.as_str(),
                                m.model.state_len(),
                                init.len()
                            ),
                        ));
                    }
                    if init.iter().any(|v| !v.is_finite()) {
                        return Err(ConfigError::invariant(
                            "scenario.maneuver.initial",
                            "values must be finite",
                        ));
                    }
                }
                if let Some(seq) = &m.mode {
                    if !matches!(seq.start, Mode::Crawl | Mode::Swim) {
                        return Err(ConfigError::invariant(
                            "scenario.maneuver.mode.start",
                            "must be crawl or swim",
                        ));
                    }
                    finite("scenario.maneuver.mode.request_swim_at", seq.request_swim_at)?;
                    if seq.request_swim_at < 0.0 {
                        return Err(ConfigError::invariant(
                            "scenario.maneuver.mode.request_swim_at",
                            "must be non-negative",
                        ));
                    }
                    if let Some(t) = seq.exit_pipe_at {
                        if !(t.is_finite() && t >= 0.0) {
                            return Err(ConfigError::invariant(
                                "scenario.maneuver.mode.exit_pipe_at",
                                "must be non-negative",
                            ));
                        }
                    }
                    positive("scenario.maneuver.mode.pipe_inner_diameter", seq.pipe_inner_diameter)?;
                    positive("scenario.maneuver.mode.transition_duration", seq.transition_duration)?;
                }
            }
            Scenario::Steady(s) => {
                for (name, v) in [
                    ("f_left", s.f_left),
                    ("f_right", s.f_right),
                    ("f_front", s.f_front),
                    ("f_back", s.f_back),
                ] {
                    finite(&format!("scenario.steady.{name}"), v)?;
                }
            }
            Scenario::Sweep(s) => {
                finite("scenario.sweep.force_min", s.force_min)?;
                finite("scenario.sweep.force_max", s.force_max)?;
                if s.force_min >= s.force_max {
                    return Err(ConfigError::invariant(
                        "scenario.sweep.force_max",
                        "must exceed force_min",
                    ));
                }
                if s.points < 2 {
                    return Err(ConfigError::invariant("scenario.sweep.points", "need at least 2"));
                }
                if s.kind == SweepKind::TurnMap && s.points > 2001 {
                    return Err(ConfigError::invariant(
                        "scenario.sweep.points",
                        "turn maps are limited to 2001 points per axis",
                    ));
                }
            }
            Scenario::Gait(g) => {
                validate_gait(&g.spec()).map_err(|violations| {
                    ConfigError::invariant(
                        "scenario.gait",
                        violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                    )
                })?;
                positive("scenario.gait.l_min", g.l_min)?;
                if let Some(v) = g.measured_speed {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(ConfigError::invariant(
                            "scenario.gait.measured_speed",
                            "must be non-negative",
                        ));
                    }
                }
                if g.cycles > 100_000 {
                    return Err(ConfigError::invariant("scenario.gait.cycles", "limited to 100000"));
                }
            }
            Scenario::Calibrate(c) => {
                c.targets
                    .validate()
                    .map_err(|e| ConfigError::invariant("scenario.calibrate.targets", e.to_string()))?;
                for (name, policy) in [("heave", c.heave), ("yaw", c.yaw)] {
                    if let SplitPolicy::FixedRatio(s) = policy {
                        if !(0.0..=1.0).contains(&s) {
                            return Err(ConfigError::invariant(
                                format!("scenario.calibrate.{name}.linear_share"),
                                "must lie in [0, 1]",
                            ));
                        }
                    }
                }
            }
            Scenario::AddedMass(geom) => {
                geom.validate()
                    .map_err(|e| ConfigError::invariant("scenario.added_mass", e.to_string()))?;
            }
        }
        Ok(())
    }

    fn validate_output(&self) -> Result<(), ConfigError> {
        let names = self.output.file_names();
        for (i, (key, name)) in names.iter().enumerate() {
            if name.is_empty() || name.contains('/') || name.contains('\\') || *name == "." || *name == ".." {
                return Err(ConfigError::invariant(
                    format!("output.{key}"),
                    "must be a plain file name inside output.dir",
                ));
            }
            if let Some((other, _)) = names[..i].iter().find(|(_, n)| n == name) {
                return Err(ConfigError::invariant(
                    format!("output.{key}"),
                    format!("collides with output.{other}"),
                ));
            }
        }
        if self.output.sample_every < 1 {
            return Err(ConfigError::invariant("output.sample_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario.maneuver]
model = "turn"
f_left = 10.0
f_right = -5.0
duration = 120.0
"#;

    #[test]
    fn minimal_maneuver_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert_eq!(cfg.output, OutputConfig::default());
        let Scenario::Maneuver(m) = &cfg.scenario else {
            panic!("wrong scenario")
        };
        assert!(m.propellers_expanded);
        assert_eq!(m.steady_window, 10.0);
        let robot = cfg.robot.resolve().unwrap();
        assert_eq!(robot.params, reference_params());
        assert_eq!(robot.provenance["x_uu"], Provenance::Calibrated);
        assert_eq!(robot.provenance["lambda11"], Provenance::SpheroidDerived);
        assert_eq!(robot.provenance["mass"], Provenance::Literature);
    }

    #[test]
    fn negative_coefficient_names_the_field() {
        let text = format!("[robot]\nx_uu = -1.0\n{MINIMAL}");
        match parse_config(&text) {
            Err(ConfigError::InvariantViolation { field, .. }) => assert_eq!(field, "robot.x_uu"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn misspelled_key_is_unknown() {
        let text = format!("[robot]\nlamda11 = 0.1\n{MINIMAL}");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.code(), "unknown-key");
        match err {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "lamda11");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_mistyped_fields() {
        let err = parse_config("[scenario.maneuver]\nmodel = \"turn\"\n").unwrap_err();
        assert_eq!(err.code(), "missing-field");
        let err = parse_config("[scenario.maneuver]\nmodel = \"turn\"\nduration = \"long\"\n").unwrap_err();
        assert_eq!(err.code(), "type-mismatch");
        let err = parse_config("[scenario.maneuver]\nmodel = \"spiral\"\nduration = 1.0\n").unwrap_err();
        assert_eq!(err.code(), "type-mismatch");
        let err = parse_config("[scenario\n").unwrap_err();
        assert_eq!(err.code(), "syntax");
        assert_eq!(parse_config("").unwrap_err().code(), "missing-field");
    }

    #[test]
    fn exactly_one_scenario() {
        let text = "[scenario.steady]\nf_left = 1.0\n[scenario.added_mass]\nsemi_major = 1.0\nsemi_minor = 0.5\nfluid_density = 1000.0\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn output_collisions_are_rejected() {
        let text = format!("{MINIMAL}\n[output]\ntable = \"summary.toml\"\n");
        assert_eq!(parse_config(&text).unwrap_err().code(), "invariant-violation");
        let text = format!("{MINIMAL}\n[output]\nsummary = \"../x.toml\"\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn folded_propellers_cannot_thrust() {
        let text =
            "[scenario.maneuver]\nmodel = \"surge\"\nf_left = 1.0\npropellers_expanded = false\nduration = 1.0\n";
        assert_eq!(parse_config(text).unwrap_err().code(), "invariant-violation");
    }

    #[test]
    fn duration_must_fit_grid() {
        let text = "[scenario.maneuver]\nmodel = \"surge\"\nduration = 1.005\n[integrator]\noutput_dt = 0.01\nsteady_window = 1.0\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn spheroid_block_derives_added_mass() {
        let text = format!(
            "[robot]\nlambda22 = 1.0\n[robot.spheroid]\nsemi_major = 0.5\nsemi_minor = 0.05\nfluid_density = 1000.0\n{MINIMAL}"
        );
        let cfg = parse_config(&text).unwrap();
        let robot = cfg.robot.resolve().unwrap();
        assert_eq!(robot.provenance["lambda11"], Provenance::SpheroidDerived);
        assert_eq!(robot.provenance["lambda22"], Provenance::UserSupplied);
        assert_eq!(robot.params.added.lambda22, 1.0);
        assert!(robot.params.added.lambda33 > 1.0);
    }

    #[test]
    fn gait_violations_are_reported_together() {
        let text = "[scenario.gait]\nn_anchor = 5\nn_relax = 4\n";
        match parse_config(text).unwrap_err() {
            ConfigError::InvariantViolation { detail, .. } => {
                assert!(detail.contains("exceeds"));
                assert!(detail.contains("divide"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_of_every_scenario_kind() {
        let docs = [
            MINIMAL.to_string(),
            "[robot]\nx_uu = 3.0\n[scenario.steady]\nf_left = 1.0\nf_right = 2.0\n".into(),
            "[scenario.sweep]\nkind = \"turn_map\"\npoints = 11\n".into(),
            "[scenario.gait]\nn_anchor = 2\nmeasured_speed = 0.005\ncatalog = true\n".into(),
            "[scenario.calibrate]\nheave = { policy = \"fixed_ratio\", linear_share = 0.25 }\n[scenario.calibrate.targets]\nturn_diameter = inf\nturn_f_left = 1.0\nturn_f_right = 1.0\n".into(),
            "[scenario.added_mass]\nsemi_major = 0.67\nsemi_minor = 0.0525\nfluid_density = 1000.0\n".into(),
            format!("{MINIMAL}[scenario.maneuver.mode]\nexit_pipe_at = 3.0\n"),
        ];
        for doc in docs {
            let cfg = parse_config(&doc).unwrap_or_else(|e| panic!("{doc}: {e}"));
            let again = parse_config(&cfg.to_toml_string()).unwrap();
            assert_eq!(cfg, again);
        }
    }
}
