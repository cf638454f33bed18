//! Equilibria of the reduced models, coefficient calibration from observed
//! steady states, force sweeps and algebraic circle fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN coefficients must fail the positivity checks

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hydro::{thrust_resultants, HydroParams, MomentArms, ThrustCommand};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyError {
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("no forward steady state: |X_T| = {thrust} N is below the turning drag {turn_drag} N")]
    NoForwardSteadyState { thrust: f64, turn_drag: f64 },
    #[error("invalid calibration target: {0}")]
    InvalidTarget(String),
    #[error("inconsistent calibration targets: {0}")]
    InconsistentTargets(String),
    #[error("sweep needs at least 2 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("circle fit is degenerate (points collinear or fewer than 3)")]
    NoCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnSense {
    Left,
    Right,
    Straight,
    InPlace,
}

impl TurnSense {
    pub fn flipped(self) -> Self {
        match self {
            TurnSense::Left => TurnSense::Right,
            TurnSense::Right => TurnSense::Left,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TurnSense::Left => "left",
            TurnSense::Right => "right",
            TurnSense::Straight => "straight",
            TurnSense::InPlace => "in-place",
        }
    }
}

/// Equilibrium of the reduced turning model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyTurn {
    pub u_ss: f64,
    /// Positive yaw rate turns the bow toward starboard (clockwise seen from above).
    pub r_ss: f64,
    pub tangential_speed: f64,
    /// `|2u/r|`; infinite for straight motion, zero for rotation in place.
    pub diameter: f64,
    pub turn_sense: TurnSense,
}

fn signed_sqrt(x: f64) -> f64 {
    x.signum() * x.abs().sqrt()
}

/// Positive root of `lin·s + quad·s|s| = force` with `sign(s) = sign(force)`.
fn solve_linear_quadratic(lin: f64, quad: f64, force: f64) -> f64 {
    if force == 0.0 {
        return 0.0;
    }
    let f = force.abs();
    // 2F / (b + sqrt(b² + 4aF)) avoids cancellation and covers quad = 0
    let s = 2.0 * f / (lin + (lin * lin + 4.0 * quad * f).sqrt());
    s.copysign(force)
}

pub fn steady_surge_speed(params: &HydroParams, total_thrust: f64) -> Result<f64, SteadyError> {
    let x_uu = params.horizontal.x_uu;
    if !(x_uu > 0.0) {
        return Err(SteadyError::InvalidCoefficient(format!(
            "X_uu must be positive, got {x_uu}"
        )));
    }
    Ok(signed_sqrt(total_thrust / x_uu))
}

pub fn steady_heave_speed(params: &HydroParams, total_thrust: f64) -> Result<f64, SteadyError> {
    let v = &params.vertical;
    if v.z_w < 0.0 || v.z_w_abs_w < 0.0 || (v.z_w == 0.0 && v.z_w_abs_w == 0.0) {
        return Err(SteadyError::InvalidCoefficient(format!(
            "Z_w and Z_w|w| must be non-negative and not both zero, got {} and {}",
            v.z_w, v.z_w_abs_w
        )));
    }
    Ok(solve_linear_quadratic(v.z_w, v.z_w_abs_w, total_thrust))
}

/// Steady yaw rate balancing `N_r·r + N_r|r|·r|r| = N_T`.
pub fn steady_yaw_rate(params: &HydroParams, yaw_moment: f64) -> Result<f64, SteadyError> {
    let h = &params.horizontal;
    if h.n_r < 0.0 || h.n_r_abs_r < 0.0 {
        return Err(SteadyError::InvalidCoefficient(
            "N_r and N_r|r| must be non-negative".into(),
        ));
    }
    if yaw_moment != 0.0 && h.n_r == 0.0 && h.n_r_abs_r == 0.0 {
        return Err(SteadyError::InvalidCoefficient(
            "N_r and N_r|r| are both zero under a nonzero yaw moment".into(),
        ));
    }
    Ok(solve_linear_quadratic(h.n_r, h.n_r_abs_r, yaw_moment))
}

pub fn steady_turn(params: &HydroParams, cmd: &ThrustCommand) -> Result<SteadyTurn, SteadyError> {
    let x_uu = params.horizontal.x_uu;
    if !(x_uu > 0.0) {
        return Err(SteadyError::InvalidCoefficient(format!(
            "X_uu must be positive, got {x_uu}"
        )));
    }
    let thrust = thrust_resultants(cmd, params);
    let r_ss = steady_yaw_rate(params, thrust.n)?;
    let turn_drag = params.horizontal.x_rr * r_ss * r_ss;
    let net = thrust.x.abs() - turn_drag;
    let u_ss = if thrust.x == 0.0 {
        0.0
    } else if net < 0.0 {
        return Err(SteadyError::NoForwardSteadyState {
            thrust: thrust.x.abs(),
            turn_drag,
        });
    } else {
        (net / x_uu).sqrt().copysign(thrust.x)
    };
    Ok(describe_turn(u_ss, r_ss))
}

fn describe_turn(u_ss: f64, r_ss: f64) -> SteadyTurn {
    let turn_sense = if r_ss == 0.0 {
        TurnSense::Straight
    } else if u_ss == 0.0 {
        TurnSense::InPlace
    } else if r_ss > 0.0 {
        TurnSense::Right
    } else {
        TurnSense::Left
    };
    let diameter = if r_ss == 0.0 {
        f64::INFINITY
    } else {
        (2.0 * u_ss / r_ss).abs()
    };
    SteadyTurn {
        u_ss,
        r_ss,
        tangential_speed: u_ss.abs(),
        diameter,
        turn_sense,
    }
}

/// How drag is split between a linear and a quadratic coefficient when only
/// one steady point is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "linear_share")]
pub enum SplitPolicy {
    QuadraticOnly,
    LinearOnly,
    /// Fraction in `[0, 1]` of the target force carried by the linear term.
    FixedRatio(f64),
}

impl SplitPolicy {
    fn linear_share(self) -> Result<f64, SteadyError> {
        match self {
            SplitPolicy::QuadraticOnly => Ok(0.0),
            SplitPolicy::LinearOnly => Ok(1.0),
            SplitPolicy::FixedRatio(s) if (0.0..=1.0).contains(&s) => Ok(s),
            SplitPolicy::FixedRatio(s) => Err(SteadyError::InvalidTarget(format!(
                "linear share must lie in [0, 1], got {s}"
            ))),
        }
    }

    /// (linear, quadratic) coefficients placing the equilibrium at `speed` under `force`.
    fn split(self, force: f64, speed: f64) -> Result<(f64, f64), SteadyError> {
        let s = self.linear_share()?;
        Ok((s * force / speed, (1.0 - s) * force / (speed * speed)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub heave: SplitPolicy,
    pub yaw: SplitPolicy,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            heave: SplitPolicy::QuadraticOnly,
            yaw: SplitPolicy::QuadraticOnly,
        }
    }
}

/// Observed steady states used to pin the unknown damping coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationTargets {
    /// Total lateral thrust in straight surge (N).
    pub surge_thrust: f64,
    pub surge_speed: f64,
    /// Total vertical thrust in straight heave (N).
    pub heave_thrust: f64,
    pub heave_speed: f64,
    pub turn_f_left: f64,
    pub turn_f_right: f64,
    /// Steady tangential speed of the turn (m/s).
    pub turn_speed: f64,
    /// Steady turning diameter (m); infinite for a straight run.
    pub turn_diameter: f64,
    pub arms: MomentArms,
}

impl Default for CalibrationTargets {
    /// The model's reported swimming steady states.
    fn default() -> Self {
        Self {
            surge_thrust: 0.6,
            surge_speed: 0.374,
            heave_thrust: 2.0,
            heave_speed: 0.234,
            turn_f_left: 10.0,
            turn_f_right: -5.0,
            turn_speed: 1.079,
            turn_diameter: 1.733,
            arms: MomentArms::default(),
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<(), SteadyError> {
        let positive = [
            ("surge_speed", self.surge_speed),
            ("heave_speed", self.heave_speed),
            ("turn_speed", self.turn_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SteadyError::InvalidTarget(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("surge_thrust", self.surge_thrust), ("heave_thrust", self.heave_thrust)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SteadyError::InvalidTarget(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.turn_diameter > 0.0) || self.turn_diameter.is_nan() {
            return Err(SteadyError::InvalidTarget(format!(
                "turn_diameter must be positive, got {}",
                self.turn_diameter
            )));
        }
        if !(self.turn_f_left.is_finite() && self.turn_f_right.is_finite()) {
            return Err(SteadyError::InvalidTarget("turn forces must be finite".into()));
        }
        let arms = [self.arms.left, self.arms.right, self.arms.front, self.arms.back];
        if arms.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(SteadyError::InvalidTarget("moment arms must be non-negative".into()));
        }
        Ok(())
    }

    pub fn turn_command(&self) -> ThrustCommand {
        ThrustCommand::lateral(self.turn_f_left, self.turn_f_right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub quantity: &'static str,
    pub target: f64,
    pub reproduced: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: HydroParams,
    pub residuals: Vec<Residual>,
    /// Caveats a user should see next to the coefficients.
    pub notes: Vec<String>,
}

impl Calibration {
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.relative_error).fold(0.0, f64::max)
    }
}

const NEGATIVE_X_RR_SLACK: f64 = 1e-6;

/// Reconstructs X_uu, X_rr, N_r/N_r|r| and Z_w/Z_w|w| from steady targets.
///
/// All other fields of `base` are kept; the lateral and vertical arms are
/// taken from the targets.
pub fn calibrate(
    targets: &CalibrationTargets,
    options: &CalibrationOptions,
    base: &HydroParams,
) -> Result<Calibration, SteadyError> {
    targets.validate()?;
    let mut params = *base;
    params.arms = targets.arms;
    let mut notes = vec![
        format!(
            "lateral arms L_L = {} m, L_R = {} m taken from the propeller axis span",
            targets.arms.left, targets.arms.right
        ),
        format!(
            "front/back arms L_F = {} m, L_B = {} m are assumed and do not affect any calibrated value",
            targets.arms.front, targets.arms.back
        ),
    ];

    let x_uu = targets.surge_thrust / targets.surge_speed.powi(2);
    params.horizontal.x_uu = x_uu;

    let (z_w, z_w_abs_w) = options.heave.split(targets.heave_thrust, targets.heave_speed)?;
    params.vertical.z_w = z_w;
    params.vertical.z_w_abs_w = z_w_abs_w;

    let cmd = targets.turn_command();
    let thrust = thrust_resultants(&cmd, &params);
    let r_ss = if targets.turn_diameter.is_infinite() {
        0.0
    } else {
        2.0 * targets.turn_speed / targets.turn_diameter
    };
    if r_ss == 0.0 || thrust.n == 0.0 {
        params.horizontal.x_rr = 0.0;
        params.horizontal.n_r = 0.0;
        params.horizontal.n_r_abs_r = 0.0;
        notes.push(
            "turn target has no yaw (straight line): X_rr and N_r coefficients are unconstrained and left at zero"
                .into(),
        );
    } else {
        let (n_r, n_r_abs_r) = options.yaw.split(thrust.n.abs(), r_ss)?;
        params.horizontal.n_r = n_r;
        params.horizontal.n_r_abs_r = n_r_abs_r;
        let x_rr = (thrust.x.abs() - x_uu * targets.turn_speed.powi(2)) / (r_ss * r_ss);
        if x_rr < -NEGATIVE_X_RR_SLACK {
            return Err(SteadyError::InconsistentTargets(format!(
                "turn speed {} m/s exceeds what thrust {} N sustains (X_rr would be {x_rr})",
                targets.turn_speed, thrust.x
            )));
        }
        params.horizontal.x_rr = x_rr.max(0.0);
    }

    let mut residuals = Vec::new();
    let mut push = |quantity, target: f64, reproduced: f64| {
        let relative_error = if target.is_infinite() && reproduced == target {
            0.0
        } else {
            ((reproduced - target) / target).abs()
        };
        residuals.push(Residual {
            quantity,
            target,
            reproduced,
            relative_error,
        });
    };
    push(
        "surge_speed_mps",
        targets.surge_speed,
        steady_surge_speed(&params, targets.surge_thrust)?,
    );
    push(
        "heave_speed_mps",
        targets.heave_speed,
        steady_heave_speed(&params, targets.heave_thrust)?,
    );
    let turn = steady_turn(&params, &cmd)?;
    push("turn_speed_mps", targets.turn_speed, turn.tangential_speed);
    push("turn_diameter_m", targets.turn_diameter, turn.diameter);

    Ok(Calibration {
        params,
        residuals,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThrustVelocityRow {
    pub force: f64,
    pub surge_speed: Result<f64, SteadyError>,
    pub heave_speed: Result<f64, SteadyError>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Straight-line steady speeds with the same total force on the lateral and vertical pairs.
pub fn sweep_thrust_velocity(
    params: &HydroParams,
    force_range: (f64, f64),
    n_points: usize,
) -> Result<Vec<ThrustVelocityRow>, SteadyError> {
    if n_points < 2 {
        return Err(SteadyError::TooFewPoints(n_points));
    }
    Ok(linspace(force_range.0, force_range.1, n_points)
        .into_iter()
        .map(|force| ThrustVelocityRow {
            force,
            surge_speed: steady_surge_speed(params, force),
            heave_speed: steady_heave_speed(params, force),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Finite,
    /// Zero yaw moment: straight line, diameter → ∞.
    InfiniteRegion,
    /// Zero net thrust: rotation in place (or rest), diameter → 0.
    InfinitesimalRegion,
    /// Turning drag exceeds thrust; no equilibrium with the commanded surge sign.
    NoSteadyState,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Finite => "finite",
            Region::InfiniteRegion => "infinite_region",
            Region::InfinitesimalRegion => "infinitesimal_region",
            Region::NoSteadyState => "no_steady_state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub f_left: f64,
    pub f_right: f64,
    pub region: Region,
    /// Tangential speed (m/s); NaN only in `NoSteadyState` cells.
    pub speed: f64,
    pub diameter: f64,
    /// `log10(diameter)` for finite cells only.
    pub ld: Option<f64>,
    pub turn_sense: Option<TurnSense>,
}

/// Steady turning over a grid of lateral propeller forces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub f_left: Vec<f64>,
    pub f_right: Vec<f64>,
    /// Row-major: `cells[i * f_right.len() + j]` holds `(f_left[i], f_right[j])`.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, i_left: usize, j_right: usize) -> &SweepCell {
        &self.cells[i_left * self.f_right.len() + j_right]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepTolerances {
    pub force: f64,
    pub torque: f64,
}

impl Default for SweepTolerances {
    fn default() -> Self {
        Self {
            force: 1e-9,
            torque: 1e-9,
        }
    }
}

pub fn sweep_turn_map(
    params: &HydroParams,
    f_left_range: (f64, f64),
    f_right_range: (f64, f64),
    grid_n: usize,
    eps: SweepTolerances,
) -> Result<SweepGrid, SteadyError> {
    if grid_n < 2 {
        return Err(SteadyError::TooFewPoints(grid_n));
    }
    let f_left = linspace(f_left_range.0, f_left_range.1, grid_n);
    let f_right = linspace(f_right_range.0, f_right_range.1, grid_n);
    let mut cells = Vec::with_capacity(grid_n * grid_n);
    for &fl in &f_left {
        for &fr in &f_right {
            cells.push(turn_cell(params, fl, fr, eps)?);
        }
    }
    Ok(SweepGrid { f_left, f_right, cells })
}

fn turn_cell(params: &HydroParams, f_left: f64, f_right: f64, eps: SweepTolerances) -> Result<SweepCell, SteadyError> {
    let cmd = ThrustCommand::lateral(f_left, f_right);
    let thrust = thrust_resultants(&cmd, params);
    let mut cell = SweepCell {
        f_left,
        f_right,
        region: Region::Finite,
        speed: 0.0,
        diameter: 0.0,
        ld: None,
        turn_sense: None,
    };
    if thrust.x.abs() < eps.force {
        let r_ss = steady_yaw_rate(params, if thrust.n.abs() < eps.torque { 0.0 } else { thrust.n })?;
        cell.region = Region::InfinitesimalRegion;
        cell.turn_sense = Some(describe_turn(0.0, r_ss).turn_sense);
        return Ok(cell);
    }
    if thrust.n.abs() < eps.torque {
        let u = steady_surge_speed(params, thrust.x)?;
        cell.region = Region::InfiniteRegion;
        cell.speed = u.abs();
        cell.diameter = f64::INFINITY;
        cell.turn_sense = Some(TurnSense::Straight);
        return Ok(cell);
    }
    match steady_turn(params, &cmd) {
        Ok(turn) => {
            cell.speed = turn.tangential_speed;
            cell.diameter = turn.diameter;
            cell.ld = Some(turn.diameter.log10());
            cell.turn_sense = Some(turn.turn_sense);
        }
        Err(SteadyError::NoForwardSteadyState { .. }) => {
            cell.region = Region::NoSteadyState;
            cell.speed = f64::NAN;
            cell.diameter = f64::NAN;
        }
        Err(e) => return Err(e),
    }
    Ok(cell)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFit {
    pub center: (f64, f64),
    pub radius: f64,
    pub rms_residual: f64,
}

/// Algebraic (Kåsa) least-squares circle through planar points.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<CircleFit, SteadyError> {
    if points.len() < 3 {
        return Err(SteadyError::NoCircle);
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / n, my / n);
    let scale = (points
        .iter()
        .map(|(x, y)| (x - mx).powi(2) + (y - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SteadyError::NoCircle);
    }

    // x² + y² + D x + E y + F = 0 in centred, scaled coordinates
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (x, y) in points {
        let x = (x - mx) / scale;
        let y = (y - my) / scale;
        let row = [x, y, 1.0];
        let rhs = -(x * x + y * y);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let [d, e, f] = solve3(ata, atb, n).ok_or(SteadyError::NoCircle)?;
    let cx = -d / 2.0;
    let cy = -e / 2.0;
    let r2 = cx * cx + cy * cy - f;
    if !(r2 > 0.0) {
        return Err(SteadyError::NoCircle);
    }
    let center = (mx + cx * scale, my + cy * scale);
    let radius = r2.sqrt() * scale;
    let rms_residual = (points
        .iter()
        .map(|(x, y)| ((x - center.0).hypot(y - center.1) - radius).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(CircleFit {
        center,
        radius,
        rms_residual,
    })
}

/// Gaussian elimination with partial pivoting; `None` when the system is numerically singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: f64) -> Option<[f64; 3]> {
    let tiny = 1e-10 * n;
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= tiny {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
