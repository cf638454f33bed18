//! Explicit Runge–Kutta time integration.
//!
//! The adaptive method is the Dormand–Prince 5(4) pair with PI step-size
//! control and its native fourth-order continuous extension, which is used to
//! sample the solution on a uniform output grid. A classical fixed-step RK4 is
//! kept as a fallback and as a reference for order checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite derivative at t = {t}, y = {y:?}")]
    IntegrationFailure { t: f64, y: Vec<f64> },
    #[error("step size underflow at t = {t} (h = {h:e} below h_min)")]
    Stiffness { t: f64, h: f64 },
    #[error("state diverged at t = {t}")]
    Divergence { t: f64 },
    #[error("steady-state window {window} s exceeds trajectory duration {duration} s")]
    WindowTooLong { window: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adaptive54,
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step for the adaptive method, the step itself for RK4 (s).
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub method: Method,
    /// Spacing of the returned samples (s).
    pub output_dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            h_init: 1e-3,
            h_min: 1e-10,
            h_max: 0.1,
            method: Method::Adaptive54,
            output_dt: 0.01,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |msg: String| Err(IntegratorError::InvalidConfig(msg));
        let all = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("h_init", self.h_init),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
            ("output_dt", self.output_dt),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !(self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad(format!(
                "require h_min <= h_init <= h_max, got {} / {} / {}",
                self.h_min, self.h_init, self.h_max
            ));
        }
        Ok(())
    }
}

/// Uniformly sampled solution of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Free-form provenance (command, parameter fingerprint, ...).
    pub metadata: Vec<(String, String)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index]).collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        let idx = self.labels.iter().position(|l| l == label)?;
        Some(self.column(idx))
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn push_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// b5 - b4
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const PI_EXPO: f64 = 0.2 - PI_BETA * 0.75;
const MAX_STEPS: usize = 20_000_000;

/// Result of one attempted Dormand–Prince step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step54<const N: usize> {
    /// Fifth-order solution at `t + h`.
    pub y: [f64; N],
    /// Mixed abs/rel RMS norm of the embedded error; the step is acceptable when ≤ 1.
    pub error: f64,
    /// Suggested next step, bounded to `[h_min, h_max]`.
    pub h_next: f64,
    /// Derivative at `t + h` (first stage of the next step).
    pub f_end: [f64; N],
    dense: [[f64; N]; 5],
}

impl<const N: usize> Step54<N> {
    pub fn accepted(&self) -> bool {
        self.error <= 1.0
    }

    /// Evaluates the continuous extension at `theta ∈ [0, 1]` of the step.
    pub fn interpolate(&self, theta: f64) -> [f64; N] {
        let s1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.dense;
        std::array::from_fn(|i| c0[i] + theta * (c1[i] + s1 * (c2[i] + theta * (c3[i] + s1 * c4[i]))))
    }
}

fn check_finite<const N: usize>(t: f64, y: &[f64; N], f: &[f64; N]) -> Result<(), IntegratorError> {
    if f.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegratorError::IntegrationFailure { t, y: y.to_vec() })
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// PI step-size controller state.
#[derive(Debug, Clone, Copy)]
struct PiController {
    err_old: f64,
}

impl Default for PiController {
    fn default() -> Self {
        Self { err_old: 1e-4 }
    }
}

impl PiController {
    fn factor(&self, err: f64, accepted: bool) -> f64 {
        let err = err.max(1e-300);
        let fac = if accepted {
            SAFETY * err.powf(-PI_EXPO) * self.err_old.powf(PI_BETA)
        } else {
            SAFETY * err.powf(-0.2)
        };
        let upper = if accepted { FAC_MAX } else { 1.0 };
        fac.clamp(FAC_MIN, upper)
    }
}

fn dp54_step<F, const N: usize>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    config: &IntegratorConfig,
    controller: &PiController,
) -> Result<Step54<N>, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut eval = |tt: f64, yy: [f64; N]| {
        let k = f(tt, &yy);
        check_finite(tt, &yy, &k).map(|_| k)
    };
    let k2 = eval(t + C2 * h, axpy(y, h, &[(A21, k1)]))?;
    let k3 = eval(t + C3 * h, axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = eval(t + C4 * h, axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = eval(t + C5 * h, axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = eval(
        t + h,
        axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y5 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = eval(t + h, y5)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = config.abs_tol + config.rel_tol * y[i].abs().max(y5[i].abs());
        sum += (e / scale).powi(2);
    }
    let error = if N == 0 { 0.0 } else { (sum / N as f64).sqrt() };
    let accepted = error <= 1.0;
    let h_next = (h * controller.factor(error, accepted)).clamp(config.h_min, config.h_max);

    let ydiff: [f64; N] = std::array::from_fn(|i| y5[i] - y[i]);
    let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
    let dense = [
        *y,
        ydiff,
        bspl,
        std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
        std::array::from_fn(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])),
    ];
    Ok(Step54 {
        y: y5,
        error,
        h_next,
        f_end: k7,
        dense,
    })
}

/// One Dormand–Prince 5(4) step from `(t, y)` with step `h`.
///
/// The step is returned whether or not it meets the tolerance; callers check
/// [`Step54::accepted`].
pub fn step_adaptive54<F, const N: usize>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
    config: &IntegratorConfig,
) -> Result<Step54<N>, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegratorError::InvalidConfig(format!(
            "step must be positive, got {h}"
        )));
    }
    let k1 = f(t, y);
    check_finite(t, y, &k1)?;
    dp54_step(f, t, y, &k1, h, config, &PiController::default())
}

/// Classical fourth-order Runge–Kutta step.
pub fn step_rk4<F, const N: usize>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N], IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut eval = |tt: f64, yy: [f64; N]| {
        let k = f(tt, &yy);
        check_finite(tt, &yy, &k).map(|_| k)
    };
    let k1 = eval(t, *y)?;
    let k2 = eval(t + 0.5 * h, axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = eval(t + 0.5 * h, axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = eval(t + h, axpy(y, h, &[(1.0, &k3)]))?;
    Ok(axpy(
        y,
        h,
        &[(1.0 / 6.0, &k1), (2.0 / 6.0, &k2), (2.0 / 6.0, &k3), (1.0 / 6.0, &k4)],
    ))
}

/// Output grid `t0, t0 + dt, ..., t1`; the span must be a whole number of samples.
fn output_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>, IntegratorError> {
    let span = t1 - t0;
    let n = (span / dt).round();
    if n < 1.0 || ((n * dt - span).abs() > 1e-9 * span.max(dt)) {
        return Err(IntegratorError::InvalidConfig(format!(
            "time span {span} is not a whole multiple of output_dt {dt}"
        )));
    }
    let n = n as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
    grid.push(t1);
    Ok(grid)
}

fn ensure_finite_state<const N: usize>(t: f64, y: &[f64; N]) -> Result<(), IntegratorError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegratorError::Divergence { t })
    }
}

/// Integrates `y' = f(t, y)` over `t_span` and samples on the `output_dt` grid.
///
/// Output is bit-identical for identical inputs.
pub fn integrate<F, const N: usize>(
    mut f: F,
    y0: [f64; N],
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    config.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(IntegratorError::InvalidConfig(format!(
            "invalid time span [{t0}, {t1}]"
        )));
    }
    ensure_finite_state(t0, &y0)?;
    let grid = output_grid(t0, t1, config.output_dt)?;
    let states = match config.method {
        Method::Adaptive54 => run_adaptive(&mut f, y0, t0, t1, &grid, config)?,
        Method::FixedRk4 => run_rk4(&mut f, y0, t0, t1, &grid, config)?,
    };
    Ok(Trajectory {
        labels: (0..N).map(|i| format!("y{i}")).collect(),
        times: grid,
        states,
        metadata: vec![(
            "method".into(),
            match config.method {
                Method::Adaptive54 => "adaptive54".into(),
                Method::FixedRk4 => "fixed_rk4".into(),
            },
        )],
    })
}

fn run_adaptive<F, const N: usize>(
    f: &mut F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    let mut next_sample = 1;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    check_finite(t, &y, &k1)?;
    let mut h = config.h_init;
    let mut controller = PiController::default();

    for _ in 0..MAX_STEPS {
        if next_sample >= grid.len() {
            return Ok(out);
        }
        let remaining = t1 - t;
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        let step = dp54_step(f, t, &y, &k1, h_try, config, &controller)?;
        if !step.accepted() {
            if h_try <= config.h_min {
                return Err(IntegratorError::Stiffness { t, h: h_try });
            }
            h = (h_try * controller.factor(step.error, false)).max(config.h_min);
            continue;
        }
        ensure_finite_state(t + h_try, &step.y)?;
        let t_new = if last { t1 } else { t + h_try };
        while next_sample < grid.len() && grid[next_sample] <= t_new {
            let sample = if next_sample == grid.len() - 1 && last {
                step.y
            } else {
                step.interpolate((grid[next_sample] - t) / h_try)
            };
            out.push(sample.to_vec());
            next_sample += 1;
        }
        controller.err_old = step.error.max(1e-4);
        t = t_new;
        y = step.y;
        k1 = step.f_end;
        h = step.h_next;
    }
    Err(IntegratorError::Stiffness { t: t0, h: config.h_min })
}

fn run_rk4<F, const N: usize>(
    f: &mut F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let n_steps = ((t1 - t0) / config.h_init).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    let mut next_sample = 1;
    let mut y = y0;
    let mut f0 = f(t0, &y);
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        let t_new = if i + 1 == n_steps { t1 } else { t0 + (i + 1) as f64 * h };
        let y_new = step_rk4(f, t, &y, h)?;
        ensure_finite_state(t_new, &y_new)?;
        let f1 = f(t_new, &y_new);
        check_finite(t_new, &y_new, &f1)?;
        while next_sample < grid.len() && grid[next_sample] <= t_new + 1e-12 * h {
            let theta = ((grid[next_sample] - t) / h).clamp(0.0, 1.0);
            out.push(hermite(&y, &f0, &y_new, &f1, h, theta).to_vec());
            next_sample += 1;
        }
        y = y_new;
        f0 = f1;
    }
    Ok(out)
}

fn hermite<const N: usize>(y0: &[f64; N], f0: &[f64; N], y1: &[f64; N], f1: &[f64; N], h: f64, s: f64) -> [f64; N] {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Steadiness {
    Steady(f64),
    NotConverged { mean: f64, spread: f64 },
}

impl Steadiness {
    pub fn value(&self) -> Option<f64> {
        match self {
            Steadiness::Steady(v) => Some(*v),
            Steadiness::NotConverged { .. } => None,
        }
    }
}

const STEADY_ABS_FLOOR: f64 = 1e-9;

/// Windowed min/max steadiness test on one component over the trailing `window` seconds.
pub fn detect_steady(
    traj: &Trajectory,
    component: usize,
    window: f64,
    tol: f64,
) -> Result<Steadiness, IntegratorError> {
    let duration = traj.duration();
    if traj.is_empty() || window > duration * (1.0 + 1e-12) {
        return Err(IntegratorError::WindowTooLong { window, duration });
    }
    let t_end = *traj.times.last().unwrap();
    let start = t_end - window;
    let values: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= start - 1e-12 * duration.max(1.0))
        .map(|(_, s)| s[component])
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let spread = hi - lo;
    if spread <= tol * mean.abs().max(STEADY_ABS_FLOOR) {
        Ok(Steadiness::Steady(mean))
    } else {
        Ok(Steadiness::NotConverged { mean, spread })
    }
}
