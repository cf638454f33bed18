//! Peristaltic in-pipe gait kinematics.
//!
//! Segments are numbered from the head (index 0) to the tail. Each segment is
//! either contracted (`l_min`, radially bulged, able to anchor) or elongated
//! (`l_min + Δl`). A driving module is a window of `n_A` anchored segments
//! followed tailward by `n_R` contracted segments waiting to anchor; all other
//! segments are elongated. Every actuation step the window moves `n_R`
//! segments toward the tail: the `n_R` head-most anchored segments elongate
//! and `n_R` elongated segments behind the window contract.
//!
//! During a step the post-step anchor block does not change length and holds
//! the pipe wall; its tail boundary is the fixed point from which all other
//! boundary positions are recomputed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("invalid gait: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<GaitViolation>),
    #[error("gait produces no net displacement; the stroke cannot be inferred")]
    UndefinedInversion,
    #[error("minimum segment length must be positive, got {0}")]
    InvalidSegmentLength(f64),
    #[error("measured speed must be finite and non-negative, got {0}")]
    InvalidMeasurement(f64),
    #[error("internal inconsistency at step {step}: {detail}")]
    Inconsistent { step: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitViolation {
    #[error("need at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("need at least one driving module")]
    NoModules,
    #[error("need at least one anchoring segment per module")]
    NoAnchors,
    #[error("need at least one relaxing/contracting segment per module")]
    NoRelaxing,
    #[error("k(n_A + n_R) = {required} exceeds the {available} available segments")]
    Capacity { required: usize, available: usize },
    #[error("n_R = {n_relax} does not divide N = {n_segments}")]
    Divisibility { n_relax: usize, n_segments: usize },
    #[error("k = {k_modules} modules cannot be evenly spaced over N = {n_segments} segments")]
    ModuleSpacing { k_modules: usize, n_segments: usize },
    #[error("axial stroke must be positive, got {0}")]
    NonPositiveStroke(f64),
    #[error("actuation time must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("need at least one cycle")]
    NoCycles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSpec {
    pub n_segments: usize,
    pub k_modules: usize,
    pub n_anchor: usize,
    pub n_relax: usize,
    /// Axial stroke of one segment (m).
    pub delta_l: f64,
    /// Duration of one actuation step (s).
    pub delta_t: f64,
    pub cycles: usize,
}

/// Default stroke: 2.773 cm per segment.
pub const DEFAULT_STROKE_M: f64 = 0.02773;
/// Contracted segment length (spring-steel belt).
pub const DEFAULT_MIN_LENGTH_M: f64 = 0.080;
/// Actuation angle used in the in-pipe trial; recorded only.
pub const ACTUATION_ANGLE_DEG: f64 = 145.0;

impl GaitSpec {
    /// A six-segment, single-module gait with unit actuation time.
    pub fn six_segment(n_anchor: usize, n_relax: usize) -> Self {
        Self {
            n_segments: 6,
            k_modules: 1,
            n_anchor,
            n_relax,
            delta_l: DEFAULT_STROKE_M,
            delta_t: 1.0,
            cycles: 1,
        }
    }

    /// Steps per wave period, `N / n_R`.
    pub fn steps_per_cycle(&self) -> usize {
        self.n_segments / self.n_relax
    }

    pub fn period(&self) -> f64 {
        self.steps_per_cycle() as f64 * self.delta_t
    }

    /// Segments that carry the displacement each cycle, `N − k(n_A + n_R)`.
    pub fn free_segments(&self) -> usize {
        self.n_segments - self.k_modules * (self.n_anchor + self.n_relax)
    }

    pub fn displacement_per_cycle(&self) -> f64 {
        self.free_segments() as f64 * self.delta_l
    }
}

/// Checks every gait invariant and returns all violations.
pub fn validate_gait(spec: &GaitSpec) -> Result<(), Vec<GaitViolation>> {
    let mut v = Vec::new();
    let n = spec.n_segments;
    if n < 2 {
        v.push(GaitViolation::TooFewSegments(n));
    }
    if spec.k_modules < 1 {
        v.push(GaitViolation::NoModules);
    }
    if spec.n_anchor < 1 {
        v.push(GaitViolation::NoAnchors);
    }
    if spec.n_relax < 1 {
        v.push(GaitViolation::NoRelaxing);
    }
    let required = spec
        .k_modules
        .saturating_mul(spec.n_anchor.saturating_add(spec.n_relax));
    if required > n {
        v.push(GaitViolation::Capacity { required, available: n });
    }
    if spec.n_relax >= 1 && !n.is_multiple_of(spec.n_relax) {
        v.push(GaitViolation::Divisibility {
            n_relax: spec.n_relax,
            n_segments: n,
        });
    }
    if spec.k_modules > 1 && !n.is_multiple_of(spec.k_modules) {
        v.push(GaitViolation::ModuleSpacing {
            k_modules: spec.k_modules,
            n_segments: n,
        });
    }
    if !(spec.delta_l.is_finite() && spec.delta_l > 0.0) {
        v.push(GaitViolation::NonPositiveStroke(spec.delta_l));
    }
    if !(spec.delta_t.is_finite() && spec.delta_t > 0.0) {
        v.push(GaitViolation::NonPositiveDuration(spec.delta_t));
    }
    if spec.cycles < 1 {
        v.push(GaitViolation::NoCycles);
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn ensure_valid(spec: &GaitSpec) -> Result<(), GaitError> {
    validate_gait(spec).map_err(GaitError::Invalid)
}

/// Closed-form average speed, `[N − k(n_A + n_R)] / (N / n_R) · Δl / Δt` (m/s).
pub fn average_speed(spec: &GaitSpec) -> Result<f64, GaitError> {
    ensure_valid(spec)?;
    Ok(spec.displacement_per_cycle() / spec.period())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub gait: usize,
    pub spec: GaitSpec,
    pub speed_mps: f64,
}

/// The six single-module gaits of the six-segment prototype: (n_A, n_R).
pub const TABLE_GAITS: [(usize, usize); 6] = [(1, 1), (2, 1), (3, 1), (4, 1), (1, 2), (2, 2)];

pub fn gait_catalog(delta_l: f64, delta_t: f64) -> Result<Vec<CatalogRow>, GaitError> {
    TABLE_GAITS
        .iter()
        .enumerate()
        .map(|(i, &(n_anchor, n_relax))| {
            let spec = GaitSpec {
                delta_l,
                delta_t,
                ..GaitSpec::six_segment(n_anchor, n_relax)
            };
            Ok(CatalogRow {
                gait: i + 1,
                spec,
                speed_mps: average_speed(&spec)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPhase {
    Anchored,
    Contracting,
    Relaxing,
    Idle,
}

impl SegmentPhase {
    pub fn code(self) -> char {
        match self {
            SegmentPhase::Anchored => 'A',
            SegmentPhase::Contracting => 'C',
            SegmentPhase::Relaxing => 'R',
            SegmentPhase::Idle => '-',
        }
    }
}

/// First segment of module `module` at step `step`.
fn module_offset(spec: &GaitSpec, module: usize, step: usize) -> usize {
    let n = spec.n_segments;
    (module * (n / spec.k_modules) + (step % spec.steps_per_cycle()) * spec.n_relax) % n
}

/// Phase layout at the start of `step`: per module, `n_A` Anchored then `n_R`
/// Contracting segments tailward; the rest Idle.
pub fn wave_state(spec: &GaitSpec, step: usize) -> Result<Vec<SegmentPhase>, GaitError> {
    ensure_valid(spec)?;
    Ok(layout(spec, step))
}

fn layout(spec: &GaitSpec, step: usize) -> Vec<SegmentPhase> {
    let n = spec.n_segments;
    let mut phases = vec![SegmentPhase::Idle; n];
    for module in 0..spec.k_modules {
        let start = module_offset(spec, module, step);
        for j in 0..spec.n_anchor {
            phases[(start + j) % n] = SegmentPhase::Anchored;
        }
        for j in 0..spec.n_relax {
            phases[(start + spec.n_anchor + j) % n] = SegmentPhase::Contracting;
        }
    }
    phases
}

fn is_contracted(phase: SegmentPhase) -> bool {
    matches!(phase, SegmentPhase::Anchored | SegmentPhase::Contracting)
}

/// What each segment does during the step from `step` to `step + 1`:
/// Anchored segments hold the wall, Relaxing ones elongate, Contracting ones
/// shorten, Idle ones keep their length without anchoring.
pub fn step_actuations(spec: &GaitSpec, step: usize) -> Result<Vec<SegmentPhase>, GaitError> {
    ensure_valid(spec)?;
    Ok(actuations(spec, step))
}

fn actuations(spec: &GaitSpec, step: usize) -> Vec<SegmentPhase> {
    let before = layout(spec, step);
    let after = layout(spec, step + 1);
    before
        .iter()
        .zip(&after)
        .map(|(&b, &a)| match (is_contracted(b), is_contracted(a)) {
            (true, false) => SegmentPhase::Relaxing,
            (false, true) => SegmentPhase::Contracting,
            _ if a == SegmentPhase::Anchored => SegmentPhase::Anchored,
            _ => SegmentPhase::Idle,
        })
        .collect()
}

fn lengths(spec: &GaitSpec, step: usize, l_min: f64) -> Vec<f64> {
    layout(spec, step)
        .into_iter()
        .map(|p| if is_contracted(p) { l_min } else { l_min + spec.delta_l })
        .collect()
}

/// Per-step record of a simulated gait. Positions increase toward the head.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrajectory {
    pub spec: GaitSpec,
    /// `steps + 1` timestamps starting at 0 (s).
    pub times: Vec<f64>,
    pub segment_lengths: Vec<Vec<f64>>,
    /// `N + 1` boundary positions per step, head boundary first (m).
    pub boundaries: Vec<Vec<f64>>,
    /// Phase layout at each recorded step.
    pub phases: Vec<Vec<SegmentPhase>>,
}

impl GaitTrajectory {
    pub fn head_positions(&self) -> Vec<f64> {
        self.boundaries.iter().map(|b| b[0]).collect()
    }

    pub fn head_displacement(&self) -> f64 {
        self.boundaries.last().unwrap()[0] - self.boundaries[0][0]
    }

    pub fn elapsed(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn average_speed(&self) -> f64 {
        self.head_displacement() / self.elapsed()
    }
}

fn boundaries_from(lengths: &[f64], fixed_index: usize, fixed_position: f64) -> Vec<f64> {
    let n = lengths.len();
    let mut x = vec![0.0; n + 1];
    x[fixed_index] = fixed_position;
    for i in (0..fixed_index).rev() {
        x[i] = x[i + 1] + lengths[i];
    }
    for i in fixed_index + 1..=n {
        x[i] = x[i - 1] - lengths[i - 1];
    }
    x
}

/// Discrete-event simulation of `cycles` full wave periods.
///
/// The body starts with its tail boundary at 0.
pub fn simulate_gait(spec: &GaitSpec, l_min: f64) -> Result<GaitTrajectory, GaitError> {
    ensure_valid(spec)?;
    if !(l_min.is_finite() && l_min > 0.0) {
        return Err(GaitError::InvalidSegmentLength(l_min));
    }
    let n = spec.n_segments;
    let steps = spec.cycles * spec.steps_per_cycle();
    let scale = n as f64 * (l_min + spec.delta_l);
    let tol = 1e-9 * scale;

    let mut len = lengths(spec, 0, l_min);
    let total: f64 = len.iter().sum();
    let mut x = boundaries_from(&len, n, 0.0);
    debug_assert!((x[0] - total).abs() <= tol);

    let mut traj = GaitTrajectory {
        spec: *spec,
        times: vec![0.0],
        segment_lengths: vec![len.clone()],
        boundaries: vec![x.clone()],
        phases: vec![layout(spec, 0)],
    };

    for step in 0..steps {
        let acts = actuations(spec, step);
        if !acts.contains(&SegmentPhase::Anchored) {
            return Err(GaitError::Inconsistent {
                step,
                detail: "no anchored segment".into(),
            });
        }
        let next_len = lengths(spec, step + 1, l_min);
        let anchor_tail = module_offset(spec, 0, step + 1) + spec.n_anchor;
        let fixed_index = (anchor_tail - 1) % n + 1;
        let next_x = boundaries_from(&next_len, fixed_index, x[fixed_index]);

        // every anchored segment of every module must hold its place
        for (i, phase) in acts.iter().enumerate() {
            if *phase == SegmentPhase::Anchored
                && ((next_x[i] - x[i]).abs() > tol || (next_x[i + 1] - x[i + 1]).abs() > tol)
            {
                return Err(GaitError::Inconsistent {
                    step,
                    detail: format!("anchored segment {i} slipped"),
                });
            }
        }
        len = next_len;
        x = next_x;
        traj.times.push((step + 1) as f64 * spec.delta_t);
        traj.segment_lengths.push(len.clone());
        traj.boundaries.push(x.clone());
        traj.phases.push(layout(spec, step + 1));
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlipEstimate {
    /// Stroke per segment that would explain the measured speed (m).
    pub effective_stroke: f64,
    /// `1 − Δl_eff / Δl`.
    pub slip_ratio: f64,
}

/// Inverts the closed-form speed over a measured speed.
pub fn effective_stroke_from_measurement(spec: &GaitSpec, measured_speed: f64) -> Result<SlipEstimate, GaitError> {
    ensure_valid(spec)?;
    if !(measured_speed.is_finite() && measured_speed >= 0.0) {
        return Err(GaitError::InvalidMeasurement(measured_speed));
    }
    if spec.free_segments() == 0 {
        return Err(GaitError::UndefinedInversion);
    }
    let effective_stroke = measured_speed * spec.period() / spec.free_segments() as f64;
    Ok(SlipEstimate {
        effective_stroke,
        slip_ratio: 1.0 - effective_stroke / spec.delta_l,
    })
}
