//! Planar hydrodynamic model of the swimming mode.
//!
//! Body axes point front (x), right (y) and down (z); the global frame is
//! (ξ, η, ζ) with ζ pointing down. Buoyancy and weight are assumed to cancel
//! with coincident centers, so gravity never enters the reduced equations.
//!
//! Quadratic drag is written `c·s·|s|` rather than `c·s²` so that motion in
//! either direction dissipates. Induced surge drag from turning (`X_rr·r²`)
//! is applied against the direction of surge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HydroError {
    #[error("invalid geometry: {field} = {value} ({reason})")]
    InvalidGeometry {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid parameter: {field} = {value} ({reason})")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("lateral propellers are folded but commanded F_L = {f_left}, F_R = {f_right}")]
    FoldedThrust { f_left: f64, f_right: f64 },
}

/// Prolate spheroid envelope used for the potential-flow added-mass estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpheroidGeometry {
    /// Half of the body length (m).
    pub semi_major: f64,
    /// Half of the body diameter (m).
    pub semi_minor: f64,
    /// kg/m³
    pub fluid_density: f64,
}

impl SpheroidGeometry {
    /// Envelope of the prototype: 1.340 m long, 0.105 m diameter, fresh water.
    pub fn robot_envelope() -> Self {
        Self {
            semi_major: 0.670,
            semi_minor: 0.0525,
            fluid_density: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<(), HydroError> {
        let finite_pos = |field, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(HydroError::InvalidGeometry {
                    field,
                    value,
                    reason: "must be finite and positive",
                })
            }
        };
        finite_pos("semi_major", self.semi_major)?;
        finite_pos("semi_minor", self.semi_minor)?;
        finite_pos("fluid_density", self.fluid_density)?;
        if self.semi_major < self.semi_minor {
            return Err(HydroError::InvalidGeometry {
                field: "semi_major",
                value: self.semi_major,
                reason: "must be at least semi_minor (prolate or sphere)",
            });
        }
        Ok(())
    }

    pub fn eccentricity(&self) -> f64 {
        let ratio = self.semi_minor / self.semi_major;
        (1.0 - ratio * ratio).max(0.0).sqrt()
    }

    /// Mass of the displaced fluid, (4/3)π·ρ·a·b².
    pub fn displaced_mass(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.fluid_density * self.semi_major * self.semi_minor.powi(2)
    }
}

/// Diagonal added-mass terms λ11..λ66 (kg for translation, kg·m² for rotation).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AddedMass {
    pub lambda11: f64,
    pub lambda22: f64,
    pub lambda33: f64,
    pub lambda44: f64,
    pub lambda55: f64,
    pub lambda66: f64,
}

/// Dimensionless Lamb coefficients of a prolate spheroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpheroidCoefficients {
    pub eccentricity: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// Longitudinal inertia coefficient.
    pub k1: f64,
    /// Transverse inertia coefficient.
    pub k2: f64,
    /// Rotational inertia coefficient about a transverse axis.
    pub k_rot: f64,
}

// Below this eccentricity the closed forms lose digits to cancellation in
// atanh(e) - e, so the shape factors are summed from their power series.
const SERIES_ECCENTRICITY: f64 = 0.1;

/// `c_n = 2 / ((2n-1)(2n+1))`, the series weights shared by α₀ and β₀.
fn series_weight(n: u32) -> f64 {
    let n = n as f64;
    2.0 / ((2.0 * n - 1.0) * (2.0 * n + 1.0))
}

impl SpheroidCoefficients {
    pub fn from_eccentricity(e: f64) -> Self {
        let e2 = e * e;
        let (alpha0, beta0, beta_minus_alpha) = if e < SERIES_ECCENTRICITY {
            // β₀ = Σ c_n e^{2n-2},  α₀ = c_1 - 2 Σ_{n≥2} c_n e^{2n-2}
            let mut tail = 0.0;
            let mut pow = e2;
            for n in 2..40 {
                tail += series_weight(n) * pow;
                pow *= e2;
            }
            let c1 = series_weight(1);
            (c1 - 2.0 * tail, c1 + tail, 3.0 * tail)
        } else {
            let atanh = e.atanh();
            let e3 = e2 * e;
            let alpha0 = 2.0 * (1.0 - e2) / e3 * (atanh - e);
            let beta0 = 1.0 / e2 - (1.0 - e2) / e3 * atanh;
            (alpha0, beta0, beta0 - alpha0)
        };
        let k1 = alpha0 / (2.0 - alpha0);
        let k2 = beta0 / (2.0 - beta0);
        let k_rot = if e == 0.0 {
            0.0
        } else {
            let denom = (2.0 - e2) * (2.0 * e2 - (2.0 - e2) * beta_minus_alpha);
            e2 * e2 * beta_minus_alpha / denom
        };
        Self {
            eccentricity: e,
            alpha0,
            beta0,
            k1,
            k2,
            k_rot,
        }
    }
}

/// Added mass of a prolate spheroid in ideal fluid.
///
/// λ44 is zero for a body of revolution. A sphere (a = b) takes the exact
/// limit k1 = k2 = ½, k' = 0.
pub fn spheroid_added_mass(geom: &SpheroidGeometry) -> Result<AddedMass, HydroError> {
    geom.validate()?;
    let coeffs = if geom.semi_major == geom.semi_minor {
        SpheroidCoefficients {
            eccentricity: 0.0,
            alpha0: 2.0 / 3.0,
            beta0: 2.0 / 3.0,
            k1: 0.5,
            k2: 0.5,
            k_rot: 0.0,
        }
    } else {
        SpheroidCoefficients::from_eccentricity(geom.eccentricity())
    };
    let m_f = geom.displaced_mass();
    let a2 = geom.semi_major.powi(2);
    let b2 = geom.semi_minor.powi(2);
    let rot = coeffs.k_rot * m_f * (a2 + b2) / 5.0;
    Ok(AddedMass {
        lambda11: coeffs.k1 * m_f,
        lambda22: coeffs.k2 * m_f,
        lambda33: coeffs.k2 * m_f,
        lambda44: 0.0,
        lambda55: rot,
        lambda66: rot,
    })
}

/// Viscous coefficients of the surge, sway and yaw rows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HorizontalDamping {
    pub x_uu: f64,
    pub x_vv: f64,
    pub x_rr: f64,
    pub x_vr: f64,
    pub y_v: f64,
    pub y_r: f64,
    pub y_v_abs_v: f64,
    pub y_r_abs_r: f64,
    pub y_v_abs_r: f64,
    pub n_v: f64,
    pub n_r: f64,
    pub n_v_abs_v: f64,
    pub n_r_abs_r: f64,
    pub n_v_abs_r: f64,
}

/// Viscous coefficients of the heave and pitch rows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VerticalDamping {
    pub z_w: f64,
    pub z_abs_w: f64,
    pub z_q: f64,
    pub z_w_abs_w: f64,
    pub z_ww: f64,
    pub z_w_abs_q: f64,
    pub z_q_abs_q: f64,
    pub m_w: f64,
    pub m_abs_w: f64,
    pub m_q: f64,
    pub m_w_abs_w: f64,
    pub m_ww: f64,
    pub m_w_abs_q: f64,
    pub m_q_abs_q: f64,
}

/// Distances from the mass center to each propeller (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentArms {
    pub left: f64,
    pub right: f64,
    pub front: f64,
    pub back: f64,
}

impl Default for MomentArms {
    fn default() -> Self {
        // 145 mm lateral axis span halved; front/back are assumed values
        Self {
            left: 0.0725,
            right: 0.0725,
            front: 0.35,
            back: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub inertia_x: f64,
    pub inertia_y: f64,
    pub inertia_z: f64,
    pub added: AddedMass,
    pub horizontal: HorizontalDamping,
    pub vertical: VerticalDamping,
    pub arms: MomentArms,
}

impl HydroParams {
    /// Rigid-body values of the prototype with every hydrodynamic term zero.
    pub fn prototype_rigid_body() -> Self {
        Self {
            mass: 5.542,
            inertia_x: 0.007239,
            inertia_y: 0.684939,
            inertia_z: 0.685918,
            added: AddedMass::default(),
            horizontal: HorizontalDamping::default(),
            vertical: VerticalDamping::default(),
            arms: MomentArms::default(),
        }
    }

    /// Every named scalar with its field path, in a fixed order.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let h = &self.horizontal;
        let v = &self.vertical;
        let a = &self.added;
        vec![
            ("mass", self.mass),
            ("inertia_x", self.inertia_x),
            ("inertia_y", self.inertia_y),
            ("inertia_z", self.inertia_z),
            ("lambda11", a.lambda11),
            ("lambda22", a.lambda22),
            ("lambda33", a.lambda33),
            ("lambda44", a.lambda44),
            ("lambda55", a.lambda55),
            ("lambda66", a.lambda66),
            ("x_uu", h.x_uu),
            ("x_vv", h.x_vv),
            ("x_rr", h.x_rr),
            ("x_vr", h.x_vr),
            ("y_v", h.y_v),
            ("y_r", h.y_r),
            ("y_v_abs_v", h.y_v_abs_v),
            ("y_r_abs_r", h.y_r_abs_r),
            ("y_v_abs_r", h.y_v_abs_r),
            ("n_v", h.n_v),
            ("n_r", h.n_r),
            ("n_v_abs_v", h.n_v_abs_v),
            ("n_r_abs_r", h.n_r_abs_r),
            ("n_v_abs_r", h.n_v_abs_r),
            ("z_w", v.z_w),
            ("z_abs_w", v.z_abs_w),
            ("z_q", v.z_q),
            ("z_w_abs_w", v.z_w_abs_w),
            ("z_ww", v.z_ww),
            ("z_w_abs_q", v.z_w_abs_q),
            ("z_q_abs_q", v.z_q_abs_q),
            ("m_w", v.m_w),
            ("m_abs_w", v.m_abs_w),
            ("m_q", v.m_q),
            ("m_w_abs_w", v.m_w_abs_w),
            ("m_ww", v.m_ww),
            ("m_w_abs_q", v.m_w_abs_q),
            ("m_q_abs_q", v.m_q_abs_q),
            ("arm_left", self.arms.left),
            ("arm_right", self.arms.right),
            ("arm_front", self.arms.front),
            ("arm_back", self.arms.back),
        ]
    }

    pub fn validate(&self) -> Result<(), HydroError> {
        for (field, value) in self.named_values() {
            if !value.is_finite() {
                return Err(HydroError::InvalidParameter {
                    field,
                    value,
                    reason: "must be finite",
                });
            }
            let strictly_positive = matches!(field, "mass" | "inertia_x" | "inertia_y" | "inertia_z");
            if strictly_positive && value <= 0.0 {
                return Err(HydroError::InvalidParameter {
                    field,
                    value,
                    reason: "must be positive",
                });
            }
            if value < 0.0 {
                return Err(HydroError::InvalidParameter {
                    field,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        Ok(())
    }

    pub fn surge_inertia(&self) -> f64 {
        self.mass + self.added.lambda11
    }

    pub fn sway_inertia(&self) -> f64 {
        self.mass + self.added.lambda22
    }

    pub fn heave_inertia(&self) -> f64 {
        self.mass + self.added.lambda33
    }

    pub fn pitch_inertia(&self) -> f64 {
        self.inertia_y + self.added.lambda55
    }

    pub fn yaw_inertia(&self) -> f64 {
        self.inertia_z + self.added.lambda66
    }
}

/// Commanded propeller forces (N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustCommand {
    pub f_left: f64,
    pub f_right: f64,
    pub f_front: f64,
    pub f_back: f64,
    pub propellers_expanded: bool,
}

impl Default for ThrustCommand {
    fn default() -> Self {
        Self {
            f_left: 0.0,
            f_right: 0.0,
            f_front: 0.0,
            f_back: 0.0,
            propellers_expanded: true,
        }
    }
}

impl ThrustCommand {
    pub fn lateral(f_left: f64, f_right: f64) -> Self {
        Self {
            f_left,
            f_right,
            ..Self::default()
        }
    }

    pub fn vertical(f_front: f64, f_back: f64) -> Self {
        Self {
            f_front,
            f_back,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HydroError> {
        if !self.propellers_expanded && (self.f_left != 0.0 || self.f_right != 0.0) {
            return Err(HydroError::FoldedThrust {
                f_left: self.f_left,
                f_right: self.f_right,
            });
        }
        Ok(())
    }

    /// The same command with the lateral propellers swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            f_left: self.f_right,
            f_right: self.f_left,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustResultants {
    /// N
    pub x: f64,
    /// N
    pub z: f64,
    /// Pitch moment, N·m.
    pub m: f64,
    /// Yaw moment, N·m.
    pub n: f64,
}

pub fn thrust_resultants(cmd: &ThrustCommand, params: &HydroParams) -> ThrustResultants {
    let arms = &params.arms;
    ThrustResultants {
        x: cmd.f_left + cmd.f_right,
        z: cmd.f_front + cmd.f_back,
        m: -cmd.f_front * arms.front + cmd.f_back * arms.back,
        n: cmd.f_left * arms.left - cmd.f_right * arms.right,
    }
}

/// Horizontal-plane state: global pose (ξ, η, α) and body velocities (u, v, r).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HorizontalState {
    pub xi: f64,
    pub eta: f64,
    /// Heading, unwrapped.
    pub alpha: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl HorizontalState {
    pub const LABELS: [&'static str; 6] = ["xi_m", "eta_m", "alpha_rad", "u_mps", "v_mps", "r_radps"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.xi, self.eta, self.alpha, self.u, self.v, self.r]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        Self {
            xi: y[0],
            eta: y[1],
            alpha: y[2],
            u: y[3],
            v: y[4],
            r: y[5],
        }
    }
}

/// State of the reduced turning model (no sway).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TurnState {
    pub xi: f64,
    pub eta: f64,
    pub alpha: f64,
    pub u: f64,
    pub r: f64,
}

impl TurnState {
    pub const LABELS: [&'static str; 5] = ["xi_m", "eta_m", "alpha_rad", "u_mps", "r_radps"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.xi, self.eta, self.alpha, self.u, self.r]
    }

    pub fn from_array(y: &[f64; 5]) -> Self {
        Self {
            xi: y[0],
            eta: y[1],
            alpha: y[2],
            u: y[3],
            r: y[4],
        }
    }
}

/// Vertical-plane state: global (ξ, ζ, θ) with ζ down and θ bow-up; body (u, w, q).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerticalState {
    pub xi: f64,
    pub zeta: f64,
    /// Pitch, unwrapped.
    pub theta: f64,
    pub u: f64,
    pub w: f64,
    pub q: f64,
}

impl VerticalState {
    pub const LABELS: [&'static str; 6] = ["xi_m", "zeta_m", "theta_rad", "u_mps", "w_mps", "q_radps"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.xi, self.zeta, self.theta, self.u, self.w, self.q]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        Self {
            xi: y[0],
            zeta: y[1],
            theta: y[2],
            u: y[3],
            w: y[4],
            q: y[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurgeState {
    pub xi: f64,
    pub v_xi: f64,
}

impl SurgeState {
    pub const LABELS: [&'static str; 2] = ["xi_m", "v_xi_mps"];
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeaveState {
    pub zeta: f64,
    pub v_zeta: f64,
}

impl HeaveState {
    pub const LABELS: [&'static str; 2] = ["zeta_m", "v_zeta_mps"];
}

#[inline]
fn sq_signed(s: f64) -> f64 {
    s * s.abs()
}

/// `sign(s)` with `sign(0) = 0`.
#[inline]
fn signum0(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn surge_viscous(d: &HorizontalDamping, u: f64, v: f64, r: f64) -> f64 {
    d.x_uu * sq_signed(u) + signum0(u) * (d.x_vv * v * v + d.x_rr * r * r) + d.x_vr * v * r
}

fn sway_viscous(d: &HorizontalDamping, v: f64, r: f64) -> f64 {
    d.y_v * v + d.y_r * r + d.y_v_abs_v * sq_signed(v) + d.y_r_abs_r * sq_signed(r) + d.y_v_abs_r * v * r.abs()
}

fn yaw_viscous(d: &HorizontalDamping, v: f64, r: f64) -> f64 {
    d.n_v * v + d.n_r * r + d.n_v_abs_v * sq_signed(v) + d.n_r_abs_r * sq_signed(r) + d.n_v_abs_r * v * r.abs()
}

/// Time derivative of the full horizontal-plane model (surge, sway, yaw).
pub fn horizontal_derivatives(state: &HorizontalState, params: &HydroParams, cmd: &ThrustCommand) -> HorizontalState {
    let HorizontalState { alpha, u, v, r, .. } = *state;
    let lam = &params.added;
    let d = &params.horizontal;
    let thrust = thrust_resultants(cmd, params);
    let m = params.mass;

    let u_dot = (m * r * v + lam.lambda22 * v * r - surge_viscous(d, u, v, r) + thrust.x) / params.surge_inertia();
    let v_dot = (-m * r * u - lam.lambda11 * u * r - sway_viscous(d, v, r)) / params.sway_inertia();
    let r_dot = ((lam.lambda11 - lam.lambda22) * u * v - yaw_viscous(d, v, r) + thrust.n) / params.yaw_inertia();
    let (sin_a, cos_a) = alpha.sin_cos();
    HorizontalState {
        xi: u * cos_a - v * sin_a,
        eta: u * sin_a + v * cos_a,
        alpha: r,
        u: u_dot,
        v: v_dot,
        r: r_dot,
    }
}

/// Time derivative of the reduced turning model (sway dropped).
pub fn reduced_turn_derivatives(state: &TurnState, params: &HydroParams, cmd: &ThrustCommand) -> TurnState {
    let TurnState { alpha, u, r, .. } = *state;
    let d = &params.horizontal;
    let thrust = thrust_resultants(cmd, params);
    let u_dot = (-d.x_uu * sq_signed(u) - signum0(u) * d.x_rr * r * r + thrust.x) / params.surge_inertia();
    let r_dot = (-d.n_r * r - d.n_r_abs_r * sq_signed(r) + thrust.n) / params.yaw_inertia();
    let (sin_a, cos_a) = alpha.sin_cos();
    TurnState {
        xi: u * cos_a,
        eta: u * sin_a,
        alpha: r,
        u: u_dot,
        r: r_dot,
    }
}

/// Straight-line surge acceleration (m/s²).
pub fn surge_derivative(v_xi: f64, params: &HydroParams, cmd: &ThrustCommand) -> f64 {
    (-params.horizontal.x_uu * sq_signed(v_xi) + cmd.f_left + cmd.f_right) / params.surge_inertia()
}

fn heave_viscous(d: &VerticalDamping, w: f64, q: f64) -> f64 {
    // |w| and w² terms take the sign of w so every pure-heave term dissipates
    d.z_w * w
        + d.z_abs_w * w
        + d.z_q * q
        + d.z_w_abs_w * sq_signed(w)
        + d.z_ww * sq_signed(w)
        + d.z_w_abs_q * w * q.abs()
        + d.z_q_abs_q * sq_signed(q)
}

fn pitch_viscous(d: &VerticalDamping, w: f64, q: f64) -> f64 {
    d.m_w * w
        + d.m_abs_w * w
        + d.m_q * q
        + d.m_w_abs_w * sq_signed(w)
        + d.m_ww * sq_signed(w)
        + d.m_w_abs_q * w * q.abs()
        + d.m_q_abs_q * sq_signed(q)
}

/// Time derivative of the vertical-plane model (surge, heave, pitch).
pub fn vertical_derivatives(state: &VerticalState, params: &HydroParams, cmd: &ThrustCommand) -> VerticalState {
    let VerticalState { theta, u, w, q, .. } = *state;
    let lam = &params.added;
    let thrust = thrust_resultants(cmd, params);
    let m = params.mass;
    let x_visc = params.horizontal.x_uu * sq_signed(u);

    let u_dot = (-m * q * w - lam.lambda33 * w * q - x_visc + thrust.x) / params.surge_inertia();
    let w_dot =
        (m * q * u + lam.lambda11 * u * q - heave_viscous(&params.vertical, w, q) + thrust.z) / params.heave_inertia();
    let q_dot = ((lam.lambda33 - lam.lambda11) * u * w - pitch_viscous(&params.vertical, w, q) + thrust.m)
        / params.pitch_inertia();
    let (sin_t, cos_t) = theta.sin_cos();
    VerticalState {
        xi: u * cos_t + w * sin_t,
        zeta: -u * sin_t + w * cos_t,
        theta: q,
        u: u_dot,
        w: w_dot,
        q: q_dot,
    }
}

/// Straight-line heave acceleration (m/s², positive down).
pub fn heave_derivative(v_zeta: f64, params: &HydroParams, cmd: &ThrustCommand) -> f64 {
    let d = &params.vertical;
    (-d.z_w * v_zeta - d.z_w_abs_w * sq_signed(v_zeta) + cmd.f_front + cmd.f_back) / params.heave_inertia()
}
