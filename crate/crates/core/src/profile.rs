//! The shipped robot profile and literature values used to annotate reports.

use sha2::{Digest, Sha256};

use crate::hydro::{spheroid_added_mass, HydroParams, SpheroidGeometry};
use crate::steady::{calibrate, CalibrationOptions, CalibrationTargets};

/// Bumped whenever the equations of motion change in a way that alters results.
pub const MODEL_REVISION: &str = "1";

/// Prototype rigid-body values, spheroid added mass of the 1.340 m × 0.105 m
/// envelope, and damping calibrated (quadratic-only) to the reported steady
/// states.
pub fn reference_params() -> HydroParams {
    let mut params = HydroParams::prototype_rigid_body();
    params.added = spheroid_added_mass(&SpheroidGeometry::robot_envelope()).expect("envelope geometry is valid");
    calibrate(&CalibrationTargets::default(), &CalibrationOptions::default(), &params)
        .expect("reference targets are consistent")
        .params
}

/// Short SHA-256 digest over every parameter, printed in full precision.
pub fn fingerprint(params: &HydroParams) -> String {
    let mut hasher = Sha256::new();
    for (name, value) in params.named_values() {
        hasher.update(format!("{name}={value:.17e};").as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiteratureKind {
    /// Output of the authors' own ODE model.
    Model,
    /// CFD result, quoted for comparison only.
    Cfd,
    /// Physical experiment.
    Experimental,
}

impl LiteratureKind {
    pub fn label(self) -> &'static str {
        match self {
            LiteratureKind::Model => "literature ODE model value",
            LiteratureKind::Cfd => "reference-only CFD value",
            LiteratureKind::Experimental => "experimental measurement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteratureValue {
    pub key: &'static str,
    pub value: f64,
    pub kind: LiteratureKind,
    pub note: &'static str,
}

const fn lit(key: &'static str, value: f64, kind: LiteratureKind, note: &'static str) -> LiteratureValue {
    LiteratureValue { key, value, kind, note }
}

pub const TURN_DIAMETER_ODE: LiteratureValue = lit(
    "literature_ode45_diameter_m",
    1.733,
    LiteratureKind::Model,
    "F_L = 10 N, F_R = -5 N",
);
pub const TURN_DIAMETER_CFD: LiteratureValue = lit(
    "literature_cfd_diameter_m",
    1.756,
    LiteratureKind::Cfd,
    "F_L = 10 N, F_R = -5 N",
);
pub const TURN_SPEED_ODE: LiteratureValue = lit(
    "literature_ode45_mps",
    1.079,
    LiteratureKind::Model,
    "tangential speed, F_L = 10 N, F_R = -5 N",
);
pub const TURN_SPEED_CFD: LiteratureValue = lit(
    "literature_cfd_mps",
    0.855,
    LiteratureKind::Cfd,
    "tangential speed, F_L = 10 N, F_R = -5 N",
);
pub const SURGE_SPEED_ODE: LiteratureValue = lit(
    "literature_ode45_mps",
    0.374,
    LiteratureKind::Model,
    "0.6 N total lateral thrust",
);
pub const SURGE_SPEED_CFD: LiteratureValue = lit(
    "literature_cfd_mps",
    4.61,
    LiteratureKind::Cfd,
    "0.6 N total lateral thrust; printed value, likely a misprint of 0.461",
);
pub const HEAVE_SPEED_ODE: LiteratureValue = lit(
    "literature_ode45_mps",
    0.234,
    LiteratureKind::Model,
    "2 N total vertical thrust",
);
pub const HEAVE_SPEED_CFD: LiteratureValue = lit(
    "literature_cfd_mps",
    0.251,
    LiteratureKind::Cfd,
    "2 N total vertical thrust",
);
pub const GAIT_MEASURED_SPEED: LiteratureValue = lit(
    "measured_reference_mmps",
    7.13,
    LiteratureKind::Experimental,
    "six-segment gait n_A = 1, n_R = 1, k = 1 in a 129 mm pipe at 145 deg actuation",
);
pub const GAIT_MAX_SPEED: LiteratureValue = lit(
    "literature_max_cmps",
    2.77,
    LiteratureKind::Model,
    "gait n_A = 1, n_R = 2",
);
pub const GAIT_MIN_SPEED: LiteratureValue = lit(
    "literature_min_cmps",
    0.46,
    LiteratureKind::Model,
    "gait n_A = 4, n_R = 1",
);
pub const FITTED_TURN_RADIUS: LiteratureValue = lit(
    "measured_circle_radius_m",
    2.980,
    LiteratureKind::Experimental,
    "pool turning trial; thrust command not reported",
);

/// Inner diameter of the test pipe (m).
pub const TEST_PIPE_DIAMETER_M: f64 = 0.129;
