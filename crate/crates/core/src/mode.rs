//! Crawl/swim mode switching with a pipe-clearance guard.
//!
//! Lateral propellers are folded while crawling. Switching to swimming goes
//! through `Expanding`, and back through `Contracting`; each intermediate
//! state lasts a fixed duration. Whether the robot is inside a pipe is
//! supplied by the operator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hydro::ThrustCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Crawl,
    Expanding,
    Swim,
    Contracting,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Crawl => "crawl",
            Mode::Expanding => "expanding",
            Mode::Swim => "swim",
            Mode::Contracting => "contracting",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub in_pipe: bool,
    /// Inner diameter of the surrounding pipe (m), when known.
    pub pipe_inner_diameter: Option<f64>,
}

impl Environment {
    pub fn open_water() -> Self {
        Self {
            in_pipe: false,
            pipe_inner_diameter: None,
        }
    }

    pub fn pipe(inner_diameter: f64) -> Self {
        Self {
            in_pipe: true,
            pipe_inner_diameter: Some(inner_diameter),
        }
    }

    /// True when a span of `span` metres fits. An unknown pipe diameter never fits.
    fn clears(&self, span: f64) -> bool {
        !self.in_pipe || self.pipe_inner_diameter.is_some_and(|d| span <= d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropellerGeometry {
    /// Lateral span with the propellers folded (m).
    pub folded_span: f64,
    /// Lateral span with the propellers deployed (m).
    pub expanded_span: f64,
}

impl Default for PropellerGeometry {
    fn default() -> Self {
        // folded span equals the body diameter
        Self {
            folded_span: 0.105,
            expanded_span: 0.145,
        }
    }
}

pub const DEFAULT_TRANSITION_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Rejection {
    #[error("pipe clearance: expanded span {expanded_span} m does not fit {}", describe_pipe(*.pipe_diameter))]
    PipeClearance {
        expanded_span: f64,
        pipe_diameter: Option<f64>,
    },
    #[error("already in {0:?}")]
    AlreadyInTarget(Mode),
    #[error("mode change already in progress ({0:?})")]
    MidTransition(Mode),
    #[error("{0:?} is not a valid target; request Crawl or Swim")]
    InvalidTarget(Mode),
}

fn describe_pipe(diameter: Option<f64>) -> String {
    match diameter {
        Some(d) => format!("a pipe of inner diameter {d} m"),
        None => "a pipe of unknown diameter".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeError {
    #[error("tick duration must be positive and finite, got {0}")]
    InvalidTick(f64),
    #[error("invalid propeller geometry: need expanded_span > folded_span > 0")]
    InvalidGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub mode: Mode,
    pub environment: Environment,
    pub geometry: PropellerGeometry,
    pub transition_duration: f64,
    /// Time spent in the current intermediate state (s).
    pub elapsed: f64,
}

impl ModeState {
    pub fn new(mode: Mode, environment: Environment, geometry: PropellerGeometry) -> Result<Self, ModeError> {
        if !(geometry.folded_span > 0.0 && geometry.expanded_span > geometry.folded_span) {
            return Err(ModeError::InvalidGeometry);
        }
        Ok(Self {
            mode,
            environment,
            geometry,
            transition_duration: DEFAULT_TRANSITION_S,
            elapsed: 0.0,
        })
    }

    pub fn with_transition_duration(mut self, seconds: f64) -> Self {
        self.transition_duration = seconds;
        self
    }

    /// Propellers are out of the folded position in every mode but `Crawl`.
    pub fn propellers_expanded(&self) -> bool {
        self.mode != Mode::Crawl
    }

    pub fn lateral_thrust_enabled(&self) -> bool {
        self.mode == Mode::Swim
    }

    /// Clamps a command to what the current mode can deliver.
    pub fn constrain(&self, cmd: &ThrustCommand) -> ThrustCommand {
        if self.lateral_thrust_enabled() {
            ThrustCommand {
                propellers_expanded: true,
                ..*cmd
            }
        } else {
            ThrustCommand {
                f_left: 0.0,
                f_right: 0.0,
                propellers_expanded: false,
                ..*cmd
            }
        }
    }

    pub fn request_transition(&self, target: Mode) -> Result<ModeState, Rejection> {
        match (self.mode, target) {
            (_, Mode::Expanding | Mode::Contracting) => Err(Rejection::InvalidTarget(target)),
            (Mode::Expanding | Mode::Contracting, _) => Err(Rejection::MidTransition(self.mode)),
            (current, target) if current == target => Err(Rejection::AlreadyInTarget(target)),
            (Mode::Crawl, Mode::Swim) => {
                if !self.environment.clears(self.geometry.expanded_span) {
                    return Err(Rejection::PipeClearance {
                        expanded_span: self.geometry.expanded_span,
                        pipe_diameter: self.environment.pipe_inner_diameter,
                    });
                }
                Ok(ModeState {
                    mode: Mode::Expanding,
                    elapsed: 0.0,
                    ..*self
                })
            }
            (Mode::Swim, Mode::Crawl) => Ok(ModeState {
                mode: Mode::Contracting,
                elapsed: 0.0,
                ..*self
            }),
            _ => unreachable!("all mode pairs covered"),
        }
    }

    pub fn tick(&self, dt: f64) -> Result<ModeState, ModeError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ModeError::InvalidTick(dt));
        }
        let mut next = *self;
        let done_at = self.transition_duration * (1.0 - 1e-9);
        match self.mode {
            Mode::Expanding | Mode::Contracting => {
                next.elapsed += dt;
                if next.elapsed >= done_at {
                    next.mode = if self.mode == Mode::Expanding {
                        Mode::Swim
                    } else {
                        Mode::Crawl
                    };
                    next.elapsed = 0.0;
                }
            }
            Mode::Crawl | Mode::Swim => {}
        }
        Ok(next)
    }

    /// Updates the operator-supplied environment. Entering a pipe that the
    /// deployed propellers do not fit is refused.
    pub fn set_environment(&self, environment: Environment) -> Result<ModeState, Rejection> {
        if self.propellers_expanded() && !environment.clears(self.geometry.expanded_span) {
            return Err(Rejection::PipeClearance {
                expanded_span: self.geometry.expanded_span,
                pipe_diameter: environment.pipe_inner_diameter,
            });
        }
        Ok(ModeState { environment, ..*self })
    }

    /// True when deployed propellers sit in a pipe they do not fit.
    pub fn violates_clearance(&self) -> bool {
        self.propellers_expanded() && !self.environment.clears(self.geometry.expanded_span)
    }
}
