//! Simulation and analysis toolkit for an earthworm-like robot that crawls
//! through pipes by peristalsis and swims with four propellers.
//!
//! * [`hydro`]: planar equations of motion and spheroid added mass
//! * [`integrator`]: Dormand-Prince 5(4) and RK4 time stepping
//! * [`steady`]: equilibria, calibration, force sweeps, circle fitting
//! * [`gait`]: peristaltic gait kinematics and event simulation
//! * [`mode`]: crawl/swim mode controller
//! * [`scenario`]: configuration files, scenario runs and output files

pub mod gait;
pub mod hydro;
pub mod integrator;
pub mod mode;
pub mod profile;
pub mod scenario;
pub mod steady;

pub use hydro::{HydroParams, ThrustCommand};
pub use integrator::{IntegratorConfig, Trajectory};
