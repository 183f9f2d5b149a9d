//! Adaptive sliding mode control with class-K∞ barrier gains.
//!
//! The crate is organized bottom-up:
//!
//! * [`gains`]: the gain laws, their inverses and ultimate bounds;
//! * [`controllers`]: stateful control laws built on those gains;
//! * [`simkernel`]: the fixed-step closed loop `ds/dt = u + d`;
//! * [`analysis`]: convergence, chattering and overestimation metrics;
//! * [`experiment`]: declarative experiment files, batch runs, sweeps and
//!   plot-data emission.

pub mod analysis;
pub mod controllers;
pub mod experiment;
pub mod gains;
pub mod simkernel;

pub use analysis::{ConvergenceReport, Escape};
pub use controllers::{Controller, ControlLaw, SlidingController, TbgParams};
pub use gains::{GainLaw, UltimateBound};
pub use simkernel::{simulate, DisturbanceSignal, DisturbanceSpec, Sample, SimConfig, Trajectory};
