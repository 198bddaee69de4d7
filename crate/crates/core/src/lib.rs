//! Relativistic mass-energy effects on harmonically trapped quantum particles.
//!
//! A particle with internal levels `Eᵢ` has level-dependent mass
//! `Mᵢ = M₀ + Eᵢ/c²`, so each level sees its own oscillator mode. The crate
//! provides the per-level frames, a dense Fock-space engine, exact Ramsey
//! interference, closed-form oracles, clock-shift calculators, a periodic
//! driving protocol and Husimi Q-function diagnostics.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod analytic;
pub mod clock;
pub mod constants;
pub mod drive;
pub mod error;
pub mod fock;
pub mod model;
pub mod normal;
pub mod num;
pub mod optimize;
pub mod phasespace;
pub mod ramsey;
pub mod verify;

pub use error::{Error, Result};
pub use num::Real;

pub type SystemParams = model::SystemParams<f64>;
pub type ModeFrame = model::ModeFrame<f64>;
pub type FockWorkspace = fock::FockWorkspace<f64>;
pub type CMState = ramsey::CMState<f64>;
pub type RamseyTrace = ramsey::RamseyTrace<f64>;
