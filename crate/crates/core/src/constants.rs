//! Fixed physical constants (SI, exact CODATA 2018 values where defined).

/// Version tag written into output headers.
pub const CONSTANTS_VERSION: &str = "CODATA2018-v1";

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Reference atomic mass used for order-of-magnitude estimates (kg).
pub const REFERENCE_MASS: f64 = 1e-26;
/// Reference trap frequency (rad/s).
pub const REFERENCE_TRAP_FREQUENCY: f64 = 1e6;
/// Reference optical transition frequency `E₁/ħ` (rad/s).
pub const REFERENCE_OPTICAL_FREQUENCY: f64 = 1e15;
