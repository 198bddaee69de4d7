//! Scalar abstraction shared by every module.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the physics is generic over (`f32` or `f64`).
///
/// Arithmetic and transcendental functions come from [`RealField`]; literal
/// conversion goes through num-traits.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i·phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

#[inline]
pub fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x % two_pi;
    if y > T::pi() {
        y -= two_pi;
    } else if y <= -T::pi() {
        y += two_pi;
    }
    y
}

/// `ln(1 + x)` accurate for small `x`.
pub fn ln_1p<T: Real>(x: T) -> T {
    let u = T::one() + x;
    if u == T::one() {
        x
    } else {
        // Goldberg's correction term.
        u.ln() * x / (u - T::one())
    }
}

/// `e^x - 1` accurate for small `x`.
pub fn exp_m1<T: Real>(x: T) -> T {
    let u = x.exp();
    if u == T::one() {
        x
    } else if u - T::one() == -T::one() {
        -T::one()
    } else {
        (u - T::one()) * x / u.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1p_and_expm1_match_std() {
        for &x in &[1e-18, 3e-11, 1e-5, 0.25, -0.3, 2.0] {
            assert!((ln_1p(x) - f64::ln_1p(x)).abs() <= 1e-15 * f64::ln_1p(x).abs().max(1e-300));
            assert!((exp_m1(x) - f64::exp_m1(x)).abs() <= 4e-16 * f64::exp_m1(x).abs());
        }
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let x = 0.37 * k as f64;
            let w = wrap_angle(x);
            assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            assert!(((x - w) / std::f64::consts::TAU).fract().abs() < 1e-12
                || (((x - w) / std::f64::consts::TAU).fract().abs() - 1.0).abs() < 1e-12);
        }
    }
}
