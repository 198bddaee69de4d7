//! Bounded scalar minimisation.

use crate::error::{Error, Result};
use crate::num::Real;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol` (absolute) and returns the
/// best point seen with its value.
pub fn golden_section<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T, max_iter: usize) -> Result<(T, T)> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::OptimizerFailure(format!("invalid bracket [{}, {}]", a.as_f64(), b.as_f64())));
    }
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if !(fc.is_finite() && fd.is_finite()) {
            return Err(Error::OptimizerFailure("objective is not finite".into()));
        }
        if (b - a).abs() <= tol {
            return Ok(if fc < fd { (c, fc) } else { (d, fd) });
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::OptimizerFailure(format!("no convergence in {max_iter} iterations")))
}

/// Coarse scan with `samples` points followed by golden-section refinement
/// around the best sample. Suited to objectives with a few shallow local minima.
pub fn scan_then_golden<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, samples: usize, tol: T) -> Result<(T, T)> {
    let samples = samples.max(3);
    let step = (b - a) / T::from_usize_lossy(samples - 1);
    let mut best = (0, T::max_value().unwrap_or_else(T::one));
    for i in 0..samples {
        let v = f(a + step * T::from_usize_lossy(i));
        if !v.is_finite() {
            return Err(Error::OptimizerFailure("objective is not finite".into()));
        }
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = a + step * T::from_usize_lossy(best.0.saturating_sub(1));
    let hi = (a + step * T::from_usize_lossy(best.0 + 1)).min(b);
    golden_section(f, lo, hi, tol, 500)
}

/// Root of a sign change of `f` on `[a, b]` by bisection.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, rel_tol: T, max_iter: usize) -> Result<T> {
    let (mut a, mut b) = (a, b);
    let (fa, fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::OptimizerFailure("no sign change in bracket".into()));
    }
    let neg_at_a = fa < T::zero();
    for _ in 0..max_iter {
        let m = (a + b) / T::lit(2.0);
        if (b - a).abs() <= rel_tol * m.abs() {
            return Ok(m);
        }
        let fm = f(m);
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Err(Error::OptimizerFailure(format!("bisection did not converge in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let (x, fx) = golden_section(|x: f64| (x - 1.3).powi(2) + 2.0, -4.0, 5.0, 1e-10, 200).unwrap();
        assert!((x - 1.3).abs() < 1e-7 && (fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_minimum() {
        let (x, _) = golden_section(|x: f64| x, 0.0, 1.0, 1e-10, 200).unwrap();
        assert!(x < 1e-9);
    }

    #[test]
    fn scan_picks_global() {
        let f = |x: f64| (3.0 * x).cos() + 0.1 * x;
        let (x, _) = scan_then_golden(f, 0.0, 6.0, 60, 1e-10).unwrap();
        // 3x = π − asin(1/30)
        let expect = (std::f64::consts::PI - (1.0f64 / 30.0).asin()) / 3.0;
        assert!((x - expect).abs() < 1e-7, "{x}");
    }

    #[test]
    fn bisection() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x: f64| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_err());
    }

    #[test]
    fn bad_bracket() {
        assert!(matches!(golden_section(|x: f64| x, 1.0, 0.0, 1e-3, 10), Err(Error::OptimizerFailure(_))));
    }
}
