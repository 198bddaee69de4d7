//! Clock observables: transition energy gaps, fractional frequency shifts,
//! the gravitational lower bound on the shift and thermal states.
//!
//! The fractional shift of level `i` with the centre of mass in `|n⟩` is, to
//! lowest order in `1/c²`,
//! `δ(ω₀) = −g²/(ω₀²c²) − (ħω₀/2M₀c²)(n + ½)`.
//! It is negative for every trap frequency and closest to zero at
//! `ω₀ = (4g²M₀/ħ(n+½))^{1/3}`, where `δ = −3g²/(ω₀²c²)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fock::{CMatrix, FockWorkspace};
use crate::model::SystemParams;
use crate::num::{cplx, exp_m1, Real};
use crate::optimize::{bisect, golden_section};
use crate::ramsey::CMState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftComponents<T> {
    /// `−g²/(ω₀²c²)`.
    pub gravitational: T,
    /// `−(ħω₀/2M₀c²)(n + ½)`.
    pub time_dilation: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport<T> {
    pub level: usize,
    pub n: T,
    /// Exact energy difference of `|Eᵢ, n⟩` and `|E₀, n⟩`.
    pub exact_gap: T,
    /// `Eᵢ(1 − g²/ω₀²c² − (ħω₀/2M₀c²)(n + ½))`.
    pub lowest_order_gap: T,
    /// `(exact_gap − Eᵢ)/Eᵢ`.
    pub fractional_shift: T,
    /// `(lowest_order_gap − Eᵢ)/Eᵢ`, the sum of the components.
    pub lowest_order_fractional_shift: T,
    pub components: ShiftComponents<T>,
}

fn components<T: Real>(params: &SystemParams<T>, omega0: T, n: T) -> ShiftComponents<T> {
    let c2 = params.c * params.c;
    ShiftComponents {
        gravitational: -params.g * params.g / (omega0 * omega0 * c2),
        time_dilation: -params.hbar * omega0 / (T::lit(2.0) * params.m0 * c2) * (n + T::lit(0.5)),
    }
}

/// Fractional shift to lowest order in `1/c²` at trap frequency `omega0`.
pub fn lowest_order_shift<T: Real>(params: &SystemParams<T>, omega0: T, n: T) -> T {
    let c = components(params, omega0, n);
    c.gravitational + c.time_dilation
}

/// Energy gap between `|Eᵢ, n⟩` and `|E₀, n⟩`.
pub fn energy_gap<T: Real>(params: &SystemParams<T>, level: usize, n: T) -> Result<ShiftReport<T>> {
    let f = params.derive_mode_frame(level)?;
    let e = params.levels[level];
    if f.delta_m == T::zero() {
        return Err(Error::DegenerateLevels(0, level));
    }
    if n < T::zero() {
        return Err(Error::InvalidField { field: "n", reason: "must be >= 0".into() });
    }
    let nu = n + T::lit(0.5);
    let grav = params.g * params.g / (T::lit(2.0) * params.k);
    // gap − Eᵢ, free of the rest-energy cancellation
    let excess = -grav * f.delta_m * (T::lit(2.0) * params.m0 + f.delta_m)
        + params.hbar * params.frequency_difference(level)? * nu;
    let comps = components(params, params.omega0, n);
    let lo = comps.gravitational + comps.time_dilation;
    Ok(ShiftReport {
        level,
        n,
        exact_gap: e + excess,
        lowest_order_gap: e * (T::one() + lo),
        fractional_shift: excess / e,
        lowest_order_fractional_shift: lo,
        components: comps,
    })
}

/// Shift at a thermal occupation `⟨n̂₀⟩ = k_BT/ħω₀`.
pub fn thermal_shift<T: Real>(params: &SystemParams<T>, level: usize, temperature: T) -> Result<ShiftReport<T>> {
    if temperature.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::NonPositive { field: "T", value: temperature.as_f64() });
    }
    energy_gap(params, level, thermal_occupation(params, temperature))
}

/// High-temperature occupation `k_BT/ħω₀`.
pub fn thermal_occupation<T: Real>(params: &SystemParams<T>, temperature: T) -> T {
    params.kb * temperature / (params.hbar * params.omega0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPoint<T> {
    pub n: T,
    /// `(4g²M₀/ħ(n+½))^{1/3}`.
    pub omega_min: T,
    /// `−3/(2·2^{1/3})·(ħg(n+½)/c³M₀)^{2/3}`, the shift closest to zero.
    pub delta_min: T,
    /// Optimum found by direct numerical search.
    pub numeric_omega_min: T,
    pub numeric_delta_min: T,
}

pub const MINSHIFT_TOLERANCE: f64 = 1e-9;

/// Closed-form optimum of the fractional shift over trap frequency.
pub fn minimal_shift_closed_form<T: Real>(params: &SystemParams<T>, n: T) -> Result<(T, T)> {
    if params.g == T::zero() {
        return Err(Error::ZeroGravity);
    }
    let nu = n + T::lit(0.5);
    let third = T::one() / T::lit(3.0);
    let omega = (T::lit(4.0) * params.g * params.g * params.m0 / (params.hbar * nu)).powf(third);
    let c = params.c;
    let base = params.hbar * params.g * nu / (c * c * c * params.m0);
    let delta = -T::lit(3.0) / (T::lit(2.0) * T::lit(2.0).powf(third)) * base.powf(T::lit(2.0) * third);
    Ok((omega, delta))
}

/// Numerical optimum: golden-section search on `ln ω₀` for the smallest
/// `|δ|`, then bisection on the sign of `dδ/dω₀` to full precision.
pub fn minimal_shift_numeric<T: Real>(params: &SystemParams<T>, n: T) -> Result<(T, T)> {
    if params.g == T::zero() {
        return Err(Error::ZeroGravity);
    }
    let (lo, hi) = match params.unit_system {
        crate::model::UnitSystem::Si => (T::one(), T::lit(1e9)),
        crate::model::UnitSystem::Natural => (T::lit(1e-9), T::lit(1e9)),
    };
    let objective = |lw: T| lowest_order_shift(params, lw.exp(), n).abs();
    let (lw, _) = golden_section(objective, lo.ln(), hi.ln(), T::lit(1e-6), 500)?;
    let c2 = params.c * params.c;
    let nu = n + T::lit(0.5);
    let slope = |w: T| T::lit(2.0) * params.g * params.g / (w * w * w * c2) - params.hbar * nu / (T::lit(2.0) * params.m0 * c2);
    let w = bisect(slope, (lw - T::lit(1e-3)).exp(), (lw + T::lit(1e-3)).exp(), T::lit(1e-14), 400)?;
    Ok((w, lowest_order_shift(params, w, n)))
}

/// Optimal trap frequency and minimal shift, cross-checked against a
/// numerical minimisation. A disagreement beyond [`MINSHIFT_TOLERANCE`] is an error.
pub fn minimal_shift<T: Real>(params: &SystemParams<T>, n: T) -> Result<OptimalPoint<T>> {
    let (omega_min, delta_min) = minimal_shift_closed_form(params, n)?;
    let (nw, nd) = minimal_shift_numeric(params, n)?;
    let tol = T::lit(MINSHIFT_TOLERANCE);
    let dw = ((nw - omega_min) / omega_min).abs();
    if !matches!(dw.partial_cmp(&tol), Some(Ordering::Less | Ordering::Equal)) {
        return Err(Error::CrossCheckFailed { what: "omega_min", deviation: dw.as_f64(), tolerance: MINSHIFT_TOLERANCE });
    }
    let dd = ((nd - delta_min) / delta_min).abs();
    if !matches!(dd.partial_cmp(&tol), Some(Ordering::Less | Ordering::Equal)) {
        return Err(Error::CrossCheckFailed { what: "delta_min", deviation: dd.as_f64(), tolerance: MINSHIFT_TOLERANCE });
    }
    Ok(OptimalPoint { n, omega_min, delta_min, numeric_omega_min: nw, numeric_delta_min: nd })
}

/// Joint internal and centre-of-mass thermal state.
#[derive(Debug, Clone)]
pub struct ThermalState<T: Real> {
    /// Level populations `pₖ`.
    pub populations: Vec<T>,
    /// Squeezed thermal state of mode `k` in the ground-mode basis.
    pub blocks: Vec<CMState<T>>,
    pub log_partition: T,
}

/// `ln` of the weight `e^{−β(Eₖ + ħωₖ/2)}/(1 − e^{−βħωₖ})`.
fn log_weight<T: Real>(beta: T, e: T, hw: T) -> T {
    -beta * (e + hw / T::lit(2.0)) - (-exp_m1(-beta * hw)).ln()
}

/// Thermal state `ρ_T ∝ Σₖ e^{−βhₖ} ⊗ |Eₖ⟩⟨Eₖ|` (gravity-free).
pub fn thermal_state<T: Real>(params: &SystemParams<T>, temperature: T, dim: usize) -> Result<ThermalState<T>> {
    if params.g != T::zero() {
        return Err(Error::GravityNotSupported);
    }
    if temperature.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::NonPositive { field: "T", value: temperature.as_f64() });
    }
    let beta = T::one() / (params.kb * temperature);
    let ws = FockWorkspace::new(params, dim)?;
    let mut logs = Vec::with_capacity(params.level_count());
    let mut blocks = Vec::with_capacity(params.level_count());
    for k in 0..params.level_count() {
        let f = params.derive_mode_frame(k)?;
        let hw = params.hbar * f.omega;
        logs.push(log_weight(beta, params.levels[k], hw));
        // ρ_k = S†(r) ρ_th S(r), the thermal state of âₖ = S†aS
        let q = (-beta * hw).exp();
        let mut p = Vec::with_capacity(dim);
        let mut w = -exp_m1(-beta * hw);
        for _ in 0..dim {
            p.push(w);
            w *= q;
        }
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, p.into_iter().map(cplx)));
        let s = ws.squeeze_matrix(f.r)?;
        let sq = s.adjoint() * rho * &s;
        let deficit = T::one() - sq.trace().re;
        if deficit > T::lit(1e-6) {
            return Err(Error::TruncationInsufficient(format!(
                "thermal block {k} loses {:e} of its trace at dimension {dim}",
                deficit.as_f64()
            )));
        }
        blocks.push(CMState::Mixed(sq));
    }
    let max = logs.iter().copied().fold(logs[0], |a, v| if v > a { v } else { a });
    let sum = logs.iter().fold(T::zero(), |a, &l| a + (l - max).exp());
    let log_partition = max + sum.ln();
    let populations = logs.iter().map(|&l| (l - log_partition).exp()).collect();
    Ok(ThermalState { populations, blocks, log_partition })
}
