//! Closed-form results: the vacuum/coherent Ramsey amplitude, the
//! effective-Hamiltonian frequency shift and visibility, and the expansion of
//! the excited-level number operator in ground-mode ladder operators.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{CMatrix, FockWorkspace};
use crate::model::{ModeFrame, SystemParams};
use crate::normal::{MomentTable, NormalPoly};
use crate::num::{cis, cplx, Real};
use crate::optimize::scan_then_golden;
use crate::ramsey::CMState;

/// Parameters of the vacuum overlap between the ground level and level 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumAmplitudeParams<T> {
    /// `√(M₀/M₁) = ω₁/ω₀`.
    pub s: T,
    /// `M₀ω₀/ħ`.
    pub a0: T,
    /// Separation of the initial wavepacket centre from the level-1 trap
    /// centre. For the ground-level vacuum this is `gΔM/k`.
    pub x0: T,
    pub omega0: T,
    pub omega1: T,
    /// `Δφ/t = (offset₀ − offset₁)/ħ`.
    pub delta_phi_rate: T,
}

impl<T: Real> VacuumAmplitudeParams<T> {
    pub fn new(s: T, a0: T, x0: T, omega0: T, omega1: T, delta_phi_rate: T) -> Result<Self> {
        if !(s > T::zero() && s <= T::one()) {
            return Err(Error::InvalidField { field: "S", reason: format!("must lie in (0, 1] (got {})", s.as_f64()) });
        }
        if (omega1 - s * omega0).abs() > T::lit(1e-12) * omega0 {
            return Err(Error::ParamMismatch);
        }
        Ok(Self { s, a0, x0, omega0, omega1, delta_phi_rate })
    }

    /// Parameters for the ground-level vacuum of `params` against `level`.
    pub fn from_system(params: &SystemParams<T>, level: usize) -> Result<Self> {
        let f = params.derive_mode_frame(level)?;
        Self::new(
            f.omega / params.omega0,
            params.m0 * params.omega0 / params.hbar,
            f.separation,
            params.omega0,
            f.omega,
            -params.scalar_gap_rate(level)?,
        )
    }

    /// Same system, initial coherent state displaced so that its centre sits
    /// `x0` from the level-1 trap centre.
    pub fn with_x0(mut self, x0: T) -> Self {
        self.x0 = x0;
        self
    }

    fn half_angle(&self, t: T) -> (T, T) {
        let h = self.omega1 * t / T::lit(2.0);
        (h.sin(), h.cos())
    }

    /// `s²/(s² + S²c²)` with `s, c = sin, cos(ω₁t/2)`, i.e. `1/(1 + S²cot²)`
    /// without the removable singularity at `ω₁t ∈ 2πℤ`.
    fn lorentz(&self, t: T) -> T {
        let (s, c) = self.half_angle(t);
        let den = s * s + self.s * self.s * c * c;
        s * s / den
    }
}

/// `|trace|` for the vacuum or coherent initial state.
pub fn s3_visibility<T: Real>(vp: &VacuumAmplitudeParams<T>, t: T) -> T {
    let s = vp.s;
    let sin_wt = (vp.omega1 * t).sin();
    let one_m = T::one() - s * s;
    let den = (T::lit(4.0) * s * s + one_m * one_m * sin_wt * sin_wt).sqrt().sqrt();
    (T::lit(2.0) * s).sqrt() * (-vp.a0 * vp.x0 * vp.x0 * vp.lorentz(t)).exp() / den
}

/// Continuous argument of `2S cos θ + i(1+S²) sin θ`.
fn squeeze_arg<T: Real>(s: T, theta: T) -> T {
    let two_pi = T::two_pi();
    let m = ((theta + T::pi()) / two_pi).floor();
    let th = theta - m * two_pi;
    m * two_pi + ((T::one() + s * s) * th.sin()).atan2(T::lit(2.0) * s * th.cos())
}

/// Continuous phase of the full amplitude (including `Δφ`).
pub fn exact_phase<T: Real>(vp: &VacuumAmplitudeParams<T>, t: T) -> T {
    let (s, c) = vp.half_angle(t);
    let den = s * s + vp.s * vp.s * c * c;
    let gauss = -vp.a0 * vp.x0 * vp.x0 * vp.s * s * c / den;
    vp.omega0 * t / T::lit(2.0) + vp.delta_phi_rate * t - squeeze_arg(vp.s, vp.omega1 * t) / T::lit(2.0) + gauss
}

/// Complex amplitude `V·e^{iφ}`.
pub fn vacuum_coherent_amplitude<T: Real>(vp: &VacuumAmplitudeParams<T>, t: T) -> Complex<T> {
    cis(exact_phase(vp, t)) * s3_visibility(vp, t)
}

/// Phase as printed in the closed-form literature expression. It differs from
/// [`exact_phase`] in the sign of the Gaussian term and in the Arg term; it is
/// kept for comparison only.
pub fn printed_s4_phase<T: Real>(vp: &VacuumAmplitudeParams<T>, t: T) -> T {
    let s = vp.s;
    let th = vp.omega1 * t;
    let i = Complex::new(T::zero(), T::one());
    let z = i * cplx((s * s - T::one()) * th.sin()) + cplx(T::lit(2.0) * s) / Complex::new(th.cos(), -s * th.sin());
    let (hs, hc) = vp.half_angle(t);
    let gauss = vp.a0 * vp.x0 * vp.x0 * s * hs * hc / (hs * hs + s * s * hc * hc);
    vp.omega0 * t / T::lit(2.0) + vp.delta_phi_rate * t + z.im.atan2(z.re) / T::lit(2.0) + gauss
}

/// `V(t_min) ≈ e^{−a₀x₀²/(1+S²)}·√(2S/(1+S²))`, valid for small `x₀` and `S`.
pub fn small_x0_minimum<T: Real>(vp: &VacuumAmplitudeParams<T>) -> T {
    let d = T::one() + vp.s * vp.s;
    (-vp.a0 * vp.x0 * vp.x0 / d).exp() * (T::lit(2.0) * vp.s / d).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityExtrema<T> {
    pub t_min: T,
    pub v_min: T,
    pub t_rev: T,
    pub v_rev: T,
}

/// First visibility minimum on `(0, π/ω₁]` and the partial revival at `π/ω₁`.
pub fn visibility_extrema<T: Real>(vp: &VacuumAmplitudeParams<T>) -> Result<VisibilityExtrema<T>> {
    let t_rev = T::pi() / vp.omega1;
    let (t_min, v_min) = scan_then_golden(|t| s3_visibility(vp, t), T::zero(), t_rev, 256, t_rev * T::lit(1e-12))?;
    Ok(VisibilityExtrema { t_min, v_min, t_rev, v_rev: (-vp.a0 * vp.x0 * vp.x0).exp() })
}

/// Ground-mode ladder moments entering the effective frequency shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderMoments<T> {
    pub a: Complex<T>,
    pub a2: Complex<T>,
    pub adag2: Complex<T>,
    pub n: T,
}

impl<T: Real> LadderMoments<T> {
    pub fn vacuum() -> Self {
        let z = cplx(T::zero());
        Self { a: z, a2: z, adag2: z, n: T::zero() }
    }

    pub fn coherent(alpha: Complex<T>) -> Self {
        Self { a: alpha, a2: alpha * alpha, adag2: (alpha * alpha).conj(), n: alpha.norm_sqr() }
    }

    pub fn thermal(nbar: T) -> Self {
        Self { n: nbar, ..Self::vacuum() }
    }

    pub fn from_state(state: &CMState<T>) -> Self {
        let m = MomentTable::from_state(state, 2);
        Self { a: m.get(0, 1), a2: m.get(0, 2), adag2: m.get(2, 0), n: m.get(1, 1).re }
    }
}

/// Effective-Hamiltonian frequency shift (angular frequency units).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveShift<T> {
    pub mean_shift: T,
    pub a0_term: Complex<T>,
    pub ag_term: Complex<T>,
    /// `−ω_c g²/(ω₀²c²)`.
    pub scalar_term: T,
    /// `ω₁ − ω₀`.
    pub delta_omega: T,
    /// `½Var(ω₁n̂₁ − ω₀n̂₀)`, when the state is known.
    pub visibility_quadratic_coefficient: Option<T>,
    /// Set when `|r|` or `|α_g|` leave the small-parameter regime.
    pub regime_warning: Option<String>,
}

/// Mean frequency shift of the Ramsey fringe at time `t`:
/// `−ω_c g²/ω₀²c² + Δω(⟨n₀⟩ + ½) + Re[A₀ + α_gω₁A_g]`.
pub fn effective_shift<T: Real>(
    params: &SystemParams<T>,
    level: usize,
    m: &LadderMoments<T>,
    t: T,
) -> Result<EffectiveShift<T>> {
    let f = params.derive_mode_frame(level)?;
    let w0 = params.omega0;
    let w1 = f.omega;
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let itw = i * (t * w0);
    let one = cplx(T::one());
    let sinh2r = T::lit(2.0) * f.sinh_r * f.cosh_r;
    let a0_term = cplx(w1 * f.sinh_r * f.sinh_r) - (m.a2 * (one - itw) + m.adag2 * (one + itw)) * (w1 * sinh2r * half);
    let em = (-f.r).exp();
    let ag_term =
        (one + itw * half) * m.a.conj() * em + (one - itw * half) * m.a * em + cplx(f.alpha_g);
    let wc = params.transition_frequency(level)?;
    let c2 = params.c * params.c;
    let scalar_term = -wc * params.g * params.g / (w0 * w0 * c2);
    let delta_omega = params.frequency_difference(level)?;
    let total = a0_term + ag_term * (f.alpha_g * w1);
    let regime_warning = if f.r.abs() >= T::lit(1e-3) || f.alpha_g.abs() >= T::lit(1e-3) {
        let msg = format!("outside the small-parameter regime (r = {:e}, α_g = {:e})", f.r.as_f64(), f.alpha_g.as_f64());
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(EffectiveShift {
        mean_shift: scalar_term + delta_omega * (m.n + half) + total.re,
        a0_term,
        ag_term,
        scalar_term,
        delta_omega,
        visibility_quadratic_coefficient: None,
        regime_warning,
    })
}

/// `n̂ₖ = âₖ†âₖ` in ground-mode ladder operators:
/// `cosh(2r)n̂₀ + sinh²r − ½sinh(2r)(a₀² + a₀†²) + α_g e^{−r}(a₀ + a₀†) + α_g²`.
///
/// The first-order expansion replaces `cosh(2r)` by one; the exact
/// coefficient is kept here.
pub fn number_operator_poly<T: Real>(frame: &ModeFrame<T>) -> NormalPoly<T> {
    let (c, s) = (frame.cosh_r, frame.sinh_r);
    let h = s * c;
    let b = frame.alpha_g * (-frame.r).exp();
    NormalPoly::monomial(1, 1, cplx(c * c + s * s))
        + NormalPoly::constant(cplx(s * s + frame.alpha_g * frame.alpha_g))
        + NormalPoly::monomial(0, 2, cplx(-h))
        + NormalPoly::monomial(2, 0, cplx(-h))
        + NormalPoly::monomial(0, 1, cplx(b))
        + NormalPoly::monomial(1, 0, cplx(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberMoments<T> {
    pub n: T,
    pub n2: T,
    /// `⟨[n̂₀, n̂ₖ]⟩`, purely imaginary.
    pub commutator: Complex<T>,
}

/// Moments of `n̂ₖ` from the normal-ordered expansion and the state's ladder moments.
pub fn number_operator_moments<T: Real>(params: &SystemParams<T>, level: usize, state: &CMState<T>) -> Result<NumberMoments<T>> {
    let f = params.derive_mode_frame(level)?;
    let nk = number_operator_poly(&f);
    let n0 = NormalPoly::number();
    let table = MomentTable::from_state(state, 4);
    let comm = &n0 * &nk + (&nk * &n0).scale(cplx(-T::one()));
    Ok(NumberMoments {
        n: table.expect(&nk).re,
        n2: table.expect(&(&nk * &nk)).re,
        commutator: table.expect(&comm),
    })
}

/// Same moments from dense matrices, `n̂ₖ = âₖ†âₖ` with `âₖ` the Bogoliubov
/// form. Agrees with [`number_operator_moments`] for states away from the
/// truncation edge.
pub fn number_operator_moments_matrix<T: Real>(
    params: &SystemParams<T>,
    level: usize,
    state: &CMState<T>,
) -> Result<NumberMoments<T>> {
    let ws = FockWorkspace::new(params, state.dim())?;
    let ak = ws.mode_matrix(&params.derive_mode_frame(level)?)?;
    let nk = ak.adjoint() * &ak;
    let n0 = ws.n();
    let comm: CMatrix<T> = &n0 * &nk - &nk * &n0;
    Ok(NumberMoments { n: state.expect(&nk).re, n2: state.expect(&(&nk * &nk)).re, commutator: state.expect(&comm) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxVisibility<T> {
    /// `1 − ½t²Var(ω₁n̂₁ − ω₀n̂₀)`.
    pub quadratic: T,
    /// `1 − (ω₀Δn̂₀·t·ħω_c/2M₀c²)² − (ω₁α_g t)²(2⟨n̂₀⟩ + 1)`, squeezing neglected.
    pub simplified: T,
    pub variance: T,
}

/// Short-time visibility for a state diagonal in the number basis.
pub fn approx_visibility<T: Real>(
    params: &SystemParams<T>,
    level: usize,
    populations: &[T],
    t: T,
) -> Result<ApproxVisibility<T>> {
    let sum = populations.iter().fold(T::zero(), |a, &p| a + p);
    if populations.iter().any(|&p| p < T::zero()) || (sum - T::one()).abs() > T::lit(1e-10) {
        return Err(Error::NotNormalized(sum.as_f64()));
    }
    let f = params.derive_mode_frame(level)?;
    let (w0, w1) = (params.omega0, f.omega);
    let two = T::lit(2.0);
    let (mut mean, mut m2) = (T::zero(), T::zero());
    for (n, &p) in populations.iter().enumerate() {
        let n = T::from_usize_lossy(n);
        mean += p * n;
        m2 += p * n * n;
    }
    let var_n = m2 - mean * mean;
    let h = f.sinh_r * f.cosh_r;
    let b = f.alpha_g * (-f.r).exp();
    // ω₁n̂₁ − ω₀n̂₀ = (ω₁cosh2r − ω₀)n̂₀ − ω₁h(a² + a†²) + ω₁b(a + a†) + const;
    // cross terms vanish for diagonal states.
    let coef_n = w1 * (two * f.sinh_r * f.sinh_r + T::one()) - w0;
    let variance = coef_n * coef_n * var_n
        + w1 * w1 * (h * h * (two * m2 + two * mean + two) + b * b * (two * mean + T::one()));
    let quadratic = T::one() - t * t * variance / two;
    let wc = params.transition_frequency(level)?;
    let lo = w0 * var_n.max(T::zero()).sqrt() * t * params.hbar * wc / (two * params.m0 * params.c * params.c);
    let grav = w1 * f.alpha_g * t;
    let simplified = T::one() - lo * lo - grav * grav * (two * mean + T::one());
    Ok(ApproxVisibility { quadratic, simplified, variance })
}
