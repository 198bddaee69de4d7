//! Ramsey interference between the ground level and an excited level.
//!
//! After an ideal π/2 – free evolution – π/2 sequence the probability to find
//! the ground level is `½ + ½·Re Tr{U₁(t) ρ₀ U₀†(t)}`.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, FockWorkspace, SpectralGenerator};
use crate::model::SystemParams;
use crate::num::{cis, cplx, wrap_angle, Real};

/// Centre-of-mass state in the ground-level mode basis.
#[derive(Debug, Clone, PartialEq)]
pub enum CMState<T: Real> {
    Pure(CVector<T>),
    Mixed(CMatrix<T>),
}

impl<T: Real> CMState<T> {
    pub fn dim(&self) -> usize {
        match self {
            CMState::Pure(v) => v.len(),
            CMState::Mixed(m) => m.nrows(),
        }
    }

    /// Validated pure state (norm within 1e-12 of one).
    pub fn from_vector(v: CVector<T>) -> Result<Self> {
        let norm = v.norm();
        if (norm - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidState(format!("vector norm {} differs from 1", norm.as_f64())));
        }
        Ok(CMState::Pure(v))
    }

    /// Validated density matrix: Hermitian, unit trace, eigenvalues ≥ −1e-10.
    pub fn from_density(m: CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let herm = (&m - m.adjoint()).iter().fold(T::zero(), |a, z| if z.modulus() > a { z.modulus() } else { a });
        if herm > T::lit(1e-10) {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({:e})", herm.as_f64())));
        }
        let tr = m.trace().re;
        if (tr - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.as_f64())));
        }
        let h = (&m + m.adjoint()) * cplx(T::lit(0.5));
        let eig = SymmetricEigen::try_new(h, T::default_epsilon(), 0).ok_or(Error::ConvergenceFailure)?;
        let floor = eig.eigenvalues.iter().copied().fold(T::zero(), |a, v| if v < a { v } else { a });
        if floor < T::lit(-1e-10) {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", floor.as_f64())));
        }
        Ok(CMState::Mixed(m))
    }

    /// Number state `|n⟩`.
    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch { expected: n + 1, got: dim });
        }
        let mut v = CVector::zeros(dim);
        v[n] = cplx(T::one());
        Ok(CMState::Pure(v))
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[0] = cplx(T::one());
        CMState::Pure(v)
    }

    /// Coherent state `|α⟩` of the ground mode.
    pub fn coherent(dim: usize, alpha: Complex<T>) -> Result<Self> {
        let v = coherent_vector(dim, alpha)?;
        Ok(CMState::Pure(v))
    }

    /// Thermal state of the ground mode with mean occupation `nbar`.
    pub fn thermal(dim: usize, nbar: T) -> Result<Self> {
        if nbar < T::zero() {
            return Err(Error::InvalidState("negative mean occupation".into()));
        }
        let q = nbar / (T::one() + nbar);
        let mut p = Vec::with_capacity(dim);
        let mut w = T::one() / (T::one() + nbar);
        for _ in 0..dim {
            p.push(w);
            w *= q;
        }
        Ok(CMState::Mixed(diagonal_density(&renormalized(p, "thermal state")?)))
    }

    /// Diagonal state with the given number-basis populations.
    pub fn from_populations(p: &[T]) -> Result<Self> {
        let sum = p.iter().fold(T::zero(), |a, &v| a + v);
        if p.iter().any(|&v| v < T::zero()) || (sum - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::NotNormalized(sum.as_f64()));
        }
        Ok(CMState::Mixed(diagonal_density(p)))
    }

    pub fn density(&self) -> CMatrix<T> {
        match self {
            CMState::Pure(v) => v * v.adjoint(),
            CMState::Mixed(m) => m.clone(),
        }
    }

    /// Number-basis populations.
    pub fn populations(&self) -> Vec<T> {
        match self {
            CMState::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            CMState::Mixed(m) => m.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// `Tr(ρ O)`.
    pub fn expect(&self, op: &CMatrix<T>) -> Complex<T> {
        match self {
            CMState::Pure(v) => v.dotc(&(op * v)),
            CMState::Mixed(m) => (op * m).trace(),
        }
    }

    pub fn purity(&self) -> T {
        match self {
            CMState::Pure(_) => T::one(),
            CMState::Mixed(m) => (m * m).trace().re,
        }
    }
}

fn diagonal_density<T: Real>(p: &[T]) -> CMatrix<T> {
    CMatrix::from_diagonal(&CVector::from_iterator(p.len(), p.iter().map(|&v| cplx(v))))
}

fn renormalized<T: Real>(mut p: Vec<T>, what: &str) -> Result<Vec<T>> {
    let sum = p.iter().fold(T::zero(), |a, &v| a + v);
    if T::one() - sum > T::lit(1e-10) {
        return Err(Error::TruncationInsufficient(format!(
            "{what} loses {:e} of its norm at dimension {}",
            (T::one() - sum).as_f64(),
            p.len()
        )));
    }
    for v in &mut p {
        *v /= sum;
    }
    Ok(p)
}

/// Number-basis amplitudes of `|α⟩`, normalised within the truncation.
pub fn coherent_vector<T: Real>(dim: usize, alpha: Complex<T>) -> Result<CVector<T>> {
    let mut v = CVector::zeros(dim);
    let mut c = cplx((-alpha.norm_sqr() / T::lit(2.0)).exp());
    for n in 0..dim {
        v[n] = c;
        c = c * alpha / cplx(T::from_usize_lossy(n + 1).sqrt());
    }
    let norm2 = v.norm_squared();
    if T::one() - norm2 > T::lit(1e-10) {
        return Err(Error::TruncationInsufficient(format!(
            "coherent state |α|={} loses {:e} of its norm at dimension {dim}",
            alpha.modulus().as_f64(),
            (T::one() - norm2).as_f64()
        )));
    }
    Ok(v.unscale(norm2.sqrt()))
}

/// Serializable description of an initial state, realised at any dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec<T> {
    Fock { n: usize },
    Coherent { re: T, im: T },
    Thermal { nbar: T },
}

impl<T: Real> StateSpec<T> {
    pub fn vacuum() -> Self {
        StateSpec::Fock { n: 0 }
    }

    pub fn build(&self, _params: &SystemParams<T>, dim: usize) -> Result<CMState<T>> {
        match *self {
            StateSpec::Fock { n } => CMState::fock(dim, n),
            StateSpec::Coherent { re, im } => CMState::coherent(dim, Complex::new(re, im)),
            StateSpec::Thermal { nbar } => CMState::thermal(dim, nbar),
        }
    }
}

/// Frame in which the stored phase is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseFrame {
    /// Includes the internal phase `ω_c t`.
    #[default]
    Lab,
    /// Relative to `ω_c t`.
    CoRotating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyTrace<T: Real> {
    pub times: Vec<T>,
    /// `Tr{U₁(t) ρ₀ U₀†(t)}` including scalar phases.
    pub trace: Vec<Complex<T>>,
    pub probability: Vec<T>,
    pub visibility: Vec<T>,
    /// Unwrapped phase in `frame`. Best effort: jumps near visibility nodes
    /// are not diagnosed here, see [`extract_visibility_phase`].
    pub phase: Vec<T>,
    pub frame: PhaseFrame,
    /// Rate removed from the phase in the co-rotating frame.
    pub reference_rate: T,
}

impl<T: Real> RamseyTrace<T> {
    /// Builds a trace record from raw complex values.
    pub fn from_trace(times: Vec<T>, trace: Vec<Complex<T>>, frame: PhaseFrame, reference_rate: T) -> Self {
        let half = T::lit(0.5);
        let probability = trace.iter().map(|z| half + half * z.re).collect();
        let visibility = trace.iter().map(|z| z.modulus()).collect();
        let mut tr = Self { times, trace, probability, visibility, phase: Vec::new(), frame, reference_rate };
        tr.phase = unwrap(&tr.raw_phases());
        tr
    }

    fn raw_phases(&self) -> Vec<T> {
        let rate = match self.frame {
            PhaseFrame::Lab => T::zero(),
            PhaseFrame::CoRotating => self.reference_rate,
        };
        self.times.iter().zip(&self.trace).map(|(&t, z)| (z * cis(rate * t)).argument()).collect()
    }

    /// The same trace reported in another phase frame.
    pub fn in_frame(&self, frame: PhaseFrame) -> Self {
        Self::from_trace(self.times.clone(), self.trace.clone(), frame, self.reference_rate)
    }
}

fn unwrap<T: Real>(raw: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(raw.len());
    let mut acc = T::zero();
    for (i, &p) in raw.iter().enumerate() {
        if i == 0 {
            acc = p;
        } else {
            acc += wrap_angle(p - raw[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Largest wrapped phase increment accepted between adjacent grid points.
pub const MAX_PHASE_STEP: f64 = 0.9 * std::f64::consts::PI;

/// Modulus and continuous phase of a trace.
///
/// Fails with [`Error::GridTooCoarse`] when two adjacent samples differ in
/// phase by more than [`MAX_PHASE_STEP`], since the unwrapping would then be
/// ambiguous.
pub fn extract_visibility_phase<T: Real>(trace: &RamseyTrace<T>) -> Result<(Vec<T>, Vec<T>)> {
    let raw = trace.raw_phases();
    for i in 1..raw.len() {
        let jump = wrap_angle(raw[i] - raw[i - 1]).abs();
        if jump >= T::lit(MAX_PHASE_STEP) {
            return Err(Error::GridTooCoarse { index: i - 1, jump: jump.as_f64() });
        }
    }
    Ok((trace.visibility.clone(), unwrap(&raw)))
}

/// `n` equally spaced times on `[t0, t1]`.
pub fn uniform_grid<T: Real>(t0: T, t1: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => {
            let step = (t1 - t0) / T::from_usize_lossy(n - 1);
            (0..n).map(|i| t0 + step * T::from_usize_lossy(i)).collect()
        }
    }
}

/// Uniform grid on `[0, t_end]` with at least `per_period` (minimum 50)
/// points per `shortest_period`.
pub fn grid_for_period<T: Real>(t_end: T, shortest_period: T, per_period: usize) -> Vec<T> {
    let per = per_period.max(50);
    let n = (t_end / shortest_period * T::from_usize_lossy(per)).ceil().as_f64() as usize + 1;
    uniform_grid(T::zero(), t_end, n.max(2))
}

/// Precomputed spectral data for repeated trace evaluation.
struct TraceKernel<T: Real> {
    gen0: SpectralGenerator<T>,
    gen1: SpectralGenerator<T>,
    kind: KernelKind<T>,
    gap_rate: T,
}

enum KernelKind<T: Real> {
    /// `c₀ = V₀ᵀψ`, `c₁ = V₁ᵀψ`, `W = V₀ᵀV₁`.
    Pure { c0: CVector<T>, c1: CVector<T>, w: DMatrix<T> },
    /// `C_jk = (V₁ᵀρV₀)_jk (V₀ᵀV₁)_kj`.
    Mixed { c: CMatrix<T> },
}

impl<T: Real> TraceKernel<T> {
    fn new(params: &SystemParams<T>, state: &CMState<T>, level: usize) -> Result<Self> {
        let dim = state.dim();
        let ws = FockWorkspace::new(params, dim)?;
        let gen0 = SpectralGenerator::new(&ws, &params.derive_mode_frame(0)?)?;
        let gen1 = SpectralGenerator::new(&ws, &params.derive_mode_frame(level)?)?;
        let w = gen0.vectors.transpose() * &gen1.vectors;
        let kind = match state {
            CMState::Pure(psi) => {
                let c0 = gen0.vectors.map(cplx).transpose() * psi;
                let c1 = gen1.vectors.map(cplx).transpose() * psi;
                KernelKind::Pure { c0, c1, w }
            }
            CMState::Mixed(rho) => {
                let m = gen1.vectors.map(cplx).transpose() * rho * gen0.vectors.map(cplx);
                let c = CMatrix::from_fn(dim, dim, |j, k| m[(j, k)] * cplx(w[(k, j)]));
                KernelKind::Mixed { c }
            }
        };
        Ok(Self { gen0, gen1, kind, gap_rate: params.scalar_gap_rate(level)? })
    }

    fn eval(&self, t: T) -> Complex<T> {
        let e0 = self.gen0.phases(t);
        let e1 = self.gen1.phases(t);
        let bounded = match &self.kind {
            KernelKind::Pure { c0, c1, w } => {
                let n = c0.len();
                let mut acc = cplx(T::zero());
                for j in 0..n {
                    let mut s = cplx(T::zero());
                    for k in 0..n {
                        s += c1[k] * e1[k] * w[(j, k)];
                    }
                    acc += (c0[j] * e0[j]).conj() * s;
                }
                acc
            }
            KernelKind::Mixed { c } => {
                let n = c.nrows();
                let mut acc = cplx(T::zero());
                for k in 0..n {
                    let mut s = cplx(T::zero());
                    for j in 0..n {
                        s += e1[j] * c[(j, k)];
                    }
                    acc += s * e0[k].conj();
                }
                acc
            }
        };
        bounded * cis(-self.gap_rate * t)
    }
}

/// Exact Ramsey trace between levels 0 and `level` on `times`.
pub fn ramsey_trace<T: Real>(
    params: &SystemParams<T>,
    state: &CMState<T>,
    level: usize,
    times: &[T],
) -> Result<RamseyTrace<T>> {
    ramsey_trace_in(params, state, level, times, PhaseFrame::Lab)
}

pub fn ramsey_trace_in<T: Real>(
    params: &SystemParams<T>,
    state: &CMState<T>,
    level: usize,
    times: &[T],
    frame: PhaseFrame,
) -> Result<RamseyTrace<T>> {
    if level == 0 {
        return Err(Error::InvalidField { field: "level", reason: "level pair must be (0, i) with i > 0".into() });
    }
    let kernel = TraceKernel::new(params, state, level)?;
    let trace: Vec<Complex<T>> = times.par_iter().map(|&t| kernel.eval(t)).collect();
    Ok(RamseyTrace::from_trace(times.to_vec(), trace, frame, params.transition_frequency(level)?))
}

/// Visibility at `π/ω₁` and `2π/ω₁` for the initial number state `|n₀⟩`.
pub fn fock_revival_values<T: Real>(params: &SystemParams<T>, n0: usize, level: usize, dim: usize) -> Result<(T, T)> {
    let w1 = params.derive_mode_frame(level)?.omega;
    let state = CMState::fock(dim, n0)?;
    let tr = ramsey_trace(params, &state, level, &[T::pi() / w1, T::two_pi() / w1])?;
    Ok((tr.visibility[0], tr.visibility[1]))
}

/// Ground-level probability `½(1 + cos ω_c t)` when only a phase is acquired.
pub fn nonrelativistic_probability<T: Real>(omega_c: T, t: T) -> T {
    T::lit(0.5) * (T::one() + (omega_c * t).cos())
}
