//! Truncated Fock-space operator algebra in the ground-level mode basis.
//!
//! All matrices are dense `N×N`. Operators that a hard truncation breaks
//! (commutators, Bogoliubov identities) are only meaningful on the interior
//! block, the first `N − ⌈N/8⌉` rows and columns.
//!
//! The position operator is the lab-frame coordinate: `x = X − g/ω₀²` where
//! `X = √(ħ/2M₀ω₀)(a + a†)` is the ground-mode quadrature, so that the
//! ground-level ladder operator is exactly `a`.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{ModeFrame, SystemParams};
use crate::num::{cis, cplx, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

pub const DIM_SCHEDULE_START: usize = 64;
pub const DEFAULT_DIM_MAX: usize = 4096;

/// Size of the block on which truncated identities hold.
pub fn interior(dim: usize) -> usize {
    dim - dim.div_ceil(8)
}

/// Largest entry modulus of `m` restricted to its leading `k×k` block.
pub fn max_abs_block<T: Real>(m: &CMatrix<T>, k: usize) -> T {
    let mut best = T::zero();
    for j in 0..k.min(m.ncols()) {
        for i in 0..k.min(m.nrows()) {
            let v = m[(i, j)].modulus();
            if v > best {
                best = v;
            }
        }
    }
    best
}

pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    max_abs_block(m, m.nrows().max(m.ncols()))
}

/// Operator algebra at a fixed truncation.
///
/// Matrices are built on demand so that large workspaces stay cheap when only
/// a Hamiltonian is needed.
#[derive(Debug, Clone)]
pub struct FockWorkspace<T: Real> {
    dim: usize,
    params: SystemParams<T>,
}

impl<T: Real> FockWorkspace<T> {
    pub fn new(params: &SystemParams<T>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self { dim, params: params.clone() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn interior(&self) -> usize {
        interior(self.dim)
    }

    pub fn identity(&self) -> CMatrix<T> {
        CMatrix::identity(self.dim, self.dim)
    }

    /// Annihilation operator, `a[m, m+1] = √(m+1)`.
    pub fn a(&self) -> CMatrix<T> {
        let mut a = CMatrix::zeros(self.dim, self.dim);
        for m in 0..self.dim - 1 {
            a[(m, m + 1)] = cplx(T::from_usize_lossy(m + 1).sqrt());
        }
        a
    }

    pub fn adag(&self) -> CMatrix<T> {
        self.a().adjoint()
    }

    pub fn n(&self) -> CMatrix<T> {
        CMatrix::from_diagonal(&CVector::from_fn(self.dim, |m, _| cplx(T::from_usize_lossy(m))))
    }

    /// `√(ħ/2M₀ω₀)`.
    pub fn length_scale(&self) -> T {
        let p = &self.params;
        (p.hbar / (T::lit(2.0) * p.m0 * p.omega0)).sqrt()
    }

    /// `√(ħM₀ω₀/2)`.
    pub fn momentum_scale(&self) -> T {
        let p = &self.params;
        (p.hbar * p.m0 * p.omega0 / T::lit(2.0)).sqrt()
    }

    /// Lab-frame position `X − g/ω₀²`.
    pub fn x(&self) -> CMatrix<T> {
        let a = self.a();
        let shift = self.params.g / (self.params.omega0 * self.params.omega0);
        (&a + a.adjoint()) * cplx(self.length_scale()) - self.identity() * cplx(shift)
    }

    pub fn p(&self) -> CMatrix<T> {
        let a = self.a();
        (a.adjoint() - &a) * Complex::new(T::zero(), self.momentum_scale())
    }

    fn check_frame(&self, frame: &ModeFrame<T>) -> Result<()> {
        match self.params.derive_mode_frame(frame.level) {
            Ok(f) if f == *frame => Ok(()),
            _ => Err(Error::ParamMismatch),
        }
    }

    /// `âᵢ = cosh(rᵢ)a − sinh(rᵢ)a† + α_gᵢ`.
    pub fn mode_matrix(&self, frame: &ModeFrame<T>) -> Result<CMatrix<T>> {
        self.check_frame(frame)?;
        let a = self.a();
        let ad = a.adjoint();
        Ok(a * cplx(frame.cosh_r) - ad * cplx(frame.sinh_r) + self.identity() * cplx(frame.alpha_g))
    }

    /// `âᵢ = √(Mᵢωᵢ/2ħ)(x + g/ωᵢ² + ip/Mᵢωᵢ)` built from the position and
    /// momentum matrices.
    pub fn mode_matrix_direct(&self, frame: &ModeFrame<T>) -> Result<CMatrix<T>> {
        self.check_frame(frame)?;
        let mw = frame.mass * frame.omega;
        let pre = (mw / (T::lit(2.0) * self.params.hbar)).sqrt();
        let m = self.x() + self.identity() * cplx(frame.x_shift) + self.p() * Complex::new(T::zero(), T::one() / mw);
        Ok(m * cplx(pre))
    }

    /// Oscillator part of `hᵢ` and the scalar offset it omits.
    ///
    /// The matrix is `p²/2Mᵢ + k(X + dᵢ)²/2` with `dᵢ = gΔMᵢ/k`, using the
    /// exact truncated forms of `X²` and `p²`. It is real symmetric.
    pub fn hamiltonian_matrix(&self, frame: &ModeFrame<T>) -> Result<(DMatrix<T>, T)> {
        self.check_frame(frame)?;
        let p = &self.params;
        let scale = p.hbar * p.omega0;
        Ok((self.scaled_hamiltonian(frame) * scale, frame.offset))
    }

    /// Hamiltonian in units of `ħω₀`.
    fn scaled_hamiltonian(&self, frame: &ModeFrame<T>) -> DMatrix<T> {
        let p = &self.params;
        let n = self.dim;
        let quarter = T::lit(0.25);
        let two = T::lit(2.0);
        let mass_ratio = p.m0 / frame.mass;
        // kinetic: (M₀/Mᵢ)/4 · (2n+1 − a² − a†²); potential: (2n+1 + a² + a†²)/4
        let diag_coef = quarter * (mass_ratio + T::one());
        let off2_coef = quarter * (T::one() - mass_ratio);
        // linear and constant terms from the displaced potential
        let d = frame.separation / (two * self.length_scale());
        let lin = d;
        let constant = d * d;
        let mut h = DMatrix::zeros(n, n);
        for m in 0..n {
            let mf = T::from_usize_lossy(m);
            h[(m, m)] = diag_coef * (two * mf + T::one()) + constant;
            if m + 1 < n {
                let v = lin * (mf + T::one()).sqrt();
                h[(m, m + 1)] = v;
                h[(m + 1, m)] = v;
            }
            if m + 2 < n {
                let v = off2_coef * ((mf + T::one()) * (mf + two)).sqrt();
                h[(m, m + 2)] = v;
                h[(m + 2, m)] = v;
            }
        }
        h
    }

    /// Squeeze operator `S(r) = exp(r(a² − a†²)/2)`.
    pub fn squeeze_matrix(&self, r: T) -> Result<CMatrix<T>> {
        if r == T::zero() {
            return Ok(self.identity());
        }
        let a = self.a();
        let a2 = &a * &a;
        let g = (&a2 - a2.adjoint()) * cplx(r / T::lit(2.0));
        let s = exp_anti_hermitian(&g)?;
        self.check_vacuum_column(&s, "squeeze")?;
        Ok(s)
    }

    /// Displacement operator `D(α) = exp(αa† − α*a)`.
    pub fn displace_matrix(&self, alpha: Complex<T>) -> Result<CMatrix<T>> {
        if alpha == Complex::new(T::zero(), T::zero()) {
            return Ok(self.identity());
        }
        let a = self.a();
        let g = a.adjoint() * alpha - a * alpha.conj();
        let d = exp_anti_hermitian(&g)?;
        self.check_vacuum_column(&d, "displacement")?;
        Ok(d)
    }

    /// Rejects operators whose action on the vacuum reaches the truncation edge.
    fn check_vacuum_column(&self, m: &CMatrix<T>, what: &str) -> Result<()> {
        let edge = self.dim.div_ceil(8);
        let weight: T = (self.dim - edge..self.dim).map(|i| m[(i, 0)].norm_sqr()).fold(T::zero(), |s, v| s + v);
        if weight > T::lit(1e-10) {
            return Err(Error::TruncationInsufficient(format!(
                "{what} leaves weight {:e} in the top {edge} of {} basis states",
                weight.as_f64(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `exp(G)` for anti-Hermitian `G` via the eigendecomposition of `iG`.
pub fn exp_anti_hermitian<T: Real>(g: &CMatrix<T>) -> Result<CMatrix<T>> {
    let h = g * Complex::new(T::zero(), T::one());
    let eig = SymmetricEigen::try_new(h, T::default_epsilon(), 0).ok_or(Error::ConvergenceFailure)?;
    let v = eig.eigenvectors;
    let phases = CVector::from_iterator(v.ncols(), eig.eigenvalues.iter().map(|&l| cis(-l)));
    let mut vd = v.clone();
    scale_columns(&mut vd, &phases);
    Ok(vd * v.adjoint())
}

/// Multiplies column `j` of `m` by `s[j]`.
pub fn scale_columns<T: Real>(m: &mut CMatrix<T>, s: &CVector<T>) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        for z in col.iter_mut() {
            *z *= s[j];
        }
    }
}

/// Spectral decomposition of one level's bounded Hamiltonian, reusable
/// across many propagation times.
#[derive(Debug, Clone)]
pub struct SpectralGenerator<T: Real> {
    pub level: usize,
    /// Eigenfrequencies `Eⱼ/ħ`, ascending.
    pub frequencies: DVector<T>,
    /// Orthonormal eigenvectors as columns, matching `frequencies`.
    pub vectors: DMatrix<T>,
    /// `(offsetᵢ − M₀c²)/ħ`.
    pub offset_rate: T,
}

/// Evolution under one level for a time `t`.
#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    pub level: usize,
    pub t: T,
    /// Bounded part `exp(−iH_bounded t/ħ)`.
    pub u: CMatrix<T>,
    /// `exp(−i(offsetᵢ − M₀c²)t/ħ)`. The common rest-energy phase of all
    /// levels is dropped; it cancels in every observable.
    pub scalar_phase: Complex<T>,
}

impl<T: Real> SpectralGenerator<T> {
    pub fn new(ws: &FockWorkspace<T>, frame: &ModeFrame<T>) -> Result<Self> {
        ws.check_frame(frame)?;
        let h = ws.scaled_hamiltonian(frame);
        let eig = SymmetricEigen::try_new(h, T::default_epsilon(), 0).ok_or(Error::ConvergenceFailure)?;
        let n = ws.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
        let w0 = ws.params().omega0;
        let frequencies = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i] * w0));
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { level: frame.level, frequencies, vectors, offset_rate: frame.offset_excess / ws.params().hbar })
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    /// `e^{−iEⱼt/ħ}` for every eigenstate.
    pub fn phases(&self, t: T) -> CVector<T> {
        self.frequencies.map(|w| cis(-w * t))
    }

    pub fn scalar_phase(&self, t: T) -> Complex<T> {
        cis(-self.offset_rate * t)
    }

    pub fn propagator(&self, t: T) -> Propagator<T> {
        let ph = self.phases(t);
        let v = self.vectors.map(cplx);
        let mut vp = v.clone();
        scale_columns(&mut vp, &ph);
        Propagator { level: self.level, t, u: vp * v.transpose(), scalar_phase: self.scalar_phase(t) }
    }
}

pub fn propagate<T: Real>(ws: &FockWorkspace<T>, frame: &ModeFrame<T>, t: T) -> Result<Propagator<T>> {
    Ok(SpectralGenerator::new(ws, frame)?.propagator(t))
}

/// Scalar quantity whose truncation convergence [`converge_dim`] monitors.
#[derive(Debug, Clone)]
pub enum ConvergenceRequest<T: Real> {
    /// Ramsey trace of `state` between levels 0 and `level` on `times`.
    RamseyTrace { state: crate::ramsey::StateSpec<T>, level: usize, times: Vec<T> },
    /// Lowest `count` eigenfrequencies of `level`.
    Spectrum { level: usize, count: usize },
}

/// Smallest dimension in the doubling schedule `64, 128, …, dim_max` at which
/// the requested output changes by less than `tol` (max-abs) when the
/// dimension doubles.
pub fn converge_dim<T: Real>(
    params: &SystemParams<T>,
    request: &ConvergenceRequest<T>,
    tol: T,
    dim_max: usize,
) -> Result<usize> {
    converge_dim_with(tol, dim_max, |dim| match request {
        ConvergenceRequest::RamseyTrace { state, level, times } => {
            let st = state.build(params, dim)?;
            let tr = crate::ramsey::ramsey_trace(params, &st, *level, times)?;
            Ok(tr.trace.iter().flat_map(|z| [z.re, z.im]).collect())
        }
        ConvergenceRequest::Spectrum { level, count } => {
            let ws = FockWorkspace::new(params, dim)?;
            let g = SpectralGenerator::new(&ws, &params.derive_mode_frame(*level)?)?;
            Ok(g.frequencies.iter().take(*count).copied().collect())
        }
    })
}

/// [`converge_dim`] for an arbitrary output vector.
pub fn converge_dim_with<T: Real, F>(tol: T, dim_max: usize, mut output: F) -> Result<usize>
where
    F: FnMut(usize) -> Result<Vec<T>>,
{
    if !tol.is_finite() {
        return Ok(DIM_SCHEDULE_START);
    }
    let mut dim = DIM_SCHEDULE_START;
    let mut prev = output(dim)?;
    while dim * 2 <= dim_max {
        let next = output(dim * 2)?;
        if next.len() != prev.len() {
            return Err(Error::DimensionMismatch { expected: prev.len(), got: next.len() });
        }
        let diff = prev.iter().zip(&next).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), |m, v| if v > m { v } else { m });
        if diff < tol {
            return Ok(dim);
        }
        prev = next;
        dim *= 2;
    }
    Err(Error::NoConvergence(dim_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural(dm: f64, g: f64) -> SystemParams<f64> {
        SystemParams::natural(&[0.0, dm], g, 10.0).unwrap()
    }

    fn comm(a: &CMatrix<f64>, b: &CMatrix<f64>) -> CMatrix<f64> {
        a * b - b * a
    }

    #[test]
    fn dim_two_annihilation() {
        let ws = FockWorkspace::new(&natural(0.5, 0.0), 2).unwrap();
        let a = ws.a();
        assert_eq!(a[(0, 1)], cplx(1.0));
        assert_eq!(a[(0, 0)] + a[(1, 0)] + a[(1, 1)], cplx(0.0));
        assert_eq!(FockWorkspace::new(&natural(0.5, 0.0), 1).unwrap_err(), Error::DimensionTooSmall(1));
    }

    #[test]
    fn canonical_commutators() {
        let ws = FockWorkspace::new(&natural(0.5, 0.3), 50).unwrap();
        let c = comm(&ws.a(), &ws.adag()) - ws.identity();
        assert!(max_abs_block(&c, 49) < 1e-12);
        let xp = comm(&ws.x(), &ws.p()) - ws.identity() * Complex::new(0.0, 1.0);
        assert!(max_abs_block(&xp, ws.interior()) < 1e-10);
        assert!(max_abs(&(ws.x() - ws.x().adjoint())) < 1e-15);
        assert!(max_abs(&(ws.p() - ws.p().adjoint())) < 1e-15);
    }

    #[test]
    fn mode_matrix_ground_is_a() {
        let p = natural(0.5, 0.3);
        let ws = FockWorkspace::new(&p, 40).unwrap();
        let a0 = ws.mode_matrix(&p.derive_mode_frame(0).unwrap()).unwrap();
        assert_eq!(a0, ws.a());
    }

    #[test]
    fn mode_matrix_matches_direct_construction() {
        let p = SystemParams::<f64>::natural(&[0.0, 0.5, 1.2], 0.4, 10.0).unwrap();
        let ws = FockWorkspace::new(&p, 80).unwrap();
        for i in 0..3 {
            let f = p.derive_mode_frame(i).unwrap();
            let m = ws.mode_matrix(&f).unwrap();
            let d = ws.mode_matrix_direct(&f).unwrap();
            assert!(max_abs_block(&(&m - &d), ws.interior()) < 1e-10, "level {i}");
            let c = comm(&m, &m.adjoint()) - ws.identity();
            assert!(max_abs_block(&c, ws.interior() - 2) < 1e-10);
        }
    }

    #[test]
    fn mode_matrix_rejects_foreign_frame() {
        let ws = FockWorkspace::new(&natural(0.5, 0.0), 10).unwrap();
        let foreign = natural(0.4, 0.0).derive_mode_frame(1).unwrap();
        assert_eq!(ws.mode_matrix(&foreign).unwrap_err(), Error::ParamMismatch);
        assert_eq!(ws.hamiltonian_matrix(&foreign).unwrap_err(), Error::ParamMismatch);
    }

    #[test]
    fn ground_hamiltonian_is_diagonal() {
        let p = natural(0.5, 0.0);
        let ws = FockWorkspace::new(&p, 64).unwrap();
        let g = SpectralGenerator::new(&ws, &p.derive_mode_frame(0).unwrap()).unwrap();
        for n in 0..54 {
            assert!((g.frequencies[n] - (n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn heavy_level_spectrum() {
        for g in [0.0, 0.3] {
            let p = natural(0.5, g);
            let ws = FockWorkspace::new(&p, 200).unwrap();
            let f = p.derive_mode_frame(1).unwrap();
            let gen = SpectralGenerator::new(&ws, &f).unwrap();
            let w1 = 1.0 / 1.5f64.sqrt();
            for n in 0..20 {
                let e = w1 * (n as f64 + 0.5);
                assert!(((gen.frequencies[n] - e) / e).abs() < 1e-8, "g={g} n={n}");
            }
            for n in 0..50 {
                let e = w1 * (n as f64 + 0.5);
                assert!(((gen.frequencies[n] - e) / e).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn propagator_basics() {
        let p = natural(0.5, 0.2);
        let ws = FockWorkspace::new(&p, 64).unwrap();
        let f0 = p.derive_mode_frame(0).unwrap();
        let u = propagate(&ws, &f0, 0.0).unwrap();
        assert!(max_abs(&(&u.u - ws.identity())) < 1e-12);
        assert_eq!(u.scalar_phase, cplx(1.0));
        let u = propagate(&ws, &f0, 2.0 * std::f64::consts::PI).unwrap();
        assert!(max_abs(&(&u.u + ws.identity())) < 1e-10);

        let f1 = p.derive_mode_frame(1).unwrap();
        let gen = SpectralGenerator::new(&ws, &f1).unwrap();
        let (t1, t2) = (0.37, 1.91);
        let u1 = gen.propagator(t1);
        let u2 = gen.propagator(t2);
        let u12 = gen.propagator(t1 + t2);
        assert!(max_abs(&(u1.u.adjoint() * &u1.u - ws.identity())) < 1e-10);
        assert!(max_abs(&(&u1.u * &u2.u - &u12.u)) < 1e-8);
        assert!((u1.scalar_phase * u2.scalar_phase - u12.scalar_phase).norm() < 1e-8);
        assert!((u1.scalar_phase.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squeeze_and_displace_bogoliubov() {
        let p = natural(0.5, 0.0);
        let ws = FockWorkspace::new(&p, 120).unwrap();
        assert_eq!(ws.squeeze_matrix(0.0).unwrap(), ws.identity());
        assert_eq!(ws.displace_matrix(Complex::new(0.0, 0.0)).unwrap(), ws.identity());
        let a = ws.a();
        // squeezing spreads |m⟩ over ~m·e^{2r} quanta
        let k = 30;
        let r = 0.3;
        let s = ws.squeeze_matrix(r).unwrap();
        let lhs = s.adjoint() * &a * &s;
        let rhs = &a * cplx(r.cosh()) - a.adjoint() * cplx(r.sinh());
        let dev = max_abs_block(&(lhs - rhs), k);
        assert!(dev < 1e-10, "{dev:e}");
        assert!(max_abs_block(&(s.adjoint() * &s - ws.identity()), k) < 1e-10);

        let alpha = Complex::new(0.7, -0.4);
        let d = ws.displace_matrix(alpha).unwrap();
        let lhs = d.adjoint() * &a * &d;
        let rhs = &a + ws.identity() * alpha;
        let dev = max_abs_block(&(lhs - rhs), k);
        assert!(dev < 1e-10, "{dev:e}");
    }

    #[test]
    fn truncation_is_detected() {
        let ws = FockWorkspace::new(&natural(0.5, 0.0), 16).unwrap();
        assert!(matches!(ws.displace_matrix(Complex::new(3.0, 0.0)), Err(Error::TruncationInsufficient(_))));
    }

    #[test]
    fn converge_schedule() {
        assert_eq!(converge_dim_with(f64::INFINITY, 4096, |_| Ok(vec![0.0])).unwrap(), 64);
        let d = converge_dim_with(1e-3, 4096, |n| Ok(vec![1.0 / n as f64])).unwrap();
        assert_eq!(d, 512);
        assert_eq!(converge_dim_with(1e-9, 256, |n| Ok(vec![1.0 / n as f64])).unwrap_err(), Error::NoConvergence(256));
    }

    #[test]
    fn f32_workspace() {
        let p = SystemParams::<f32>::natural(&[0.0, 0.5], 0.0, 10.0).unwrap();
        let ws = FockWorkspace::new(&p, 64).unwrap();
        let gen = SpectralGenerator::new(&ws, &p.derive_mode_frame(1).unwrap()).unwrap();
        let w1 = 1.0f32 / 1.5f32.sqrt();
        assert!((gen.frequencies[3] - 3.5 * w1).abs() < 1e-4);
    }
}
