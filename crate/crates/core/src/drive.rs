//! Periodic internal-state driving.
//!
//! The internal state is flipped between levels 0 and 1 at intervals
//! `tᵢ = π/2ωᵢ`, so the centre of mass alternates between the two
//! oscillators. One cycle acts as
//! `U₀(t₀)U₁(t₁) = −i e^{−iα_g²} S(2r) D(β_g) P`, with `P` the parity operator
//! and `β_g = α_g((i−1)cosh r − (1+i)sinh r)`. After an even number of cycles
//! the displacements cancel to linear order in `ΔM/M₀` and the net effect is
//! the squeeze `S(2Nr)`.

use nalgebra::{Complex, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fock::{interior, CMatrix, CVector, FockWorkspace, SpectralGenerator};
use crate::model::SystemParams;
use crate::num::{cis, cplx, Real};
use crate::ramsey::CMState;

/// Largest cycle count evaluated by explicit matrix products.
pub const MAX_EXACT_CYCLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSchedule<T> {
    pub level: usize,
    /// `π/2ω₀`.
    pub t0: T,
    /// `π/2ωᵢ`.
    pub t1: T,
    pub r: T,
    /// Squeeze per cycle, `2r`.
    pub per_cycle_r: T,
    pub alpha_g: T,
    pub beta_g: Complex<T>,
}

impl<T: Real> DriveSchedule<T> {
    pub fn new(params: &SystemParams<T>, level: usize) -> Result<Self> {
        let f = params.derive_mode_frame(level)?;
        let half_pi = T::frac_pi_2();
        let beta_g = Complex::new(-f.cosh_r - f.sinh_r, f.cosh_r - f.sinh_r) * f.alpha_g;
        Ok(Self {
            level,
            t0: half_pi / params.omega0,
            t1: half_pi / f.omega,
            r: f.r,
            per_cycle_r: T::lit(2.0) * f.r,
            alpha_g: f.alpha_g,
            beta_g,
        })
    }

    /// Accumulated squeeze `2Nr`. It is negative: the heavier level has the
    /// lower frequency.
    pub fn effective_r(&self, cycles: T) -> T {
        cycles * self.per_cycle_r
    }
}

/// Lowest-order accumulated squeeze `−N·Eᵢ/2M₀c²`.
pub fn effective_r_lowest_order<T: Real>(params: &SystemParams<T>, level: usize, cycles: T) -> Result<T> {
    params.level_count().checked_sub(1).filter(|&m| level <= m).ok_or(Error::LevelOutOfRange {
        level,
        count: params.level_count(),
    })?;
    Ok(-cycles * params.levels[level] / (T::lit(2.0) * params.m0 * params.c * params.c))
}

#[derive(Debug, Clone)]
pub struct CycleOperator<T: Real> {
    pub schedule: DriveSchedule<T>,
    /// `U₀(t₀)U₁(t₁)`, bounded parts only.
    pub product: CMatrix<T>,
    /// `−i S(2r) D(β_g) P`.
    pub comparator: CMatrix<T>,
    /// `−i S(2r) P`, without the displacement.
    pub squeeze_only: CMatrix<T>,
    /// Spectral norm of `product − comparator` on the interior block.
    pub deviation: T,
    pub squeeze_only_deviation: T,
}

/// Parity `(−1)^n`.
pub fn parity_matrix<T: Real>(dim: usize) -> CMatrix<T> {
    CMatrix::from_diagonal(&CVector::from_fn(dim, |i, _| cplx(if i % 2 == 0 { T::one() } else { -T::one() })))
}

/// Largest singular value of the leading `k × k` block.
pub fn interior_norm<T: Real>(m: &CMatrix<T>, k: usize) -> T {
    let block = m.view((0, 0), (k, k)).into_owned();
    block.singular_values().iter().copied().fold(T::zero(), |a, v| if v > a { v } else { a })
}

/// One drive cycle between level 0 and `level`, with its closed-form comparator.
pub fn cycle_operator<T: Real>(params: &SystemParams<T>, level: usize, dim: usize) -> Result<CycleOperator<T>> {
    let schedule = DriveSchedule::new(params, level)?;
    let ws = FockWorkspace::new(params, dim)?;
    let u0 = SpectralGenerator::new(&ws, &params.derive_mode_frame(0)?)?.propagator(schedule.t0).u;
    let u1 = SpectralGenerator::new(&ws, &params.derive_mode_frame(level)?)?.propagator(schedule.t1).u;
    let product = u0 * u1;
    let parity = parity_matrix(dim);
    let minus_i = Complex::new(T::zero(), -T::one());
    let squeeze = ws.squeeze_matrix(schedule.per_cycle_r)?;
    let squeeze_only = &squeeze * &parity * minus_i;
    let comparator = squeeze * ws.displace_matrix(schedule.beta_g)? * parity * minus_i;
    let k = interior(dim);
    let deviation = interior_norm(&(&product - &comparator), k);
    let squeeze_only_deviation = interior_norm(&(&product - &squeeze_only), k);
    Ok(CycleOperator { schedule, product, comparator, squeeze_only, deviation, squeeze_only_deviation })
}

/// `⟨a⟩` after two drive cycles acting on the vacuum.
pub fn two_cycle_displacement<T: Real>(params: &SystemParams<T>, level: usize, dim: usize) -> Result<Complex<T>> {
    let c = cycle_operator(params, level, dim)?;
    let mut vac = CVector::zeros(dim);
    vac[0] = cplx(T::one());
    let out = &c.product * (&c.product * vac);
    let ws = FockWorkspace::new(params, dim)?;
    Ok(out.dotc(&(ws.a() * &out)))
}

#[derive(Debug, Clone)]
pub struct DriveSeries<T> {
    pub cycles: Vec<usize>,
    /// `|⟨ψ₀|(U₀U₁)ᵏ|ψ₀⟩|²` (or `Tr ρ₀ρₖ` for mixed input); `None` beyond
    /// [`MAX_EXACT_CYCLES`].
    pub exact: Option<Vec<T>>,
    /// `|⟨ψ₀|S(2kr)|ψ₀⟩|²`. Matches `exact` at even `k`, and at every `k`
    /// for parity eigenstates without gravity.
    pub approx: Vec<T>,
}

impl<T: Real> DriveSeries<T> {
    /// Largest `|exact − approx|`, if the exact series was computed.
    pub fn max_deviation(&self) -> Option<T> {
        self.exact.as_ref().map(|e| {
            e.iter().zip(&self.approx).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), |m, v| if v > m { v } else { m })
        })
    }
}

fn overlap<T: Real>(psi0: &CMState<T>, c: &CMatrix<T>, current: &mut CMState<T>) -> T {
    *current = match &*current {
        CMState::Pure(v) => CMState::Pure(c * v),
        CMState::Mixed(rho) => CMState::Mixed(c * rho * c.adjoint()),
    };
    match (psi0, &*current) {
        (CMState::Pure(a), CMState::Pure(b)) => a.dotc(b).norm_sqr(),
        _ => (psi0.density() * current.density()).trace().re,
    }
}

/// Overlap series `P_k`, `k = 1..=n_cycles`, exactly and in the
/// pure-squeezing approximation.
pub fn iterate_drive<T: Real>(
    params: &SystemParams<T>,
    psi0: &CMState<T>,
    level: usize,
    n_cycles: usize,
    dim: usize,
) -> Result<DriveSeries<T>> {
    if n_cycles == 0 {
        return Err(Error::InvalidField { field: "N", reason: "must be >= 1".into() });
    }
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi0.dim() });
    }
    let schedule = DriveSchedule::new(params, level)?;
    let ws = FockWorkspace::new(params, dim)?;
    let cycles: Vec<usize> = (1..=n_cycles).collect();

    // S(2kr) = exp(k·G) with G = r(a² − a†²); diagonalise iG once.
    let a = ws.a();
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * Complex::new(T::zero(), schedule.r);
    let eig = SymmetricEigen::try_new(gen, T::default_epsilon(), 0).ok_or(Error::ConvergenceFailure)?;
    let rho0 = psi0.density();
    let vrv = eig.eigenvectors.adjoint() * &rho0 * &eig.eigenvectors;
    let approx = cycles
        .iter()
        .map(|&k| {
            let kf = T::from_usize_lossy(k);
            match psi0 {
                CMState::Pure(_) => {
                    let amp = (0..dim).fold(Complex::new(T::zero(), T::zero()), |s, j| {
                        s + vrv[(j, j)] * cis(-kf * eig.eigenvalues[j])
                    });
                    amp.norm_sqr()
                }
                CMState::Mixed(_) => {
                    // Tr(ρ₀ S ρ₀ S†) in the eigenbasis of iG
                    let mut s = Complex::new(T::zero(), T::zero());
                    for i in 0..dim {
                        for j in 0..dim {
                            s += vrv[(i, j)] * vrv[(j, i)] * cis(kf * (eig.eigenvalues[j] - eig.eigenvalues[i]));
                        }
                    }
                    s.re
                }
            }
        })
        .collect();

    let exact = if n_cycles > MAX_EXACT_CYCLES {
        log::warn!("{n_cycles} cycles exceed {MAX_EXACT_CYCLES}; reporting the squeezing approximation only");
        None
    } else {
        let c = cycle_operator(params, level, dim)?.product;
        let mut current = psi0.clone();
        Some(cycles.iter().map(|_| overlap(psi0, &c, &mut current)).collect())
    };
    Ok(DriveSeries { cycles, exact, approx })
}

/// Fractional change of the position variance after `n_cycles` cycles,
/// `e^{−4Nr} − 1`. With `r < 0` the position quadrature is anti-squeezed and
/// its variance grows; the momentum variance shrinks by the inverse factor.
pub fn position_variance_growth<T: Real>(params: &SystemParams<T>, level: usize, n_cycles: T) -> Result<T> {
    let s = DriveSchedule::new(params, level)?;
    Ok(quadrature_variance_change(s.effective_r(n_cycles)).0)
}

/// `(e^{−2s} − 1, e^{2s} − 1)`: fractional variance changes of position and
/// momentum under `S(s)`.
pub fn quadrature_variance_change<T: Real>(s: T) -> (T, T) {
    let two = T::lit(2.0);
    (crate::num::exp_m1(-two * s), crate::num::exp_m1(two * s))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().fold(T::zero(), |s, &v| s + v) / n;
    let my = ly.iter().fold(T::zero(), |s, &v| s + v) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (*x - mx) * (*y - my);
        sxx += (*x - mx) * (*x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs_block;

    fn natural(dm: f64, g: f64) -> SystemParams<f64> {
        SystemParams::natural(&[0.0, dm], g, 10.0).unwrap()
    }

    #[test]
    fn schedule_times() {
        let p = natural(0.5, 0.2);
        let s = DriveSchedule::new(&p, 1).unwrap();
        let w1 = p.derive_mode_frame(1).unwrap().omega;
        assert_eq!(s.t0, std::f64::consts::FRAC_PI_2);
        assert_eq!(s.t1, std::f64::consts::FRAC_PI_2 / w1);
        assert_eq!(DriveSchedule::new(&natural(0.5, 0.0), 1).unwrap().beta_g, Complex::new(0.0, 0.0));
    }

    #[test]
    fn no_mass_defect_is_parity() {
        let mut p = natural(0.5, 0.0);
        p.levels[1] = 0.0;
        let c = cycle_operator(&p, 1, 64).unwrap();
        let expect = parity_matrix::<f64>(64) * Complex::new(0.0, -1.0);
        assert!(max_abs_block(&(&c.product - &expect), 64) < 1e-10);
        assert!(c.deviation < 1e-10);
    }

    #[test]
    fn without_gravity_comparator_is_squeeze() {
        let c = cycle_operator(&natural(0.01, 0.0), 1, 96).unwrap();
        assert_eq!(c.comparator, c.squeeze_only);
        assert!(c.deviation < 1e-10, "{}", c.deviation);
    }

    #[test]
    fn identity_deviation_is_second_order() {
        let ladder = [1e-2, 5e-3, 2.5e-3];
        let dev: Vec<f64> = ladder.iter().map(|&e| cycle_operator(&natural(e, 1.0), 1, 96).unwrap().deviation).collect();
        let slope = log_slope(&ladder, &dev);
        assert!((slope - 2.0).abs() < 0.2, "{slope} {dev:?}");
        let ablation: Vec<f64> =
            ladder.iter().map(|&e| cycle_operator(&natural(e, 1.0), 1, 96).unwrap().squeeze_only_deviation).collect();
        let slope = log_slope(&ladder, &ablation);
        assert!((slope - 1.0).abs() < 0.2, "{slope}");
    }

    #[test]
    fn two_cycles_cancel_displacement() {
        let ladder = [1e-2, 5e-3, 2.5e-3];
        let d: Vec<f64> = ladder.iter().map(|&e| two_cycle_displacement(&natural(e, 1.0), 1, 96).unwrap().norm()).collect();
        let slope = log_slope(&ladder, &d);
        assert!((slope - 2.0).abs() < 0.2, "{slope} {d:?}");
        let one = cycle_operator(&natural(1e-2, 1.0), 1, 96).unwrap().schedule.beta_g.norm();
        assert!(d[0] < 0.1 * one);
    }

    #[test]
    fn vacuum_overlap_is_sech() {
        let p = natural(0.02, 0.0);
        let s = DriveSchedule::new(&p, 1).unwrap();
        let n = (1.0 / s.per_cycle_r.abs()).floor() as usize;
        let series = iterate_drive(&p, &CMState::vacuum(128), 1, n, 128).unwrap();
        let exact = series.exact.as_ref().unwrap();
        for (i, &k) in series.cycles.iter().enumerate() {
            let expect = 1.0 / (s.effective_r(k as f64)).cosh();
            assert!((series.approx[i] - expect).abs() < 1e-10);
            assert!((exact[i] - expect).abs() < 1e-8, "k={k}: {} vs {expect}", exact[i]);
        }
    }

    #[test]
    fn number_state_revives() {
        let p = natural(0.2, 0.0);
        let series = iterate_drive(&p, &CMState::fock(200, 5).unwrap(), 1, 60, 200).unwrap();
        let pk = &series.approx;
        assert!(pk.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        let decreasing = pk.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        assert!(!decreasing);
    }

    #[test]
    fn mixed_input_overlap() {
        let p = natural(0.02, 0.0);
        let st = CMState::thermal(96, 0.3).unwrap();
        let series = iterate_drive(&p, &st, 1, 10, 96).unwrap();
        assert!(series.max_deviation().unwrap() < 1e-8);
    }

    #[test]
    fn large_cycle_counts_skip_products() {
        let p = natural(1e-8, 0.0);
        let series = iterate_drive(&p, &CMState::vacuum(16), 1, MAX_EXACT_CYCLES + 1, 16).unwrap();
        assert!(series.exact.is_none());
        assert_eq!(series.approx.len(), MAX_EXACT_CYCLES + 1);
    }

    #[test]
    fn variance_growth() {
        assert_eq!(quadrature_variance_change(0.0f64), (0.0, 0.0));
        let (x, _) = quadrature_variance_change(-0.0025f64);
        assert!((x - 0.005).abs() < 2e-5);
        let p = SystemParams::<f64>::si_reference(&[0.0, 1e15]).unwrap();
        let g = position_variance_growth(&p, 1, 1e8).unwrap();
        assert!(g > 0.005 && g < 0.02, "{g}");
        let lo = effective_r_lowest_order(&p, 1, 1e8).unwrap();
        let s = DriveSchedule::new(&p, 1).unwrap();
        assert!((s.effective_r(1e8) / lo - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cycle_is_unitary() {
        let c = cycle_operator(&natural(0.1, 0.5), 1, 80).unwrap();
        let u = &c.product * c.product.adjoint() - CMatrix::<f64>::identity(80, 80);
        assert!(max_abs_block(&u, 80) < 1e-12);
    }
}
