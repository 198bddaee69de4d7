//! Mixed centre-of-mass evolution and Husimi Q-function diagnostics.
//!
//! With the internal state in the distribution `pₖ`, the reduced
//! centre-of-mass state evolves as `ρ(t) = Σₖ pₖ Uₖ(t) ρ(0) Uₖ†(t)` and is in
//! general mixed. `Q(β) = ⟨β|ρ|β⟩` is kept without the `1/π` factor, so
//! `Σ Q Δ²/π ≈ 1` on a grid of spacing `Δ`.

use std::cmp::Ordering;

use nalgebra::{Complex, ComplexField};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, FockWorkspace, SpectralGenerator};
use crate::model::SystemParams;
use crate::num::{cplx, Real};
use crate::ramsey::CMState;

/// Internal energy distribution `pₖ = ⟨Eₖ|ρ_int|Eₖ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalDistribution<T> {
    p: Vec<T>,
}

impl<T: Real> InternalDistribution<T> {
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("no levels".into()));
        }
        if let Some(v) = p.iter().find(|v| !matches!(v.partial_cmp(&&T::zero()), Some(Ordering::Greater | Ordering::Equal))) {
            return Err(Error::InvalidDistribution(format!("negative or NaN probability {}", v.as_f64())));
        }
        let sum = p.iter().fold(T::zero(), |a, &v| a + v);
        if (sum - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {}", sum.as_f64())));
        }
        Ok(Self { p })
    }

    /// All weight on level `k` of `count`.
    pub fn pure(count: usize, k: usize) -> Result<Self> {
        if k >= count {
            return Err(Error::LevelOutOfRange { level: k, count });
        }
        let mut p = vec![T::zero(); count];
        p[k] = T::one();
        Self::new(p)
    }

    pub fn probabilities(&self) -> &[T] {
        &self.p
    }

    /// `⟨H_int⟩ = Σ pₖEₖ`.
    pub fn mean_energy(&self, params: &SystemParams<T>) -> Result<T> {
        self.check(params)?;
        Ok(self.p.iter().zip(&params.levels).fold(T::zero(), |a, (&p, &e)| a + p * e))
    }

    fn check(&self, params: &SystemParams<T>) -> Result<()> {
        if self.p.len() != params.level_count() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for {} levels",
                self.p.len(),
                params.level_count()
            )));
        }
        Ok(())
    }
}

/// `Σₖ pₖ Uₖ(t) ρ₀ Uₖ†(t)`. Scalar phases cancel term by term.
pub fn evolve_mixed_cm<T: Real>(
    params: &SystemParams<T>,
    rho0: &CMState<T>,
    dist: &InternalDistribution<T>,
    t: T,
    dim: usize,
) -> Result<CMState<T>> {
    dist.check(params)?;
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho0.dim() });
    }
    let ws = FockWorkspace::new(params, dim)?;
    let rho = rho0.density();
    let terms = dist
        .p
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > T::zero())
        .map(|(k, &p)| {
            let u = SpectralGenerator::new(&ws, &params.derive_mode_frame(k)?)?.propagator(t).u;
            Ok((&u * &rho * u.adjoint()) * cplx(p))
        })
        .collect::<Result<Vec<_>>>()?;
    let out = terms.into_iter().fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
    Ok(CMState::Mixed(out))
}

/// Largest norm deficit tolerated for a truncated coherent state.
pub const COHERENT_DEFICIT_TOLERANCE: f64 = 1e-6;
/// Auto-sized grids grow until `Q` on the boundary falls below this.
pub const EDGE_THRESHOLD: f64 = 1e-8;

/// Projection of `|β⟩` onto the truncated basis (not renormalised).
fn truncated_coherent<T: Real>(dim: usize, beta: Complex<T>) -> Result<CVector<T>> {
    let mut v = CVector::zeros(dim);
    let mut c = cplx((-beta.norm_sqr() / T::lit(2.0)).exp());
    for n in 0..dim {
        v[n] = c;
        c = c * beta / cplx(T::from_usize_lossy(n + 1).sqrt());
    }
    let deficit = T::one() - v.norm_squared();
    if deficit > T::lit(COHERENT_DEFICIT_TOLERANCE) {
        return Err(Error::TruncationInsufficient(format!(
            "coherent state |β|={} loses {:e} of its norm at dimension {dim}",
            beta.modulus().as_f64(),
            deficit.as_f64()
        )));
    }
    Ok(v)
}

/// Rectangular grid `β = x + iy` with `x, y ∈ {−mΔ, …, mΔ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGridSpec<T> {
    pub spacing: T,
    /// Half-width; `None` starts at 4 and grows by 1.5× until the boundary
    /// values fall below [`EDGE_THRESHOLD`].
    pub half_width: Option<T>,
}

impl<T: Real> QGridSpec<T> {
    pub fn auto(spacing: T) -> Self {
        Self { spacing, half_width: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QGrid<T> {
    /// Axis values, shared by the real and imaginary directions.
    pub axis: Vec<T>,
    pub spacing: T,
    /// `q[j·n + i]` is `Q(axis[i] + i·axis[j])`.
    pub q: Vec<T>,
}

impl<T: Real> QGrid<T> {
    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn get(&self, i_re: usize, i_im: usize) -> T {
        self.q[i_im * self.axis.len() + i_re]
    }

    /// `Σ Q Δ²/π`.
    pub fn normalization(&self) -> T {
        self.q.iter().fold(T::zero(), |a, &v| a + v) * self.spacing * self.spacing / T::pi()
    }

    /// Values along `Im β = 0`.
    pub fn real_axis(&self) -> Vec<(T, T)> {
        let mid = self.axis.len() / 2;
        self.axis.iter().enumerate().map(|(i, &x)| (x, self.get(i, mid))).collect()
    }

    /// Largest value on the outer ring of the grid.
    pub fn edge_max(&self) -> T {
        let n = self.axis.len();
        let last = n - 1;
        (0..n)
            .flat_map(|i| [self.get(i, 0), self.get(i, last), self.get(0, i), self.get(last, i)])
            .fold(T::zero(), |a, v| if v > a { v } else { a })
    }

    /// `(Re β, Im β, Q)` rows, real part fastest.
    pub fn rows(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        let n = self.axis.len();
        self.q.iter().enumerate().map(move |(idx, &v)| (self.axis[idx % n], self.axis[idx / n], v))
    }
}

fn symmetric_axis<T: Real>(half_width: T, spacing: T) -> Vec<T> {
    let m = (half_width / spacing).ceil().to_usize().unwrap_or(0) as i64;
    (-m..=m).map(|k| T::lit(k as f64) * spacing).collect()
}

/// `Q(β) = ⟨β|ρ|β⟩` at one point.
pub fn q_value<T: Real>(rho: &CMState<T>, beta: Complex<T>) -> Result<T> {
    let v = truncated_coherent(rho.dim(), beta)?;
    Ok(match rho {
        CMState::Pure(psi) => v.dotc(psi).norm_sqr(),
        CMState::Mixed(m) => v.dotc(&(m * &v)).re,
    })
}

fn evaluate_grid<T: Real>(rho: &CMState<T>, axis: &[T]) -> Result<Vec<T>> {
    let n = axis.len();
    (0..n * n)
        .into_par_iter()
        .map(|idx| q_value(rho, Complex::new(axis[idx % n], axis[idx / n])))
        .collect()
}

/// Husimi function on a square grid.
pub fn qfunction<T: Real>(rho: &CMState<T>, spec: &QGridSpec<T>) -> Result<QGrid<T>> {
    if spec.spacing.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::NonPositive { field: "spacing", value: spec.spacing.as_f64() });
    }
    let mut half = spec.half_width.unwrap_or(T::lit(4.0));
    loop {
        let axis = symmetric_axis(half, spec.spacing);
        let q = evaluate_grid(rho, &axis)?;
        let grid = QGrid { axis, spacing: spec.spacing, q };
        if spec.half_width.is_some() || grid.edge_max() < T::lit(EDGE_THRESHOLD) {
            return Ok(grid);
        }
        half *= T::lit(1.5);
    }
}

/// Short-time Q-function of an initially coherent state `|α⟩`:
/// `|⟨β|α⟩|² Σₖ pₖ exp(−(ωₖt)²(⟨β|n̂ₖ²|α⟩/⟨β|α⟩ − (⟨β|n̂ₖ|α⟩/⟨β|α⟩)²))`.
///
/// The bracket is complex unless `α` and `β` are both real; the complex value
/// is returned. For real arguments it agrees with the exact evolution up to
/// `O(t⁴)`.
pub fn qfunction_short_time<T: Real>(
    params: &SystemParams<T>,
    alpha: Complex<T>,
    dist: &InternalDistribution<T>,
    beta: Complex<T>,
    t: T,
) -> Result<Complex<T>> {
    dist.check(params)?;
    let overlap = (-(beta - alpha).norm_sqr()).exp();
    let bc = beta.conj();
    // ⟨β|a†ᵖaᵠ|α⟩/⟨β|α⟩ = β*ᵖ αᵠ
    let moment = |p: u32, q: u32| bc.powu(p) * alpha.powu(q);
    let mut sum = cplx(T::zero());
    for (k, &p) in dist.p.iter().enumerate() {
        if p == T::zero() {
            continue;
        }
        let f = params.derive_mode_frame(k)?;
        let nk = crate::analytic::number_operator_poly(&f);
        let m1 = nk.expect_with(moment);
        let m2 = (&nk * &nk).expect_with(moment);
        let theta = f.omega * t;
        sum += ComplexField::exp((m1 * m1 - m2) * cplx(theta * theta)) * cplx(p);
    }
    Ok(sum * cplx(overlap))
}

/// `(ω₀t)²⟨H_int⟩/2M₀c²`.
pub fn r_eff<T: Real>(params: &SystemParams<T>, mean_energy: T, t: T) -> T {
    let wt = params.omega0 * t;
    wt * wt * mean_energy / (T::lit(2.0) * params.m0 * params.c * params.c)
}

/// Equipartition internal energy `3Nk_BT` of `n_atoms` atoms.
pub fn gas_internal_energy<T: Real>(n_atoms: T, temperature: T, kb: T) -> T {
    T::lit(3.0) * n_atoms * kb * temperature
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeFit<T> {
    /// `ε` in `ln Q = −β²(1 + ε)`.
    pub r_eff: T,
    /// RMS residual of `ln Q` over the fitted points.
    pub residual: T,
}

pub const GAUSSIAN_RESIDUAL_TOLERANCE: f64 = 1e-3;

/// Fits `ln Q(β) = −β²(1 + ε)` along the real axis, by least squares
/// through the origin over points with `Q > 10⁻¹²`.
pub fn effective_squeezing_fit_profile<T: Real>(profile: &[(T, T)]) -> Result<SqueezeFit<T>> {
    let pts: Vec<(T, T)> = profile
        .iter()
        .filter(|(b, q)| *b != T::zero() && *q > T::lit(1e-12))
        .map(|&(b, q)| (b * b, q.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::NonGaussianProfile(f64::INFINITY));
    }
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x * y, b + x * x));
    let slope = sxy / sxx;
    let ss = pts.iter().fold(T::zero(), |a, &(x, y)| {
        let r = y - slope * x;
        a + r * r
    });
    let residual = (ss / T::from_usize_lossy(pts.len())).sqrt();
    if residual > T::lit(GAUSSIAN_RESIDUAL_TOLERANCE) {
        return Err(Error::NonGaussianProfile(residual.as_f64()));
    }
    Ok(SqueezeFit { r_eff: -slope - T::one(), residual })
}

pub fn effective_squeezing_fit<T: Real>(q: &QGrid<T>) -> Result<SqueezeFit<T>> {
    effective_squeezing_fit_profile(&q.real_axis())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs;

    fn natural(levels: &[f64], g: f64) -> SystemParams<f64> {
        SystemParams::natural(levels, g, 10.0).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(InternalDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(InternalDistribution::new(vec![0.5, 0.6]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(InternalDistribution::new(vec![1.5, -0.5]), Err(Error::InvalidDistribution(_))));
        let p = natural(&[0.0, 0.1], 0.0);
        let d = InternalDistribution::new(vec![1.0]).unwrap();
        assert!(evolve_mixed_cm(&p, &CMState::vacuum(16), &d, 1.0, 16).is_err());
    }

    #[test]
    fn single_level_is_unitary() {
        let p = natural(&[0.0, 0.3], 0.2);
        let d = InternalDistribution::pure(2, 1).unwrap();
        let rho = evolve_mixed_cm(&p, &CMState::coherent(80, Complex::new(0.7, 0.1)).unwrap(), &d, 1.3, 80).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixing_reduces_purity() {
        let p = natural(&[0.0, 0.3], 0.2);
        let d = InternalDistribution::new(vec![0.5, 0.5]).unwrap();
        let vac = CMState::vacuum(80);
        let rho = evolve_mixed_cm(&p, &vac, &d, 1.0, 80).unwrap();
        assert!(rho.purity() < 1.0 - 1e-3);
        let m = rho.density();
        assert!(max_abs(&(&m - m.adjoint())) < 1e-12);
        assert!((m.trace().re - 1.0).abs() < 1e-10);
        assert!(CMState::from_density(m).is_ok());
        let same = evolve_mixed_cm(&p, &vac, &d, 0.0, 80).unwrap();
        assert!(max_abs(&(same.density() - vac.density())) < 1e-14);
    }

    #[test]
    fn evolution_depends_on_more_than_mean_energy() {
        let p = natural(&[0.0, 0.1, 0.2], 0.0);
        let a = InternalDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        let b = InternalDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert!((a.mean_energy(&p).unwrap() - b.mean_energy(&p).unwrap()).abs() < 1e-15);
        let st = CMState::coherent(60, Complex::new(0.5, 0.0)).unwrap();
        let ra = evolve_mixed_cm(&p, &st, &a, 0.5, 60).unwrap().density();
        let rb = evolve_mixed_cm(&p, &st, &b, 0.5, 60).unwrap().density();
        assert!(max_abs(&(ra - rb)) > 1e-6);
    }

    #[test]
    fn vacuum_and_coherent_q() {
        let vac = CMState::<f64>::vacuum(64);
        for b in [Complex::new(0.0, 0.0), Complex::new(1.0, -0.5), Complex::new(-2.0, 1.0)] {
            assert!((q_value(&vac, b).unwrap() - (-b.norm_sqr()).exp()).abs() < 1e-15);
        }
        let alpha = Complex::new(1.0f64, 0.5);
        let coh = CMState::coherent(64, alpha).unwrap();
        let b = Complex::new(0.3, -0.2);
        assert!((q_value(&coh, b).unwrap() - (-(b - alpha).norm_sqr()).exp()).abs() < 1e-12);
    }

    #[test]
    fn auto_grid_normalization() {
        let g = qfunction(&CMState::coherent(200, Complex::new(1.0, 0.0)).unwrap(), &QGridSpec::auto(0.2)).unwrap();
        assert!(g.edge_max() < EDGE_THRESHOLD);
        assert!((g.normalization() - 1.0).abs() < 1e-3);
        assert!(g.q.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        let vac = qfunction(&CMState::<f64>::vacuum(200), &QGridSpec::auto(0.25)).unwrap();
        let mid = vac.len() / 2;
        assert!((vac.get(mid, mid) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_beyond_truncation() {
        let spec = QGridSpec { spacing: 0.5, half_width: Some(8.0) };
        assert!(matches!(qfunction(&CMState::<f64>::vacuum(32), &spec), Err(Error::TruncationInsufficient(_))));
    }

    #[test]
    fn q_is_linear_in_the_state() {
        let a = CMState::coherent(40, Complex::new(0.5, 0.2)).unwrap().density();
        let b = CMState::thermal(40, 0.4).unwrap().density();
        let mix = CMState::Mixed(&a * cplx(0.25) + &b * cplx(0.75));
        let spec = QGridSpec { spacing: 0.5, half_width: Some(2.0) };
        let qa = qfunction(&CMState::Mixed(a), &spec).unwrap();
        let qb = qfunction(&CMState::Mixed(b), &spec).unwrap();
        let qm = qfunction(&mix, &spec).unwrap();
        for i in 0..qm.q.len() {
            assert!((qm.q[i] - (0.25 * qa.q[i] + 0.75 * qb.q[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn short_time_at_zero() {
        let p = natural(&[0.0, 0.05, 0.1], 0.3);
        let d = InternalDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let alpha = Complex::new(0.4f64, -0.3);
        for b in [Complex::new(0.0, 0.0), Complex::new(1.0, 1.0), Complex::new(-0.5, 2.0)] {
            let q = qfunction_short_time(&p, alpha, &d, b, 0.0).unwrap();
            assert!((q.re - (-(b - alpha).norm_sqr()).exp()).abs() < 1e-15);
            assert_eq!(q.im, 0.0);
        }
    }

    fn short_time_error(t: f64) -> f64 {
        let p = natural(&[0.0, 0.05, 0.1], 0.3);
        let d = InternalDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let alpha = Complex::new(0.5, 0.0);
        let rho = evolve_mixed_cm(&p, &CMState::coherent(80, alpha).unwrap(), &d, t, 80).unwrap();
        (-8..=8)
            .map(|i| {
                let b = Complex::new(0.25 * f64::from(i), 0.0);
                let exact = q_value(&rho, b).unwrap();
                let st = qfunction_short_time(&p, alpha, &d, b, t).unwrap();
                (exact - st.re).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn short_time_error_is_fourth_order() {
        let ratio = short_time_error(0.2) / short_time_error(0.1);
        assert!((ratio - 16.0).abs() < 4.0, "{ratio}");
    }

    #[test]
    fn fit_recovers_known_squeezing() {
        let profile: Vec<(f64, f64)> = (-30..=30).map(|i| {
            let b = 0.1 * f64::from(i);
            (b, (-b * b * 1.0123).exp())
        }).collect();
        let f = effective_squeezing_fit_profile(&profile).unwrap();
        assert!((f.r_eff - 0.0123).abs() < 1e-12);
        let vac = qfunction(&CMState::<f64>::vacuum(64), &QGridSpec { spacing: 0.1, half_width: Some(3.0) }).unwrap();
        assert!(effective_squeezing_fit(&vac).unwrap().r_eff.abs() < 1e-6);
        let bumpy: Vec<(f64, f64)> = profile.iter().map(|&(b, q)| (b, q * (1.0 + 0.5 * b.sin().powi(2)))).collect();
        assert!(matches!(effective_squeezing_fit_profile(&bumpy), Err(Error::NonGaussianProfile(_))));
    }

    #[test]
    fn fit_matches_short_time_profile() {
        let p = natural(&[0.0, 2e-3, 4e-3], 0.0);
        let d = InternalDistribution::new(vec![0.3, 0.4, 0.3]).unwrap();
        let t = 1.0;
        let profile: Vec<(f64, f64)> = (-30..=30)
            .map(|i| {
                let b = 0.1 * f64::from(i);
                (b, qfunction_short_time(&p, Complex::new(0.0, 0.0), &d, Complex::new(b, 0.0), t).unwrap().re)
            })
            .collect();
        let f = effective_squeezing_fit_profile(&profile).unwrap();
        let expect = r_eff(&p, d.mean_energy(&p).unwrap(), t);
        assert!((f.r_eff / expect - 1.0).abs() < 0.01, "{} vs {expect}", f.r_eff);
    }

    #[test]
    fn gas_estimate() {
        let mut p = SystemParams::<f64>::si_reference(&[0.0, 1e15]).unwrap();
        let n = 1e3;
        p.m0 = n * 1e-26;
        let h = gas_internal_energy(n, 100.0, p.kb);
        let ratio = h / (2.0 * p.m0 * p.c * p.c);
        assert!(ratio > 1e-13 && ratio < 1e-11);
        let r = r_eff(&p, h, 1.0);
        assert!(r > 0.1 && r < 10.0, "{r}");
    }
}
