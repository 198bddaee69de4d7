//! Independent brute-force oracles.
//!
//! Each oracle recomputes a result along a separate code path (dense Fock
//! matrices, numerical minimisation, scaling fits) and reports the largest
//! deviation against a fixed tolerance. [`run_all`] executes the registry
//! concurrently and returns the reports in registry order.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytic::{
    approx_visibility, effective_shift, exact_phase, number_operator_moments_matrix, s3_visibility, LadderMoments,
    VacuumAmplitudeParams,
};
use crate::clock::{minimal_shift_closed_form, minimal_shift_numeric, thermal_state};
use crate::drive::{cycle_operator, iterate_drive, log_slope, quadrature_variance_change, two_cycle_displacement, DriveSchedule};
use crate::error::{Error, Result};
use crate::fock::{converge_dim, max_abs_block, ConvergenceRequest, FockWorkspace, SpectralGenerator};
use crate::model::SystemParams;
use crate::num::{cplx, wrap_angle};
use crate::phasespace::{
    effective_squeezing_fit_profile, evolve_mixed_cm, q_value, qfunction, qfunction_short_time, r_eff,
    InternalDistribution, QGridSpec,
};
use crate::ramsey::{fock_revival_values, ramsey_trace, uniform_grid, CMState, StateSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    /// SHA-256 of the oracle's input description.
    pub inputs_digest: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl OracleReport {
    pub fn new(name: &str, inputs: &str, max_deviation: f64, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            inputs_digest: digest(inputs),
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
            note: note.into(),
        }
    }

    /// Report for an oracle that could not run.
    pub fn failed(name: &str, err: &Error) -> Self {
        Self {
            name: name.to_string(),
            inputs_digest: String::new(),
            max_deviation: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
            note: err.to_string(),
        }
    }
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn fmax(a: f64, b: f64) -> f64 {
    if b > a || b.is_nan() {
        b
    } else {
        a
    }
}

const NATURAL_C: f64 = 10.0;

// --- vacuum / coherent Ramsey amplitude ---

/// Parameter grid of the vacuum-visibility oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumOracleGrid {
    pub s_values: Vec<f64>,
    pub x0_values: Vec<f64>,
    /// Samples of `ω₁t` on `[0, 4π]`.
    pub points: usize,
    pub dim: usize,
}

impl Default for VacuumOracleGrid {
    fn default() -> Self {
        Self { s_values: vec![0.5, 0.9, 0.99], x0_values: vec![0.0, 0.02, 5.0], points: 400, dim: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumDeviation {
    pub visibility: f64,
    /// Largest wrapped phase difference where the visibility exceeds 10⁻⁶.
    pub phase: f64,
}

pub const VISIBILITY_TOLERANCE: f64 = 1e-6;
pub const PHASE_TOLERANCE: f64 = 1e-5;

/// Dense Fock trace against the closed-form amplitude for one `(S, x₀)`.
///
/// The ground-level vacuum is a coherent state of the level-1 mode centred
/// `x₀` from its trap centre, so this covers both cases of the closed form.
pub fn vacuum_deviation(s: f64, x0: f64, points: usize, dim: usize) -> Result<VacuumDeviation> {
    let p = SystemParams::<f64>::natural_overlap(s, x0, NATURAL_C)?;
    let vp = VacuumAmplitudeParams::from_system(&p, 1)?;
    let times = uniform_grid(0.0, 4.0 * PI / vp.omega1, points);
    let tr = ramsey_trace(&p, &CMState::vacuum(dim), 1, &times)?;
    let mut dev = VacuumDeviation { visibility: 0.0, phase: 0.0 };
    for (i, &t) in times.iter().enumerate() {
        let v = s3_visibility(&vp, t);
        dev.visibility = fmax(dev.visibility, (tr.visibility[i] - v).abs());
        if v > 1e-6 {
            let d = wrap_angle(tr.trace[i].arg() - exact_phase(&vp, t)).abs();
            dev.phase = fmax(dev.phase, d);
        }
    }
    Ok(dev)
}

/// Worst deviations over the whole grid, evaluated in parallel.
pub fn vacuum_grid_deviation(grid: &VacuumOracleGrid) -> Result<VacuumDeviation> {
    let cases: Vec<(f64, f64)> =
        grid.s_values.iter().flat_map(|&s| grid.x0_values.iter().map(move |&x| (s, x))).collect();
    let devs = cases
        .par_iter()
        .map(|&(s, x)| vacuum_deviation(s, x, grid.points, grid.dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(devs.into_iter().fold(VacuumDeviation { visibility: 0.0, phase: 0.0 }, |a, d| VacuumDeviation {
        visibility: fmax(a.visibility, d.visibility),
        phase: fmax(a.phase, d.phase),
    }))
}

/// Visibility and phase of the dense trace against the closed form. The
/// reported deviation is normalised by the respective tolerances.
pub fn oracle_vacuum_visibility(grid: &VacuumOracleGrid) -> Result<OracleReport> {
    let d = vacuum_grid_deviation(grid)?;
    let scaled = fmax(d.visibility / VISIBILITY_TOLERANCE, d.phase / PHASE_TOLERANCE);
    Ok(OracleReport::new(
        "vacuum_visibility",
        &format!("{grid:?}"),
        scaled,
        1.0,
        format!("max |ΔV| = {:e}, max |Δφ| = {:e} rad", d.visibility, d.phase),
    ))
}

// --- clock minimum ---

/// Numerical minimisation of the lowest-order shift against the closed form
/// (optionally scaled by `perturb` as a negative control).
pub fn oracle_minshift(params: &SystemParams<f64>, n_values: &[f64], perturb: f64) -> Result<OracleReport> {
    let mut dev: f64 = 0.0;
    for &n in n_values {
        let (w, d) = minimal_shift_closed_form(params, n)?;
        let (nw, nd) = minimal_shift_numeric(params, n)?;
        dev = fmax(dev, ((nw - w * perturb) / (w * perturb)).abs());
        dev = fmax(dev, ((nd - d * perturb) / (d * perturb)).abs());
    }
    Ok(OracleReport::new(
        "minshift",
        &format!("{params:?} {n_values:?} {perturb}"),
        dev,
        crate::clock::MINSHIFT_TOLERANCE,
        "golden-section + derivative bisection vs closed form",
    ))
}

// --- drive identity ---

pub const DRIVE_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
const DRIVE_GRAVITY: f64 = 1.0;
const DRIVE_DIM: usize = 96;

/// Which comparator the cycle-identity scaling is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    /// `−i S(2r) D(β_g) P`; expected exponent 2.
    Full,
    /// `−i S(2r) P`; expected exponent 1.
    SqueezeOnly,
}

/// Exponent of `‖U₀U₁ − comparator‖` in `ΔM/M₀` over `ladder`.
pub fn cycle_identity_exponent(ladder: &[f64], g: f64, comparator: Comparator) -> Result<(f64, Vec<f64>)> {
    let devs = ladder
        .iter()
        .map(|&e| {
            let c = cycle_operator(&SystemParams::natural(&[0.0, e], g, NATURAL_C)?, 1, DRIVE_DIM)?;
            Ok(match comparator {
                Comparator::Full => c.deviation,
                Comparator::SqueezeOnly => c.squeeze_only_deviation,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((log_slope(ladder, &devs), devs))
}

pub fn oracle_cycle_identity(ladder: &[f64], comparator: Comparator) -> Result<OracleReport> {
    let (exponent, devs) = cycle_identity_exponent(ladder, DRIVE_GRAVITY, comparator)?;
    let (name, target) = match comparator {
        Comparator::Full => ("cycle_identity", 2.0),
        Comparator::SqueezeOnly => ("cycle_identity_ablation", 1.0),
    };
    Ok(OracleReport::new(
        name,
        &format!("{ladder:?} g={DRIVE_GRAVITY} dim={DRIVE_DIM} {comparator:?}"),
        (exponent - target).abs(),
        0.2,
        format!("exponent {exponent:.4} (target {target}); deviations {devs:?}"),
    ))
}

/// Exponent of the two-cycle displacement `|⟨a⟩|` in `ΔM/M₀`.
pub fn two_cycle_exponent(ladder: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = ladder
        .iter()
        .map(|&e| Ok(two_cycle_displacement(&SystemParams::natural(&[0.0, e], DRIVE_GRAVITY, NATURAL_C)?, 1, DRIVE_DIM)?.norm()))
        .collect::<Result<Vec<f64>>>()?;
    Ok((log_slope(ladder, &d), d))
}

fn oracle_two_cycle() -> Result<OracleReport> {
    let (exponent, d) = two_cycle_exponent(&DRIVE_LADDER)?;
    Ok(OracleReport::new(
        "two_cycle_displacement",
        &format!("{DRIVE_LADDER:?}"),
        (exponent - 2.0).abs(),
        0.2,
        format!("exponent {exponent:.4}; |<a>| {d:?}"),
    ))
}

/// Vacuum overlap after `k` cycles, exact and approximate, against
/// `1/cosh(2kr)` for `|2kr| ≤ 1`.
pub fn drive_vacuum_deviation(dm: f64, dim: usize) -> Result<f64> {
    let p = SystemParams::<f64>::natural(&[0.0, dm], 0.0, NATURAL_C)?;
    let s = DriveSchedule::new(&p, 1)?;
    let n = ((1.0 / s.per_cycle_r.abs()).floor() as usize).max(1);
    let series = iterate_drive(&p, &CMState::vacuum(dim), 1, n, dim)?;
    let exact = series.exact.as_ref().expect("cycle count below the exact limit");
    let mut dev: f64 = 0.0;
    for (i, &k) in series.cycles.iter().enumerate() {
        let expect = 1.0 / s.effective_r(k as f64).cosh();
        dev = fmax(dev, (series.approx[i] - expect).abs());
        dev = fmax(dev, (exact[i] - expect).abs());
    }
    Ok(dev)
}

fn oracle_drive_vacuum() -> Result<OracleReport> {
    let dev = drive_vacuum_deviation(0.02, 128)?;
    Ok(OracleReport::new("drive_vacuum_sech", "dm=0.02 dim=128 |2Nr|<=1", dev, 1e-6, "P_N vs 1/cosh(2Nr)"))
}

fn oracle_drive_series_scaling() -> Result<OracleReport> {
    let ladder = [2e-3, 1e-3, 5e-4];
    let devs = ladder
        .iter()
        .map(|&e| {
            let p = SystemParams::<f64>::natural(&[0.0, e], DRIVE_GRAVITY, NATURAL_C)?;
            let s = iterate_drive(&p, &CMState::vacuum(64), 1, 100, 64)?;
            Ok(s.max_deviation().unwrap_or(f64::NAN))
        })
        .collect::<Result<Vec<f64>>>()?;
    let exponent = log_slope(&ladder, &devs);
    Ok(OracleReport::new(
        "drive_series_scaling",
        &format!("{ladder:?} N=100"),
        (exponent - 2.0).abs(),
        0.2,
        format!("exponent {exponent:.4}; max |P_exact - P_approx| {devs:?}"),
    ))
}

fn oracle_variance_growth() -> Result<OracleReport> {
    let (x, _) = quadrature_variance_change(-0.0025_f64);
    let dev = (x - 0.005).abs() / 0.005;
    Ok(OracleReport::new("variance_growth_series", "2Nr=0.0025", dev, 1e-2, format!("growth {x:e}")))
}

// --- model, Fock and Ramsey ---

fn oracle_alpha_g() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 1e-3], 0.1, NATURAL_C)?;
    let exact = p.derive_mode_frame(1)?.alpha_g;
    let lo = p.displacement_lowest_order(1)?;
    Ok(OracleReport::new("alpha_g_lowest_order", "dm=1e-3 g=0.1", ((lo - exact) / exact).abs(), 1e-3, ""))
}

fn oracle_redshift() -> Result<OracleReport> {
    let p = SystemParams::<f64>::si_reference(&[0.0, 1e15])?;
    let eps = p.redshift_parameter(1.0);
    let direct = 9.81 / (p.c * p.c);
    Ok(OracleReport::new("redshift_ratio", "g=9.81 h=1", ((eps - direct) / direct).abs(), 1e-12, format!("{eps:e}")))
}

fn oracle_spectrum() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C)?;
    let ws = FockWorkspace::new(&p, 200)?;
    let gen = SpectralGenerator::new(&ws, &p.derive_mode_frame(1)?)?;
    let w1 = 1.0 / 1.5_f64.sqrt();
    let dev = (0..20).fold(0.0, |m, n| {
        let expect = w1 * (n as f64 + 0.5);
        fmax(m, ((gen.frequencies[n] - expect) / expect).abs())
    });
    Ok(OracleReport::new("spectrum_dense_eigensolve", "dm=0.5 g=0 dim=200", dev, 1e-8, ""))
}

fn oracle_bogoliubov() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C)?;
    let ws = FockWorkspace::new(&p, 160)?;
    let r = 0.3;
    let s = ws.squeeze_matrix(r)?;
    let a = ws.a();
    let lhs = s.adjoint() * &a * &s;
    let rhs = &a * cplx(r.cosh()) - ws.adag() * cplx(r.sinh());
    let dev = max_abs_block(&(lhs - rhs), 30);
    Ok(OracleReport::new("bogoliubov_squeeze", "r=0.3 dim=160 block=30", dev, 1e-10, ""))
}

fn oracle_displacement() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C)?;
    let ws = FockWorkspace::new(&p, 160)?;
    let alpha = Complex::new(0.6, -0.4);
    let d = ws.displace_matrix(alpha)?;
    let a = ws.a();
    let lhs = d.adjoint() * &a * &d;
    let rhs = &a + ws.identity() * alpha;
    let dev = max_abs_block(&(lhs - rhs), 60);
    Ok(OracleReport::new("displacement_shift", "alpha=0.6-0.4i dim=160 block=60", dev, 1e-10, ""))
}

fn oracle_dim_convergence() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C)?;
    let w1 = p.derive_mode_frame(1)?.omega;
    let req = ConvergenceRequest::RamseyTrace { state: StateSpec::vacuum(), level: 1, times: uniform_grid(0.0, 4.0 * PI / w1, 40) };
    let dim = converge_dim(&p, &req, 1e-8, 1024)?;
    Ok(OracleReport::new("dim_convergence_vacuum", "dm=0.5 x0=0 tol=1e-8", dim as f64, 256.0, format!("converged at {dim}")))
}

fn revival_params(g: f64) -> Result<SystemParams<f64>> {
    SystemParams::natural(&[0.0, 0.5], g, NATURAL_C)
}

/// Gravity strength in the number-state revival checks: separation `x₀ = 0.1` length units.
pub const REVIVAL_GRAVITY: f64 = 0.2;

fn oracle_revival_2pi() -> Result<OracleReport> {
    let p = revival_params(REVIVAL_GRAVITY)?;
    let dev = (0..=10).map(|n| fock_revival_values(&p, n, 1, 256).map(|(_, v)| (v - 1.0).abs())).try_fold(0.0, |m, d| d.map(|d| fmax(m, d)))?;
    Ok(OracleReport::new("fock_revival_2pi", "dm=0.5 n0=0..10 dim=256", dev, 1e-8, ""))
}

fn oracle_revival_pi() -> Result<OracleReport> {
    let p = revival_params(0.0)?;
    let dev = (0..=10).map(|n| fock_revival_values(&p, n, 1, 256).map(|(v, _): (f64, f64)| (v - 1.0).abs())).try_fold(0.0, |m, d| d.map(|d| fmax(m, d)))?;
    Ok(OracleReport::new("fock_revival_pi_no_gravity", "dm=0.5 g=0 n0=0..10 dim=256", dev, 1e-8, ""))
}

// --- analytic shift and visibility ---

/// Exact Fock value of the shift generator
/// `Re⟨ω₁(n̂₁+½) − ω₀(n̂₀+½)⟩ + Re[(it/2)ω₀ω₁⟨[n̂₀,n̂₁]⟩] + (scalar gap − ω_c)`,
/// with `n̂₁` built from the position and momentum matrices.
pub fn shift_generator_fock(params: &SystemParams<f64>, state: &CMState<f64>, t: f64) -> Result<f64> {
    let ws = FockWorkspace::new(params, state.dim())?;
    let f = params.derive_mode_frame(1)?;
    let a1 = ws.mode_matrix_direct(&f)?;
    let n1 = a1.adjoint() * &a1;
    let n0 = ws.n();
    let (w0, w1) = (params.omega0, f.omega);
    let gen = &n1 * cplx(w1) - &n0 * cplx(w0);
    let comm = &n0 * &n1 - &n1 * &n0;
    let mean = state.expect(&gen).re + (w1 - w0) / 2.0;
    let commutator = (Complex::new(0.0, t / 2.0) * w0 * w1 * state.expect(&comm)).re;
    let scalar = params.scalar_gap_rate(1)? - params.transition_frequency(1)?;
    Ok(mean + commutator + scalar)
}

/// Relative deviation of the effective-Hamiltonian shift from the Fock
/// oracle for vacuum, coherent `α = 1` and thermal `n̄ = 10` states at `r`.
pub fn shift_generator_deviations(r: f64) -> Result<Vec<(String, f64)>> {
    let dm = (4.0 * r).exp_m1();
    let p = SystemParams::<f64>::natural(&[0.0, dm], 0.5, NATURAL_C)?;
    let t = 0.7;
    let dim = 384;
    let cases = [
        ("vacuum", CMState::vacuum(dim), LadderMoments::vacuum()),
        ("coherent", CMState::coherent(dim, Complex::new(1.0, 0.0))?, LadderMoments::coherent(Complex::new(1.0, 0.0))),
        ("thermal", CMState::thermal(dim, 10.0)?, LadderMoments::thermal(10.0)),
    ];
    cases
        .into_iter()
        .map(|(name, st, m)| {
            let fock = shift_generator_fock(&p, &st, t)?;
            let eff = effective_shift(&p, 1, &m, t)?.mean_shift;
            Ok((name.to_string(), ((eff - fock) / fock).abs()))
        })
        .collect()
}

fn oracle_shift_generator() -> Result<OracleReport> {
    let devs = shift_generator_deviations(1e-5)?;
    let max = devs.iter().fold(0.0, |m, (_, d)| fmax(m, *d));
    Ok(OracleReport::new("shift_generator", "r=1e-5 g=0.5 t=0.7 dim=384", max, 1e-3, format!("{devs:?}")))
}

fn oracle_vacuum_shift() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 4e-5], 0.0, 100.0)?;
    let f = p.derive_mode_frame(1)?;
    let e = effective_shift(&p, 1, &LadderMoments::vacuum(), 0.7)?;
    let expect = e.delta_omega / 2.0 + f.omega * f.sinh_r * f.sinh_r;
    Ok(OracleReport::new("vacuum_shift_gravity_free", "dm=4e-5 g=0", ((e.mean_shift - expect) / expect).abs(), 1e-12, ""))
}

fn oracle_number_operator_vacuum() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.2], 0.0, NATURAL_C)?;
    let f = p.derive_mode_frame(1)?;
    let m = number_operator_moments_matrix(&p, 1, &CMState::vacuum(64))?;
    let expect = f.sinh_r * f.sinh_r;
    Ok(OracleReport::new("number_operator_vacuum", "dm=0.2 g=0", ((m.n - expect) / expect).abs(), 1e-10, ""))
}

/// Ratio of the quadratic-visibility error at `t` and `t/2` for a thermal state.
pub fn approx_visibility_ratio(t: f64) -> Result<f64> {
    let r: f64 = 1e-3;
    let p = SystemParams::<f64>::natural(&[0.0, (4.0 * r).exp_m1()], 0.0, NATURAL_C)?;
    let st = CMState::thermal(160, 1.0)?;
    let pops = st.populations();
    let err = |t: f64| -> Result<f64> {
        let exact = ramsey_trace(&p, &st, 1, &[t])?.visibility[0];
        Ok((approx_visibility(&p, 1, &pops, t)?.quadratic - exact).abs())
    };
    Ok(err(t)? / err(t / 2.0)?)
}

fn oracle_approx_visibility() -> Result<OracleReport> {
    let ratio = approx_visibility_ratio(0.4)?;
    Ok(OracleReport::new("approx_visibility_t4", "r=1e-3 thermal nbar=1 t=0.4", (ratio - 16.0).abs(), 4.0, format!("ratio {ratio:.3}")))
}

fn oracle_thermal_block() -> Result<OracleReport> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C)?;
    let temp = 1.5;
    let st = thermal_state(&p, temp, 160)?;
    let ws = FockWorkspace::new(&p, 160)?;
    let a = ws.a();
    let got = st.blocks[1].expect(&(&a * &a));
    let f = p.derive_mode_frame(1)?;
    let nbar = 1.0 / (f.omega / temp).exp_m1();
    let expect = f.sinh_r * f.cosh_r * (2.0 * nbar + 1.0);
    Ok(OracleReport::new(
        "thermal_block_squeezed",
        "dm=0.5 T=1.5 dim=160",
        ((got.re - expect) / expect).abs() + got.im.abs(),
        1e-8,
        format!("<a^2> = {got}"),
    ))
}

// --- phase space ---

fn oracle_q_normalization() -> Result<OracleReport> {
    let st = CMState::coherent(200, Complex::new(1.0, 0.5))?;
    let g = qfunction(&st, &QGridSpec::auto(0.2))?;
    Ok(OracleReport::new("q_normalization", "coherent 1+0.5i spacing=0.2", (g.normalization() - 1.0_f64).abs(), 1e-3, ""))
}

/// Ratio of the short-time Q error at `t` and `t/2` along the real axis.
pub fn short_time_q_ratio(t: f64) -> Result<f64> {
    let p = SystemParams::<f64>::natural(&[0.0, 0.05, 0.1], 0.3, NATURAL_C)?;
    let d = InternalDistribution::new(vec![0.2, 0.3, 0.5])?;
    let alpha = Complex::new(0.5, 0.0);
    let err = |t: f64| -> Result<f64> {
        let rho = evolve_mixed_cm(&p, &CMState::coherent(80, alpha)?, &d, t, 80)?;
        (-8..=8).try_fold(0.0, |m, i| {
            let b = Complex::new(0.25 * f64::from(i), 0.0);
            let st = qfunction_short_time(&p, alpha, &d, b, t)?;
            Ok(fmax(m, (q_value(&rho, b)? - st.re).abs()))
        })
    };
    Ok(err(t)? / err(t / 2.0)?)
}

fn oracle_short_time_q() -> Result<OracleReport> {
    let ratio = short_time_q_ratio(0.2)?;
    Ok(OracleReport::new("qfunction_t4", "levels 0,0.05,0.1 alpha=0.5 t=0.2", (ratio - 16.0).abs(), 4.0, format!("ratio {ratio:.3}")))
}

/// Relative error of the fitted `r_eff` on a short-time profile.
pub fn squeezing_fit_deviation() -> Result<f64> {
    let p = SystemParams::<f64>::natural(&[0.0, 2e-3, 4e-3], 0.0, NATURAL_C)?;
    let d = InternalDistribution::new(vec![0.3, 0.4, 0.3])?;
    let t = 1.0;
    let profile = (-30..=30)
        .map(|i| {
            let b = 0.1 * f64::from(i);
            Ok((b, qfunction_short_time(&p, Complex::new(0.0, 0.0), &d, Complex::new(b, 0.0), t)?.re))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = effective_squeezing_fit_profile(&profile)?;
    let expect = r_eff(&p, d.mean_energy(&p)?, t);
    Ok((fit.r_eff / expect - 1.0).abs())
}

fn oracle_squeezing_fit() -> Result<OracleReport> {
    Ok(OracleReport::new("squeezing_fit_self_consistency", "levels 0,2e-3,4e-3 t=1", squeezing_fit_deviation()?, 1e-2, ""))
}

// --- registry ---

pub type OracleFn = fn() -> Result<OracleReport>;

/// Every oracle the harness must provide.
pub const REQUIRED_ORACLES: &[&str] = &[
    "alpha_g_lowest_order",
    "redshift_ratio",
    "spectrum_dense_eigensolve",
    "bogoliubov_squeeze",
    "displacement_shift",
    "dim_convergence_vacuum",
    "fock_revival_2pi",
    "fock_revival_pi_no_gravity",
    "vacuum_visibility",
    "vacuum_shift_gravity_free",
    "shift_generator",
    "approx_visibility_t4",
    "number_operator_vacuum",
    "minshift",
    "thermal_block_squeezed",
    "cycle_identity",
    "cycle_identity_ablation",
    "two_cycle_displacement",
    "drive_vacuum_sech",
    "variance_growth_series",
    "drive_series_scaling",
    "q_normalization",
    "qfunction_t4",
    "squeezing_fit_self_consistency",
];

pub fn registry() -> Vec<(&'static str, OracleFn)> {
    vec![
        ("alpha_g_lowest_order", oracle_alpha_g),
        ("redshift_ratio", oracle_redshift),
        ("spectrum_dense_eigensolve", oracle_spectrum),
        ("bogoliubov_squeeze", oracle_bogoliubov),
        ("displacement_shift", oracle_displacement),
        ("dim_convergence_vacuum", oracle_dim_convergence),
        ("fock_revival_2pi", oracle_revival_2pi),
        ("fock_revival_pi_no_gravity", oracle_revival_pi),
        ("vacuum_visibility", || oracle_vacuum_visibility(&VacuumOracleGrid::default())),
        ("vacuum_shift_gravity_free", oracle_vacuum_shift),
        ("shift_generator", oracle_shift_generator),
        ("approx_visibility_t4", oracle_approx_visibility),
        ("number_operator_vacuum", oracle_number_operator_vacuum),
        ("minshift", || oracle_minshift(&SystemParams::si_reference(&[0.0, 1e15])?, &[0.0, 1.0, 5.0], 1.0)),
        ("thermal_block_squeezed", oracle_thermal_block),
        ("cycle_identity", || oracle_cycle_identity(&DRIVE_LADDER, Comparator::Full)),
        ("cycle_identity_ablation", || oracle_cycle_identity(&DRIVE_LADDER, Comparator::SqueezeOnly)),
        ("two_cycle_displacement", oracle_two_cycle),
        ("drive_vacuum_sech", oracle_drive_vacuum),
        ("variance_growth_series", oracle_variance_growth),
        ("drive_series_scaling", oracle_drive_series_scaling),
        ("q_normalization", oracle_q_normalization),
        ("qfunction_t4", oracle_short_time_q),
        ("squeezing_fit_self_consistency", oracle_squeezing_fit),
    ]
}

/// Names in [`REQUIRED_ORACLES`] absent from the registry.
pub fn missing_oracles() -> Vec<&'static str> {
    let reg = registry();
    REQUIRED_ORACLES.iter().copied().filter(|n| !reg.iter().any(|(r, _)| r == n)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub reports: Vec<OracleReport>,
    pub missing: Vec<String>,
    pub all_pass: bool,
}

/// Runs every registered oracle concurrently; reports keep registry order.
pub fn run_all() -> VerifySummary {
    let reports: Vec<OracleReport> = registry()
        .par_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| OracleReport::failed(name, &e)))
        .collect();
    let missing: Vec<String> = missing_oracles().into_iter().map(String::from).collect();
    let all_pass = missing.is_empty() && reports.iter().all(|r| r.pass);
    VerifySummary { reports, missing, all_pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete() {
        assert!(missing_oracles().is_empty());
        let names: Vec<_> = registry().iter().map(|(n, _)| *n).collect();
        let mut dedup = names.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
    }

    #[test]
    fn report_pass_flag() {
        assert!(OracleReport::new("x", "", 1.0, 1.0, "").pass);
        assert!(!OracleReport::new("x", "", 1.1, 1.0, "").pass);
        assert!(!OracleReport::new("x", "", f64::NAN, 1.0, "").pass);
        assert_eq!(digest("abc").len(), 64);
    }

    #[test]
    fn vacuum_corners() {
        for (s, x0) in [(0.5, 0.0), (0.9, 5.0), (0.99, 0.02)] {
            let d = vacuum_deviation(s, x0, 400, 512).unwrap();
            assert!(d.visibility < VISIBILITY_TOLERANCE && d.phase < PHASE_TOLERANCE, "{s} {x0} {d:?}");
        }
    }

    #[test]
    fn unconverged_dimension_fails() {
        let d = vacuum_deviation(0.5, 5.0, 100, 64).unwrap();
        assert!(d.visibility > VISIBILITY_TOLERANCE || d.phase > PHASE_TOLERANCE);
    }

    #[test]
    fn equal_masses_are_trivial() {
        let mut p = SystemParams::<f64>::natural(&[0.0, 0.5], 0.0, NATURAL_C).unwrap();
        p.levels[1] = 0.0;
        let tr = ramsey_trace(&p, &CMState::vacuum(64), 1, &uniform_grid(0.0, 10.0, 50)).unwrap();
        assert!(tr.visibility.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn minshift_controls() {
        let p = SystemParams::<f64>::si_reference(&[0.0, 1e15]).unwrap();
        assert!(oracle_minshift(&p, &[0.0, 1.0, 5.0], 1.0).unwrap().pass);
        assert!(!oracle_minshift(&p, &[0.0], 1.01).unwrap().pass);
        assert_eq!(oracle_minshift(&p.with_gravity(0.0), &[0.0], 1.0).unwrap_err(), Error::ZeroGravity);
    }

    #[test]
    fn every_oracle_passes() {
        let summary = run_all();
        for r in &summary.reports {
            assert!(r.pass, "{} failed: {} > {} ({})", r.name, r.max_deviation, r.tolerance, r.note);
        }
        assert!(summary.all_pass);
        let names: Vec<_> = summary.reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, REQUIRED_ORACLES);
    }
}
