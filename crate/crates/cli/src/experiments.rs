//! Named experiments: each turns a validated config into a table and a summary.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde_json::{json, Value};
use trapmass::analytic::{exact_phase, s3_visibility, VacuumAmplitudeParams};
use trapmass::clock::{energy_gap, minimal_shift, thermal_occupation, thermal_shift};
use trapmass::drive::{
    effective_r_lowest_order, iterate_drive, position_variance_growth, quadrature_variance_change, DriveSchedule,
};
use trapmass::fock::{converge_dim, ConvergenceRequest};
use trapmass::model::build_system;
use trapmass::num::wrap_angle;
use trapmass::phasespace::{
    effective_squeezing_fit, evolve_mixed_cm, qfunction, qfunction_short_time, r_eff, InternalDistribution, QGridSpec,
};
use trapmass::ramsey::{ramsey_trace_in, uniform_grid, PhaseFrame, StateSpec};
use trapmass::verify::{PHASE_TOLERANCE, VISIBILITY_TOLERANCE};
use trapmass::SystemParams;

use crate::config::{
    AxisName, DriveConfig, ExperimentConfig, QfuncConfig, Quantity, RamseyConfig, ShiftConfig, SweepConfig,
};
use crate::error::CliError;
use crate::output::{Invariant, Table};

/// Truncation search limits when a Ramsey config leaves `dim` open.
pub const AUTO_DIM_TOL: f64 = 1e-8;
pub const AUTO_DIM_MAX: usize = 1024;
/// Largest drive series written row by row.
pub const MAX_DRIVE_ROWS: usize = 1_000_000;

pub struct Artifacts {
    pub table: Table,
    pub summary: Value,
    pub invariants: Vec<Invariant>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cfg {
        ExperimentConfig::Ramsey(c) => ramsey(c),
        ExperimentConfig::Shift(c) => shift(c),
        ExperimentConfig::Drive(c) => drive(c),
        ExperimentConfig::Qfunc(c) => qfunc(c),
        ExperimentConfig::Sweep(c) => sweep(c),
    }
}

fn system(cfg: &trapmass::model::SystemConfig) -> Result<SystemParams, CliError> {
    build_system(cfg).map_err(CliError::config)
}

fn check_level(p: &SystemParams, level: usize) -> Result<(), CliError> {
    if level == 0 || level >= p.level_count() {
        return Err(CliError::Config(format!("level must lie in 1..{} (got {level})", p.level_count())));
    }
    Ok(())
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter().enumerate().fold(0, |best, (i, &v)| if v < xs[best] { i } else { best })
}

fn ramsey(c: &RamseyConfig) -> Result<Artifacts, CliError> {
    let p = system(&c.system)?;
    check_level(&p, c.level)?;
    let omega = p.derive_mode_frame(c.level)?.omega;
    let t_end = match (c.times.t_end, c.times.periods_of_level) {
        (Some(t), _) => t,
        (None, Some(periods)) => periods * 2.0 * PI / omega,
        (None, None) => unreachable!("validated"),
    };
    let times = uniform_grid(0.0, t_end, c.times.points);
    let dim = match c.dim {
        Some(d) => d,
        None => {
            let req = ConvergenceRequest::RamseyTrace { state: c.state.clone(), level: c.level, times: times.clone() };
            converge_dim(&p, &req, AUTO_DIM_TOL, AUTO_DIM_MAX)?
        }
    };
    let state = c.state.build(&p, dim)?;
    let tr = ramsey_trace_in(&p, &state, c.level, &times, c.frame)?;
    let (t_rev, t_2rev) = (PI / omega, 2.0 * PI / omega);
    let rev = ramsey_trace_in(&p, &state, c.level, &[t_rev, t_2rev], c.frame)?;
    // Deepest point of the first revival window.
    let window = times.iter().take_while(|&&t| t <= t_rev).count().max(1);
    let i_min = argmin(&tr.visibility[..window]);

    let vacuum = c.state == StateSpec::vacuum();
    let analytic = if vacuum { Some(VacuumAmplitudeParams::from_system(&p, c.level)?) } else { None };
    let frame_rate = if c.frame == PhaseFrame::CoRotating { tr.reference_rate } else { 0.0 };

    let mut columns = vec!["t", "P", "V", "phase"];
    if analytic.is_some() {
        columns.extend(["V_analytic", "phase_analytic"]);
    }
    let mut table = Table::new(&columns);
    let (mut max_dv, mut max_dphi) = (0.0f64, 0.0f64);
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![t, tr.probability[i], tr.visibility[i], tr.phase[i]];
        if let Some(vp) = &analytic {
            let v = s3_visibility(vp, t);
            let phi = exact_phase(vp, t) - frame_rate * t;
            max_dv = max_dv.max((v - tr.visibility[i]).abs());
            if v > 1e-6 {
                max_dphi = max_dphi.max(wrap_angle(tr.phase[i] - phi).abs());
            }
            row.extend([v, phi]);
        }
        table.push(row);
    }

    let mut summary = json!({
        "level": c.level,
        "dim": dim,
        "omega_level": omega,
        "t_min": times[i_min],
        "V_min": tr.visibility[i_min],
        "t_rev": t_rev,
        "V_rev": rev.visibility[0],
        "t_two_rev": t_2rev,
        "V_two_rev": rev.visibility[1],
    });
    if let Some(vp) = &analytic {
        summary["V_rev_analytic"] = json!(s3_visibility(vp, t_rev));
        summary["oracle"] = json!({
            "max_visibility_deviation": max_dv,
            "visibility_tolerance": VISIBILITY_TOLERANCE,
            "max_phase_deviation": max_dphi,
            "phase_tolerance": PHASE_TOLERANCE,
            "pass": max_dv <= VISIBILITY_TOLERANCE && max_dphi <= PHASE_TOLERANCE,
        });
    }
    Ok(Artifacts { table, summary, invariants: Vec::new() })
}

fn shift(c: &ShiftConfig) -> Result<Artifacts, CliError> {
    let p = system(&c.system)?;
    check_level(&p, c.level)?;
    let grid = c.omega0.values();
    let mut table = Table::new(&[
        "omega0",
        "n",
        "temperature",
        "delta_exact",
        "delta_lowest_order",
        "gravitational",
        "time_dilation",
        "is_min",
    ]);
    let mut series: Vec<(Option<f64>, Option<f64>)> = c.n_values.iter().map(|&n| (Some(n), None)).collect();
    if let Some(temp) = c.temperature {
        if !(temp.is_finite() && temp > 0.0) {
            return Err(CliError::Config(format!("temperature must be positive (got {temp})")));
        }
        series.push((None, Some(temp)));
    }
    let mut minima = Vec::new();
    for (n_fixed, temp) in series {
        let rows = grid
            .iter()
            .map(|&w| {
                let pw = p.with_omega0(w);
                let n = n_fixed.unwrap_or_else(|| thermal_occupation(&pw, temp.unwrap_or_default()));
                Ok((w, n, energy_gap(&pw, c.level, n)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let dist: Vec<f64> = rows.iter().map(|(_, _, r)| r.fractional_shift.abs()).collect();
        let best = argmin(&dist);
        for (i, (w, n, r)) in rows.iter().enumerate() {
            table.push(vec![
                *w,
                *n,
                temp.unwrap_or(0.0),
                r.fractional_shift,
                r.lowest_order_fractional_shift,
                r.components.gravitational,
                r.components.time_dilation,
                if i == best { 1.0 } else { 0.0 },
            ]);
        }
        let mut entry = json!({
            "n": n_fixed,
            "temperature": temp,
            "grid_omega_min": rows[best].0,
            "grid_delta_min": rows[best].2.fractional_shift,
        });
        if let Some(n) = n_fixed {
            match minimal_shift(&p, n) {
                Ok(o) => {
                    entry["omega_min"] = json!(o.omega_min);
                    entry["delta_min"] = json!(o.delta_min);
                    entry["numeric_omega_min"] = json!(o.numeric_omega_min);
                    entry["numeric_delta_min"] = json!(o.numeric_delta_min);
                }
                Err(e @ trapmass::Error::ZeroGravity) => entry["closed_form"] = json!(e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        minima.push(entry);
    }
    Ok(Artifacts { table, summary: json!({ "level": c.level, "minima": minima }), invariants: Vec::new() })
}

fn drive(c: &DriveConfig) -> Result<Artifacts, CliError> {
    let p = system(&c.system)?;
    check_level(&p, c.level)?;
    if c.cycles > MAX_DRIVE_ROWS {
        return Err(CliError::Config(format!(
            "cycles = {} exceeds {MAX_DRIVE_ROWS}; use a sweep over `cycles` for variance growth",
            c.cycles
        )));
    }
    let state = c.state.build(&p, c.dim)?;
    let series = iterate_drive(&p, &state, c.level, c.cycles, c.dim)?;
    let mut table = Table::new(&["k", "P_exact", "P_approx"]);
    for (i, &k) in series.cycles.iter().enumerate() {
        let exact = series.exact.as_ref().map_or(f64::NAN, |e| e[i]);
        table.push(vec![k as f64, exact, series.approx[i]]);
    }
    let schedule = DriveSchedule::new(&p, c.level)?;
    let n = c.cycles as f64;
    let two_n_r = schedule.effective_r(n);
    let (dx, dp) = quadrature_variance_change(two_n_r);
    let summary = json!({
        "level": c.level,
        "cycles": c.cycles,
        "dim": c.dim,
        "per_cycle_r": schedule.per_cycle_r,
        "two_n_r": two_n_r,
        "two_n_r_lowest_order": effective_r_lowest_order(&p, c.level, n)?,
        "beta_g": [schedule.beta_g.re, schedule.beta_g.im],
        "max_deviation": series.max_deviation(),
        "position_variance_change": dx,
        "momentum_variance_change": dp,
    });
    Ok(Artifacts { table, summary, invariants: Vec::new() })
}

fn qfunc(c: &QfuncConfig) -> Result<Artifacts, CliError> {
    let p = system(&c.system)?;
    let dist = match &c.distribution {
        Some(v) => InternalDistribution::new(v.clone()).map_err(CliError::config)?,
        None => InternalDistribution::pure(p.level_count(), 0)?,
    };
    if dist.probabilities().len() != p.level_count() {
        return Err(CliError::Config(format!(
            "distribution has {} entries for {} levels",
            dist.probabilities().len(),
            p.level_count()
        )));
    }
    let alpha = match (c.short_time, &c.state) {
        (false, _) => None,
        (true, StateSpec::Coherent { re, im }) => Some(Complex::new(*re, *im)),
        (true, StateSpec::Fock { n: 0 }) => Some(Complex::new(0.0, 0.0)),
        (true, _) => return Err(CliError::Config("short_time needs a coherent (or vacuum) state".into())),
    };
    let rho0 = c.state.build(&p, c.dim)?;
    let rho = evolve_mixed_cm(&p, &rho0, &dist, c.t, c.dim)?;
    let grid = qfunction(&rho, &QGridSpec { spacing: c.grid.spacing, half_width: c.grid.half_width })?;

    let mut columns = vec!["re", "im", "Q"];
    if alpha.is_some() {
        columns.extend(["Q_short_re", "Q_short_im"]);
    }
    let mut table = Table::new(&columns);
    let rows: Vec<(f64, f64, f64)> = grid.rows().collect();
    let short = match alpha {
        Some(a) => Some(
            rows.par_iter()
                .map(|&(x, y, _)| qfunction_short_time(&p, a, &dist, Complex::new(x, y), c.t))
                .collect::<trapmass::Result<Vec<_>>>()?,
        ),
        None => None,
    };
    for (i, &(x, y, q)) in rows.iter().enumerate() {
        let mut row = vec![x, y, q];
        if let Some(s) = &short {
            row.extend([s[i].re, s[i].im]);
        }
        table.push(row);
    }

    let normalization = grid.normalization();
    let edge = grid.edge_max();
    let mean_energy = dist.mean_energy(&p)?;
    let fit = match effective_squeezing_fit(&grid) {
        Ok(f) => json!({ "r_eff": f.r_eff, "residual": f.residual }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "t": c.t,
        "dim": c.dim,
        "points_per_axis": grid.len(),
        "half_width": grid.axis.last().copied(),
        "normalization": normalization,
        "edge_max": edge,
        "purity": rho.purity(),
        "mean_internal_energy": mean_energy,
        "r_eff_predicted": r_eff(&p, mean_energy, c.t),
        "fit": fit,
    });
    // The Riemann sum only approximates the full integral when the grid holds the support.
    let invariants = if edge < 1e-6 {
        vec![Invariant::SumsToOne { column: "Q", weight: c.grid.spacing * c.grid.spacing / PI, tol: 1e-3 }]
    } else {
        Vec::new()
    };
    Ok(Artifacts { table, summary, invariants })
}

/// Axes each sweep quantity depends on.
fn required_axes(q: Quantity) -> (&'static [AxisName], &'static [AxisName]) {
    use AxisName::*;
    // (required, optional)
    match q {
        Quantity::FractionalShift | Quantity::LowestOrderShift => (&[], &[Omega0, G, N]),
        Quantity::ThermalShift => (&[Temperature], &[Omega0, G]),
        Quantity::ThermalOccupation => (&[Temperature], &[Omega0]),
        Quantity::VarianceGrowth | Quantity::EffectiveR => (&[Cycles], &[Omega0, G]),
        Quantity::VacuumVisibility => (&[T], &[Omega0, G]),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Point {
    omega0: Option<f64>,
    g: Option<f64>,
    n: Option<f64>,
    temperature: Option<f64>,
    cycles: Option<f64>,
    t: Option<f64>,
}

impl Point {
    fn set(&mut self, name: AxisName, v: f64) {
        let slot = match name {
            AxisName::Omega0 => &mut self.omega0,
            AxisName::G => &mut self.g,
            AxisName::N => &mut self.n,
            AxisName::Temperature => &mut self.temperature,
            AxisName::Cycles => &mut self.cycles,
            AxisName::T => &mut self.t,
        };
        *slot = Some(v);
    }
}

fn evaluate(q: Quantity, base: &SystemParams, level: usize, pt: &Point) -> trapmass::Result<f64> {
    let mut p = base.clone();
    if let Some(w) = pt.omega0 {
        p = p.with_omega0(w);
    }
    if let Some(g) = pt.g {
        p = p.with_gravity(g);
    }
    // Required axes are checked before evaluation.
    let need = |v: Option<f64>| v.expect("required axis");
    Ok(match q {
        Quantity::FractionalShift => energy_gap(&p, level, pt.n.unwrap_or(0.0))?.fractional_shift,
        Quantity::LowestOrderShift => energy_gap(&p, level, pt.n.unwrap_or(0.0))?.lowest_order_fractional_shift,
        Quantity::ThermalShift => thermal_shift(&p, level, need(pt.temperature))?.fractional_shift,
        Quantity::ThermalOccupation => thermal_occupation(&p, need(pt.temperature)),
        Quantity::VarianceGrowth => position_variance_growth(&p, level, need(pt.cycles))?,
        Quantity::EffectiveR => DriveSchedule::new(&p, level)?.effective_r(need(pt.cycles)),
        Quantity::VacuumVisibility => s3_visibility(&VacuumAmplitudeParams::from_system(&p, level)?, need(pt.t)),
    })
}

fn sweep(c: &SweepConfig) -> Result<Artifacts, CliError> {
    let p = system(&c.system)?;
    check_level(&p, c.level)?;
    let (required, optional) = required_axes(c.quantity);
    for a in &c.axes {
        if !required.contains(&a.name) && !optional.contains(&a.name) {
            return Err(CliError::Config(format!(
                "axis `{}` does not affect `{}`",
                a.name.as_str(),
                c.quantity.as_str()
            )));
        }
    }
    if let Some(missing) = required.iter().find(|r| !c.axes.iter().any(|a| a.name == **r)) {
        return Err(CliError::Config(format!("`{}` needs a `{}` axis", c.quantity.as_str(), missing.as_str())));
    }
    let axes: Vec<(AxisName, Vec<f64>)> = c.axes.iter().map(|a| Ok((a.name, a.values()?))).collect::<Result<_, CliError>>()?;
    for (name, values) in &axes {
        let positive = matches!(name, AxisName::Omega0 | AxisName::Temperature);
        let non_negative = matches!(name, AxisName::G | AxisName::N | AxisName::Cycles | AxisName::T);
        if (positive && values.iter().any(|v| *v <= 0.0)) || (non_negative && values.iter().any(|v| *v < 0.0)) {
            return Err(CliError::Config(format!("axis `{}` has values out of range", name.as_str())));
        }
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    // Row-major: the last axis varies fastest.
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut coords = vec![0.0; axes.len()];
            for (j, (_, values)) in axes.iter().enumerate().rev() {
                coords[j] = values[idx % values.len()];
                idx /= values.len();
            }
            coords
        })
        .collect();
    let values = points
        .par_iter()
        .map(|coords| {
            let mut pt = Point::default();
            for ((name, _), &v) in axes.iter().zip(coords) {
                pt.set(*name, v);
            }
            evaluate(c.quantity, &p, c.level, &pt)
        })
        .collect::<trapmass::Result<Vec<f64>>>()?;
    let mut columns: Vec<&str> = axes.iter().map(|(n, _)| n.as_str()).collect();
    columns.push(c.quantity.as_str());
    let mut table = Table::new(&columns);
    for (mut coords, v) in points.into_iter().zip(values) {
        coords.push(v);
        table.push(coords);
    }
    let summary = json!({
        "quantity": c.quantity.as_str(),
        "level": c.level,
        "axes": axes.iter().map(|(n, v)| json!({ "name": n.as_str(), "points": v.len() })).collect::<Vec<_>>(),
        "rows": total,
    });
    Ok(Artifacts { table, summary, invariants: Vec::new() })
}
