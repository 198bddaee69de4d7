//! Experiment configuration documents.
//!
//! One JSON document per run, tagged by `experiment`. Unknown keys are
//! rejected at every level.

use serde::{Deserialize, Serialize};
use trapmass::model::SystemConfig;
use trapmass::ramsey::{PhaseFrame, StateSpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum ExperimentConfig {
    Ramsey(RamseyConfig),
    Shift(ShiftConfig),
    Drive(DriveConfig),
    Qfunc(QfuncConfig),
    Sweep(SweepConfig),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ramsey(_) => "ramsey",
            Self::Shift(_) => "shift",
            Self::Drive(_) => "drive",
            Self::Qfunc(_) => "qfunc",
            Self::Sweep(_) => "sweep",
        }
    }

    pub fn output(&self) -> &OutputConfig {
        match self {
            Self::Ramsey(c) => &c.output,
            Self::Shift(c) => &c.output,
            Self::Drive(c) => &c.output,
            Self::Qfunc(c) => &c.output,
            Self::Sweep(c) => &c.output,
        }
    }

    /// Checks that need no physics: grid sizes, exclusive options, axis names.
    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let out = self.output();
        if out.path.trim().is_empty() {
            return bad("output.path must not be empty".into());
        }
        match self {
            Self::Ramsey(c) => {
                if c.times.points < 2 {
                    return bad("times.points must be at least 2".into());
                }
                if c.times.t_end.is_some() == c.times.periods_of_level.is_some() {
                    return bad("times: give exactly one of `t_end` and `periods_of_level`".into());
                }
                if let Some(x) = c.times.t_end.or(c.times.periods_of_level) {
                    if !(x.is_finite() && x > 0.0) {
                        return bad(format!("times: end must be positive (got {x})"));
                    }
                }
            }
            Self::Shift(c) => {
                c.omega0.check("omega0")?;
                if c.omega0.scale == Scale::Linear && c.omega0.start <= 0.0 {
                    return bad("omega0 range must be positive".into());
                }
                if c.n_values.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
                    return bad("n_values must be finite and non-negative".into());
                }
                if c.n_values.is_empty() && c.temperature.is_none() {
                    return bad("shift needs `n_values` or `temperature`".into());
                }
            }
            Self::Drive(c) => {
                if c.cycles == 0 {
                    return bad("cycles must be at least 1".into());
                }
            }
            Self::Qfunc(c) => {
                if !(c.grid.spacing.is_finite() && c.grid.spacing > 0.0) {
                    return bad("grid.spacing must be positive".into());
                }
                if let Some(p) = &c.distribution {
                    let sum: f64 = p.iter().sum();
                    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                        return bad(format!("distribution must be non-negative and sum to 1 (sum = {sum})"));
                    }
                }
            }
            Self::Sweep(c) => {
                if c.axes.is_empty() {
                    return bad("sweep needs at least one axis".into());
                }
                for (i, a) in c.axes.iter().enumerate() {
                    if c.axes[..i].iter().any(|b| b.name == a.name) {
                        return bad(format!("axis `{}` given twice", a.name.as_str()));
                    }
                    a.values()?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Data file name, relative to the output directory.
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

fn vacuum() -> StateSpec<f64> {
    StateSpec::vacuum()
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    /// End time in the system's time unit (seconds, or `1/ω₀` in natural units).
    #[serde(default)]
    pub t_end: Option<f64>,
    /// End time as a number of oscillation periods `2π/ω` of the probed level.
    #[serde(default)]
    pub periods_of_level: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyConfig {
    pub system: SystemConfig,
    #[serde(default = "vacuum")]
    pub state: StateSpec<f64>,
    #[serde(default = "one")]
    pub level: usize,
    pub times: TimeGrid,
    /// Fock truncation; chosen by convergence when absent.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub frame: PhaseFrame,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Range {
    fn check(&self, what: &str) -> Result<(), CliError> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.points >= 1
            && (self.scale == Scale::Linear || (self.start > 0.0 && self.stop > 0.0));
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("{what}: invalid range {self:?}")))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * f,
                    Scale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    pub system: SystemConfig,
    pub omega0: Range,
    #[serde(default)]
    pub n_values: Vec<f64>,
    #[serde(default = "one")]
    pub level: usize,
    /// Adds a thermal series with `n = k_B T/ħω₀` at each trap frequency.
    #[serde(default)]
    pub temperature: Option<f64>,
    pub output: OutputConfig,
}

fn drive_dim() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub system: SystemConfig,
    #[serde(default = "vacuum")]
    pub state: StateSpec<f64>,
    #[serde(default = "one")]
    pub level: usize,
    pub cycles: usize,
    #[serde(default = "drive_dim")]
    pub dim: usize,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub spacing: f64,
    /// Half-width of the square grid; grown until the edge is negligible when absent.
    #[serde(default)]
    pub half_width: Option<f64>,
}

fn qfunc_dim() -> usize {
    96
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfuncConfig {
    pub system: SystemConfig,
    #[serde(default = "vacuum")]
    pub state: StateSpec<f64>,
    /// Internal-level probabilities; ground level only when absent.
    #[serde(default)]
    pub distribution: Option<Vec<f64>>,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "qfunc_dim")]
    pub dim: usize,
    pub grid: GridConfig,
    /// Adds the short-time closed form (coherent input only).
    #[serde(default)]
    pub short_time: bool,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Exact fractional shift of the clock transition at occupation `n`.
    FractionalShift,
    /// Lowest-order fractional shift at occupation `n`.
    LowestOrderShift,
    /// Exact fractional shift at the thermal occupation of `temperature`.
    ThermalShift,
    ThermalOccupation,
    /// Fractional position-variance change after `cycles` drive cycles.
    VarianceGrowth,
    /// Accumulated squeezing `N·r` after `cycles` drive cycles.
    EffectiveR,
    /// Closed-form Ramsey visibility of the ground-level vacuum at time `t`.
    VacuumVisibility,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FractionalShift => "fractional_shift",
            Self::LowestOrderShift => "lowest_order_shift",
            Self::ThermalShift => "thermal_shift",
            Self::ThermalOccupation => "thermal_occupation",
            Self::VarianceGrowth => "variance_growth",
            Self::EffectiveR => "effective_r",
            Self::VacuumVisibility => "vacuum_visibility",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Omega0,
    G,
    N,
    Temperature,
    Cycles,
    T,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Omega0 => "omega0",
            Self::G => "g",
            Self::N => "n",
            Self::Temperature => "temperature",
            Self::Cycles => "cycles",
            Self::T => "t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<Range>,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let name = self.name.as_str();
        let v = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                r.check(name)?;
                r.values()
            }
            _ => return Err(CliError::Config(format!("axis `{name}`: give exactly one of `values` and `range`"))),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("axis `{name}`: values must be finite and non-empty")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub system: SystemConfig,
    pub quantity: Quantity,
    #[serde(default = "one")]
    pub level: usize,
    pub axes: Vec<Axis>,
    pub output: OutputConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"experiment": "drive", "system": {"M0": 1, "k": 1, "levels": [0, 1], "c": 10,
            "unit_system": "natural"}, "cycles": 4, "colour": "red", "output": {"path": "d.csv"}}"#;
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn log_range_hits_endpoints() {
        let r = Range { start: 1e2, stop: 1e7, points: 6, scale: Scale::Log };
        let v = r.values();
        assert_eq!(v.len(), 6);
        assert!((v[0] - 1e2).abs() < 1e-9 && (v[5] - 1e7).abs() < 1e-3);
        assert!((v[1] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn ramsey_needs_one_end_time() {
        let text = r#"{"experiment": "ramsey", "system": {"M0": 1, "k": 1, "levels": [0, 1], "c": 10,
            "unit_system": "natural"}, "times": {"t_end": 1, "periods_of_level": 2, "points": 10},
            "output": {"path": "r.csv"}}"#;
        assert!(matches!(ExperimentConfig::parse(text), Err(CliError::Config(_))));
    }
}
