//! Physical parameters and the per-level oscillator frames derived from them.
//!
//! Each internal level `i` with energy `Eᵢ` carries mass `Mᵢ = M₀ + Eᵢ/c²`.
//! The trap stiffness `k` is shared, so every level has its own oscillator
//! frequency `ωᵢ = √(k/Mᵢ)` and its own ladder operator. The mode of level
//! `i` is the ground-level mode squeezed by `rᵢ` and displaced by `α_gᵢ`.

use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};
use crate::num::{exp_m1, ln_1p, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    #[serde(alias = "SI")]
    Si,
    Natural,
}

/// Raw system description as read from a JSON document.
///
/// All values are SI unless `unit_system` is `"natural"`, in which case any
/// consistent unit set may be used and the values are rescaled so that
/// `ħ = M₀ = ω₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub unit_system: UnitSystem,
    #[serde(rename = "M0", alias = "m0", default)]
    pub m0: Option<f64>,
    /// Trap stiffness. Exactly one of `k` and `omega0` must be given.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub omega0: Option<f64>,
    /// Internal energies, `levels[0] == 0`.
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    /// Alternative to `levels`: mass defects `ΔMᵢ/M₀` per level.
    #[serde(default)]
    pub delta_m_ratios: Option<Vec<f64>>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub hbar: Option<f64>,
    #[serde(default)]
    pub kb: Option<f64>,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Validated, immutable system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams<T> {
    pub m0: T,
    pub levels: Vec<T>,
    pub k: T,
    pub g: T,
    pub c: T,
    pub hbar: T,
    /// Boltzmann constant in the active unit system.
    pub kb: T,
    pub omega0: T,
    pub unit_system: UnitSystem,
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositive { field, value: v })
    }
}

fn check_levels(levels: &[f64], field: &'static str) -> Result<()> {
    if levels.is_empty() || levels[0] != 0.0 {
        return Err(Error::NonMonotoneLevels { field });
    }
    if levels.iter().any(|e| !e.is_finite()) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneLevels { field });
    }
    Ok(())
}

/// Validates a [`SystemConfig`] and produces [`SystemParams`].
pub fn build_system<T: Real>(config: &SystemConfig) -> Result<SystemParams<T>> {
    let natural = config.unit_system == UnitSystem::Natural;
    let m0 = config.m0.ok_or(Error::MissingField("M0"))?;
    if !(m0.is_finite() && m0 > 0.0) {
        return Err(Error::NonPositiveMass { field: "M0", value: m0 });
    }
    let hbar = positive("hbar", config.hbar.unwrap_or(if natural { 1.0 } else { constants::HBAR }))?;
    let c = match config.c {
        Some(c) => positive("c", c)?,
        None if natural => return Err(Error::MissingField("c")),
        None => constants::SPEED_OF_LIGHT,
    };
    let g = config.g.unwrap_or(if natural { 0.0 } else { constants::STANDARD_GRAVITY });
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::InvalidField { field: "g", reason: format!("must be finite and >= 0 (got {g})") });
    }
    let kb = positive("kb", config.kb.unwrap_or(if natural { 1.0 } else { constants::BOLTZMANN }))?;
    let (k, omega0) = match (config.k, config.omega0) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidField { field: "k", reason: "give either `k` or `omega0`, not both".into() })
        }
        (Some(k), None) => {
            let k = positive("k", k)?;
            (k, (k / m0).sqrt())
        }
        (None, Some(w)) => {
            let w = positive("omega0", w)?;
            (m0 * w * w, w)
        }
        (None, None) => return Err(Error::MissingField("k")),
    };
    let levels = match (&config.levels, &config.delta_m_ratios) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidField {
                field: "levels",
                reason: "give either `levels` or `delta_m_ratios`, not both".into(),
            })
        }
        (Some(e), None) => {
            check_levels(e, "levels")?;
            e.clone()
        }
        (None, Some(r)) => {
            check_levels(r, "delta_m_ratios")?;
            r.iter().map(|x| x * m0 * c * c).collect()
        }
        (None, None) => return Err(Error::MissingField("levels")),
    };

    let p = if natural {
        // Units: mass M0, time 1/ω0, action ħ.
        let energy = hbar * omega0;
        let length = (hbar / (m0 * omega0)).sqrt();
        let velocity = length * omega0;
        SystemParams {
            m0: T::one(),
            levels: levels.iter().map(|e| T::lit(e / energy)).collect(),
            k: T::one(),
            g: T::lit(g / (length * omega0 * omega0)),
            c: T::lit(c / velocity),
            hbar: T::one(),
            kb: T::lit(if config.kb.is_some() { kb / energy } else { 1.0 }),
            omega0: T::one(),
            unit_system: UnitSystem::Natural,
        }
    } else {
        SystemParams {
            m0: T::lit(m0),
            levels: levels.iter().map(|&e| T::lit(e)).collect(),
            k: T::lit(k),
            g: T::lit(g),
            c: T::lit(c),
            hbar: T::lit(hbar),
            kb: T::lit(kb),
            omega0: T::lit(omega0),
            unit_system: UnitSystem::Si,
        }
    };
    Ok(p)
}

/// Per-level oscillator quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrame<T> {
    pub level: usize,
    pub mass: T,
    /// `Mᵢ − M₀ = Eᵢ/c²`.
    pub delta_m: T,
    pub omega: T,
    /// Squeezing parameter. Negative for levels heavier than the ground level.
    pub r: T,
    pub cosh_r: T,
    pub sinh_r: T,
    /// Displacement `g·ΔMᵢ/√(2ħMᵢωᵢ³)` (dimensionless, real).
    pub alpha_g: T,
    /// Scalar energy `Mᵢc²(1 − g²/2ωᵢ²c²)`.
    pub offset: T,
    /// `offset − M₀c²`, evaluated without cancellation.
    pub offset_excess: T,
    /// Equilibrium shift `g/ωᵢ²` of this level's trap centre.
    pub x_shift: T,
    /// Separation `g·ΔMᵢ/k` between this level's equilibrium and the ground level's.
    pub separation: T,
}

impl<T: Real> SystemParams<T> {
    /// Natural-unit system with `ħ = M₀ = ω₀ = 1`.
    pub fn natural(delta_m_ratios: &[f64], g: f64, c: f64) -> Result<Self> {
        build_system(&SystemConfig {
            unit_system: UnitSystem::Natural,
            m0: Some(1.0),
            k: Some(1.0),
            delta_m_ratios: Some(delta_m_ratios.to_vec()),
            g: Some(g),
            c: Some(c),
            ..Default::default()
        })
    }

    /// Two-level natural-unit system realising a given frequency ratio
    /// `S = ω₁/ω₀ = √(M₀/M₁)` and equilibrium separation `x0` (in units of
    /// `√(ħ/M₀ω₀)`, so that `a₀ = 1`).
    pub fn natural_overlap(s: f64, x0: f64, c: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidField { field: "S", reason: format!("must lie in (0, 1] (got {s})") });
        }
        let ratio = 1.0 / (s * s) - 1.0;
        let g = if ratio > 0.0 { x0.abs() / ratio } else { 0.0 };
        Self::natural(&[0.0, ratio], g, c)
    }

    /// SI system with reference mass and trap frequency and optical levels `Eᵢ = ħωᵢ`.
    pub fn si_reference(level_frequencies: &[f64]) -> Result<Self> {
        let hbar = constants::HBAR;
        build_system(&SystemConfig {
            unit_system: UnitSystem::Si,
            m0: Some(constants::REFERENCE_MASS),
            omega0: Some(constants::REFERENCE_TRAP_FREQUENCY),
            levels: Some(level_frequencies.iter().map(|w| w * hbar).collect()),
            g: Some(constants::STANDARD_GRAVITY),
            ..Default::default()
        })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn check_level(&self, i: usize) -> Result<()> {
        if i < self.levels.len() {
            Ok(())
        } else {
            Err(Error::LevelOutOfRange { level: i, count: self.levels.len() })
        }
    }

    pub fn delta_m(&self, i: usize) -> Result<T> {
        self.check_level(i)?;
        Ok(self.levels[i] / (self.c * self.c))
    }

    /// Optical transition frequency `ω_c = Eᵢ/ħ`.
    pub fn transition_frequency(&self, i: usize) -> Result<T> {
        self.check_level(i)?;
        Ok(self.levels[i] / self.hbar)
    }

    /// Copy of these parameters with a different trap frequency (stiffness
    /// rescaled, mass unchanged).
    pub fn with_omega0(&self, omega0: T) -> Self {
        let mut p = self.clone();
        p.omega0 = omega0;
        p.k = p.m0 * omega0 * omega0;
        p
    }

    pub fn with_gravity(&self, g: T) -> Self {
        let mut p = self.clone();
        p.g = g;
        p
    }

    /// Derives the oscillator frame of level `i`.
    pub fn derive_mode_frame(&self, i: usize) -> Result<ModeFrame<T>> {
        self.check_level(i)?;
        let two = T::lit(2.0);
        let c2 = self.c * self.c;
        let delta_m = self.levels[i] / c2;
        let mass = self.m0 + delta_m;
        let omega = (self.k / mass).sqrt();
        // e^{-r} = (Mᵢ/M₀)^{1/4}
        let r = -T::lit(0.25) * ln_1p(delta_m / self.m0);
        let (cosh_r, sinh_r) = (r.cosh(), r.sinh());
        let alpha_g = if delta_m == T::zero() || self.g == T::zero() {
            T::zero()
        } else {
            self.g * delta_m / (two * self.hbar * mass * omega * omega * omega).sqrt()
        };
        let grav = self.g * self.g / (two * self.k);
        let offset = mass * c2 - grav * mass * mass;
        // offset − M₀c² = Eᵢ − g²(Mᵢ² − M₀²)/2k − g²M₀²/2k
        let offset_excess =
            self.levels[i] - grav * delta_m * (two * self.m0 + delta_m) - grav * self.m0 * self.m0;
        Ok(ModeFrame {
            level: i,
            mass,
            delta_m,
            omega,
            r,
            cosh_r,
            sinh_r,
            alpha_g,
            offset,
            offset_excess,
            x_shift: self.g / (omega * omega),
            separation: self.g * delta_m / self.k,
        })
    }

    /// Lowest-order displacement `g·ΔMᵢ/√(2ħM₀ω₀³)`.
    pub fn displacement_lowest_order(&self, i: usize) -> Result<T> {
        self.check_level(i)?;
        let dm = self.levels[i] / (self.c * self.c);
        if dm == T::zero() || self.g == T::zero() {
            return Ok(T::zero());
        }
        let w = self.omega0;
        Ok(self.g * dm / (T::lit(2.0) * self.hbar * self.m0 * w * w * w).sqrt())
    }

    /// Offset difference `(offsetᵢ − offset₀)/ħ` in rad/s, exact.
    pub fn scalar_gap_rate(&self, i: usize) -> Result<T> {
        let f = self.derive_mode_frame(i)?;
        let grav = self.g * self.g / (T::lit(2.0) * self.k);
        Ok((self.levels[i] - grav * f.delta_m * (T::lit(2.0) * self.m0 + f.delta_m)) / self.hbar)
    }

    /// `ωᵢ − ω₀`, evaluated without cancellation.
    pub fn frequency_difference(&self, i: usize) -> Result<T> {
        let f = self.derive_mode_frame(i)?;
        Ok(self.omega0 * exp_m1(-T::lit(0.5) * ln_1p(f.delta_m / self.m0)))
    }

    /// `gh/c²`, the first-order redshift of a trap raised by `h`.
    pub fn redshift_parameter(&self, h: T) -> T {
        self.g * h / (self.c * self.c)
    }

    /// Stiffness and frequency ratios seen for an identical trap raised by `h`.
    pub fn redshifted_stiffness(&self, h: T) -> (T, T) {
        let eps = self.redshift_parameter(h);
        if eps.abs() > T::lit(1e-3) {
            log::warn!("g·h/c² = {:e} is outside the weak-field regime", eps.as_f64());
        }
        (T::one() + T::lit(2.0) * eps, T::one() + eps)
    }
}
