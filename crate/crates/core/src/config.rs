//! Units, numerical settings and tolerances, optionally read from a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beams::{SingularityGuard, StepRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
    pub k: f64,
    #[serde(rename = "R")]
    pub beam_scale: f64,
    pub omega0: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, k: 1.0, beam_scale: 1.0, omega0: 1.0 }
    }
}

impl Units {
    pub fn validate(&self) -> Result<()> {
        let positive = [("hbar", self.hbar), ("mass", self.mass), ("k", self.k), ("R", self.beam_scale), ("omega0", self.omega0)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{} must be positive, got {}", name, v)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericSettings {
    /// Connection and scalar-potential step, in units of `min(r, 1/k)`.
    pub connection_step: f64,
    /// Curvature step, in units of `min(r, 1/k)`.
    pub curvature_step: f64,
    /// Guard distances, in units of `R`.
    pub eps_axis: f64,
    pub eps_origin: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self { connection_step: 1e-5, curvature_step: 1e-4, eps_axis: 1e-3, eps_origin: 1e-3 }
    }
}

impl NumericSettings {
    pub fn connection_rule(&self, k: f64, axis_aware: bool) -> StepRule {
        StepRule { factor: self.connection_step, k, axis_aware }
    }

    pub fn curvature_rule(&self, k: f64, axis_aware: bool) -> StepRule {
        StepRule { factor: self.curvature_step, k, axis_aware }
    }

    pub fn guard(&self, beam_scale: f64) -> SingularityGuard {
        SingularityGuard { axis: self.eps_axis * beam_scale, origin: self.eps_origin * beam_scale }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub dark_annihilation: f64,
    pub orthonormality: f64,
    pub numeric_excited_weight: f64,
    pub connection: f64,
    pub hermiticity: f64,
    pub scalar_numeric: f64,
    pub scalar_closed_form: f64,
    pub positivity: f64,
    pub charge: f64,
    pub generator: f64,
    pub algebra: f64,
    pub transform: f64,
    pub curvature: f64,
    pub subspace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            dark_annihilation: 1e-10,
            orthonormality: 1e-12,
            numeric_excited_weight: 1e-10,
            connection: 1e-6,
            hermiticity: 1e-8,
            scalar_numeric: 1e-6,
            scalar_closed_form: 1e-8,
            positivity: 1e-10,
            charge: 1e-3,
            generator: 1e-6,
            algebra: 1e-12,
            transform: 1e-6,
            curvature: 1e-4,
            subspace: 1e-6,
        }
    }
}

/// Sample counts used by the verification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    pub dark_points: usize,
    pub connection_points: usize,
    pub scalar_points: usize,
    pub unitary_fields: usize,
    pub points_per_unitary: usize,
    pub seed: u64,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self { dark_points: 1000, connection_points: 100, scalar_points: 100, unitary_fields: 20, points_per_unitary: 3, seed: 20240531 }
    }
}

/// Parameters of the spin-orbit preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinOrbitOptions {
    /// Common tripod mixing angle Θ, in (0, π/2).
    pub theta: f64,
    /// `k_r = kr_sign · k_l`.
    pub kr_sign: f64,
    /// `true`: `(k_3, k_l) = (k ê_x, k ê_z)`; `false`: `(k ê_z, k ê_x)`.
    pub k3_along_x: bool,
}

impl Default for SpinOrbitOptions {
    fn default() -> Self {
        Self { theta: 2f64.sqrt().atan(), kr_sign: -1.0, k3_along_x: true }
    }
}

/// Everything a scenario can be tuned with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overrides {
    pub units: Units,
    /// Sign of the longitudinal wave numbers of the right-tripod beams relative to the left ones
    /// in the rubidium presets.
    pub right_k_sign: f64,
    pub spin_orbit: SpinOrbitOptions,
    pub numerics: NumericSettings,
}

impl Default for Overrides {
    fn default() -> Self {
        Self { units: Units::default(), right_k_sign: 1.0, spin_orbit: SpinOrbitOptions::default(), numerics: NumericSettings::default() }
    }
}

impl Overrides {
    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        if self.right_k_sign.abs() != 1.0 {
            return Err(Error::InvalidParameter("right_k_sign must be +1 or -1".into()));
        }
        if self.spin_orbit.kr_sign.abs() != 1.0 {
            return Err(Error::InvalidParameter("spin_orbit.kr_sign must be +1 or -1".into()));
        }
        let t = self.spin_orbit.theta;
        if !(t > 0.0 && t < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("spin_orbit.theta must lie in (0, π/2), got {}", t)));
        }
        let n = &self.numerics;
        for (name, v) in [
            ("connection_step", n.connection_step),
            ("curvature_step", n.curvature_step),
            ("eps_axis", n.eps_axis),
            ("eps_origin", n.eps_origin),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{} must be positive, got {}", name, v)));
            }
        }
        Ok(())
    }
}

/// Contents of a configuration file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub overrides: Overrides,
    pub tolerances: Tolerances,
    pub samples: SampleCounts,
}

/// On-disk layout: unit keys at top level, everything else in tables.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    hbar: Option<f64>,
    mass: Option<f64>,
    k: Option<f64>,
    #[serde(rename = "R")]
    beam_scale: Option<f64>,
    omega0: Option<f64>,
    right_k_sign: Option<f64>,
    #[serde(default)]
    spin_orbit: SpinOrbitOptions,
    #[serde(default)]
    numerics: NumericSettings,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    samples: SampleCounts,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let defaults = Overrides::default();
        let units = Units {
            hbar: raw.hbar.unwrap_or(defaults.units.hbar),
            mass: raw.mass.unwrap_or(defaults.units.mass),
            k: raw.k.unwrap_or(defaults.units.k),
            beam_scale: raw.beam_scale.unwrap_or(defaults.units.beam_scale),
            omega0: raw.omega0.unwrap_or(defaults.units.omega0),
        };
        let overrides = Overrides {
            units,
            right_k_sign: raw.right_k_sign.unwrap_or(defaults.right_k_sign),
            spin_orbit: raw.spin_orbit,
            numerics: raw.numerics,
        };
        overrides.validate()?;
        Ok(Self { scenario: raw.scenario, overrides, tolerances: raw.tolerances, samples: raw.samples })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys_and_tables() {
        let cfg = RunConfig::from_toml(
            "scenario = \"rb-monopole-jx\"\nk = 2.0\nR = 1.5\nhbar = 1.0\nmass = 3.0\nomega0 = 4.0\n\
             [numerics]\nconnection_step = 2e-5\n[tolerances]\ncharge = 1e-2\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.as_deref(), Some("rb-monopole-jx"));
        assert_eq!(cfg.overrides.units.k, 2.0);
        assert_eq!(cfg.overrides.units.beam_scale, 1.5);
        assert_eq!(cfg.overrides.units.mass, 3.0);
        assert_eq!(cfg.overrides.numerics.connection_step, 2e-5);
        assert_eq!(cfg.tolerances.charge, 1e-2);
        assert_eq!(cfg.tolerances.connection, 1e-6);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("k = -1.0").is_err());
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[spin_orbit]\ntheta = 2.0").is_err());
    }
}
