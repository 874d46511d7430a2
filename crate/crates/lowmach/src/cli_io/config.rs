use crate::assembler::Tier;
use crate::error::{Error, Result};
use crate::layer_profiles::PrandtlGrid;
use crate::spectral_core::PhysicalParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[default]
    Filtered,
    Resonance,
    Prandtl,
    Assemble,
    Sweep,
    Verify,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filtered" => Ok(Self::Filtered),
            "resonance" => Ok(Self::Resonance),
            "prandtl" => Ok(Self::Prandtl),
            "assemble" => Ok(Self::Assemble),
            "sweep" => Ok(Self::Sweep),
            "verify" => Ok(Self::Verify),
            _ => Err(config_err("scenario", format!("unknown scenario `{s}`"))),
        }
    }
}

/// Initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Acoustic pair on `(1,1,1)` and a shear.
    Standard,
    /// Random acoustic state and random mean flow.
    Random,
    /// Taylor-Green mean flow and no acoustics.
    TaylorGreen,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub eps: f64,
    pub nu: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
    pub a: [f64; 3],
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { eps: 1e-2, nu: 1e-2, mu1: 1.0, mu2: 0.5, gamma: 1.4, a: [2.0 * PI, 2.0 * PI, PI] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Acoustic truncation.
    pub k: usize,
    /// Mean-flow truncation.
    pub k_mean: usize,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub seed: u64,
    pub preset: Preset,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { k: 3, k_mean: 3, dt: 1e-3, t_end: 0.5, samples: 8, seed: 7, preset: Preset::Standard }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleSection {
    pub tier: Tier,
    /// Horizontal grid points per direction.
    pub n_h: usize,
    /// Horizontal box; `0` picks twice the truncation.
    pub box_m: usize,
}

impl Default for AssembleSection {
    fn default() -> Self {
        Self { tier: Tier::C, n_h: 16, box_m: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    /// `ν = ε^κ`.
    pub kappa: f64,
    pub tiers: Vec<Tier>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { eps: vec![1e-2, 1e-3, 1e-4], kappa: 1.0, tiers: Tier::ALL.to_vec() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrandtlSection {
    pub intervals: usize,
    pub theta_max: f64,
    pub stretch: f64,
    pub dt: f64,
}

impl Default for PrandtlSection {
    fn default() -> Self {
        let g = PrandtlGrid::default();
        Self { intervals: g.intervals, theta_max: g.theta_max, stretch: g.stretch, dt: g.dt }
    }
}

impl PrandtlSection {
    pub fn grid(&self) -> PrandtlGrid {
        PrandtlGrid {
            intervals: self.intervals,
            theta_max: self.theta_max,
            stretch: self.stretch,
            dt: self.dt,
            ..Default::default()
        }
    }
}

/// Everything a run needs; parsed from sectioned `key = value` text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub assemble: AssembleSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub prandtl: PrandtlSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), reason: reason.into() }
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            output: default_output(),
            physics: PhysicsSection::default(),
            run: RunSection::default(),
            assemble: AssembleSection::default(),
            sweep: SweepSection::default(),
            prandtl: PrandtlSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("unknown field") || msg.contains("unknown variant"))
                .unwrap_or("config")
                .to_string();
            Error::Config { field, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; hashing it identifies the run.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        let p = &self.physics;
        PhysicalParams::new(p.a, p.eps, p.nu, p.mu1, p.mu2, p.gamma).map_err(|e| match e {
            Error::InvalidParameter { field, reason } => config_err(&format!("physics.{field}"), reason),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let r = &self.run;
        if r.k < 1 {
            return Err(config_err("run.k", "must be at least 1"));
        }
        if r.k_mean < 1 {
            return Err(config_err("run.k_mean", "must be at least 1"));
        }
        if !(r.dt > 0.0 && r.dt.is_finite()) {
            return Err(config_err("run.dt", format!("must be positive, got {}", r.dt)));
        }
        if !(r.t_end > 0.0 && r.t_end.is_finite()) {
            return Err(config_err("run.t_end", format!("must be positive, got {}", r.t_end)));
        }
        if r.samples == 0 {
            return Err(config_err("run.samples", "must be at least 1"));
        }
        if self.assemble.n_h < 4 {
            return Err(config_err("assemble.n_h", "must be at least 4"));
        }
        let s = &self.sweep;
        if let Some(e) = s.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(config_err("sweep.eps", format!("entries must lie in (0,1], got {e}")));
        }
        if !(s.kappa > 0.0 && s.kappa.is_finite()) {
            return Err(config_err("sweep.kappa", format!("must be positive, got {}", s.kappa)));
        }
        if self.scenario == Scenario::Sweep && s.eps.len() < 3 {
            return Err(config_err("sweep.eps", "a sweep needs at least 3 values"));
        }
        if s.tiers.is_empty() {
            return Err(config_err("sweep.tiers", "at least one tier"));
        }
        let p = &self.prandtl;
        if p.intervals < 8 || !(p.theta_max > 0.0) || !(p.stretch >= 0.0) || !(p.dt > 0.0) {
            return Err(config_err("prandtl", "needs intervals ≥ 8 and positive theta_max, dt"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::parse("scenario = \"sweep\"\n").unwrap();
        assert_eq!(cfg, RunConfig::new(Scenario::Sweep));
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn bad_viscosity_names_the_field() {
        let err = RunConfig::parse("scenario = \"filtered\"\n[physics]\nnu = 1.5\n").unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "physics.nu"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("scenario = \"filtered\"\n[run]\nkk = 2\n").unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "kk"), "{err}");
    }
}
