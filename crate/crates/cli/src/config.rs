//! Run configuration: defaults, presets, JSON files and flag overrides.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateConfig {
    pub r_max: f64,
    pub tol: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self { r_max: 30.0, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub h: f64,
    pub r_max: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { h: 0.02, r_max: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    pub sigma: Vec<i8>,
    /// One point per soliton, each with `d` coordinates.
    pub positions: Vec<Vec<f64>>,
    pub t_end: f64,
    pub tol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            sigma: vec![1, -1, 1],
            positions: vec![vec![-10.0], vec![0.0], vec![10.0]],
            t_end: 1e6,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    pub sigma: Vec<i8>,
    pub positions: Vec<f64>,
    pub half_length: f64,
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub stabilize: bool,
    /// `[k, amplitude]` seeds `amplitude · φ(· - z_k)`.
    pub unstable_seed: Option<(usize, f64)>,
    pub calibration_probes: usize,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            sigma: vec![1, -1, 1],
            positions: vec![-8.0, 0.0, 8.0],
            half_length: 40.0,
            h: 0.05,
            dt: 0.02,
            t_end: 2000.0,
            snapshot_every: 0.5,
            stabilize: true,
            unstable_seed: None,
            calibration_probes: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Run the field-solver criteria (minutes of CPU time).
    pub include_pde: bool,
    /// End time of the refinement study for the energy identity.
    pub convergence_t_end: f64,
    pub triangle_offset: f64,
    pub hamiltonian_separations: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            include_pde: true,
            convergence_t_end: 100.0,
            triangle_offset: 2.0,
            hamiltonian_separations: vec![10.0, 12.0, 14.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub preset: Option<String>,
    pub d: usize,
    pub p: f64,
    pub alpha: f64,
    pub seed: u64,
    pub ground_state: GroundStateConfig,
    pub spectrum: SpectrumConfig,
    pub ode: OdeConfig,
    pub pde: PdeConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            preset: None,
            d: 1,
            p: 3.0,
            alpha: 1.0,
            seed: 1,
            ground_state: GroundStateConfig::default(),
            spectrum: SpectrumConfig::default(),
            ode: OdeConfig::default(),
            pde: PdeConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Flag values that override the file/preset.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
}

pub const PRESETS: &[&str] = &["flagship", "triangle", "same-sign-pair", "same-sign-triple", "smoke"];

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = RunConfig {
            preset: Some(name.to_string()),
            ..Default::default()
        };
        match name {
            "flagship" => {}
            "triangle" => {
                c.d = 2;
                c.ode.positions = vec![vec![-10.0, 0.0], vec![0.0, 2.0], vec![10.0, 0.0]];
            }
            "same-sign-pair" => {
                c.ode.sigma = vec![1, 1];
                c.ode.positions = vec![vec![-5.0], vec![5.0]];
                c.pde.sigma = vec![1, 1];
                c.pde.positions = vec![-4.0, 4.0];
                c.pde.t_end = 1000.0;
            }
            "same-sign-triple" => {
                c.ode.sigma = vec![1, 1, 1];
                c.ode.positions = vec![vec![-10.0], vec![0.0], vec![10.0]];
            }
            "smoke" => {
                c.ode.t_end = 1e4;
                c.pde.t_end = 20.0;
                c.pde.half_length = 30.0;
                c.pde.h = 0.1;
                c.pde.dt = 0.04;
                c.pde.calibration_probes = 8;
                c.verify.include_pde = false;
            }
            other => bail!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
        }
        Ok(c)
    }

    /// Preset (or defaults), then the JSON file, then flags.
    pub fn resolve(preset: Option<&str>, file: Option<&Path>, o: &Overrides) -> Result<Self> {
        let mut c = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let c: RunConfig = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?;
                if let Some(p) = preset {
                    if c.preset.as_deref() != Some(p) {
                        bail!("--preset {p} conflicts with the preset recorded in {}", path.display());
                    }
                }
                c
            }
            None => match preset {
                Some(p) => Self::preset(p)?,
                None => Self::default(),
            },
        };
        if let Some(d) = o.d {
            c.d = d;
        }
        if let Some(p) = o.p {
            c.p = p;
        }
        if let Some(a) = o.alpha {
            c.alpha = a;
        }
        if let Some(t) = o.tol {
            c.ode.tol = t;
        }
        if let Some(t) = o.t_end {
            c.ode.t_end = t;
            c.pde.t_end = t;
        }
        if let Some(s) = o.seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            errs.push(format!("schema_version: expected {CONFIG_SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if let Err(e) = dnkg_core::ModelParameters::new(self.d, self.p, self.alpha) {
            errs.push(format!("d/p/alpha: {e}"));
        }
        if !(self.ground_state.r_max >= 20.0) {
            errs.push("ground_state.r_max: must be at least 20".into());
        }
        if !(self.ground_state.tol > 0.0 && self.ground_state.tol < 1e-3) {
            errs.push("ground_state.tol: must lie in (0, 1e-3)".into());
        }
        if !(self.spectrum.h > 0.0 && self.spectrum.h <= 0.05) {
            errs.push("spectrum.h: must lie in (0, 0.05]".into());
        }
        let ode = &self.ode;
        if ode.sigma.is_empty() || ode.sigma.iter().any(|s| s.abs() != 1) {
            errs.push("ode.sigma: entries must be +1 or -1".into());
        }
        if ode.positions.len() != ode.sigma.len() {
            errs.push(format!(
                "ode.positions: {} points for {} signs",
                ode.positions.len(),
                ode.sigma.len()
            ));
        }
        if ode.positions.iter().any(|z| z.len() != self.d) {
            errs.push(format!("ode.positions: every point needs d = {} coordinates", self.d));
        }
        if !(ode.t_end > 0.0) {
            errs.push("ode.t_end: must be positive".into());
        }
        if !(ode.tol >= 1e-12 && ode.tol <= 1e-6) {
            errs.push("ode.tol: must lie in [1e-12, 1e-6]".into());
        }
        let pde = &self.pde;
        if pde.positions.len() != pde.sigma.len() || pde.sigma.iter().any(|s| s.abs() != 1) {
            errs.push("pde.sigma/pde.positions: one position and a ±1 sign per soliton".into());
        }
        if !(pde.dt > 0.0 && pde.h > 0.0 && pde.t_end > 0.0 && pde.snapshot_every >= pde.dt) {
            errs.push("pde: h, dt, t_end must be positive and snapshot_every >= dt".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  {}", errs.join("\n  "))
        }
    }

    pub fn params(&self) -> dnkg_core::ModelParameters {
        dnkg_core::ModelParameters::new(self.d, self.p, self.alpha).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in PRESETS {
            RunConfig::preset(p).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn flags_override_and_errors_name_fields() {
        let o = Overrides {
            alpha: Some(0.5),
            tol: Some(1e-3),
            ..Default::default()
        };
        let err = RunConfig::resolve(None, None, &o).unwrap_err().to_string();
        assert!(err.contains("ode.tol"), "{err}");
        let o = Overrides {
            alpha: Some(0.5),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(None, None, &o).unwrap().alpha, 0.5);
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::preset("triangle").unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
