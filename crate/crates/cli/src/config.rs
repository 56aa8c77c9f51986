use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lodm_core::models::DEFAULT_BURN_IN;
use lodm_core::poly::DEFAULT_TOL;
use lodm_core::{Family, LodmParams, ModelSpec};

/// One experiment: model, parameters and run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: String,
    pub p: usize,
    pub q: usize,
    pub omega: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_n() -> usize {
    1000
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

/// Command-line values that replace the corresponding config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub burn_in: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, String> {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(n) = overrides.n {
            cfg.n = n;
        }
        if let Some(b) = overrides.burn_in {
            cfg.burn_in = b;
        }
        if let Some(t) = overrides.tol {
            cfg.tol = t;
        }
        Ok(cfg)
    }

    /// Checks the config and splits it into model and parameters. Stability
    /// of `a` is left to the commands, which report it with their own exit
    /// code.
    pub fn model(&self) -> Result<(ModelSpec, LodmParams), String> {
        let family: Family = self.family.parse().map_err(|e| format!("{e}"))?;
        if self.a.len() != self.p || self.b.len() != self.q {
            return Err(format!(
                "p = {}, q = {} but a has {} and b has {} entries",
                self.p,
                self.q,
                self.a.len(),
                self.b.len()
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        let spec = ModelSpec::new(family, self.p, self.q).map_err(|e| e.to_string())?;
        let params = LodmParams {
            omega: self.omega,
            a: self.a.clone(),
            b: self.b.clone(),
            phi: self.phi,
        };
        params.validate(&spec).map_err(|e| e.to_string())?;
        Ok((spec, params))
    }
}
