//! Diffusion parameters, the built-in presets and the preset TOML format.
//!
//! A preset file is plain TOML:
//!
//! ```toml
//! kappa = 0.1
//! presmooth_sigma = 3.0
//! presmooth_kernel = 9
//! orient_sigma = 3.0      # optional, defaults to presmooth_sigma
//! orient_kernel = 9       # optional, defaults to presmooth_kernel
//! tau = 0.2               # optional
//! steps = 5792
//! snapshots = [1024, 5792] # optional, empty means "final step only"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::stencil::MAX_TAU;
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.2;

/// Step count used by the built-in presets.
pub const DEFAULT_STEPS: usize = 5792;

/// Spatial discretization of the divergence term. Only the standard
/// central stencil exists today.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    #[default]
    Standard,
}

impl Stencil {
    fn is_standard(&self) -> bool {
        *self == Stencil::Standard
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile")]
pub struct DiffusionParams {
    pub kappa: f64,
    pub presmooth_sigma: f64,
    pub presmooth_kernel: usize,
    pub orient_sigma: f64,
    pub orient_kernel: usize,
    pub tau: f64,
    pub steps: usize,
    pub snapshots: Vec<usize>,
    #[serde(default, skip_serializing_if = "Stencil::is_standard")]
    pub stencil: Stencil,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    kappa: f64,
    presmooth_sigma: f64,
    presmooth_kernel: usize,
    orient_sigma: Option<f64>,
    orient_kernel: Option<usize>,
    tau: Option<f64>,
    steps: usize,
    #[serde(default)]
    snapshots: Vec<usize>,
    #[serde(default)]
    stencil: Stencil,
}

impl TryFrom<ParamsFile> for DiffusionParams {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        let p = DiffusionParams {
            kappa: f.kappa,
            presmooth_sigma: f.presmooth_sigma,
            presmooth_kernel: f.presmooth_kernel,
            orient_sigma: f.orient_sigma.unwrap_or(f.presmooth_sigma),
            orient_kernel: f.orient_kernel.unwrap_or(f.presmooth_kernel),
            tau: f.tau.unwrap_or(DEFAULT_TAU),
            steps: f.steps,
            snapshots: f.snapshots,
            stencil: f.stencil,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Partial parameter set; every present field replaces the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub kappa: Option<f64>,
    pub presmooth_sigma: Option<f64>,
    pub presmooth_kernel: Option<usize>,
    pub orient_sigma: Option<f64>,
    pub orient_kernel: Option<usize>,
    pub tau: Option<f64>,
    pub steps: Option<usize>,
    pub snapshots: Option<Vec<usize>>,
}

impl DiffusionParams {
    /// Parameters with the orientation kernel equal to the pre-smoothing kernel.
    pub fn new(kappa: f64, sigma: f64, kernel: usize, steps: usize) -> Result<Self> {
        let p = Self {
            kappa,
            presmooth_sigma: sigma,
            presmooth_kernel: kernel,
            orient_sigma: sigma,
            orient_kernel: kernel,
            tau: DEFAULT_TAU,
            steps,
            snapshots: Vec::new(),
            stencil: Stencil::Standard,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_snapshots(mut self, snapshots: Vec<usize>) -> Self {
        self.snapshots = snapshots;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::param("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        for (field, sigma) in [
            ("presmooth_sigma", self.presmooth_sigma),
            ("orient_sigma", self.orient_sigma),
        ] {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::param(field, format!("must be > 0, got {sigma}")));
            }
        }
        for (field, size) in [
            ("presmooth_kernel", self.presmooth_kernel),
            ("orient_kernel", self.orient_kernel),
        ] {
            if size < 3 || size % 2 == 0 {
                return Err(Error::param(field, format!("must be odd and >= 3, got {size}")));
            }
        }
        if !(self.tau.is_finite() && self.tau > 0.0 && self.tau <= MAX_TAU) {
            return Err(Error::param(
                "tau",
                format!("must satisfy 0 < tau <= {MAX_TAU}, got {}", self.tau),
            ));
        }
        if let Some(&s) = self.snapshots.iter().find(|&&s| s > self.steps) {
            return Err(Error::param(
                "snapshots",
                format!("snapshot {s} exceeds steps = {}", self.steps),
            ));
        }
        Ok(())
    }

    /// Sorted, de-duplicated snapshot steps; `[steps]` when none are listed.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        if self.snapshots.is_empty() {
            return vec![self.steps];
        }
        let mut s = self.snapshots.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn apply(&self, o: &ParamsOverride) -> Result<Self> {
        let mut p = self.clone();
        if let Some(v) = o.kappa {
            p.kappa = v;
        }
        if let Some(v) = o.presmooth_sigma {
            // orientation kernel follows unless set separately
            if p.orient_sigma == p.presmooth_sigma && o.orient_sigma.is_none() {
                p.orient_sigma = v;
            }
            p.presmooth_sigma = v;
        }
        if let Some(v) = o.presmooth_kernel {
            if p.orient_kernel == p.presmooth_kernel && o.orient_kernel.is_none() {
                p.orient_kernel = v;
            }
            p.presmooth_kernel = v;
        }
        if let Some(v) = o.orient_sigma {
            p.orient_sigma = v;
        }
        if let Some(v) = o.orient_kernel {
            p.orient_kernel = v;
        }
        if let Some(v) = o.tau {
            p.tau = v;
        }
        if let Some(v) = o.steps {
            p.steps = v;
        }
        if let Some(v) = &o.snapshots {
            p.snapshots = v.clone();
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: "<preset>".into(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("parameters always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPreset {
    pub name: String,
    pub params: DiffusionParams,
}

/// `P_strong` and `P_mild`, both at [`DEFAULT_TAU`] and [`DEFAULT_STEPS`].
pub fn builtin_presets() -> Vec<NamedPreset> {
    let strong = DiffusionParams::new(0.1, 3.0, 9, DEFAULT_STEPS).expect("valid preset");
    let mild = DiffusionParams::new(1.0 / 15.0, 5f64.sqrt(), 5, DEFAULT_STEPS).expect("valid preset");
    vec![
        NamedPreset {
            name: "P_strong".into(),
            params: strong,
        },
        NamedPreset {
            name: "P_mild".into(),
            params: mild,
        },
    ]
}

pub fn preset(name: &str) -> Result<NamedPreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
