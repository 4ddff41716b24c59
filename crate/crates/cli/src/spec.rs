//! Experiment specifications and the manifests written next to every run.
//!
//! A spec is plain JSON. Flags build a spec, a config file is deep-merged on
//! top of it, and the resolved result is echoed into `manifest.json` so that
//! `simulate --config manifest.json` replays the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use minosc_core::integrator::IntegrationConfig;
use minosc_core::model::ModelParams;
use minosc_core::noise::OUConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ModelSpec {
    Preset {
        name: String,
        #[serde(default)]
        overrides: BTreeMap<String, f64>,
    },
    Inline {
        params: ModelParams,
    },
}

impl ModelSpec {
    pub fn resolve(&self) -> CliResult<ModelParams> {
        let params = match self {
            ModelSpec::Preset { name, overrides } => {
                let mut p = ModelParams::preset(name)?;
                for (k, v) in overrides {
                    p.set_key(k, *v)?;
                }
                p
            }
            ModelSpec::Inline { params } => params.clone(),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpatialField {
    /// Gaussian field with triangular autocorrelation of half-width `alpha`.
    Random { alpha: f64 },
    /// Deterministic cos(ωπx/L) scaled by `amplitude`.
    Mode { omega: usize, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    Temporal {
        epsilon: f64,
        tau: f64,
        /// Defaults to 2 ln2/τ.
        #[serde(default)]
        c: Option<f64>,
        /// Defaults to the integrator step.
        #[serde(default)]
        dt_sample: Option<f64>,
    },
    Spatial {
        epsilon: f64,
        field: SpatialField,
    },
    /// A trace or field written by `noise-gen`.
    Replay {
        epsilon: f64,
        path: PathBuf,
    },
}

impl NoiseSpec {
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            NoiseSpec::Temporal { .. }
                | NoiseSpec::Spatial {
                    field: SpatialField::Random { .. },
                    ..
                }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub model: ModelSpec,
    pub integration: IntegrationConfig,
    pub noise: NoiseSpec,
    pub ensemble: usize,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Use Ĝ₁₁I ≈ θ₁ in spatial predictions instead of the spectral value.
    #[serde(default)]
    pub g11_shortcut: bool,
    /// Write gnuplot scripts next to the data.
    #[serde(default)]
    pub gnuplot: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "run".into(),
            model: ModelSpec::Preset {
                name: minosc_core::model::PRESET_HUANG_1D.into(),
                overrides: BTreeMap::new(),
            },
            integration: IntegrationConfig::default(),
            noise: NoiseSpec::None,
            ensemble: 1,
            seed: None,
            output_dir: PathBuf::from("out"),
            g11_shortcut: false,
            gnuplot: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> CliResult<ModelParams> {
        let params = self.model.resolve()?;
        self.integration.validate(&params)?;
        if self.ensemble == 0 {
            return Err(CliError::usage("ensemble size must be at least 1"));
        }
        if (self.ensemble > 1 || self.noise.is_random()) && self.seed.is_none() {
            return Err(CliError::usage("--seed is required for random noise and ensembles"));
        }
        if self.ensemble > 1 && !self.noise.is_random() {
            return Err(CliError::usage(
                "an ensemble needs random noise (temporal or random spatial)",
            ));
        }
        match &self.noise {
            NoiseSpec::None => {}
            NoiseSpec::Temporal { epsilon, .. }
            | NoiseSpec::Spatial { epsilon, .. }
            | NoiseSpec::Replay { epsilon, .. } => {
                if !epsilon.is_finite() || *epsilon < 0.0 {
                    return Err(CliError::usage(format!(
                        "epsilon must be finite and non-negative, got {epsilon}"
                    )));
                }
            }
        }
        if let Some(ou) = self.ou_config() {
            ou.validate()?;
        }
        if let NoiseSpec::Spatial {
            field: SpatialField::Random { alpha },
            ..
        } = self.noise
        {
            if !(alpha > 0.0) {
                return Err(CliError::usage("alpha must be positive"));
            }
        }
        Ok(params)
    }

    pub fn ou_config(&self) -> Option<OUConfig> {
        match self.noise {
            NoiseSpec::Temporal { tau, c, dt_sample, .. } => {
                let dt = dt_sample.unwrap_or(self.integration.dt);
                let seed = self.seed.unwrap_or(0);
                let mut cfg = OUConfig::with_ln2_variance(tau, seed, dt);
                if let Some(c) = c {
                    cfg.c = c;
                }
                Some(cfg)
            }
            _ => None,
        }
    }

    pub fn to_value(&self) -> CliResult<Value> {
        serde_json::to_value(self).map_err(|e| CliError::Core(e.into()))
    }

    pub fn from_value(v: Value) -> CliResult<Self> {
        serde_json::from_value(v).map_err(|e| CliError::usage(format!("invalid experiment spec: {e}")))
    }

    /// Applies a config document on top of this spec. A manifest is accepted
    /// as a config; its embedded spec is used.
    pub fn overridden_by(&self, config: Value) -> CliResult<Self> {
        let config = match config {
            Value::Object(mut m) if m.contains_key("artifact_version") && m.contains_key("spec") => {
                m.remove("spec").unwrap()
            }
            other => other,
        };
        if !config.is_object() {
            return Err(CliError::usage("config file must hold a JSON object"));
        }
        let mut base = self.to_value()?;
        merge(&mut base, config);
        Self::from_value(base)
    }
}

/// Deep merge: objects merge key by key, anything else replaces.
/// A tagged enum is replaced whole when the tag changes.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let retag = ["source", "kind", "type"]
                .iter()
                .any(|t| o.get(*t).is_some_and(|v| b.get(*t) != Some(v)));
            if retag {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn read_config(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Core(minosc_core::Error::Parse {
            location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest<S = ExperimentSpec> {
    pub artifact_version: String,
    pub command: String,
    pub spec: S,
    /// Fully resolved model parameters, for reference.
    pub resolved_params: ModelParams,
    pub files: Vec<String>,
}

impl<S: Serialize> Manifest<S> {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Core(e.into()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn config_overrides_flags() {
        let base = ExperimentSpec {
            ensemble: 10,
            seed: Some(3),
            ..Default::default()
        };
        let merged = base
            .overridden_by(json!({"ensemble": 4, "integration": {"t_end": 500.0}}))
            .unwrap();
        assert_eq!(merged.ensemble, 4);
        assert_eq!(merged.integration.t_end, 500.0);
        assert_eq!(merged.integration.dt, base.integration.dt);
        assert_eq!(merged.seed, Some(3));
    }

    #[test]
    fn retagged_noise_replaces_whole() {
        let base = ExperimentSpec {
            noise: NoiseSpec::Temporal {
                epsilon: 0.01,
                tau: 10.0,
                c: None,
                dt_sample: None,
            },
            seed: Some(1),
            ..Default::default()
        };
        let merged = base
            .overridden_by(json!({"noise": {"kind": "spatial", "epsilon": 0.1, "field": {"type": "mode", "omega": 2, "amplitude": 1.0}}}))
            .unwrap();
        assert!(matches!(merged.noise, NoiseSpec::Spatial { .. }));
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let spec = ExperimentSpec {
            name: "m".into(),
            ..Default::default()
        };
        let manifest = Manifest {
            artifact_version: ARTIFACT_VERSION.into(),
            command: "simulate".into(),
            resolved_params: spec.model.resolve().unwrap(),
            spec: spec.clone(),
            files: vec![],
        };
        let v = serde_json::to_value(&manifest).unwrap();
        let back = ExperimentSpec::default().overridden_by(v).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn seed_is_mandatory_for_random_noise() {
        let spec = ExperimentSpec {
            noise: NoiseSpec::Temporal {
                epsilon: 0.01,
                tau: 10.0,
                c: None,
                dt_sample: None,
            },
            ..Default::default()
        };
        assert_eq!(spec.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn default_c_gives_ln2_variance() {
        let spec = ExperimentSpec {
            noise: NoiseSpec::Temporal {
                epsilon: 0.01,
                tau: 10.0,
                c: None,
                dt_sample: None,
            },
            seed: Some(1),
            ..Default::default()
        };
        let ou = spec.ou_config().unwrap();
        assert!((ou.c * ou.tau / 2.0 - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
