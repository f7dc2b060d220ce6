use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::codec;
use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_TOLERANCE;
use crate::kernels::{KernelBank, DEFAULT_TRUNCATION};
use crate::solver::{Momentum, SolverConfig, DEFAULT_MAX_ITERS, DEFAULT_REL_TOL};
use crate::synth::{ScaleProfile, SceneSpec};
use crate::tensor::Image;

fn default_delta_pix() -> f64 {
    1.0
}
fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}
fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsSource {
    /// `w ≡ value` everywhere.
    Uniform(f64),
    /// A tensor or CSV image; relative paths resolve against the config file.
    File(PathBuf),
}

impl Default for WeightsSource {
    fn default() -> Self {
        WeightsSource::Uniform(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Absolute(f64),
    /// Fraction of the noiseless observation's maximum.
    RelativeToPeak(f64),
}

/// Synthetic scene parameters; scale count and seed come from [`RunConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_sources: usize,
    pub min_separation: f64,
    pub amplitude: (f64, f64),
    #[serde(default)]
    pub scale_profile: ScaleProfile,
    pub noise: NoiseLevel,
}

/// Everything a subcommand needs, as read from `cfg.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Largest scale, in physical units.
    pub sigma_max: f64,
    /// Pixel side length, in the same units.
    #[serde(default = "default_delta_pix")]
    pub delta_pix: f64,
    pub num_scales: usize,
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    pub lambda: f64,
    #[serde(default)]
    pub weights: WeightsSource,
    #[serde(default)]
    pub momentum: Momentum,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Matching tolerance in pixels.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// `σ̃_max = sigma_max / delta_pix`.
    pub fn sigma_max_pixels(&self) -> f64 {
        self.sigma_max / self.delta_pix
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive, got {v}")))
            }
        };
        positive("sigma_max", self.sigma_max)?;
        positive("delta_pix", self.delta_pix)?;
        positive("truncation", self.truncation)?;
        positive("rel_tol", self.rel_tol)?;
        positive("tolerance", self.tolerance)?;
        if self.num_scales == 0 {
            return Err(Error::invalid("num_scales", "must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if let Momentum::ChambolleDossal { a } = self.momentum {
            if !(a > 2.0 && a.is_finite()) {
                return Err(Error::invalid("momentum.a", format!("must be > 2, got {a}")));
            }
        }
        if let WeightsSource::Uniform(w) = self.weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid("weights.uniform", format!("must be >= 0, got {w}")));
            }
        }
        if let Some(scene) = &self.scene {
            match scene.noise {
                NoiseLevel::Absolute(s) | NoiseLevel::RelativeToPeak(s) if !(s >= 0.0 && s.is_finite()) => {
                    return Err(Error::invalid("scene.noise", format!("must be >= 0, got {s}")));
                }
                _ => {}
            }
            self.scene_spec(0.0)?.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                    field: format!("scene.{field}"),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn kernel_bank(&self) -> Result<KernelBank> {
        KernelBank::new(self.sigma_max_pixels(), self.num_scales, self.truncation)
    }

    /// Weights for an image of the given shape.
    pub fn weights_image(&self, rows: usize, cols: usize) -> Result<Image> {
        match &self.weights {
            WeightsSource::Uniform(v) => Ok(Image::filled(rows, cols, *v)),
            WeightsSource::File(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base_dir.join(p)
                };
                let w = codec::read_image(&path)?;
                if w.shape() != (rows, cols) {
                    return Err(Error::shape(
                        "weights file vs observation",
                        format!("{:?}", (rows, cols)),
                        format!("{:?}", w.shape()),
                    ));
                }
                if w.as_slice().iter().any(|&x| x < 0.0) {
                    return Err(Error::invalid("weights", "weights file has negative entries"));
                }
                Ok(w)
            }
        }
    }

    pub fn solver_config(&self, rows: usize, cols: usize) -> Result<SolverConfig> {
        Ok(SolverConfig {
            momentum: self.momentum,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            ..SolverConfig::new(self.lambda, self.weights_image(rows, cols)?)
        })
    }

    /// The synthetic scene with its noise level resolved to `noise_sigma`.
    pub fn scene_spec(&self, noise_sigma: f64) -> Result<SceneSpec> {
        let scene = self
            .scene
            .as_ref()
            .ok_or_else(|| Error::invalid("scene", "the config has no `scene` section"))?;
        Ok(SceneSpec {
            rows: scene.rows,
            cols: scene.cols,
            num_scales: self.num_scales,
            n_sources: scene.n_sources,
            min_separation: scene.min_separation,
            amplitude: scene.amplitude,
            scale_profile: scene.scale_profile.clone(),
            noise_sigma,
            seed: self.seed,
        })
    }
}
