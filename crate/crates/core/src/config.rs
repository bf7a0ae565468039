//! Model configuration: a TOML file with a nested option structure
//! (`ExpDesign.X`, `Corr.Family`, `Trend.Type`, `Optim.Method`,
//! `Optim.Bounds`, `EstimMethod`, `Scaling`, `Corr.Handle`), matching the
//! field naming common in surrogate-modelling toolboxes so existing option
//! sets port line for line.
//!
//! ```toml
//! Name = "Model 1"
//! Seed = 42
//! EstimMethod = "CV"          # "ML" | "CV"
//! Scaling = true              # omit for the automatic default
//!
//! [ExpDesign]
//! Sampling = "LHS"            # "user" | "LHS" | "MC"
//! N = 15
//! TrueModel = "branin"        # or X = "x.csv", Y = "y.csv" with Sampling = "user"
//!
//! [[Input.Marginals]]
//! Type = "Uniform"
//! Parameters = [-5.0, 10.0]
//!
//! [[Input.Marginals]]
//! Type = "Uniform"
//! Parameters = [0.0, 15.0]
//!
//! [Trend]
//! Type = "ordinary"           # simple | ordinary | polynomial | custom-basis | custom-F | model-mean
//!
//! [Corr]
//! Type = "ellipsoidal"        # separable | ellipsoidal
//! Family = "matern-5_2"
//! Isotropic = false
//! Nugget = 0.0
//! # Handle = "fault"          # registered custom correlation function
//!
//! [Optim]
//! Method = "HGA"              # BFGS | GA | HGA
//! # Bounds = [[0.3, 0.1], [0.9, 0.5]]   # [lower, upper]
//! # MaxIter = 50              # GA generations
//! [Optim.HGA]
//! nPop = 60
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::doe::InputModel;
use crate::engine::JitterPolicy;
use crate::error::{KrigError, Result};
use crate::kernel::{Composition, CorrelationFamily, KernelSpec};
use crate::optim::{BfgsOptions, GaOptions};

/// Raw deserialized config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "Name", skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "Seed", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "EstimMethod", skip_serializing_if = "Option::is_none")]
    pub estim_method: Option<String>,
    #[serde(rename = "CV", skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvSection>,
    #[serde(rename = "Scaling", skip_serializing_if = "Option::is_none")]
    pub scaling: Option<bool>,
    #[serde(rename = "ExpDesign", skip_serializing_if = "Option::is_none")]
    pub exp_design: Option<ExpDesignSection>,
    #[serde(rename = "Input", skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(rename = "Trend", skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendSection>,
    #[serde(rename = "Corr", skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrSection>,
    #[serde(rename = "Optim", skip_serializing_if = "Option::is_none")]
    pub optim: Option<OptimSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpDesignSection {
    #[serde(rename = "Sampling", skip_serializing_if = "Option::is_none")]
    pub sampling: Option<String>,
    #[serde(rename = "X", skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(rename = "Y", skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "TrueModel", skip_serializing_if = "Option::is_none")]
    pub true_model: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    #[serde(rename = "Marginals", default)]
    pub marginals: Vec<MarginalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSection {
    #[serde(rename = "Type")]
    pub kind: String,
    #[serde(rename = "Parameters")]
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSection {
    #[serde(rename = "Type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "Degree", skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(rename = "Constant", skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(rename = "Name", skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "Parent", skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrSection {
    #[serde(rename = "Type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "Family", skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(rename = "Isotropic", skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<bool>,
    #[serde(rename = "Nugget", skip_serializing_if = "Option::is_none")]
    pub nugget: Option<f64>,
    #[serde(rename = "Handle", skip_serializing_if = "Option::is_none")]
    pub handle: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSection {
    #[serde(rename = "Method", skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Two rows: lower bounds then upper bounds.
    #[serde(rename = "Bounds", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Initial", skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Genetic-algorithm generation budget.
    #[serde(rename = "MaxIter", skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(rename = "GA", skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaSection>,
    #[serde(rename = "HGA", skip_serializing_if = "Option::is_none")]
    pub hga: Option<GaSection>,
    #[serde(rename = "BFGS", skip_serializing_if = "Option::is_none")]
    pub bfgs: Option<BfgsSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    #[serde(rename = "nPop", skip_serializing_if = "Option::is_none")]
    pub n_pop: Option<usize>,
    #[serde(rename = "Generations", skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(rename = "MutationSigma", skip_serializing_if = "Option::is_none")]
    pub mutation_sigma: Option<f64>,
    #[serde(rename = "Elites", skip_serializing_if = "Option::is_none")]
    pub elites: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfgsSection {
    #[serde(rename = "MaxIter", skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(rename = "GradTol", skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            KrigError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        ConfigFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| KrigError::Config(format!("invalid config: {e}")))
    }
}

/// How the experimental design is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingKind {
    User,
    Lhs,
    Mc,
}

impl SamplingKind {
    pub fn label(&self) -> &'static str {
        match self {
            SamplingKind::User => "User",
            SamplingKind::Lhs => "LHS",
            SamplingKind::Mc => "MC",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "user" => Ok(SamplingKind::User),
            "lhs" => Ok(SamplingKind::Lhs),
            "mc" | "montecarlo" | "monte-carlo" => Ok(SamplingKind::Mc),
            other => Err(KrigError::Config(format!(
                "unknown sampling method '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum EdSource {
    /// CSV paths resolved relative to the config file.
    Files { x: PathBuf, y: PathBuf },
    /// Generate the design by sampling a registered true model.
    Generated {
        input: InputModel,
        n: usize,
        sampling: SamplingKind,
        true_model: String,
    },
    /// In-memory design and responses (library and FFI callers).
    Provided {
        x: crate::linalg::Matrix,
        y: crate::linalg::Matrix,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrendChoice {
    Simple {
        constant: f64,
    },
    Ordinary,
    Polynomial {
        degree: usize,
    },
    CustomBasis {
        name: String,
    },
    CustomF {
        name: String,
    },
    /// Parent model artifact to load (hierarchical Kriging).
    ModelMean {
        parent_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimMethod {
    Bfgs,
    Ga,
    Hga,
}

impl OptimMethod {
    pub fn label(&self) -> &'static str {
        match self {
            OptimMethod::Bfgs => "BFGS",
            OptimMethod::Ga => "Genetic Algorithm",
            OptimMethod::Hga => "Hybrid Genetic Algorithm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimConfig {
    pub method: OptimMethod,
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub initial: Option<Vec<f64>>,
    pub ga: GaOptions,
    pub bfgs: BfgsOptions,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            method: OptimMethod::Hga,
            bounds: None,
            initial: None,
            ga: GaOptions::default(),
            bfgs: BfgsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationChoice {
    MaximumLikelihood,
    /// `k = None` means leave-one-out (K = N).
    CrossValidation {
        k: Option<usize>,
    },
}

/// Fully resolved model configuration with the feature-table defaults
/// applied: ordinary trend, ellipsoidal anisotropic Matern 5/2,
/// cross-validation with K = N, hybrid genetic algorithm, scaling on,
/// nugget 0.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub name: String,
    pub seed: u64,
    pub ed: EdSource,
    pub trend: TrendChoice,
    pub family: CorrelationFamily,
    pub composition: Composition,
    pub isotropic: bool,
    pub nugget: f64,
    pub custom_kernel: Option<String>,
    pub estimation: EstimationChoice,
    pub optim: OptimConfig,
    /// `None` resolves automatically: on for built-in kernels, off for custom
    /// kernels and model-mean trends.
    pub scaling: Option<bool>,
    pub jitter: JitterPolicy,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: "Model 1".into(),
            seed: 42,
            ed: EdSource::Generated {
                input: InputModel {
                    marginals: Vec::new(),
                },
                n: 0,
                sampling: SamplingKind::Lhs,
                true_model: String::new(),
            },
            trend: TrendChoice::Ordinary,
            family: CorrelationFamily::Matern52,
            composition: Composition::Ellipsoidal,
            isotropic: false,
            nugget: 0.0,
            custom_kernel: None,
            estimation: EstimationChoice::CrossValidation { k: None },
            optim: OptimConfig::default(),
            scaling: None,
            jitter: JitterPolicy::default(),
        }
    }
}

impl ModelConfig {
    /// Resolve a raw config file; `base_dir` anchors relative CSV/model paths.
    pub fn from_file(file: &ConfigFile, base_dir: &Path) -> Result<ModelConfig> {
        let mut config = Self::from_file_without_ed(file, base_dir)?;
        config.ed = resolve_ed(file, base_dir)?;
        Ok(config)
    }

    /// Resolve everything except the experimental design; the caller supplies
    /// the data directly (used by the FFI layer).
    pub fn from_file_with_ed(
        file: &ConfigFile,
        base_dir: &Path,
        ed: EdSource,
    ) -> Result<ModelConfig> {
        let mut config = Self::from_file_without_ed(file, base_dir)?;
        config.ed = ed;
        Ok(config)
    }

    fn from_file_without_ed(file: &ConfigFile, base_dir: &Path) -> Result<ModelConfig> {
        let mut config = ModelConfig {
            name: file.name.clone().unwrap_or_else(|| "Model 1".into()),
            seed: file.seed.unwrap_or(42),
            ..Default::default()
        };

        if let Some(method) = &file.estim_method {
            config.estimation = match method.to_ascii_uppercase().as_str() {
                "ML" => EstimationChoice::MaximumLikelihood,
                "CV" => EstimationChoice::CrossValidation {
                    k: file.cv.as_ref().and_then(|c| c.k).filter(|&k| k > 0),
                },
                other => {
                    return Err(KrigError::Config(format!(
                        "unknown estimation method '{other}' (expected ML or CV)"
                    )))
                }
            };
        } else if let Some(cv) = &file.cv {
            config.estimation = EstimationChoice::CrossValidation {
                k: cv.k.filter(|&k| k > 0),
            };
        }

        config.scaling = file.scaling;

        if let Some(corr) = &file.corr {
            if let Some(handle) = &corr.handle {
                config.custom_kernel = Some(handle.clone());
            }
            if let Some(kind) = &corr.kind {
                config.composition = match kind.to_ascii_lowercase().as_str() {
                    "separable" => Composition::Separable,
                    "ellipsoidal" => Composition::Ellipsoidal,
                    other => {
                        return Err(KrigError::Config(format!(
                            "unknown correlation type '{other}'"
                        )))
                    }
                };
            }
            if let Some(family) = &corr.family {
                config.family = CorrelationFamily::parse(family)
                    .map_err(|e| KrigError::Config(e.to_string()))?;
            }
            if let Some(iso) = corr.isotropic {
                config.isotropic = iso;
            }
            if let Some(nugget) = corr.nugget {
                config.nugget = nugget;
            }
        }

        if let Some(trend) = &file.trend {
            let kind = trend.kind.as_deref().unwrap_or("ordinary");
            config.trend = match kind.to_ascii_lowercase().as_str() {
                "simple" => TrendChoice::Simple {
                    constant: trend.constant.unwrap_or(0.0),
                },
                "ordinary" => TrendChoice::Ordinary,
                "polynomial" | "linear" | "quadratic" => {
                    let degree = trend.degree.unwrap_or(match kind {
                        "quadratic" => 2,
                        _ => 1,
                    });
                    TrendChoice::Polynomial { degree }
                }
                "custom-basis" => TrendChoice::CustomBasis {
                    name: trend.name.clone().ok_or_else(|| {
                        KrigError::Config("custom-basis trend requires Trend.Name".into())
                    })?,
                },
                "custom" | "custom-f" => TrendChoice::CustomF {
                    name: trend.name.clone().ok_or_else(|| {
                        KrigError::Config("custom-F trend requires Trend.Name".into())
                    })?,
                },
                "model-mean" => TrendChoice::ModelMean {
                    parent_path: trend.parent.as_ref().map(|p| resolve_path(base_dir, p)),
                },
                other => return Err(KrigError::Config(format!("unknown trend type '{other}'"))),
            };
        }

        if let Some(optim) = &file.optim {
            if let Some(method) = &optim.method {
                config.optim.method = match method.to_ascii_uppercase().as_str() {
                    "BFGS" => OptimMethod::Bfgs,
                    "GA" => OptimMethod::Ga,
                    "HGA" => OptimMethod::Hga,
                    other => {
                        return Err(KrigError::Config(format!(
                            "unknown optimization method '{other}'"
                        )))
                    }
                };
            }
            if let Some(bounds) = &optim.bounds {
                if bounds.len() != 2 || bounds[0].len() != bounds[1].len() {
                    return Err(KrigError::Config(
                        "Optim.Bounds must hold two equal-length rows: lower then upper".into(),
                    ));
                }
                config.optim.bounds = Some((bounds[0].clone(), bounds[1].clone()));
            }
            config.optim.initial = optim.initial.clone();
            if let Some(max_iter) = optim.max_iter {
                config.optim.ga.max_generations = max_iter;
            }
            let ga_section = optim.hga.as_ref().or(optim.ga.as_ref());
            if let Some(ga) = ga_section {
                if let Some(n_pop) = ga.n_pop {
                    config.optim.ga.pop_size = n_pop;
                }
                if let Some(generations) = ga.generations {
                    config.optim.ga.max_generations = generations;
                }
                if let Some(sigma) = ga.mutation_sigma {
                    config.optim.ga.mutation_sigma_fraction = sigma;
                }
                if let Some(elites) = ga.elites {
                    config.optim.ga.elite_count = elites;
                }
            }
            if let Some(bfgs) = &optim.bfgs {
                if let Some(max_iter) = bfgs.max_iter {
                    config.optim.bfgs.max_iter = max_iter;
                }
                if let Some(grad_tol) = bfgs.grad_tol {
                    config.optim.bfgs.grad_tol = grad_tol;
                }
            }
        }
        Ok(config)
    }

    /// Parse the input model section into uniform marginals.
    pub fn input_model(file: &ConfigFile) -> Result<InputModel> {
        let section = file
            .input
            .as_ref()
            .ok_or_else(|| KrigError::Config("config has no [Input] section".into()))?;
        if section.marginals.is_empty() {
            return Err(KrigError::Config("Input.Marginals is empty".into()));
        }
        let mut bounds = Vec::with_capacity(section.marginals.len());
        for (i, marginal) in section.marginals.iter().enumerate() {
            if !marginal.kind.eq_ignore_ascii_case("uniform") {
                return Err(KrigError::Config(format!(
                    "marginal {} has type '{}'; only Uniform is supported",
                    i + 1,
                    marginal.kind
                )));
            }
            if marginal.parameters.len() != 2 {
                return Err(KrigError::Config(format!(
                    "marginal {} needs exactly two parameters [lower, upper]",
                    i + 1
                )));
            }
            bounds.push((marginal.parameters[0], marginal.parameters[1]));
        }
        InputModel::uniform(&bounds)
    }

    /// Kernel spec for a design of the given dimension.
    pub fn kernel_spec(&self, dim: usize) -> KernelSpec {
        KernelSpec {
            family: self.family.clone(),
            composition: self.composition,
            isotropic: self.isotropic,
            nugget: self.nugget,
            dim,
            custom_matrix: self.custom_kernel.clone(),
        }
    }
}

fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn resolve_ed(file: &ConfigFile, base_dir: &Path) -> Result<EdSource> {
    let ed = file.exp_design.clone().unwrap_or_default();
    let sampling = ed
        .sampling
        .as_deref()
        .map(SamplingKind::parse)
        .transpose()?
        .unwrap_or(if ed.x.is_some() {
            SamplingKind::User
        } else {
            SamplingKind::Lhs
        });

    match sampling {
        SamplingKind::User => {
            let x = ed.x.ok_or_else(|| {
                KrigError::Config("ExpDesign.Sampling = \"user\" requires ExpDesign.X".into())
            })?;
            let y = ed.y.ok_or_else(|| {
                KrigError::Config("ExpDesign.Sampling = \"user\" requires ExpDesign.Y".into())
            })?;
            Ok(EdSource::Files {
                x: resolve_path(base_dir, &x),
                y: resolve_path(base_dir, &y),
            })
        }
        kind => {
            let n = ed.n.ok_or_else(|| {
                KrigError::Config("sampled experimental designs require ExpDesign.N".into())
            })?;
            let true_model = ed.true_model.ok_or_else(|| {
                KrigError::Config("sampled experimental designs require ExpDesign.TrueModel".into())
            })?;
            let input = ModelConfig::input_model(file)?;
            Ok(EdSource::Generated {
                input,
                n,
                sampling: kind,
                true_model,
            })
        }
    }
}
