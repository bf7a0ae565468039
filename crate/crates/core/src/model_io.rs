//! Versioned, self-describing model artifacts (JSON).
//!
//! The artifact stores everything needed to rebuild the fitted state
//! bit-exactly: the configuration echo, scaling record, hyperparameters,
//! process variance, the experimental design in its original coordinates,
//! and kernel/trend identifiers. Custom functions are stored by registered
//! name only; hierarchical parents nest as full artifacts. Cached solves are
//! recomputed on load from the same inputs, which reproduces them exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{OptimMethod, SamplingKind};
use crate::csvio::write_atomic;
use crate::doe::ScalingRecord;
use crate::engine::{
    AssembleArgs, EstimationMethod, ExperimentalDesign, FittedKriging, JitterPolicy,
};
use crate::error::{KrigError, Result};
use crate::kernel::{KernelSpec, ThetaVector};
use crate::linalg::Matrix;
use crate::session::KrigingModel;
use crate::trend::TrendSpec;

pub const ARTIFACT_FORMAT: &str = "krig-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub engine_version: String,
    pub name: String,
    pub seed: u64,
    pub sampling: SamplingKind,
    pub optimizer: OptimMethod,
    pub x: Matrix,
    pub y: Matrix,
    pub outputs: Vec<OutputArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Box<ModelArtifact>>,
    /// Report text frozen at fit time.
    pub report: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputArtifact {
    pub kernel: KernelSpec,
    pub trend: TrendArtifact,
    pub theta: ThetaVector,
    /// Trend coefficients; informational (the loader re-derives the identical
    /// GLS solution from the stored design).
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub estimation: EstimationMethod,
    pub objective_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_sum: Option<f64>,
    pub scaling: ScalingRecord,
    pub jitter: JitterPolicy,
}

/// Serializable mirror of [`TrendSpec`]; the model-mean parent is resolved
/// through the nested artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrendArtifact {
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
    #[serde(rename = "custom-F")]
    CustomF {
        name: String,
    },
    ModelMean,
}

fn trend_to_artifact(trend: &TrendSpec) -> TrendArtifact {
    match trend {
        TrendSpec::Simple { constant } => TrendArtifact::Simple {
            constant: *constant,
        },
        TrendSpec::Ordinary => TrendArtifact::Ordinary,
        TrendSpec::Polynomial { degree } => TrendArtifact::Polynomial { degree: *degree },
        TrendSpec::CustomBasis { name } => TrendArtifact::CustomBasis { name: name.clone() },
        TrendSpec::CustomF { name } => TrendArtifact::CustomF { name: name.clone() },
        TrendSpec::ModelMean { .. } => TrendArtifact::ModelMean,
    }
}

fn model_to_artifact(model: &KrigingModel) -> ModelArtifact {
    ModelArtifact {
        format: ARTIFACT_FORMAT.into(),
        version: ARTIFACT_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").into(),
        name: model.name.clone(),
        seed: model.seed,
        sampling: model.sampling,
        optimizer: model.optimizer,
        x: model.x_user.clone(),
        y: model.y.clone(),
        outputs: model
            .outputs
            .iter()
            .zip(&model.cv_sums)
            .map(|(fit, cv_sum)| OutputArtifact {
                kernel: fit.kernel().clone(),
                trend: trend_to_artifact(fit.trend()),
                theta: fit.theta().clone(),
                beta: fit.beta().to_vec(),
                sigma2: fit.sigma2(),
                estimation: fit.estimation(),
                objective_value: fit.objective_value(),
                cv_sum: *cv_sum,
                scaling: fit.scaling().clone(),
                jitter: JitterPolicy::default(),
            })
            .collect(),
        parent: model
            .parent
            .as_ref()
            .map(|p| Box::new(model_to_artifact(p))),
        report: model.report(),
    }
}

fn artifact_to_model(artifact: ModelArtifact) -> Result<KrigingModel> {
    if artifact.format != ARTIFACT_FORMAT {
        return Err(KrigError::Data(format!(
            "not a model artifact (format '{}')",
            artifact.format
        )));
    }
    if artifact.version != ARTIFACT_VERSION {
        return Err(KrigError::Data(format!(
            "unsupported model artifact version {} (expected {ARTIFACT_VERSION})",
            artifact.version
        )));
    }
    let parent = artifact
        .parent
        .map(|p| artifact_to_model(*p))
        .transpose()?
        .map(Box::new);

    let mut outputs = Vec::with_capacity(artifact.outputs.len());
    let mut cv_sums = Vec::with_capacity(artifact.outputs.len());
    for (index, out) in artifact.outputs.into_iter().enumerate() {
        let trend = match out.trend {
            TrendArtifact::Simple { constant } => TrendSpec::Simple { constant },
            TrendArtifact::Ordinary => TrendSpec::Ordinary,
            TrendArtifact::Polynomial { degree } => TrendSpec::Polynomial { degree },
            TrendArtifact::CustomBasis { name } => TrendSpec::CustomBasis { name },
            TrendArtifact::CustomF { name } => TrendSpec::CustomF { name },
            TrendArtifact::ModelMean => {
                let parent_model = parent.as_ref().ok_or_else(|| {
                    KrigError::Data(
                        "artifact uses a model-mean trend but carries no parent model".into(),
                    )
                })?;
                if parent_model.n_outputs() != 1 {
                    return Err(KrigError::Data(
                        "model-mean parent must be single-output".into(),
                    ));
                }
                TrendSpec::ModelMean {
                    parent: std::sync::Arc::new(parent_model.outputs[0].clone()),
                }
            }
        };
        let x_internal = crate::doe::apply_scaling(&out.scaling, &artifact.x)?;
        let ed = ExperimentalDesign::new(x_internal, artifact.y.col_vec(index))?;
        outputs.push(FittedKriging::assemble(AssembleArgs {
            ed,
            kernel: out.kernel,
            trend,
            theta: out.theta,
            scaling: out.scaling,
            estimation: out.estimation,
            objective_value: out.objective_value,
            sigma2: Some(out.sigma2),
            jitter: out.jitter,
        })?);
        cv_sums.push(out.cv_sum);
    }

    Ok(KrigingModel {
        name: artifact.name,
        seed: artifact.seed,
        sampling: artifact.sampling,
        optimizer: artifact.optimizer,
        outputs,
        cv_sums,
        x_user: artifact.x,
        y: artifact.y,
        parent,
    })
}

/// Serialize a fitted model to JSON text.
pub fn to_json(model: &KrigingModel) -> Result<String> {
    serde_json::to_string_pretty(&model_to_artifact(model))
        .map_err(|e| KrigError::Data(format!("cannot serialize model: {e}")))
}

/// Save a fitted model artifact (atomic write).
pub fn save_model(model: &KrigingModel, path: &Path) -> Result<()> {
    write_atomic(path, &to_json(model)?)
}

/// The report text frozen inside an artifact on disk.
pub fn stored_report(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KrigError::Data(format!("cannot read model {}: {e}", path.display())))?;
    let artifact: ModelArtifact = serde_json::from_str(&text)
        .map_err(|e| KrigError::Data(format!("invalid model artifact: {e}")))?;
    Ok(artifact.report)
}

/// Load a fitted model artifact and rebuild its cached state.
pub fn load_model(path: &Path) -> Result<KrigingModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KrigError::Data(format!("cannot read model {}: {e}", path.display())))?;
    let artifact: ModelArtifact = serde_json::from_str(&text)
        .map_err(|e| KrigError::Data(format!("invalid model artifact: {e}")))?;
    artifact_to_model(artifact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EdSource, EstimationChoice, ModelConfig, TrendChoice};
    use crate::doe::InputModel;
    use crate::engine::PredictOptions;
    use crate::optim::GaOptions;
    use tempfile::tempdir;

    fn small_model(seed: u64) -> KrigingModel {
        let config = ModelConfig {
            seed,
            ed: EdSource::Generated {
                input: InputModel::uniform(&[(0.0, 15.0)]).unwrap(),
                n: 8,
                sampling: crate::config::SamplingKind::Lhs,
                true_model: "xsinx".into(),
            },
            optim: crate::config::OptimConfig {
                ga: GaOptions {
                    pop_size: 10,
                    max_generations: 8,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        };
        crate::session::create_model(&config).unwrap()
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = small_model(7);
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        assert_eq!(loaded.x_user, model.x_user);
        assert_eq!(
            loaded.outputs[0].theta().values,
            model.outputs[0].theta().values
        );
        assert_eq!(loaded.outputs[0].sigma2(), model.outputs[0].sigma2());
        assert_eq!(loaded.outputs[0].beta(), model.outputs[0].beta());

        // predictions reproduce bit-exactly through the round trip
        let xq = Matrix::from_fn(20, 1, |i, _| i as f64 * 0.75);
        let a = model.eval(&xq, PredictOptions::with_variance()).unwrap();
        let b = loaded.eval(&xq, PredictOptions::with_variance()).unwrap();
        assert_eq!(a[0].mean, b[0].mean);
        assert_eq!(a[0].variance, b[0].variance);

        // stored report matches the regenerated one
        assert_eq!(stored_report(&path).unwrap(), model.report());
    }

    #[test]
    fn hierarchical_round_trip_preserves_parent() {
        let dir = tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        let mut stream = crate::random::RandomStream::new(5);
        let input = InputModel::uniform(&[(0.0, 1.0)]).unwrap();
        let x = crate::doe::sample_lhs(&input, 9, &mut stream);
        let y: Vec<f64> = x
            .col_vec(0)
            .into_iter()
            .map(crate::demos::forrester_hf)
            .collect();
        crate::csvio::write_matrix(&x_path, &x, None).unwrap();
        crate::csvio::write_columns(&y_path, &[("y", &y)]).unwrap();
        let base = ModelConfig {
            ed: EdSource::Files {
                x: x_path,
                y: y_path,
            },
            family: crate::kernel::CorrelationFamily::Matern32,
            estimation: EstimationChoice::MaximumLikelihood,
            optim: crate::config::OptimConfig {
                ga: GaOptions {
                    pop_size: 10,
                    max_generations: 8,
                    ..Default::default()
                },
                ..Default::default()
            },
            seed: 2,
            ..Default::default()
        };
        let hier = crate::session::fit_hierarchical(&base, &base).unwrap();

        let path = dir.path().join("hier.json");
        save_model(&hier, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert!(loaded.parent.is_some());
        let xq = Matrix::from_fn(15, 1, |i, _| i as f64 / 14.0);
        let a = hier.eval(&xq, PredictOptions::with_variance()).unwrap();
        let b = loaded.eval(&xq, PredictOptions::with_variance()).unwrap();
        assert_eq!(a[0].mean, b[0].mean);
        assert_eq!(a[0].variance, b[0].variance);
    }

    #[test]
    fn version_and_format_are_checked() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = small_model(3);
        save_model(&model, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("\"version\": 1", "\"version\": 99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(KrigError::Data(_))));

        std::fs::write(&path, "{\"not\": \"a model\"}").unwrap();
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn simple_trend_round_trips() {
        let dir = tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        std::fs::write(&x_path, "0.0\n1.0\n2.5\n").unwrap();
        std::fs::write(&y_path, "5.0\n3.0\n1.0\n").unwrap();
        let config = ModelConfig {
            ed: EdSource::Files {
                x: x_path,
                y: y_path,
            },
            trend: TrendChoice::Simple { constant: 2.0 },
            family: crate::kernel::CorrelationFamily::Gaussian,
            estimation: EstimationChoice::MaximumLikelihood,
            scaling: Some(false),
            optim: crate::config::OptimConfig {
                method: crate::config::OptimMethod::Bfgs,
                bounds: Some((vec![0.5], vec![3.0])),
                ..Default::default()
            },
            ..Default::default()
        };
        let model = crate::session::create_model(&config).unwrap();
        let path = dir.path().join("simple.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert!(
            matches!(loaded.outputs[0].trend(), TrendSpec::Simple { constant } if *constant == 2.0)
        );
        assert!(loaded.outputs[0].beta().is_empty());
    }
}
