//! Model lifecycle orchestration: resolve configuration defaults, run the
//! fit pipeline (scale, optimize theta, finalize beta and sigma2), evaluate
//! fitted models, validate them, and fit hierarchical (multi-fidelity)
//! surrogates.

use std::sync::Arc;

use crate::config::{
    EdSource, EstimationChoice, ModelConfig, OptimMethod, SamplingKind, TrendChoice,
};
use crate::csvio;
use crate::demos;
use crate::doe::{sample_lhs, sample_mc, standardize, ScalingRecord};
use crate::engine::{
    cv_objective, cv_partition, cv_sigma2, loo_objective, nll_profile, AssembleArgs,
    EstimationMethod, ExperimentalDesign, FittedKriging, PredictOptions, Prediction,
};
use crate::error::{KrigError, Result};
use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::model_io;
use crate::optim::{
    minimize_bfgs, minimize_ga, minimize_hga, HgaOptions, OptimProblem, OptimResult,
};
use crate::random::RandomStream;
use crate::trend::TrendSpec;

// child-stream indices so every pipeline stage draws from its own stream
const STREAM_DESIGN: u64 = 1;
const STREAM_FOLDS: u64 = 2;
const STREAM_OPTIM_BASE: u64 = 16;

/// A fitted surrogate together with the configuration echo needed for
/// reporting and serialization. Multi-column responses are handled as
/// independent single-output fits sharing the experimental design.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    pub name: String,
    pub seed: u64,
    pub sampling: SamplingKind,
    pub optimizer: OptimMethod,
    /// One fitted state per response column.
    pub outputs: Vec<FittedKriging>,
    /// Raw CV objective sums (the mean is stored on each fitted state).
    pub cv_sums: Vec<Option<f64>>,
    /// Training inputs exactly as provided/generated (user coordinates).
    pub x_user: Matrix,
    /// Training responses, one column per output.
    pub y: Matrix,
    /// Low-fidelity parent of a hierarchical fit.
    pub parent: Option<Box<KrigingModel>>,
}

impl KrigingModel {
    pub fn n_train(&self) -> usize {
        self.x_user.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.x_user.cols()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Predict every output at the query points.
    pub fn eval(&self, xq: &Matrix, options: PredictOptions) -> Result<Vec<Prediction>> {
        self.outputs
            .iter()
            .map(|m| m.predict(xq, options))
            .collect()
    }

    pub fn report(&self) -> String {
        crate::report::print_report(self)
    }
}

/// Validation metrics on an independent data set.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub n_val: usize,
    /// Sum of squared errors over `N * Var[Y]` (population variance).
    pub nrmse: f64,
    pub residuals: Vec<f64>,
}

/// Normalized mean squared error of predictions against true responses.
pub fn nrmse(truth: &[f64], mean: &[f64]) -> Result<f64> {
    let n = truth.len();
    if n == 0 || mean.len() != n {
        return Err(KrigError::DimensionMismatch(format!(
            "validation sizes differ: {} vs {}",
            n,
            mean.len()
        )));
    }
    let avg = truth.iter().sum::<f64>() / n as f64;
    let var = truth.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(KrigError::ZeroVariance(
            "validation responses have zero variance".into(),
        ));
    }
    let sse: f64 = truth.iter().zip(mean).map(|(t, m)| (t - m) * (t - m)).sum();
    Ok(sse / (n as f64 * var))
}

/// Validate a single-output model against held-out data.
pub fn validate(model: &KrigingModel, xval: &Matrix, yval: &[f64]) -> Result<ValidationReport> {
    if model.n_outputs() != 1 {
        return Err(KrigError::Config(
            "validate expects a single-output model".into(),
        ));
    }
    let pred = model.outputs[0].predict(xval, PredictOptions::mean_only())?;
    let residuals: Vec<f64> = yval.iter().zip(&pred.mean).map(|(t, m)| t - m).collect();
    Ok(ValidationReport {
        n_val: yval.len(),
        nrmse: nrmse(yval, &pred.mean)?,
        residuals,
    })
}

/// Fit a model from a resolved configuration.
pub fn create_model(config: &ModelConfig) -> Result<KrigingModel> {
    fit_model(config, None)
}

/// Fit with an in-memory parent for the model-mean trend (used by
/// [`fit_hierarchical`]; the CLI path loads the parent from disk instead).
pub fn fit_model(
    config: &ModelConfig,
    parent_override: Option<Arc<FittedKriging>>,
) -> Result<KrigingModel> {
    let stream = RandomStream::new(config.seed);

    // ---- resolve the experimental design ----
    let (x_user, y, sampling) = resolve_design(config, &stream)?;
    let n = x_user.rows();
    let n_outputs = y.cols();
    if n_outputs == 0 {
        return Err(KrigError::Data("response file has no columns".into()));
    }

    let kernel = config.kernel_spec(x_user.cols());
    kernel
        .validate()
        .map_err(|e| KrigError::Config(e.to_string()))?;
    let trend = resolve_trend(&config.trend, parent_override)?;
    trend.validate()?;

    // duplicate design rows make R exactly singular when nothing regularizes it
    if kernel.nugget == 0.0 && !kernel.is_custom_matrix() {
        check_duplicate_rows(&x_user)?;
    }

    // ---- scaling ----
    let auto_off = kernel.is_custom_matrix() || matches!(trend, TrendSpec::ModelMean { .. });
    let scaling_on = config.scaling.unwrap_or(!auto_off);
    let (x_internal, scaling) = if scaling_on {
        standardize(&x_user)?
    } else {
        (x_user.clone(), ScalingRecord::disabled(x_user.cols()))
    };

    // ---- theta bounds and optimization coordinates ----
    let theta_len = kernel
        .theta_len()
        .map_err(|e| KrigError::Config(e.to_string()))?;
    let (lower, upper) = resolve_bounds(config, &kernel, &x_internal, theta_len)?;
    // built-in length scales are optimized in log10 coordinates; custom
    // kernels keep linear coordinates (their parameters need not be scales)
    let log_scale = !kernel.is_custom_matrix();
    let (opt_lower, opt_upper) = if log_scale {
        (
            lower.iter().map(|v| v.log10()).collect::<Vec<f64>>(),
            upper.iter().map(|v| v.log10()).collect::<Vec<f64>>(),
        )
    } else {
        (lower.clone(), upper.clone())
    };
    let opt_initial = match &config.optim.initial {
        Some(init) => {
            if init.len() != theta_len {
                return Err(KrigError::Config(format!(
                    "Optim.Initial has length {}, the kernel declares {theta_len} hyperparameters",
                    init.len()
                )));
            }
            if log_scale && init.iter().any(|v| !(*v > 0.0)) {
                return Err(KrigError::Config(
                    "Optim.Initial length scales must be strictly positive".into(),
                ));
            }
            Some(if log_scale {
                init.iter().map(|v| v.log10()).collect()
            } else {
                init.clone()
            })
        }
        None => None,
    };

    // ---- estimation objective ----
    let estimation = match config.estimation {
        EstimationChoice::MaximumLikelihood => EstimationMethod::MaximumLikelihood,
        EstimationChoice::CrossValidation { k } => {
            let k = k.unwrap_or(n);
            if !(2..=n).contains(&k) {
                return Err(KrigError::Config(format!(
                    "CV requires 2 <= K <= N, got K={k} with N={n}"
                )));
            }
            EstimationMethod::CrossValidation { k }
        }
    };
    let folds = match estimation {
        EstimationMethod::CrossValidation { k } => {
            Some(cv_partition(n, k, &mut stream.child(STREAM_FOLDS))?)
        }
        EstimationMethod::MaximumLikelihood => None,
    };

    // ---- per-output optimization and assembly ----
    let mut outputs = Vec::with_capacity(n_outputs);
    let mut cv_sums = Vec::with_capacity(n_outputs);
    for output in 0..n_outputs {
        let y_col = y.col_vec(output);
        let ed = ExperimentalDesign::new(x_internal.clone(), y_col)?;

        let objective = |raw: &[f64]| -> f64 {
            // smooth distance-to-bounds term keeps failed evaluations ordered
            // when a probe lands outside the box
            let violation: f64 = raw
                .iter()
                .zip(opt_lower.iter().zip(&opt_upper))
                .map(|(v, (l, u))| (l - v).max(0.0) + (v - u).max(0.0))
                .sum();
            let values: Vec<f64> = if log_scale {
                raw.iter().map(|v| 10f64.powf(*v)).collect()
            } else {
                raw.to_vec()
            };
            let Ok(theta) = kernel.make_theta(values) else {
                return crate::engine::PENALTY_BASE + violation;
            };
            let value = match &folds {
                None => nll_profile(&theta, &ed, &kernel, &trend),
                Some(folds) if folds.len() == n => loo_objective(&theta, &ed, &kernel, &trend),
                Some(folds) => cv_objective(&theta, &ed, &kernel, &trend, folds),
            };
            if value >= crate::engine::PENALTY_BASE {
                value + violation
            } else {
                value
            }
        };

        let mut problem = OptimProblem::new(&objective, opt_lower.clone(), opt_upper.clone())?;
        if let Some(init) = &opt_initial {
            problem = problem
                .with_initial(init.clone())
                .map_err(|e| KrigError::Config(format!("Optim.Initial out of bounds: {e}")))?;
        }
        let mut opt_stream = stream.child(STREAM_OPTIM_BASE + output as u64);
        let result: OptimResult = match config.optim.method {
            OptimMethod::Bfgs => minimize_bfgs(&problem, &config.optim.bfgs),
            OptimMethod::Ga => minimize_ga(&problem, &config.optim.ga, &mut opt_stream),
            OptimMethod::Hga => minimize_hga(
                &problem,
                &HgaOptions {
                    ga: config.optim.ga.clone(),
                    bfgs: config.optim.bfgs.clone(),
                },
                &mut opt_stream,
            ),
        };
        if result.objective >= crate::engine::PENALTY_BASE {
            return Err(KrigError::NumericalBreakdown(format!(
                "hyperparameter optimization found no feasible point for output {}",
                output + 1
            )));
        }

        let theta = kernel.make_theta(if log_scale {
            result.theta.iter().map(|v| 10f64.powf(*v)).collect()
        } else {
            result.theta.clone()
        })?;

        let (sigma2, objective_value, cv_sum) = match (&estimation, &folds) {
            (EstimationMethod::MaximumLikelihood, _) => (None, result.objective, None),
            (EstimationMethod::CrossValidation { .. }, Some(folds)) => {
                let s2 = cv_sigma2(&theta, &ed, &kernel, &trend, folds)?;
                // the reported CV objective is a mean over the design
                (
                    Some(s2),
                    result.objective / n as f64,
                    Some(result.objective),
                )
            }
            _ => unreachable!("folds exist exactly for CV"),
        };

        outputs.push(FittedKriging::assemble(AssembleArgs {
            ed,
            kernel: kernel.clone(),
            trend: trend.clone(),
            theta,
            scaling: scaling.clone(),
            estimation,
            objective_value,
            sigma2,
            jitter: config.jitter,
        })?);
        cv_sums.push(cv_sum);
    }

    Ok(KrigingModel {
        name: config.name.clone(),
        seed: config.seed,
        sampling,
        optimizer: config.optim.method,
        outputs,
        cv_sums,
        x_user,
        y,
        parent: None,
    })
}

/// Hierarchical Kriging: fit the low-fidelity model, then fit the
/// high-fidelity model with the low-fidelity mean predictor as its trend
/// (scaling forced off so the parent sees original coordinates).
pub fn fit_hierarchical(lf_config: &ModelConfig, hf_config: &ModelConfig) -> Result<KrigingModel> {
    let lf_model = create_model(lf_config)?;
    if lf_model.n_outputs() != 1 {
        return Err(KrigError::Config(
            "hierarchical fits require a single-output low-fidelity model".into(),
        ));
    }
    let parent = Arc::new(lf_model.outputs[0].clone());

    let mut hf = hf_config.clone();
    hf.trend = TrendChoice::ModelMean { parent_path: None };
    hf.scaling = Some(false);
    let mut hier = fit_model(&hf, Some(parent))?;
    hier.parent = Some(Box::new(lf_model));
    Ok(hier)
}

fn resolve_design(
    config: &ModelConfig,
    stream: &RandomStream,
) -> Result<(Matrix, Matrix, SamplingKind)> {
    match &config.ed {
        EdSource::Provided { x, y } => {
            if y.rows() != x.rows() {
                return Err(KrigError::Data(format!(
                    "X has {} rows but Y has {}",
                    x.rows(),
                    y.rows()
                )));
            }
            Ok((x.clone(), y.clone(), SamplingKind::User))
        }
        EdSource::Files { x, y } => {
            let x_mat = csvio::read_matrix(x)?;
            let y_mat = csvio::read_responses(y)?;
            if y_mat.rows() != x_mat.rows() {
                return Err(KrigError::Data(format!(
                    "X has {} rows but Y has {}",
                    x_mat.rows(),
                    y_mat.rows()
                )));
            }
            Ok((x_mat, y_mat, SamplingKind::User))
        }
        EdSource::Generated {
            input,
            n,
            sampling,
            true_model,
        } => {
            if *n == 0 {
                return Err(KrigError::Config("ExpDesign.N must be >= 1".into()));
            }
            let mut design_stream = stream.child(STREAM_DESIGN);
            let x = match sampling {
                SamplingKind::Lhs => sample_lhs(input, *n, &mut design_stream),
                SamplingKind::Mc => sample_mc(input, *n, &mut design_stream),
                SamplingKind::User => {
                    return Err(KrigError::Config(
                        "user sampling cannot be combined with a generated design".into(),
                    ))
                }
            };
            let y = demos::true_model(true_model, &x)?;
            Ok((x, Matrix::column(&y), *sampling))
        }
    }
}

fn resolve_trend(
    choice: &TrendChoice,
    parent_override: Option<Arc<FittedKriging>>,
) -> Result<TrendSpec> {
    Ok(match choice {
        TrendChoice::Simple { constant } => TrendSpec::Simple {
            constant: *constant,
        },
        TrendChoice::Ordinary => TrendSpec::Ordinary,
        TrendChoice::Polynomial { degree } => TrendSpec::Polynomial { degree: *degree },
        TrendChoice::CustomBasis { name } => TrendSpec::CustomBasis { name: name.clone() },
        TrendChoice::CustomF { name } => TrendSpec::CustomF { name: name.clone() },
        TrendChoice::ModelMean { parent_path } => {
            let parent: Arc<FittedKriging> = match (parent_override, parent_path) {
                (Some(parent), _) => parent,
                (None, Some(path)) => {
                    let model = model_io::load_model(path)?;
                    if model.n_outputs() != 1 {
                        return Err(KrigError::Config(
                            "model-mean trend requires a single-output parent model".into(),
                        ));
                    }
                    Arc::new(model.outputs.into_iter().next().expect("one output"))
                }
                (None, None) => {
                    return Err(KrigError::Config(
                        "model-mean trend requires Trend.Parent (a model file)".into(),
                    ))
                }
            };
            TrendSpec::ModelMean { parent }
        }
    })
}

fn check_duplicate_rows(x: &Matrix) -> Result<()> {
    for i in 0..x.rows() {
        for j in i + 1..x.rows() {
            if x.row(i) == x.row(j) {
                return Err(KrigError::Data(format!(
                    "design rows {} and {} are identical; with nugget 0 the correlation \
                     matrix is singular (set Corr.Nugget > 0 or deduplicate the design)",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Default search box for length scales: per (scaled) input column with
/// range `w`, use `[1e-3 w, 10 w]`. Custom kernels must provide explicit
/// bounds since their parameters need not be length scales.
fn resolve_bounds(
    config: &ModelConfig,
    kernel: &KernelSpec,
    x_internal: &Matrix,
    theta_len: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some((lower, upper)) = &config.optim.bounds {
        if lower.len() != theta_len {
            return Err(KrigError::Config(format!(
                "Optim.Bounds has length {}, but the correlation function declares \
                 {theta_len} hyperparameters; the bounds must have the same length",
                lower.len()
            )));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
            return Err(KrigError::Config("lower bound exceeds upper bound".into()));
        }
        if !kernel.is_custom_matrix() && lower.iter().any(|l| *l <= 0.0) {
            return Err(KrigError::Config(
                "length-scale bounds must be strictly positive".into(),
            ));
        }
        return Ok((lower.clone(), upper.clone()));
    }
    if kernel.is_custom_matrix() {
        return Err(KrigError::Config(
            "custom correlation functions require explicit Optim.Bounds matching their \
             hyperparameter count"
                .into(),
        ));
    }
    let ranges: Vec<f64> = (0..x_internal.cols())
        .map(|j| {
            let col = x_internal.col_vec(j);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in col {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (hi - lo).max(f64::MIN_POSITIVE)
        })
        .collect();
    if theta_len == 1 {
        let w = ranges.iter().fold(0.0_f64, |m, v| m.max(*v));
        Ok((vec![1e-3 * w], vec![10.0 * w]))
    } else {
        Ok((
            ranges.iter().map(|w| 1e-3 * w).collect(),
            ranges.iter().map(|w| 10.0 * w).collect(),
        ))
    }
}

/// Predict-and-also-return-variance convenience used by the CLI and demos.
pub fn eval_model(
    model: &KrigingModel,
    xq: &Matrix,
    options: PredictOptions,
) -> Result<Vec<Prediction>> {
    model.eval(xq, options)
}
