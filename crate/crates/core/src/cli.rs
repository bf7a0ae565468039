//! Command-line front end: fit/predict/sample/demo/report over CSV data and
//! TOML configs.
//!
//! Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.
//! Every error path prints a single machine-parsable line to stderr
//! (`error: <category>: <message>`), and all output files are written via
//! temp-then-rename so failed runs leave nothing partial behind.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{
    ConfigFile, EdSource, EstimationChoice, ModelConfig, OptimMethod, SamplingKind,
};
use crate::csvio::{self, format_value, write_atomic};
use crate::demos;
use crate::doe::{sample_lhs, sample_mc};
use crate::engine::PredictOptions;
use crate::error::{KrigError, Result};
use crate::kernel::fault::FaultKernelParams;
use crate::linalg::Matrix;
use crate::model_io;
use crate::optim::GaOptions;
use crate::random::RandomStream;
use crate::session::{self, KrigingModel};

#[derive(Parser, Debug)]
#[command(
    name = "krig",
    version,
    about = "Universal-Kriging surrogate modelling from CSV data and TOML configs"
)]
struct Cli {
    /// Override the config seed for this run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for population evaluation (fallback: KRIG_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress informational output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model from a config (and optional X/Y CSV overrides).
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Design matrix CSV; overrides ExpDesign.X.
        #[arg(long)]
        x: Option<PathBuf>,
        /// Response CSV; overrides ExpDesign.Y.
        #[arg(long)]
        y: Option<PathBuf>,
        /// Output model artifact path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict at query points with a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Query points CSV.
        #[arg(long)]
        xq: PathBuf,
        /// Include a variance column.
        #[arg(long)]
        variance: bool,
        /// Write the full covariance matrix to this CSV.
        #[arg(long)]
        covariance: Option<PathBuf>,
        /// Confidence level alpha: adds ci_lower/ci_upper columns.
        #[arg(long)]
        ci: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample an experimental design from the config's input model.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        /// "LHS" or "MC".
        #[arg(long, default_value = "LHS")]
        method: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named end-to-end scenario: branin, hierarchical or fault.
    Demo {
        name: String,
        #[arg(long, default_value = "krig-demo")]
        out_dir: PathBuf,
    },
    /// Print the report stored in a model artifact.
    Report {
        #[arg(long)]
        model: PathBuf,
    },
}

/// Record written alongside every output set; replaying the recorded command
/// with the same engine version reproduces the outputs bit-identically.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub engine_version: String,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub unix_timestamp: u64,
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            engine_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            unix_timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| KrigError::Data(format!("cannot serialize manifest: {e}")))?;
        write_atomic(path, &text)
    }
}

fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Entry point used by the `krig` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.category());
            e.exit_code()
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("KRIG_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // a later duplicate initialization is harmless; first call wins
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { config, x, y, out } => cmd_fit(&config, x, y, &out, cli.seed, cli.quiet),
        Command::Predict {
            model,
            xq,
            variance,
            covariance,
            ci,
            out,
        } => cmd_predict(&model, &xq, variance, covariance, ci, &out, cli.quiet),
        Command::Sample {
            config,
            n,
            method,
            out,
        } => cmd_sample(&config, n, &method, &out, cli.seed),
        Command::Demo { name, out_dir } => cmd_demo(&name, &out_dir, cli.seed, cli.quiet),
        Command::Report { model } => cmd_report(&model),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<(ConfigFile, ModelConfig)> {
    let file = ConfigFile::from_path(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut config = ModelConfig::from_file(&file, base)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok((file, config))
}

fn cmd_fit(
    config_path: &Path,
    x: Option<PathBuf>,
    y: Option<PathBuf>,
    out: &Path,
    seed: Option<u64>,
    quiet: bool,
) -> Result<()> {
    let (_, mut config) = load_config(config_path, seed)?;
    match (x, y) {
        (Some(x), Some(y)) => config.ed = EdSource::Files { x, y },
        (None, None) => {}
        _ => {
            return Err(KrigError::Config(
                "--x and --y must be given together".into(),
            ))
        }
    }
    let model = session::create_model(&config)?;
    model_io::save_model(&model, out)?;
    let report = model.report();
    let report_path = out.with_extension("report.txt");
    write_atomic(&report_path, &report)?;

    let mut manifest = RunManifest::new("fit", Some(config.seed));
    manifest.config = Some(config_path.to_path_buf());
    if let EdSource::Files { x, y } = &config.ed {
        manifest.inputs = vec![x.clone(), y.clone()];
    }
    manifest.outputs = vec![out.to_path_buf(), report_path];
    manifest.write(&manifest_path_for(out))?;

    if !quiet {
        print!("{report}");
    }
    Ok(())
}

fn cmd_predict(
    model_path: &Path,
    xq_path: &Path,
    variance: bool,
    covariance: Option<PathBuf>,
    ci: Option<f64>,
    out: &Path,
    quiet: bool,
) -> Result<()> {
    let model = model_io::load_model(model_path)?;
    let xq = csvio::read_matrix(xq_path)?;
    if xq.cols() != model.input_dim() {
        return Err(KrigError::Data(format!(
            "query points are {}-dimensional, the model expects {}",
            xq.cols(),
            model.input_dim()
        )));
    }
    if covariance.is_some() && model.n_outputs() != 1 {
        return Err(KrigError::Config(
            "--covariance supports single-output models only".into(),
        ));
    }
    let options = PredictOptions {
        variance: variance || ci.is_some(),
        covariance: covariance.is_some(),
        ci_alpha: ci,
    };
    let predictions = model.eval(&xq, options)?;

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let single = predictions.len() == 1;
    for (k, pred) in predictions.iter().enumerate() {
        let tag = |base: &str| {
            if single {
                base.to_string()
            } else {
                format!("{base}_{}", k + 1)
            }
        };
        columns.push((tag("mean"), pred.mean.clone()));
        if variance {
            if let Some(var) = &pred.variance {
                columns.push((tag("variance"), var.clone()));
            }
        }
        if let (Some(lo), Some(hi)) = (&pred.lower, &pred.upper) {
            columns.push((tag("ci_lower"), lo.clone()));
            columns.push((tag("ci_upper"), hi.clone()));
        }
    }
    let column_refs: Vec<(&str, &[f64])> = columns
        .iter()
        .map(|(name, data)| (name.as_str(), data.as_slice()))
        .collect();
    csvio::write_columns(out, &column_refs)?;

    let mut outputs = vec![out.to_path_buf()];
    if let Some(cov_path) = &covariance {
        let cov = predictions[0]
            .covariance
            .as_ref()
            .expect("covariance requested");
        csvio::write_matrix(cov_path, cov, None)?;
        outputs.push(cov_path.clone());
    }

    let mut manifest = RunManifest::new("predict", None);
    manifest.inputs = vec![model_path.to_path_buf(), xq_path.to_path_buf()];
    manifest.outputs = outputs;
    manifest.write(&manifest_path_for(out))?;

    if !quiet {
        println!("wrote {} predictions to {}", xq.rows(), out.display());
    }
    Ok(())
}

fn cmd_sample(
    config_path: &Path,
    n: usize,
    method: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    if n == 0 {
        return Err(KrigError::Config("sample size must be >= 1".into()));
    }
    let file = ConfigFile::from_path(config_path)?;
    let input = ModelConfig::input_model(&file)?;
    let seed = seed.or(file.seed).unwrap_or(42);
    let kind = SamplingKind::parse(method)?;
    let mut stream = RandomStream::new(seed).child(1);
    let x = match kind {
        SamplingKind::Lhs => sample_lhs(&input, n, &mut stream),
        SamplingKind::Mc => sample_mc(&input, n, &mut stream),
        SamplingKind::User => {
            return Err(KrigError::Config("sample requires method LHS or MC".into()))
        }
    };
    csvio::write_matrix(out, &x, None)?;

    let mut manifest = RunManifest::new("sample", Some(seed));
    manifest.config = Some(config_path.to_path_buf());
    manifest.outputs = vec![out.to_path_buf()];
    manifest.write(&manifest_path_for(out))?;
    Ok(())
}

fn cmd_report(model_path: &Path) -> Result<()> {
    print!("{}", model_io::stored_report(model_path)?);
    Ok(())
}

// ---- demos ----

fn cmd_demo(name: &str, out_dir: &Path, seed: Option<u64>, quiet: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let seed = seed.unwrap_or(42);
    let outputs = match name.to_ascii_lowercase().as_str() {
        "branin" => demo_branin(out_dir, seed)?,
        "hierarchical" => demo_hierarchical(out_dir, seed)?,
        "fault" => demo_fault(out_dir, seed)?,
        other => {
            return Err(KrigError::Config(format!(
                "unknown demo '{other}' (valid names: branin, hierarchical, fault)"
            )))
        }
    };
    let mut manifest = RunManifest::new(&format!("demo {name}"), Some(seed));
    manifest.outputs = outputs;
    manifest.write(&out_dir.join("manifest.json"))?;
    if !quiet {
        println!("demo '{name}' outputs written to {}", out_dir.display());
    }
    Ok(())
}

fn write_report_and_model(
    out_dir: &Path,
    stem: &str,
    model: &KrigingModel,
    outputs: &mut Vec<PathBuf>,
) -> Result<()> {
    let model_path = out_dir.join(format!("{stem}.json"));
    model_io::save_model(model, &model_path)?;
    let report_path = out_dir.join(format!("{stem}.report.txt"));
    write_atomic(&report_path, &model.report())?;
    outputs.push(model_path);
    outputs.push(report_path);
    Ok(())
}

/// 15-point LHS fit of the Branin-Hoo function with all defaults, plus a
/// plot-ready grid of truth/mean/std and a validation table.
fn demo_branin(out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let input = crate::doe::InputModel::uniform(&[(-5.0, 10.0), (0.0, 15.0)])?;
    let config = ModelConfig {
        name: "Branin demo".into(),
        seed,
        ed: EdSource::Generated {
            input: input.clone(),
            n: 15,
            sampling: SamplingKind::Lhs,
            true_model: "branin".into(),
        },
        ..Default::default()
    };
    let model = session::create_model(&config)?;
    let mut outputs = Vec::new();
    write_report_and_model(out_dir, "model", &model, &mut outputs)?;

    // plot grid: truth, predictor mean and standard deviation
    let (nx, ny) = (40, 40);
    let mut rows = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let x1 = -5.0 + 15.0 * i as f64 / (nx - 1) as f64;
            let x2 = 15.0 * j as f64 / (ny - 1) as f64;
            rows.push(vec![x1, x2]);
        }
    }
    let grid = Matrix::from_rows(&rows)?;
    let truth = demos::branin(&grid)?;
    let pred = &model.eval(&grid, PredictOptions::with_variance())?[0];
    let std: Vec<f64> = pred
        .variance
        .as_ref()
        .unwrap()
        .iter()
        .map(|v| v.sqrt())
        .collect();
    let grid_path = out_dir.join("grid.csv");
    csvio::write_columns(
        &grid_path,
        &[
            ("x1", &grid.col_vec(0)),
            ("x2", &grid.col_vec(1)),
            ("truth", &truth),
            ("mean", &pred.mean),
            ("std", &std),
        ],
    )?;
    outputs.push(grid_path);

    // validation on a 400-point Monte Carlo sample
    let mut val_stream = RandomStream::new(seed).child(101);
    let xval = sample_mc(&input, 400, &mut val_stream);
    let yval = demos::branin(&xval)?;
    let report = session::validate(&model, &xval, &yval)?;
    let val_path = out_dir.join("validation.csv");
    write_atomic(
        &val_path,
        &format!(
            "model,n_val,nrmse\nbranin-15,{},{}\n",
            report.n_val,
            format_value(report.nrmse)
        ),
    )?;
    outputs.push(val_path);
    Ok(outputs)
}

/// Synthetic multi-fidelity scenario: 12 low-fidelity + 5 high-fidelity
/// points; compares the hierarchical surrogate against the high-fidelity-only
/// fit on a validation grid.
fn demo_hierarchical(out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let input = crate::doe::InputModel::uniform(&[(0.0, 1.0)])?;
    let ga = GaOptions {
        pop_size: 20,
        max_generations: 25,
        ..Default::default()
    };
    let lf_config = ModelConfig {
        name: "Low fidelity".into(),
        seed,
        ed: EdSource::Generated {
            input: input.clone(),
            n: 12,
            sampling: SamplingKind::Lhs,
            true_model: "forrester-lf".into(),
        },
        family: crate::kernel::CorrelationFamily::Matern32,
        estimation: EstimationChoice::MaximumLikelihood,
        optim: crate::config::OptimConfig {
            ga: ga.clone(),
            ..Default::default()
        },
        ..Default::default()
    };
    let hf_config = ModelConfig {
        name: "High fidelity".into(),
        seed: seed.wrapping_add(1),
        ed: EdSource::Generated {
            input: input.clone(),
            n: 5,
            sampling: SamplingKind::Lhs,
            true_model: "forrester-hf".into(),
        },
        family: crate::kernel::CorrelationFamily::Matern32,
        estimation: EstimationChoice::MaximumLikelihood,
        optim: crate::config::OptimConfig {
            ga,
            ..Default::default()
        },
        ..Default::default()
    };

    let hier = session::fit_hierarchical(&lf_config, &hf_config)?;
    let mut hf_only_config = hf_config.clone();
    hf_only_config.name = "High fidelity only".into();
    let hf_only = session::create_model(&hf_only_config)?;

    let mut outputs = Vec::new();
    write_report_and_model(out_dir, "hierarchical_model", &hier, &mut outputs)?;
    write_report_and_model(out_dir, "hf_only_model", &hf_only, &mut outputs)?;

    // curves for plotting
    let grid = Matrix::from_fn(201, 1, |i, _| i as f64 / 200.0);
    let xs = grid.col_vec(0);
    let hf_truth: Vec<f64> = xs.iter().map(|&x| demos::forrester_hf(x)).collect();
    let lf_truth: Vec<f64> = xs.iter().map(|&x| demos::forrester_lf(x)).collect();
    let lf_model = hier.parent.as_ref().expect("hierarchical fit has a parent");
    let lf_pred = &lf_model.eval(&grid, PredictOptions::mean_only())?[0];
    let hf_pred = &hf_only.eval(&grid, PredictOptions::mean_only())?[0];
    let hier_pred = &hier.eval(&grid, PredictOptions::with_variance())?[0];
    let hier_std: Vec<f64> = hier_pred
        .variance
        .as_ref()
        .unwrap()
        .iter()
        .map(|v| v.sqrt())
        .collect();
    let curves_path = out_dir.join("curves.csv");
    csvio::write_columns(
        &curves_path,
        &[
            ("x", &xs),
            ("hf_truth", &hf_truth),
            ("lf_truth", &lf_truth),
            ("lf_mean", &lf_pred.mean),
            ("hf_only_mean", &hf_pred.mean),
            ("hierarchical_mean", &hier_pred.mean),
            ("hierarchical_std", &hier_std),
        ],
    )?;
    outputs.push(curves_path);

    // validation table on a 40-point grid
    let xval = Matrix::from_fn(40, 1, |i, _| (i as f64 + 0.5) / 40.0);
    let yval: Vec<f64> = xval
        .col_vec(0)
        .into_iter()
        .map(demos::forrester_hf)
        .collect();
    let hier_nrmse = session::validate(&hier, &xval, &yval)?.nrmse;
    let hf_nrmse = session::validate(&hf_only, &xval, &yval)?.nrmse;
    let val_path = out_dir.join("validation.csv");
    write_atomic(
        &val_path,
        &format!(
            "model,n_val,nrmse\nhierarchical,40,{}\nhf-only,40,{}\n",
            format_value(hier_nrmse),
            format_value(hf_nrmse)
        ),
    )?;
    outputs.push(val_path);
    Ok(outputs)
}

/// Fault scenario: sample the region-partitioned true field along three
/// boreholes, estimate the five kernel parameters by ML with the hybrid
/// optimizer, and emit a true-vs-estimated table plus plot grids.
fn demo_fault(out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let params = FaultKernelParams::default();
    let boreholes = demos::borehole_points(&demos::FAULT_BOREHOLES, 15);

    // plot grid over the domain (avoiding the fault point itself)
    let (nx, ny) = (31, 21);
    let mut rows = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let x1 = 1.2 * i as f64 / (nx - 1) as f64;
            let x2 = 0.01 + 0.96 * j as f64 / (ny - 1) as f64;
            rows.push(vec![x1, x2]);
        }
    }
    let grid = Matrix::from_rows(&rows)?;

    // one joint realisation over grid + boreholes so the plotted truth is
    // consistent with the training data
    let mut union_rows: Vec<Vec<f64>> = Vec::with_capacity(grid.rows() + boreholes.rows());
    for i in 0..grid.rows() {
        union_rows.push(grid.row(i).to_vec());
    }
    for i in 0..boreholes.rows() {
        union_rows.push(boreholes.row(i).to_vec());
    }
    let union = Matrix::from_rows(&union_rows)?;
    let mut field_stream = RandomStream::new(seed).child(7);
    let field = demos::demo_fault_field(&union, &params, &mut field_stream)?;
    let truth_grid = field[..grid.rows()].to_vec();
    let y_boreholes = field[grid.rows()..].to_vec();

    // fit with the custom correlation function, following the published
    // optimisation setup (HGA, nPop 60, 50 generations, explicit bounds)
    let dir = tempfile_dir(out_dir)?;
    let x_path = dir.join("boreholes_x.csv");
    let y_path = dir.join("boreholes_y.csv");
    csvio::write_matrix(&x_path, &boreholes, Some(&["x1", "x2"]))?;
    csvio::write_columns(&y_path, &[("y", &y_boreholes)])?;
    let pi = std::f64::consts::PI;
    let config = ModelConfig {
        name: "Fault demo".into(),
        seed,
        ed: EdSource::Files {
            x: x_path.clone(),
            y: y_path.clone(),
        },
        custom_kernel: Some("fault".into()),
        estimation: EstimationChoice::MaximumLikelihood,
        scaling: Some(false),
        optim: crate::config::OptimConfig {
            method: OptimMethod::Hga,
            bounds: Some((
                vec![0.3, 0.1, 0.3, 0.1, pi / 6.0],
                vec![0.9, 0.5, 0.9, 0.5, 5.0 * pi / 6.0],
            )),
            ga: GaOptions {
                pop_size: 60,
                max_generations: 50,
                ..Default::default()
            },
            ..Default::default()
        },
        ..Default::default()
    };
    let model = session::create_model(&config)?;

    let mut outputs = vec![x_path, y_path];
    write_report_and_model(out_dir, "model", &model, &mut outputs)?;

    // true vs estimated parameter table
    let estimated = &model.outputs[0].theta().values;
    let true_values = params.theta();
    let names = ["theta11", "theta12", "theta21", "theta22", "alpha"];
    let mut table = String::from("parameter,true_value,estimated,relative_error_pct\n");
    for (k, name) in names.iter().enumerate() {
        let rel = 100.0 * (estimated[k] - true_values[k]).abs() / true_values[k].abs();
        table.push_str(&format!(
            "{name},{},{},{}\n",
            format_value(true_values[k]),
            format_value(estimated[k]),
            format_value(rel)
        ));
    }
    let table_path = out_dir.join("theta_table.csv");
    write_atomic(&table_path, &table)?;
    outputs.push(table_path);

    // plot grid with truth, mean and std
    let pred = &model.eval(&grid, PredictOptions::with_variance())?[0];
    let std: Vec<f64> = pred
        .variance
        .as_ref()
        .unwrap()
        .iter()
        .map(|v| v.sqrt())
        .collect();
    let grid_path = out_dir.join("grid.csv");
    csvio::write_columns(
        &grid_path,
        &[
            ("x1", &grid.col_vec(0)),
            ("x2", &grid.col_vec(1)),
            ("truth", &truth_grid),
            ("mean", &pred.mean),
            ("std", &std),
        ],
    )?;
    outputs.push(grid_path);
    Ok(outputs)
}

fn tempfile_dir(out_dir: &Path) -> Result<PathBuf> {
    let dir = out_dir.join("data");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
