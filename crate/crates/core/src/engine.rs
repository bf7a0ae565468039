//! Core Gaussian-process machinery.
//!
//! Given hyperparameters `theta` this module computes the closed-form profile
//! estimates `beta(theta)` and `sigma2(theta)`, the profiled negative
//! log-likelihood, the K-fold cross-validation objective and its fast
//! leave-one-out shortcut. Given a fitted state it computes predictor
//! mean/variance/covariance, confidence bounds and prior/posterior
//! trajectories.
//!
//! Objective functions follow a penalty-instead-of-exception contract: any
//! numerical failure (a correlation matrix the jitter ladder cannot rescue,
//! or a non-positive profile variance) yields a large finite value so
//! optimizers always receive something comparable. The jitter ladder applies
//! to every factorization of `R`; exactly duplicated observations still hit
//! the penalty because the profiled process variance collapses to zero.

use serde::{Deserialize, Serialize};

use crate::doe::{apply_scaling, ScalingRecord};
use crate::error::{KrigError, Result};
use crate::kernel::{
    build_corr_matrix, build_cross_corr, self_correlations, KernelSpec, ThetaVector,
};
use crate::linalg::{
    cholesky_with_jitter, CholeskyFactor, Matrix, DEFAULT_BASE_JITTER, DEFAULT_MAX_JITTER,
};
use crate::random::RandomStream;
use crate::stats::std_normal_quantile;
use crate::trend::{information_matrix, MeanPredictor, TrendSpec};

/// Objectives return this (plus a bound-violation term added by the
/// optimization wrapper) instead of raising.
pub const PENALTY_BASE: f64 = 1e12;

const LN_2PI: f64 = 1.8378770664093453;

/// Training data in internal (possibly scaled) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalDesign {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl ExperimentalDesign {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(KrigError::DimensionMismatch(format!(
                "design has {} points but {} responses",
                x.rows(),
                y.len()
            )));
        }
        if x.rows() == 0 {
            return Err(KrigError::Data("experimental design is empty".into()));
        }
        Ok(ExperimentalDesign { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    fn subset(&self, idx: &[usize]) -> ExperimentalDesign {
        ExperimentalDesign {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Diagonal-jitter escalation policy for Cholesky factorizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub base: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            base: DEFAULT_BASE_JITTER,
            max: DEFAULT_MAX_JITTER,
        }
    }
}

impl JitterPolicy {
    /// No rescue at all: factorization fails on the first non-positive pivot.
    pub fn strict() -> Self {
        JitterPolicy {
            base: 0.0,
            max: 0.0,
        }
    }

    pub fn factorize(&self, a: &Matrix) -> Result<CholeskyFactor> {
        cholesky_with_jitter(a, self.base, self.max)
    }
}

/// How hyperparameters were (or are being) estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    MaximumLikelihood,
    /// K-fold cross-validation; `k == n` is leave-one-out.
    CrossValidation {
        k: usize,
    },
}

impl EstimationMethod {
    pub fn label(&self) -> &'static str {
        match self {
            EstimationMethod::MaximumLikelihood => "Maximum-Likelihood",
            EstimationMethod::CrossValidation { .. } => "Cross-Validation",
        }
    }
}

/// Generalized least-squares estimate `beta = (F^T R^-1 F)^-1 F^T R^-1 y`,
/// computed through triangular solves and a small P x P factorization.
pub fn profile_beta(chol_r: &CholeskyFactor, f: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let p = f.cols();
    if p == 0 {
        return Err(KrigError::RankDeficient(
            "profile_beta requires at least one basis function".into(),
        ));
    }
    let w = chol_r.solve_lower(f)?;
    let v = chol_r.solve_lower_vec(y)?;
    let m = w.gram();
    let rhs = w.transpose_matvec(&v)?;
    let chol_m = cholesky_with_jitter(&m, 0.0, 0.0)
        .map_err(|_| KrigError::RankDeficient("F^T R^-1 F is singular".into()))?;
    chol_m.solve_spd_vec(&rhs)
}

/// Profile process variance `sigma2 = (y - F beta)^T R^-1 (y - F beta) / N`.
pub fn profile_sigma2_ml(
    chol_r: &CholeskyFactor,
    f: &Matrix,
    y: &[f64],
    beta: &[f64],
) -> Result<f64> {
    let d = trend_residual_gls(f, y, beta)?;
    let t = chol_r.solve_lower_vec(&d)?;
    Ok(t.iter().map(|v| v * v).sum::<f64>() / y.len() as f64)
}

fn trend_residual_gls(f: &Matrix, y: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    if f.cols() != beta.len() {
        return Err(KrigError::DimensionMismatch(format!(
            "F has {} columns, beta has {}",
            f.cols(),
            beta.len()
        )));
    }
    let fb = f.matvec(beta)?;
    Ok(y.iter().zip(&fb).map(|(yi, m)| yi - m).collect())
}

/// Residual `y - trend` with the simple-Kriging constant folded in.
fn trend_residual(trend: &TrendSpec, f: &Matrix, y: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    if let TrendSpec::Simple { constant } = trend {
        return Ok(y.iter().map(|yi| yi - constant).collect());
    }
    trend_residual_gls(f, y, beta)
}

/// Profile estimates for any trend, handling the simple-Kriging P = 0 case.
fn profile_estimates(
    chol_r: &CholeskyFactor,
    f: &Matrix,
    y: &[f64],
    trend: &TrendSpec,
) -> Result<(Vec<f64>, f64)> {
    if f.cols() == 0 {
        let d = trend_residual(trend, f, y, &[])?;
        let t = chol_r.solve_lower_vec(&d)?;
        let sigma2 = t.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        return Ok((Vec::new(), sigma2));
    }
    let beta = profile_beta(chol_r, f, y)?;
    let sigma2 = profile_sigma2_ml(chol_r, f, y, &beta)?;
    Ok((beta, sigma2))
}

fn corr_and_info(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    jitter: JitterPolicy,
) -> Result<(CholeskyFactor, Matrix)> {
    let r = build_corr_matrix(kernel, &ed.x, theta)?;
    let chol = jitter.factorize(&r)?;
    let f = information_matrix(trend, &ed.x)?;
    Ok((chol, f))
}

fn penalty(result: Result<f64>) -> f64 {
    match result {
        Ok(v) if v.is_finite() => v,
        _ => PENALTY_BASE,
    }
}

/// Profiled negative log-likelihood
/// `0.5 log det R + (N/2) log(2 pi sigma2(theta)) + N/2`,
/// with a penalty value on any numerical failure.
pub fn nll_profile(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
) -> f64 {
    penalty(nll_profile_inner(theta, ed, kernel, trend))
}

fn nll_profile_inner(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
) -> Result<f64> {
    let n = ed.len() as f64;
    let (chol, f) = corr_and_info(theta, ed, kernel, trend, JitterPolicy::default())?;
    let (_, sigma2) = profile_estimates(&chol, &f, &ed.y, trend)?;
    if !(sigma2 > 0.0) {
        return Err(KrigError::NumericalBreakdown(format!(
            "profile variance is not positive ({sigma2})"
        )));
    }
    Ok(0.5 * chol.log_det() + 0.5 * n * (LN_2PI + sigma2.ln()) + 0.5 * n)
}

/// Unprofiled negative log-likelihood at explicit `(beta, sigma2, theta)`.
/// Used by the profile-identity and optimality checks.
pub fn nll_unprofiled(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    beta: &[f64],
    sigma2: f64,
) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(KrigError::Domain("sigma2 must be positive".into()));
    }
    let n = ed.len() as f64;
    let (chol, f) = corr_and_info(theta, ed, kernel, trend, JitterPolicy::default())?;
    let d = trend_residual(trend, &f, &ed.y, beta)?;
    let t = chol.solve_lower_vec(&d)?;
    let quad = t.iter().map(|v| v * v).sum::<f64>();
    Ok(0.5 * chol.log_det() + 0.5 * n * (LN_2PI + sigma2.ln()) + 0.5 * quad / sigma2)
}

/// Split `0..n` into `k` random folds of size `floor(n/k)` or `ceil(n/k)`.
/// The leave-one-out case `k == n` yields singletons in index order.
pub fn cv_partition(n: usize, k: usize, stream: &mut RandomStream) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(KrigError::Domain(format!(
            "fold count must satisfy 2 <= K <= N, got K={k}, N={n}"
        )));
    }
    if k == n {
        return Ok((0..n).map(|i| vec![i]).collect());
    }
    let mut perm: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut perm);
    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut offset = 0;
    for fold_index in 0..k {
        let size = base + usize::from(fold_index < remainder);
        folds.push(perm[offset..offset + size].to_vec());
        offset += size;
    }
    Ok(folds)
}

/// Cross-validated prediction (mean and unit-process-variance predictor
/// variance) for one held-out fold, refitting `beta` on the remaining data at
/// the same `theta`.
struct FoldPrediction {
    indices: Vec<usize>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

fn cv_fold_prediction(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    fold: &[usize],
) -> Result<FoldPrediction> {
    let train_idx: Vec<usize> = (0..ed.len()).filter(|i| !fold.contains(i)).collect();
    if train_idx.is_empty() {
        return Err(KrigError::Domain("fold leaves no training data".into()));
    }
    let train = ed.subset(&train_idx);
    let holdout_x = ed.x.select_rows(fold);

    let (chol, f) = corr_and_info(theta, &train, kernel, trend, JitterPolicy::default())?;
    let (beta, _) = profile_estimates(&chol, &f, &train.y, trend)?;
    let d = trend_residual(trend, &f, &train.y, &beta)?;
    let alpha = chol.solve_spd_vec(&d)?;

    let r = build_cross_corr(kernel, &train.x, &holdout_x, theta)?;
    let f_ho = information_matrix(trend, &holdout_x)?;
    let lead = self_correlations(kernel, &holdout_x, theta)?;

    let s = chol.solve_lower(&r)?;
    let p = f.cols();
    let mut means = Vec::with_capacity(fold.len());
    let mut variances = Vec::with_capacity(fold.len());

    // u^T M^-1 u correction only exists when beta is estimated
    let w_corr = if p > 0 {
        let w = chol.solve_lower(&f)?;
        let m = w.gram();
        let chol_m = cholesky_with_jitter(&m, 0.0, 0.0)
            .map_err(|_| KrigError::RankDeficient("F^T R^-1 F is singular".into()))?;
        // u = F^T R^-1 r - f(x) = W^T S - f(x)
        let mut u = w.transpose().matmul(&s)?;
        for (q, _) in fold.iter().enumerate() {
            for j in 0..p {
                u[(j, q)] -= f_ho[(q, j)];
            }
        }
        Some(chol_m.solve_lower(&u)?)
    } else {
        None
    };

    for (q, _) in fold.iter().enumerate() {
        let trend_mean = if let TrendSpec::Simple { constant } = trend {
            *constant
        } else {
            f_ho.row(q).iter().zip(&beta).map(|(a, b)| a * b).sum()
        };
        let cross: f64 = (0..train.len()).map(|i| r[(i, q)] * alpha[i]).sum();
        means.push(trend_mean + cross);

        let s2: f64 = (0..train.len()).map(|i| s[(i, q)] * s[(i, q)]).sum();
        let u2: f64 = w_corr
            .as_ref()
            .map(|w| (0..p).map(|j| w[(j, q)] * w[(j, q)]).sum())
            .unwrap_or(0.0);
        variances.push(lead[q] - s2 + u2);
    }

    Ok(FoldPrediction {
        indices: fold.to_vec(),
        means,
        variances,
    })
}

/// K-fold cross-validation objective: the sum of squared errors of the
/// held-out predictions. Penalty contract on numerical failure.
pub fn cv_objective(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    folds: &[Vec<usize>],
) -> f64 {
    penalty(cv_objective_inner(theta, ed, kernel, trend, folds))
}

fn cv_objective_inner(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    folds: &[Vec<usize>],
) -> Result<f64> {
    if folds.len() == ed.len() && folds.iter().all(|f| f.len() == 1) {
        return loo_fast(theta, ed, kernel, trend).map(|r| r.objective);
    }
    let mut sum = 0.0;
    for fold in folds {
        let pred = cv_fold_prediction(theta, ed, kernel, trend, fold)?;
        for (k, &i) in pred.indices.iter().enumerate() {
            let e = ed.y[i] - pred.means[k];
            sum += e * e;
        }
    }
    Ok(sum)
}

/// Fast leave-one-out results from a single factorization.
#[derive(Debug, Clone)]
pub struct LooFast {
    /// Sum of squared leave-one-out errors (the K = N CV objective).
    pub objective: f64,
    /// Cross-validated mean at each training point.
    pub means: Vec<f64>,
    /// Cross-validated predictor variances with unit process variance.
    pub variances: Vec<f64>,
}

/// Leave-one-out means/variances without refitting: from a single
/// factorization of the full system, using the precision of the
/// trend-projected residuals `H = R^-1 - R^-1 F (F^T R^-1 F)^-1 F^T R^-1`:
/// the LOO residual at point i is `[H y]_i / H_ii` and the LOO predictor
/// variance (unit process variance) is `1 / H_ii`.
pub fn loo_fast(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
) -> Result<LooFast> {
    let n = ed.len();
    let (chol, f) = corr_and_info(theta, ed, kernel, trend, JitterPolicy::default())?;
    let p = f.cols();
    let r_inv = chol.inverse_spd()?;

    // residual vector the precision acts on: y for estimated trends
    // (H annihilates the column space of F), y - c for a known constant
    let d = if let TrendSpec::Simple { constant } = trend {
        ed.y.iter().map(|y| y - constant).collect::<Vec<f64>>()
    } else {
        ed.y.clone()
    };

    let mut hy = r_inv.matvec(&d)?;
    let mut h_diag: Vec<f64> = (0..n).map(|i| r_inv[(i, i)]).collect();

    if p > 0 {
        if n == p {
            return Err(KrigError::RankDeficient(
                "leave-one-out undefined when the trend interpolates the design (N = P)".into(),
            ));
        }
        let g = chol.solve_spd(&f)?; // R^-1 F
        let m = g.transpose().matmul(&f)?; // F^T R^-1 F (symmetric)
        let chol_m = cholesky_with_jitter(&m, 0.0, 0.0)
            .map_err(|_| KrigError::RankDeficient("F^T R^-1 F is singular".into()))?;
        let t = chol_m.solve_lower(&g.transpose())?; // L_M^-1 G^T, P x N
        let ty = t.matvec(&d)?;
        let correction = t.transpose_matvec(&ty)?; // G M^-1 G^T d
        for i in 0..n {
            hy[i] -= correction[i];
            let col_norm2: f64 = (0..p).map(|j| t[(j, i)] * t[(j, i)]).sum();
            h_diag[i] -= col_norm2;
        }
    }

    let mut objective = 0.0;
    let mut means = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    for i in 0..n {
        if !(h_diag[i] > 0.0) {
            return Err(KrigError::NumericalBreakdown(format!(
                "leave-one-out precision diagonal not positive at point {i}"
            )));
        }
        let residual = hy[i] / h_diag[i];
        objective += residual * residual;
        means.push(ed.y[i] - residual);
        variances.push(1.0 / h_diag[i]);
    }
    Ok(LooFast {
        objective,
        means,
        variances,
    })
}

/// Penalty-contract wrapper around [`loo_fast`] for use as an objective.
pub fn loo_objective(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
) -> f64 {
    penalty(loo_fast(theta, ed, kernel, trend).map(|r| r.objective))
}

/// Cross-validation estimate of the process variance: the mean (over folds)
/// of the per-fold mean standardized squared residual, where the denominators
/// are predictor variances computed with unit process variance.
pub fn cv_sigma2(
    theta: &ThetaVector,
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    folds: &[Vec<usize>],
) -> Result<f64> {
    let k = folds.len();
    let loo_case = k == ed.len() && folds.iter().all(|f| f.len() == 1);
    let mut fold_means = Vec::with_capacity(k);
    if loo_case {
        let loo = loo_fast(theta, ed, kernel, trend)?;
        for fold in folds {
            let i = fold[0];
            let var = loo.variances[i];
            if var <= 0.0 {
                return Err(KrigError::DivisionByZero(format!(
                    "cross-validated variance at point {i} is zero"
                )));
            }
            let e = ed.y[i] - loo.means[i];
            fold_means.push(e * e / var);
        }
    } else {
        for fold in folds {
            let pred = cv_fold_prediction(theta, ed, kernel, trend, fold)?;
            let mut acc = 0.0;
            for (j, &i) in pred.indices.iter().enumerate() {
                let var = pred.variances[j];
                if var <= 0.0 {
                    return Err(KrigError::DivisionByZero(format!(
                        "cross-validated variance at point {i} is zero"
                    )));
                }
                let e = ed.y[i] - pred.means[j];
                acc += e * e / var;
            }
            fold_means.push(acc / fold.len() as f64);
        }
    }
    Ok(fold_means.iter().sum::<f64>() / k as f64)
}

/// What [`FittedKriging::predict`] should compute.
#[derive(Debug, Clone, Copy, Default)]
pub struct PredictOptions {
    pub variance: bool,
    pub covariance: bool,
    /// Confidence level `alpha`: bounds cover the prediction with
    /// probability `1 - alpha`.
    pub ci_alpha: Option<f64>,
}

impl PredictOptions {
    pub fn mean_only() -> Self {
        PredictOptions::default()
    }

    pub fn with_variance() -> Self {
        PredictOptions {
            variance: true,
            ..Default::default()
        }
    }

    pub fn with_covariance() -> Self {
        PredictOptions {
            variance: true,
            covariance: true,
            ..Default::default()
        }
    }
}

/// Predictor output at a set of query points.
#[derive(Debug, Clone, Default)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: Option<Vec<f64>>,
    pub covariance: Option<Matrix>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

/// Everything needed to assemble a fitted state.
pub struct AssembleArgs {
    pub ed: ExperimentalDesign,
    pub kernel: KernelSpec,
    pub trend: TrendSpec,
    pub theta: ThetaVector,
    pub scaling: ScalingRecord,
    pub estimation: EstimationMethod,
    /// Final objective value reached by the optimizer (ML: profiled NLL;
    /// CV: mean squared leave-out error).
    pub objective_value: f64,
    /// Process variance when estimated by a non-ML route (CV); `None` uses
    /// the ML profile formula.
    pub sigma2: Option<f64>,
    pub jitter: JitterPolicy,
}

/// Immutable fitted Kriging state with cached solves.
#[derive(Debug, Clone)]
pub struct FittedKriging {
    kernel: KernelSpec,
    trend: TrendSpec,
    theta: ThetaVector,
    beta: Vec<f64>,
    sigma2: f64,
    x_train: Matrix,
    y_train: Vec<f64>,
    scaling: ScalingRecord,
    estimation: EstimationMethod,
    objective_value: f64,
    chol_r: CholeskyFactor,
    /// `R^-1 (y - trend)`.
    cached_alpha: Vec<f64>,
    /// `R^-1 F`.
    cached_rinv_f: Matrix,
    /// Factor of `F^T R^-1 F` (absent for simple Kriging).
    chol_m: Option<CholeskyFactor>,
}

impl FittedKriging {
    pub fn assemble(args: AssembleArgs) -> Result<FittedKriging> {
        let AssembleArgs {
            ed,
            kernel,
            trend,
            theta,
            scaling,
            estimation,
            objective_value,
            sigma2,
            jitter,
        } = args;
        let r = build_corr_matrix(&kernel, &ed.x, &theta)?;
        let chol_r = jitter.factorize(&r)?;
        let f = information_matrix(&trend, &ed.x)?;
        let (beta, sigma2_ml) = profile_estimates(&chol_r, &f, &ed.y, &trend)?;
        let sigma2 = sigma2.unwrap_or(sigma2_ml);
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(KrigError::NumericalBreakdown(format!(
                "process variance estimate is invalid ({sigma2})"
            )));
        }
        let d = trend_residual(&trend, &f, &ed.y, &beta)?;
        let cached_alpha = chol_r.solve_spd_vec(&d)?;
        let cached_rinv_f = chol_r.solve_spd(&f)?;
        let chol_m = if f.cols() > 0 {
            let w = chol_r.solve_lower(&f)?;
            Some(
                cholesky_with_jitter(&w.gram(), 0.0, 0.0)
                    .map_err(|_| KrigError::RankDeficient("F^T R^-1 F is singular".into()))?,
            )
        } else {
            None
        };
        Ok(FittedKriging {
            kernel,
            trend,
            theta,
            beta,
            sigma2,
            x_train: ed.x,
            y_train: ed.y,
            scaling,
            estimation,
            objective_value,
            chol_r,
            cached_alpha,
            cached_rinv_f,
            chol_m,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn trend(&self) -> &TrendSpec {
        &self.trend
    }

    pub fn theta(&self) -> &ThetaVector {
        &self.theta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn x_train(&self) -> &Matrix {
        &self.x_train
    }

    pub fn y_train(&self) -> &[f64] {
        &self.y_train
    }

    pub fn scaling(&self) -> &ScalingRecord {
        &self.scaling
    }

    pub fn estimation(&self) -> EstimationMethod {
        self.estimation
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn jitter_applied(&self) -> f64 {
        self.chol_r.jitter_applied()
    }

    /// Cached `R^-1 (y - trend)`.
    pub fn beta_residual_alpha(&self) -> &[f64] {
        &self.cached_alpha
    }

    pub fn n_train(&self) -> usize {
        self.y_train.len()
    }

    pub fn input_dim(&self) -> usize {
        self.x_train.cols()
    }

    /// Training inputs mapped back to user coordinates.
    pub fn x_train_user(&self) -> Matrix {
        if !self.scaling.enabled {
            return self.x_train.clone();
        }
        let mut x = self.x_train.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                x[(i, j)] = x[(i, j)] * self.scaling.stds[j] + self.scaling.means[j];
            }
        }
        x
    }

    /// Predict at query points given in user coordinates.
    pub fn predict(&self, xq_user: &Matrix, options: PredictOptions) -> Result<Prediction> {
        let nq = xq_user.rows();
        if nq == 0 {
            return Ok(Prediction {
                mean: Vec::new(),
                variance: options.variance.then(Vec::new),
                covariance: options.covariance.then(|| Matrix::zeros(0, 0)),
                lower: options.ci_alpha.map(|_| Vec::new()),
                upper: options.ci_alpha.map(|_| Vec::new()),
            });
        }
        if xq_user.cols() != self.input_dim() {
            return Err(KrigError::DimensionMismatch(format!(
                "model expects {}-dimensional inputs, got {}",
                self.input_dim(),
                xq_user.cols()
            )));
        }
        if let Some(alpha) = options.ci_alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(KrigError::Domain(format!(
                    "confidence level alpha must lie in (0, 1], got {alpha}"
                )));
            }
        }

        let xq = apply_scaling(&self.scaling, xq_user)?;
        let r = build_cross_corr(&self.kernel, &self.x_train, &xq, &self.theta)?;
        let f_q = information_matrix(&self.trend, &xq)?;

        let mut mean = Vec::with_capacity(nq);
        for q in 0..nq {
            let trend_mean = if let TrendSpec::Simple { constant } = &self.trend {
                *constant
            } else {
                f_q.row(q).iter().zip(&self.beta).map(|(a, b)| a * b).sum()
            };
            let cross: f64 = (0..self.n_train())
                .map(|i| r[(i, q)] * self.cached_alpha[i])
                .sum();
            mean.push(trend_mean + cross);
        }

        let need_variance = options.variance || options.covariance || options.ci_alpha.is_some();
        let mut variance = None;
        let mut covariance = None;
        if need_variance {
            let lead = self_correlations(&self.kernel, &xq, &self.theta)?;
            let s = self.chol_r.solve_lower(&r)?;
            let p = f_q.cols();
            // u = F^T R^-1 r - f(x)
            let w = if p > 0 {
                let mut u = self.cached_rinv_f.transpose().matmul(&r)?;
                for q in 0..nq {
                    for j in 0..p {
                        u[(j, q)] -= f_q[(q, j)];
                    }
                }
                Some(
                    self.chol_m
                        .as_ref()
                        .expect("factor cached for P >= 1")
                        .solve_lower(&u)?,
                )
            } else {
                None
            };

            let mut var = Vec::with_capacity(nq);
            for q in 0..nq {
                let s2: f64 = (0..self.n_train()).map(|i| s[(i, q)] * s[(i, q)]).sum();
                let u2: f64 = w
                    .as_ref()
                    .map(|w| (0..p).map(|j| w[(j, q)] * w[(j, q)]).sum())
                    .unwrap_or(0.0);
                var.push(self.clamp_variance(self.sigma2 * (lead[q] - s2 + u2))?);
            }

            if options.covariance {
                let r_qq = build_cross_corr(&self.kernel, &xq, &xq, &self.theta)?;
                let sts = s.gram();
                let mut cov = Matrix::zeros(nq, nq);
                for a in 0..nq {
                    for b in 0..nq {
                        let u2 = w
                            .as_ref()
                            .map(|w| (0..p).map(|j| w[(j, a)] * w[(j, b)]).sum())
                            .unwrap_or(0.0);
                        cov[(a, b)] = self.sigma2 * (r_qq[(a, b)] - sts[(a, b)] + u2);
                    }
                }
                // enforce exact symmetry against accumulated roundoff
                for a in 0..nq {
                    for b in 0..a {
                        let v = 0.5 * (cov[(a, b)] + cov[(b, a)]);
                        cov[(a, b)] = v;
                        cov[(b, a)] = v;
                    }
                    cov[(a, a)] = self.clamp_variance(cov[(a, a)])?;
                }
                covariance = Some(cov);
            }
            variance = Some(var);
        }

        let (lower, upper) = if let Some(alpha) = options.ci_alpha {
            let z = std_normal_quantile(1.0 - alpha / 2.0)?;
            let var = variance.as_ref().expect("variance computed for CI");
            let lo: Vec<f64> = mean
                .iter()
                .zip(var)
                .map(|(m, v)| m - z * v.sqrt())
                .collect();
            let hi: Vec<f64> = mean
                .iter()
                .zip(var)
                .map(|(m, v)| m + z * v.sqrt())
                .collect();
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };

        Ok(Prediction {
            mean,
            variance: if options.variance || options.ci_alpha.is_some() {
                variance
            } else {
                None
            },
            covariance,
            lower,
            upper,
        })
    }

    /// Round tiny negative variances (cancellation noise) to zero; anything
    /// materially negative is a genuine breakdown.
    fn clamp_variance(&self, v: f64) -> Result<f64> {
        if v >= 0.0 {
            return Ok(v);
        }
        let tol = 1e-10 * self.sigma2.max(f64::MIN_POSITIVE);
        if v >= -tol {
            return Ok(0.0);
        }
        Err(KrigError::NumericalBreakdown(format!(
            "predictor variance {v} below the roundoff tolerance -{tol:e}"
        )))
    }
}

impl MeanPredictor for FittedKriging {
    fn mean_at(&self, x: &[f64]) -> Result<f64> {
        let xq = Matrix::from_rows(&[x.to_vec()])?;
        Ok(self.predict(&xq, PredictOptions::mean_only())?.mean[0])
    }
}

/// Draw `n_paths` trajectories of the prior process `trend + sigma Z` on the
/// given grid.
#[allow(clippy::too_many_arguments)]
pub fn sample_prior(
    kernel: &KernelSpec,
    theta: &ThetaVector,
    sigma2: f64,
    trend: &TrendSpec,
    beta: &[f64],
    xgrid: &Matrix,
    n_paths: usize,
    stream: &mut RandomStream,
    jitter: JitterPolicy,
) -> Result<Matrix> {
    if !(sigma2 >= 0.0) {
        return Err(KrigError::Domain("sigma2 must be >= 0".into()));
    }
    let ngrid = xgrid.rows();
    let r = build_corr_matrix(kernel, xgrid, theta)?;
    let chol = jitter.factorize(&r)?;
    let f = information_matrix(trend, xgrid)?;
    let mean: Vec<f64> = if let TrendSpec::Simple { constant } = trend {
        vec![*constant; ngrid]
    } else {
        f.matvec(beta)?
    };
    let sd = sigma2.sqrt();
    let mut paths = Matrix::zeros(n_paths, ngrid);
    for p in 0..n_paths {
        let z = stream.standard_normal_draws(ngrid);
        let lz = chol.lower().matvec(&z)?;
        for g in 0..ngrid {
            paths[(p, g)] = mean[g] + sd * lz[g];
        }
    }
    Ok(paths)
}

/// Draw joint posterior trajectories from `N(mean, covariance)` of the
/// predictor at the grid points.
pub fn sample_posterior(
    state: &FittedKriging,
    xgrid_user: &Matrix,
    n_paths: usize,
    stream: &mut RandomStream,
    jitter: JitterPolicy,
) -> Result<Matrix> {
    let pred = state.predict(xgrid_user, PredictOptions::with_covariance())?;
    let cov = pred.covariance.expect("covariance requested");
    let ngrid = xgrid_user.rows();
    // jitter scale follows the covariance scale, not the unit-diagonal
    // correlation convention
    let scale = state.sigma2().max(f64::MIN_POSITIVE);
    let chol = cholesky_with_jitter(&cov, jitter.base * scale, jitter.max * scale)?;
    let mut paths = Matrix::zeros(n_paths, ngrid);
    for p in 0..n_paths {
        let z = stream.standard_normal_draws(ngrid);
        let lz = chol.lower().matvec(&z)?;
        for g in 0..ngrid {
            paths[(p, g)] = pred.mean[g] + lz[g];
        }
    }
    Ok(paths)
}
