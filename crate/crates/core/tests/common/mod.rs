//! Shared test oracles: brute-force dense-inverse evaluations of the
//! closed-form predictor/estimator equations (independent of the library's
//! Cholesky solve paths), naive leave-one-out refitting, and a known-GP data
//! generator.

#![allow(dead_code)]

use krig::engine::ExperimentalDesign;
use krig::kernel::{build_corr_matrix, build_cross_corr, KernelSpec, ThetaVector};
use krig::linalg::{cholesky_with_jitter, Matrix};
use krig::random::RandomStream;
use krig::trend::{information_matrix, TrendSpec};

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
        aug[(i, n + i)] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if aug[(r, col)].abs() > aug[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for j in 0..2 * n {
                let tmp = aug[(col, j)];
                aug[(col, j)] = aug[(pivot, j)];
                aug[(pivot, j)] = tmp;
            }
        }
        let p = aug[(col, col)];
        assert!(p.abs() > 1e-300, "oracle inverse hit a zero pivot");
        for j in 0..2 * n {
            aug[(col, j)] /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = aug[(r, col)];
                for j in 0..2 * n {
                    aug[(r, j)] -= factor * aug[(col, j)];
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| aug[(i, n + j)])
}

/// `beta = (F^T R^-1 F)^-1 F^T R^-1 y` with explicit inverses.
pub fn oracle_beta(r: &Matrix, f: &Matrix, y: &[f64]) -> Vec<f64> {
    let r_inv = invert(r);
    let ft = f.transpose();
    let m = ft.matmul(&r_inv).unwrap().matmul(f).unwrap();
    let m_inv = invert(&m);
    let rhs = ft.matmul(&r_inv).unwrap().matvec(y).unwrap();
    m_inv.matvec(&rhs).unwrap()
}

/// `sigma2 = (y - F beta)^T R^-1 (y - F beta) / N` with explicit inverses.
pub fn oracle_sigma2(r: &Matrix, f: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    let r_inv = invert(r);
    let fb = f.matvec(beta).unwrap();
    let d: Vec<f64> = y.iter().zip(&fb).map(|(a, b)| a - b).collect();
    let rd = r_inv.matvec(&d).unwrap();
    d.iter().zip(&rd).map(|(a, b)| a * b).sum::<f64>() / y.len() as f64
}

/// Predictor mean and variance at query column `q`, straight from the
/// closed forms with explicit inverses.
#[allow(clippy::too_many_arguments)]
pub fn oracle_predict(
    r: &Matrix,
    f: &Matrix,
    y: &[f64],
    beta: &[f64],
    sigma2: f64,
    r_cross: &Matrix,
    f_q: &Matrix,
    q: usize,
) -> (f64, f64) {
    let n = y.len();
    let p = f.cols();
    let r_inv = invert(r);
    let fb = if p > 0 {
        f.matvec(beta).unwrap()
    } else {
        vec![0.0; n]
    };
    let d: Vec<f64> = y.iter().zip(&fb).map(|(a, b)| a - b).collect();
    let rq: Vec<f64> = (0..n).map(|i| r_cross[(i, q)]).collect();
    let rinv_d = r_inv.matvec(&d).unwrap();
    let mut mean: f64 = if p > 0 {
        f_q.row(q).iter().zip(beta).map(|(a, b)| a * b).sum()
    } else {
        0.0
    };
    mean += rq.iter().zip(&rinv_d).map(|(a, b)| a * b).sum::<f64>();

    let rinv_r = r_inv.matvec(&rq).unwrap();
    let rtr: f64 = rq.iter().zip(&rinv_r).map(|(a, b)| a * b).sum();
    let mut var = 1.0 - rtr;
    if p > 0 {
        let ft = f.transpose();
        let m = ft.matmul(&r_inv).unwrap().matmul(f).unwrap();
        let m_inv = invert(&m);
        let u: Vec<f64> = (0..p)
            .map(|j| (0..n).map(|i| f[(i, j)] * rinv_r[i]).sum::<f64>() - f_q[(q, j)])
            .collect();
        let mu = m_inv.matvec(&u).unwrap();
        var += u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>();
    }
    (mean, sigma2 * var)
}

/// Naive leave-one-out: N refits with explicit inverses, re-profiling the
/// trend coefficients each time; variances use unit process variance.
pub fn naive_loo(
    ed: &ExperimentalDesign,
    kernel: &KernelSpec,
    trend: &TrendSpec,
    theta: &ThetaVector,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = ed.len();
    let mut objective = 0.0;
    let mut means = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let x_sub = ed.x.select_rows(&keep);
        let y_sub: Vec<f64> = keep.iter().map(|&k| ed.y[k]).collect();
        let r = build_corr_matrix(kernel, &x_sub, theta).unwrap();
        let f = information_matrix(trend, &x_sub).unwrap();
        let holdout = ed.x.select_rows(&[i]);
        let r_cross = build_cross_corr(kernel, &x_sub, &holdout, theta).unwrap();
        let f_q = information_matrix(trend, &holdout).unwrap();
        let (beta, constant) = match trend {
            TrendSpec::Simple { constant } => (Vec::new(), *constant),
            _ => (oracle_beta(&r, &f, &y_sub), 0.0),
        };
        let adjusted: Vec<f64> = y_sub.iter().map(|v| v - constant).collect();
        let (mut mean, var) = oracle_predict(&r, &f, &adjusted, &beta, 1.0, &r_cross, &f_q, 0);
        mean += constant;
        let e = ed.y[i] - mean;
        objective += e * e;
        means.push(mean);
        vars.push(var);
    }
    (objective, means, vars)
}

/// Draw `y ~ N(0, sigma2 R(theta))` over the given points.
pub fn gp_draw(
    x: &Matrix,
    kernel: &KernelSpec,
    theta: &ThetaVector,
    sigma2: f64,
    stream: &mut RandomStream,
) -> Vec<f64> {
    let r = build_corr_matrix(kernel, x, theta).unwrap();
    let chol = cholesky_with_jitter(&r, 1e-12, 1e-8).unwrap();
    let z = stream.standard_normal_draws(x.rows());
    let lz = chol.lower().matvec(&z).unwrap();
    lz.into_iter().map(|v| sigma2.sqrt() * v).collect()
}

/// Spread-out random design on `[0, span]^m` (keeps R comfortably PD).
pub fn spread_design(n: usize, m: usize, span: f64, stream: &mut RandomStream) -> Matrix {
    let mut x = Matrix::zeros(n, m);
    for j in 0..m {
        let mut strata: Vec<usize> = (0..n).collect();
        stream.shuffle(&mut strata);
        for i in 0..n {
            x[(i, j)] = span * (strata[i] as f64 + stream.uniform_open01()) / n as f64;
        }
    }
    x
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
