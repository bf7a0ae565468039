//! Experimental-design generation over independent uniform marginals, and
//! input standardization.

use serde::{Deserialize, Serialize};

use crate::error::{KrigError, Result};
use crate::linalg::Matrix;
use crate::random::RandomStream;

/// Independent uniform marginals describing the input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputModel {
    pub marginals: Vec<UniformMarginal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformMarginal {
    pub lower: f64,
    pub upper: f64,
}

impl UniformMarginal {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(KrigError::Config(format!(
                "uniform marginal requires lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(UniformMarginal { lower, upper })
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

impl InputModel {
    pub fn uniform(bounds: &[(f64, f64)]) -> Result<Self> {
        Ok(InputModel {
            marginals: bounds
                .iter()
                .map(|&(lo, hi)| UniformMarginal::new(lo, hi))
                .collect::<Result<_>>()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }
}

/// Latin hypercube sample: per dimension, one point uniformly within each of
/// `n` equal-probability strata, strata order permuted independently per
/// dimension.
pub fn sample_lhs(input: &InputModel, n: usize, stream: &mut RandomStream) -> Matrix {
    let m = input.dim();
    let mut x = Matrix::zeros(n, m);
    for j in 0..m {
        let mut strata: Vec<usize> = (0..n).collect();
        stream.shuffle(&mut strata);
        for i in 0..n {
            let u = (strata[i] as f64 + stream.uniform_open01()) / n as f64;
            x[(i, j)] = input.marginals[j].inverse_cdf(u);
        }
    }
    x
}

/// Plain Monte Carlo sample of the input model.
pub fn sample_mc(input: &InputModel, n: usize, stream: &mut RandomStream) -> Matrix {
    let m = input.dim();
    let mut x = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            x[(i, j)] = input.marginals[j].inverse_cdf(stream.uniform_open01());
        }
    }
    x
}

/// Column means/standard deviations used to map user coordinates to the
/// internal standardized coordinates (and back).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub enabled: bool,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ScalingRecord {
    /// Identity scaling for an `m`-dimensional input.
    pub fn disabled(m: usize) -> Self {
        ScalingRecord {
            enabled: false,
            means: vec![0.0; m],
            stds: vec![1.0; m],
        }
    }
}

/// Standardize each column to empirical mean 0 and variance 1 (population
/// variance, divide by N).
pub fn standardize(x: &Matrix) -> Result<(Matrix, ScalingRecord)> {
    let (n, m) = (x.rows(), x.cols());
    if n < 2 {
        return Err(KrigError::Domain(
            "standardization needs at least 2 points".into(),
        ));
    }
    let mut means = vec![0.0; m];
    let mut stds = vec![0.0; m];
    for j in 0..m {
        let col: Vec<f64> = x.col_vec(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std <= 1e-12 * (mean.abs() + 1.0) {
            return Err(KrigError::ZeroVariance(format!(
                "input column {} is constant; disable scaling to fit this design",
                j + 1
            )));
        }
        means[j] = mean;
        stds[j] = std;
    }
    let record = ScalingRecord {
        enabled: true,
        means,
        stds,
    };
    let u = apply_scaling(&record, x)?;
    Ok((u, record))
}

/// Map points into the scaled coordinates stored in `record`. Identity when
/// scaling is disabled.
pub fn apply_scaling(record: &ScalingRecord, x: &Matrix) -> Result<Matrix> {
    if !record.enabled {
        return Ok(x.clone());
    }
    if x.rows() > 0 && x.cols() != record.means.len() {
        return Err(KrigError::DimensionMismatch(format!(
            "scaling record is {}-dimensional, points are {}-dimensional",
            record.means.len(),
            x.cols()
        )));
    }
    let mut u = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            u[(i, j)] = (x[(i, j)] - record.means[j]) / record.stds[j];
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_input(m: usize) -> InputModel {
        InputModel::uniform(&vec![(0.0, 1.0); m]).unwrap()
    }

    /// Exact combinatorial stratification check: per dimension, one sample in
    /// each stratum.
    pub(crate) fn lhs_is_stratified(x: &Matrix, input: &InputModel, n: usize) -> bool {
        for j in 0..input.dim() {
            let UniformMarginal { lower, upper } = input.marginals[j];
            let mut counts = vec![0usize; n];
            for i in 0..n {
                let u = (x[(i, j)] - lower) / (upper - lower);
                let k = ((u * n as f64).floor() as usize).min(n - 1);
                counts[k] += 1;
            }
            if counts.iter().any(|&c| c != 1) {
                return false;
            }
        }
        true
    }

    #[test]
    fn lhs_four_point_stratification() {
        let input = unit_input(1);
        let mut stream = RandomStream::new(3);
        let x = sample_lhs(&input, 4, &mut stream);
        let mut sorted = x.col_vec(0);
        sorted.sort_by(f64::total_cmp);
        for (k, v) in sorted.iter().enumerate() {
            assert!(*v >= k as f64 * 0.25 && *v < (k as f64 + 1.0) * 0.25);
        }
    }

    #[test]
    fn lhs_single_point_in_bounds() {
        let input = InputModel::uniform(&[(-3.0, 5.0)]).unwrap();
        let mut stream = RandomStream::new(1);
        let x = sample_lhs(&input, 1, &mut stream);
        assert!(x[(0, 0)] > -3.0 && x[(0, 0)] < 5.0);
    }

    #[test]
    fn lhs_branin_style_design() {
        let input = InputModel::uniform(&[(-5.0, 10.0), (0.0, 15.0)]).unwrap();
        let mut stream = RandomStream::new(42);
        let x = sample_lhs(&input, 15, &mut stream);
        for i in 0..15 {
            assert!(x[(i, 0)] >= -5.0 && x[(i, 0)] <= 10.0);
            assert!(x[(i, 1)] >= 0.0 && x[(i, 1)] <= 15.0);
        }
        assert!(lhs_is_stratified(&x, &input, 15));
    }

    #[test]
    fn lhs_stratification_matrix_of_sizes() {
        for &n in &[1usize, 4, 15, 100] {
            for &m in &[1usize, 2, 5] {
                let input = unit_input(m);
                let mut stream = RandomStream::new((n * 31 + m) as u64);
                let x = sample_lhs(&input, n, &mut stream);
                assert!(lhs_is_stratified(&x, &input, n), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn mc_sample_moments_and_bounds() {
        let input = unit_input(1);
        let mut stream = RandomStream::new(8);
        let n = 10_000;
        let x = sample_mc(&input, n, &mut stream);
        let mean = x.as_slice().iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 0.02);
        assert!(x.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let input = unit_input(3);
        let a = sample_lhs(&input, 20, &mut RandomStream::new(5));
        let b = sample_lhs(&input, 20, &mut RandomStream::new(5));
        assert_eq!(a, b);
        let c = sample_mc(&input, 20, &mut RandomStream::new(5));
        let d = sample_mc(&input, 20, &mut RandomStream::new(5));
        assert_eq!(c, d);
    }

    #[test]
    fn standardize_hand_case() {
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let (u, rec) = standardize(&x).unwrap();
        // mean 1, population std 1 -> (-1, 1)
        assert_eq!(u.col_vec(0), vec![-1.0, 1.0]);
        assert_eq!(rec.means, vec![1.0]);
        assert_eq!(rec.stds, vec![1.0]);
    }

    #[test]
    fn standardize_columns_have_zero_mean_unit_variance() {
        let mut stream = RandomStream::new(77);
        let x = Matrix::from_fn(40, 3, |_, j| {
            stream.uniform_range(-5.0, 3.0) * (j + 1) as f64
        });
        let (u, record) = standardize(&x).unwrap();
        for j in 0..3 {
            let col = u.col_vec(j);
            let mean = col.iter().sum::<f64>() / 40.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 40.0;
            assert!(mean.abs() <= 1e-12);
            assert!((var - 1.0).abs() <= 1e-10);
        }
        // idempotence: standardizing the output changes nothing (to 1e-12)
        let (u2, _) = standardize(&u).unwrap();
        for (a, b) in u.as_slice().iter().zip(u2.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        // round trip is bit-exact for the training matrix
        assert_eq!(apply_scaling(&record, &x).unwrap(), u);
    }

    #[test]
    fn scaling_maps_column_mean_to_zero() {
        let x = Matrix::from_rows(&[vec![1.0], vec![3.0], vec![5.0]]).unwrap();
        let (_, rec) = standardize(&x).unwrap();
        let q = Matrix::from_rows(&[vec![3.0]]).unwrap(); // the column mean
        assert_eq!(apply_scaling(&rec, &q).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn constant_column_rejected_with_hint() {
        let x = Matrix::from_rows(&[vec![2.0, 1.0], vec![2.0, 3.0]]).unwrap();
        match standardize(&x) {
            Err(KrigError::ZeroVariance(msg)) => assert!(msg.contains("disable scaling")),
            other => panic!("expected ZeroVariance, got {other:?}"),
        }
    }

    #[test]
    fn disabled_record_is_identity() {
        let rec = ScalingRecord::disabled(2);
        let x = Matrix::from_rows(&[vec![4.0, -1.0]]).unwrap();
        assert_eq!(apply_scaling(&rec, &x).unwrap(), x);
    }
}
