//! Trend bases: the deterministic mean part `beta^T f(x)` of the model.
//!
//! Supports simple (known constant, no estimated coefficients), ordinary
//! (unknown constant), polynomial of arbitrary degree, custom bases and
//! custom information-matrix builders registered by name, and the model-mean
//! trend that turns a previously fitted surrogate into the trend of a new one
//! (hierarchical Kriging).

use std::sync::Arc;

use crate::error::{KrigError, Result};
use crate::linalg::Matrix;
use crate::registry;

/// Anything that can serve as the parent of a model-mean trend.
pub trait MeanPredictor: Send + Sync {
    /// Mean prediction at a single point.
    fn mean_at(&self, x: &[f64]) -> Result<f64>;
}

#[derive(Clone)]
pub enum TrendSpec {
    /// Known constant trend; no coefficient is estimated (P = 0).
    Simple { constant: f64 },
    /// Unknown constant (P = 1).
    Ordinary,
    /// Full polynomial basis of the given total degree, graded-lexicographic
    /// monomial order, cross terms included once (i <= j).
    Polynomial { degree: usize },
    /// Basis functions registered under `name`.
    CustomBasis { name: String },
    /// Information-matrix builder registered under `name`.
    CustomF { name: String },
    /// Mean predictor of a fitted parent model as the single basis function.
    ModelMean { parent: Arc<dyn MeanPredictor> },
}

impl std::fmt::Debug for TrendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrendSpec::Simple { constant } => write!(f, "Simple({constant})"),
            TrendSpec::Ordinary => write!(f, "Ordinary"),
            TrendSpec::Polynomial { degree } => write!(f, "Polynomial(degree {degree})"),
            TrendSpec::CustomBasis { name } => write!(f, "CustomBasis({name})"),
            TrendSpec::CustomF { name } => write!(f, "CustomF({name})"),
            TrendSpec::ModelMean { .. } => write!(f, "ModelMean"),
        }
    }
}

impl TrendSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrendSpec::Simple { .. } => "simple",
            TrendSpec::Ordinary => "ordinary",
            TrendSpec::Polynomial { .. } => "polynomial",
            TrendSpec::CustomBasis { .. } => "custom-basis",
            TrendSpec::CustomF { .. } => "custom-F",
            TrendSpec::ModelMean { .. } => "model-mean",
        }
    }

    /// Reported polynomial degree (constant trends count as degree 0).
    pub fn degree(&self) -> Option<usize> {
        match self {
            TrendSpec::Simple { .. } | TrendSpec::Ordinary => Some(0),
            TrendSpec::Polynomial { degree } => Some(*degree),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TrendSpec::Polynomial { degree } if *degree == 0 => Err(KrigError::Config(
                "polynomial trend degree must be >= 1 (use ordinary for a constant)".into(),
            )),
            TrendSpec::CustomBasis { name } => registry::trend_basis(name).map(|_| ()),
            TrendSpec::CustomF { name } => registry::trend_builder(name).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Number of basis functions P, when it is known without evaluating a
    /// custom builder. Simple Kriging has P = 0.
    pub fn basis_dim(&self, input_dim: usize) -> Option<usize> {
        match self {
            TrendSpec::Simple { .. } => Some(0),
            TrendSpec::Ordinary => Some(1),
            TrendSpec::Polynomial { degree } => Some(n_monomials(input_dim, *degree)),
            TrendSpec::CustomBasis { name } => registry::trend_basis(name).ok().map(|b| b.len()),
            TrendSpec::CustomF { .. } => None,
            TrendSpec::ModelMean { .. } => Some(1),
        }
    }
}

/// C(m + d, d): number of monomials in m variables up to total degree d.
pub fn n_monomials(m: usize, d: usize) -> usize {
    let mut n = 1usize;
    for k in 1..=d {
        n = n * (m + k) / k;
    }
    n
}

/// Exponent tuples of all monomials up to `degree`, graded-lexicographic:
/// total degree ascending, then lexicographic with earlier variables first.
fn monomial_exponents(m: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(n_monomials(m, degree));
    for total in 0..=degree {
        let mut current = vec![0usize; m];
        fill_exponents(m, total, 0, &mut current, &mut out);
    }
    out
}

fn fill_exponents(
    m: usize,
    remaining: usize,
    pos: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == m - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_exponents(m, remaining - e, pos + 1, current, out);
        current[pos] = 0;
    }
}

/// Evaluate the trend basis `f(x)`; the returned vector has length P.
pub fn basis_vector(spec: &TrendSpec, x: &[f64]) -> Result<Vec<f64>> {
    match spec {
        TrendSpec::Simple { .. } => Ok(Vec::new()),
        TrendSpec::Ordinary => Ok(vec![1.0]),
        TrendSpec::Polynomial { degree } => {
            let exps = monomial_exponents(x.len(), *degree);
            Ok(exps
                .iter()
                .map(|e| e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product())
                .collect())
        }
        TrendSpec::CustomBasis { name } => {
            let basis = registry::trend_basis(name)?;
            Ok(basis.iter().map(|f| f(x)).collect())
        }
        TrendSpec::CustomF { name } => {
            let builder = registry::trend_builder(name)?;
            let row = builder(&Matrix::from_rows(&[x.to_vec()])?)?;
            if row.rows() != 1 {
                return Err(KrigError::CustomTrendShape(format!(
                    "builder returned {} rows for a single point",
                    row.rows()
                )));
            }
            Ok(row.row(0).to_vec())
        }
        TrendSpec::ModelMean { parent } => Ok(vec![parent.mean_at(x)?]),
    }
}

/// Information matrix `F` (N x P): row i is the basis evaluated at design
/// point i.
pub fn information_matrix(spec: &TrendSpec, x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    if let TrendSpec::CustomF { name } = spec {
        let builder = registry::trend_builder(name)?;
        let f = builder(x)?;
        if f.rows() != n {
            return Err(KrigError::CustomTrendShape(format!(
                "builder returned {} rows, design has {n}",
                f.rows()
            )));
        }
        return Ok(f);
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(basis_vector(spec, x.row(i))?);
    }
    if let TrendSpec::Simple { .. } = spec {
        return Ok(Matrix::zeros(n, 0));
    }
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinary_basis_is_one() {
        assert_eq!(
            basis_vector(&TrendSpec::Ordinary, &[4.0, -2.0]).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn linear_basis_matches_table_row() {
        let b = basis_vector(&TrendSpec::Polynomial { degree: 1 }, &[3.0, 5.0]).unwrap();
        assert_eq!(b, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn quadratic_basis_dedups_cross_terms() {
        let b = basis_vector(&TrendSpec::Polynomial { degree: 2 }, &[1.0, 2.0]).unwrap();
        assert_eq!(b, vec![1.0, 1.0, 2.0, 1.0, 2.0, 4.0]); // 1, x1, x2, x1^2, x1 x2, x2^2
    }

    #[test]
    fn monomial_count_matches_binomial() {
        for m in 1..=3 {
            for d in 1..=3 {
                let exps = monomial_exponents(m, d);
                assert_eq!(exps.len(), n_monomials(m, d), "m={m} d={d}");
                // explicit enumeration check: all tuples distinct, total degree <= d
                for e in &exps {
                    assert!(e.iter().sum::<usize>() <= d);
                }
                let mut dedup = exps.clone();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), exps.len());
            }
        }
    }

    #[test]
    fn information_matrix_stacks_basis_rows() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![-1.0, 0.5]]).unwrap();
        for spec in [TrendSpec::Ordinary, TrendSpec::Polynomial { degree: 2 }] {
            let f = information_matrix(&spec, &x).unwrap();
            for i in 0..x.rows() {
                assert_eq!(f.row(i), basis_vector(&spec, x.row(i)).unwrap());
            }
        }
    }

    #[test]
    fn ordinary_information_matrix_is_ones() {
        let x = Matrix::zeros(4, 2);
        let f = information_matrix(&TrendSpec::Ordinary, &x).unwrap();
        assert_eq!((f.rows(), f.cols()), (4, 1));
        assert!(f.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn simple_trend_has_empty_basis() {
        let x = Matrix::zeros(3, 2);
        let f = information_matrix(&TrendSpec::Simple { constant: 7.0 }, &x).unwrap();
        assert_eq!((f.rows(), f.cols()), (3, 0));
        assert!(basis_vector(&TrendSpec::Simple { constant: 7.0 }, &[1.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn custom_basis_by_name() {
        registry::register_trend_basis(
            "test-sin-basis",
            vec![Arc::new(|_: &[f64]| 1.0), Arc::new(|x: &[f64]| x[0].sin())],
        );
        let spec = TrendSpec::CustomBasis {
            name: "test-sin-basis".into(),
        };
        let b = basis_vector(&spec, &[std::f64::consts::FRAC_PI_2]).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn custom_f_builder_row_count_validated() {
        registry::register_trend_builder("test-bad-f", |x| Ok(Matrix::zeros(x.rows() + 1, 1)));
        let spec = TrendSpec::CustomF {
            name: "test-bad-f".into(),
        };
        let x = Matrix::zeros(3, 1);
        assert!(matches!(
            information_matrix(&spec, &x),
            Err(KrigError::CustomTrendShape(_))
        ));
    }

    #[test]
    fn model_mean_uses_parent_predictor() {
        struct Parent;
        impl MeanPredictor for Parent {
            fn mean_at(&self, x: &[f64]) -> crate::error::Result<f64> {
                Ok(2.0 * x[0] + 1.0)
            }
        }
        let spec = TrendSpec::ModelMean {
            parent: Arc::new(Parent),
        };
        assert_eq!(basis_vector(&spec, &[3.0]).unwrap(), vec![7.0]);
        assert_eq!(spec.basis_dim(1), Some(1));
    }

    #[test]
    fn polynomial_degree_zero_rejected() {
        assert!(TrendSpec::Polynomial { degree: 0 }.validate().is_err());
    }
}
