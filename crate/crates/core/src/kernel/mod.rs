//! Correlation functions: one-dimensional families, separable/ellipsoidal
//! composition with optional isotropy and nugget, and correlation-matrix
//! assembly. Custom matrix-level kernels (like the fault-partitioned one in
//! [`fault`]) plug in through the name registry.

pub mod fault;

use serde::{Deserialize, Serialize};

use crate::error::{KrigError, Result};
use crate::linalg::Matrix;
use crate::registry;

/// One-dimensional correlation family `r(h; theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationFamily {
    Linear,
    Exponential,
    #[serde(rename = "matern-3_2")]
    Matern32,
    #[serde(rename = "matern-5_2")]
    Matern52,
    Gaussian,
    /// Custom family registered by name; must satisfy `eval(0, theta) = 1`.
    Custom(String),
}

impl CorrelationFamily {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "linear" => CorrelationFamily::Linear,
            "exponential" => CorrelationFamily::Exponential,
            "matern-3_2" | "matern32" | "matern-32" => CorrelationFamily::Matern32,
            "matern-5_2" | "matern52" | "matern-52" => CorrelationFamily::Matern52,
            "gaussian" | "squared-exponential" => CorrelationFamily::Gaussian,
            _ => {
                // fall back to a registered custom family
                registry::family(name)?;
                CorrelationFamily::Custom(name.to_string())
            }
        })
    }

    pub fn name(&self) -> &str {
        match self {
            CorrelationFamily::Linear => "linear",
            CorrelationFamily::Exponential => "exponential",
            CorrelationFamily::Matern32 => "matern-3_2",
            CorrelationFamily::Matern52 => "matern-5_2",
            CorrelationFamily::Gaussian => "gaussian",
            CorrelationFamily::Custom(name) => name,
        }
    }
}

/// Evaluate a 1-D correlation family at distance `h >= 0` with scale `theta > 0`.
pub fn eval_family(family: &CorrelationFamily, h: f64, theta: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(KrigError::Domain(format!(
            "family distance must be >= 0, got {h}"
        )));
    }
    if !(theta > 0.0) {
        return Err(KrigError::Domain(format!(
            "family scale must be > 0, got {theta}"
        )));
    }
    Ok(match family {
        CorrelationFamily::Linear => (1.0 - h / theta).max(0.0),
        CorrelationFamily::Exponential => (-h / theta).exp(),
        CorrelationFamily::Matern32 => {
            let t = 3.0_f64.sqrt() * h / theta;
            (1.0 + t) * (-t).exp()
        }
        CorrelationFamily::Matern52 => {
            let t = 5.0_f64.sqrt() * h / theta;
            (1.0 + t + 5.0 * h * h / (3.0 * theta * theta)) * (-t).exp()
        }
        CorrelationFamily::Gaussian => {
            let t = h / theta;
            (-t * t).exp()
        }
        CorrelationFamily::Custom(name) => registry::family(name)?(h, theta),
    })
}

/// How 1-D families combine over multiple input dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// Product of per-dimension family values.
    Separable,
    /// Family applied once to the anisotropically scaled Euclidean distance.
    Ellipsoidal,
}

impl Composition {
    pub fn name(&self) -> &'static str {
        match self {
            Composition::Separable => "separable",
            Composition::Ellipsoidal => "ellipsoidal",
        }
    }
}

/// Hyperparameter vector together with its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub values: Vec<f64>,
    pub layout: ThetaLayout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaLayout {
    /// One shared scale broadcast to every dimension.
    Isotropic,
    /// One scale per input dimension.
    PerDimension,
    /// Layout declared by a custom kernel.
    Custom,
}

impl ThetaVector {
    pub fn isotropic(value: f64) -> Self {
        ThetaVector {
            values: vec![value],
            layout: ThetaLayout::Isotropic,
        }
    }

    pub fn per_dimension(values: Vec<f64>) -> Self {
        ThetaVector {
            values,
            layout: ThetaLayout::PerDimension,
        }
    }

    pub fn custom(values: Vec<f64>) -> Self {
        ThetaVector {
            values,
            layout: ThetaLayout::Custom,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-dimension scale with isotropic broadcast.
    fn scale(&self, dim_index: usize) -> f64 {
        match self.layout {
            ThetaLayout::Isotropic => self.values[0],
            _ => self.values[dim_index],
        }
    }
}

/// Declarative description of the correlation function `R(., .; theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: CorrelationFamily,
    pub composition: Composition,
    pub isotropic: bool,
    /// Additive diagonal term applied when assembling the training matrix.
    pub nugget: f64,
    /// Input dimensionality M.
    pub dim: usize,
    /// Name of a registered matrix-level correlation function. When present,
    /// family/composition/isotropic are ignored and the function computes the
    /// correlation blocks directly.
    pub custom_matrix: Option<String>,
}

impl KernelSpec {
    /// Table-4 default: ellipsoidal anisotropic Matern 5/2, nugget 0.
    pub fn default_for_dim(dim: usize) -> Self {
        KernelSpec {
            family: CorrelationFamily::Matern52,
            composition: Composition::Ellipsoidal,
            isotropic: false,
            nugget: 0.0,
            dim,
            custom_matrix: None,
        }
    }

    pub fn with_family(mut self, family: CorrelationFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_composition(mut self, composition: Composition) -> Self {
        self.composition = composition;
        self
    }

    pub fn with_nugget(mut self, nugget: f64) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn is_custom_matrix(&self) -> bool {
        self.custom_matrix.is_some()
    }

    /// Number of hyperparameters this spec expects.
    pub fn theta_len(&self) -> Result<usize> {
        if let Some(name) = &self.custom_matrix {
            return Ok(registry::kernel_matrix(name)?.theta_len);
        }
        Ok(if self.isotropic { 1 } else { self.dim })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(KrigError::Config("kernel dimension must be >= 1".into()));
        }
        if !(self.nugget >= 0.0 && self.nugget < 1.0) {
            return Err(KrigError::Config(format!(
                "nugget must lie in [0, 1), got {}",
                self.nugget
            )));
        }
        if let Some(name) = &self.custom_matrix {
            registry::kernel_matrix(name)?;
        }
        Ok(())
    }

    /// Wrap raw optimizer values in a [`ThetaVector`] with the right layout.
    pub fn make_theta(&self, values: Vec<f64>) -> Result<ThetaVector> {
        let expected = self.theta_len()?;
        if values.len() != expected {
            return Err(KrigError::ThetaLength {
                expected,
                got: values.len(),
            });
        }
        Ok(if self.custom_matrix.is_some() {
            ThetaVector::custom(values)
        } else if self.isotropic {
            ThetaVector {
                values,
                layout: ThetaLayout::Isotropic,
            }
        } else {
            ThetaVector::per_dimension(values)
        })
    }

    fn check_theta(&self, theta: &ThetaVector) -> Result<()> {
        let expected = self.theta_len()?;
        if theta.len() != expected {
            return Err(KrigError::ThetaLength {
                expected,
                got: theta.len(),
            });
        }
        Ok(())
    }
}

/// Point-wise kernel evaluation for built-in (and custom-family) kernels.
/// The nugget is never applied here; it is a matrix-level term.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], x2: &[f64], theta: &ThetaVector) -> Result<f64> {
    if spec.is_custom_matrix() {
        return Err(KrigError::Domain(
            "matrix-level custom kernels have no point-wise form".into(),
        ));
    }
    if x.len() != spec.dim || x2.len() != spec.dim {
        return Err(KrigError::DimensionMismatch(format!(
            "kernel expects dimension {}, got points of dimension {} and {}",
            spec.dim,
            x.len(),
            x2.len()
        )));
    }
    spec.check_theta(theta)?;
    match spec.composition {
        Composition::Separable => {
            let mut prod = 1.0;
            for d in 0..spec.dim {
                prod *= eval_family(&spec.family, (x[d] - x2[d]).abs(), theta.scale(d))?;
            }
            Ok(prod)
        }
        Composition::Ellipsoidal => {
            let mut h2 = 0.0;
            for d in 0..spec.dim {
                let s = theta.scale(d);
                if !(s > 0.0) {
                    return Err(KrigError::Domain(format!("scale must be > 0, got {s}")));
                }
                let t = (x[d] - x2[d]) / s;
                h2 += t * t;
            }
            eval_family(&spec.family, h2.sqrt(), 1.0)
        }
    }
}

/// Assemble the training correlation matrix `R` (with the nugget added on the
/// diagonal).
pub fn build_corr_matrix(spec: &KernelSpec, x: &Matrix, theta: &ThetaVector) -> Result<Matrix> {
    let n = x.rows();
    let mut r = if let Some(name) = &spec.custom_matrix {
        let reg = registry::kernel_matrix(name)?;
        let r = (reg.eval)(x, x, &theta.values)?;
        if r.rows() != n || r.cols() != n {
            return Err(KrigError::CustomKernelShape(format!(
                "expected {n}x{n}, got {}x{}",
                r.rows(),
                r.cols()
            )));
        }
        let scale = r.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (r[(i, j)] - r[(j, i)]).abs() > 1e-10 * scale {
                    return Err(KrigError::CustomKernelShape(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        r[(i, j)],
                        r[(j, i)]
                    )));
                }
            }
        }
        r
    } else {
        let mut r = Matrix::zeros(n, n);
        for i in 0..n {
            r[(i, i)] = eval_kernel(spec, x.row(i), x.row(i), theta)?;
            for j in 0..i {
                let v = eval_kernel(spec, x.row(i), x.row(j), theta)?;
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    };
    if spec.nugget != 0.0 {
        r.add_to_diagonal(spec.nugget);
    }
    Ok(r)
}

/// Cross-correlations between training points (rows of `x`) and query points
/// (rows of `xq`); the nugget is not added since query points are not
/// training points.
pub fn build_cross_corr(
    spec: &KernelSpec,
    x: &Matrix,
    xq: &Matrix,
    theta: &ThetaVector,
) -> Result<Matrix> {
    let (n, nq) = (x.rows(), xq.rows());
    if nq > 0 && xq.cols() != x.cols() {
        return Err(KrigError::DimensionMismatch(format!(
            "query dimension {} does not match training dimension {}",
            xq.cols(),
            x.cols()
        )));
    }
    if let Some(name) = &spec.custom_matrix {
        let reg = registry::kernel_matrix(name)?;
        if nq == 0 {
            return Ok(Matrix::zeros(n, 0));
        }
        let r = (reg.eval)(x, xq, &theta.values)?;
        if r.rows() != n || r.cols() != nq {
            return Err(KrigError::CustomKernelShape(format!(
                "expected {n}x{nq}, got {}x{}",
                r.rows(),
                r.cols()
            )));
        }
        return Ok(r);
    }
    let mut r = Matrix::zeros(n, nq);
    for i in 0..n {
        for q in 0..nq {
            r[(i, q)] = eval_kernel(spec, x.row(i), xq.row(q), theta)?;
        }
    }
    Ok(r)
}

/// Prior correlation of each query point with itself (the leading term of the
/// predictor variance). Exactly 1 for built-ins; custom matrix kernels are
/// probed point-by-point so any internal nugget they apply is respected.
pub fn self_correlations(spec: &KernelSpec, xq: &Matrix, theta: &ThetaVector) -> Result<Vec<f64>> {
    if let Some(name) = &spec.custom_matrix {
        let reg = registry::kernel_matrix(name)?;
        let mut out = Vec::with_capacity(xq.rows());
        for q in 0..xq.rows() {
            let point = xq.select_rows(&[q]);
            let r = (reg.eval)(&point, &point, &theta.values)?;
            if r.rows() != 1 || r.cols() != 1 {
                return Err(KrigError::CustomKernelShape(format!(
                    "expected 1x1 self-correlation, got {}x{}",
                    r.rows(),
                    r.cols()
                )));
            }
            out.push(r[(0, 0)]);
        }
        return Ok(out);
    }
    Ok(vec![1.0; xq.rows()])
}
