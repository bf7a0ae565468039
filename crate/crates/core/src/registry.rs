//! Named registration of custom correlation functions and trend bases.
//!
//! Custom functions cannot be serialized, so model artifacts and CLI configs
//! reference them by name only. The process-wide registry maps those names to
//! the actual closures; the fault-partitioned correlation function ships
//! pre-registered as `"fault"`.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, RwLock};

use crate::error::{KrigError, Result};
use crate::kernel::fault::{fault_kernel_matrix, FaultKernelParams};
use crate::linalg::Matrix;

/// Matrix-level correlation function: `(X1, X2, theta) -> Matrix`.
pub type KernelMatrixFn = dyn Fn(&Matrix, &Matrix, &[f64]) -> Result<Matrix> + Send + Sync;
/// One-dimensional correlation family: `(h, theta) -> value`.
pub type FamilyFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
/// Single trend basis function: `x -> value`.
pub type BasisFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
/// Trend builder computing the whole information matrix: `X -> F`.
pub type TrendFBuilder = dyn Fn(&Matrix) -> Result<Matrix> + Send + Sync;

#[derive(Clone)]
pub struct RegisteredKernel {
    pub eval: Arc<KernelMatrixFn>,
    /// Declared number of hyperparameters; optimisation bounds must match it.
    pub theta_len: usize,
}

#[derive(Default)]
struct Registry {
    kernels: HashMap<String, RegisteredKernel>,
    families: HashMap<String, Arc<FamilyFn>>,
    trend_bases: HashMap<String, Vec<Arc<BasisFn>>>,
    trend_builders: HashMap<String, Arc<TrendFBuilder>>,
}

static REGISTRY: LazyLock<RwLock<Registry>> = LazyLock::new(|| {
    let mut reg = Registry::default();
    let params = FaultKernelParams::default();
    reg.kernels.insert(
        "fault".into(),
        RegisteredKernel {
            eval: Arc::new(move |x1, x2, theta| {
                fault_kernel_matrix(&params.with_theta(theta)?, x1, x2)
            }),
            theta_len: 5,
        },
    );
    RwLock::new(reg)
});

/// Register (or replace) a matrix-level correlation function.
pub fn register_kernel_matrix<F>(name: &str, theta_len: usize, eval: F)
where
    F: Fn(&Matrix, &Matrix, &[f64]) -> Result<Matrix> + Send + Sync + 'static,
{
    REGISTRY.write().unwrap().kernels.insert(
        name.to_string(),
        RegisteredKernel {
            eval: Arc::new(eval),
            theta_len,
        },
    );
}

pub fn kernel_matrix(name: &str) -> Result<RegisteredKernel> {
    REGISTRY
        .read()
        .unwrap()
        .kernels
        .get(name)
        .cloned()
        .ok_or_else(|| KrigError::UnknownName(format!("custom correlation function '{name}'")))
}

/// Register a custom 1-D correlation family. The family contract requires
/// `eval(0, theta) = 1`; this is probed at registration with `theta = 1`.
pub fn register_family<F>(name: &str, eval: F) -> Result<()>
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    let at_zero = eval(0.0, 1.0);
    if (at_zero - 1.0).abs() > 1e-12 {
        return Err(KrigError::Domain(format!(
            "custom family '{name}' must satisfy eval(0, theta) = 1, got {at_zero}"
        )));
    }
    REGISTRY
        .write()
        .unwrap()
        .families
        .insert(name.to_string(), Arc::new(eval));
    Ok(())
}

pub fn family(name: &str) -> Result<Arc<FamilyFn>> {
    REGISTRY
        .read()
        .unwrap()
        .families
        .get(name)
        .cloned()
        .ok_or_else(|| KrigError::UnknownName(format!("custom correlation family '{name}'")))
}

/// Register a custom trend basis as an ordered list of basis functions.
pub fn register_trend_basis(name: &str, basis: Vec<Arc<BasisFn>>) {
    REGISTRY
        .write()
        .unwrap()
        .trend_bases
        .insert(name.to_string(), basis);
}

pub fn trend_basis(name: &str) -> Result<Vec<Arc<BasisFn>>> {
    REGISTRY
        .read()
        .unwrap()
        .trend_bases
        .get(name)
        .cloned()
        .ok_or_else(|| KrigError::UnknownName(format!("custom trend basis '{name}'")))
}

/// Register a custom trend builder that computes the information matrix
/// directly from the design matrix.
pub fn register_trend_builder<F>(name: &str, builder: F)
where
    F: Fn(&Matrix) -> Result<Matrix> + Send + Sync + 'static,
{
    REGISTRY
        .write()
        .unwrap()
        .trend_builders
        .insert(name.to_string(), Arc::new(builder));
}

pub fn trend_builder(name: &str) -> Result<Arc<TrendFBuilder>> {
    REGISTRY
        .read()
        .unwrap()
        .trend_builders
        .get(name)
        .cloned()
        .ok_or_else(|| KrigError::UnknownName(format!("custom trend builder '{name}'")))
}
