//! Region-partitioned correlation function for a faulted 2-D domain.
//!
//! The domain splits into two regions along a crack line through a known
//! fault point; points in the same region correlate through a separable
//! anisotropic Matern 3/2 kernel with region-specific length scales, while
//! points in different regions are uncorrelated (entry exactly 0).
//!
//! A point's region is decided from the angle between the vector pointing
//! from the point to the fault point and the positive x1 axis:
//! `acos((xc - x1) / ||(x1, x2) - (xc, yc)||) <= alpha` selects region 1.

use crate::error::{KrigError, Result};
use crate::kernel::{eval_family, CorrelationFamily};
use crate::linalg::Matrix;

/// Parameters of the fault-partitioned kernel. The five entries of the
/// hyperparameter vector pack as `(theta11, theta12, theta21, theta22, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultKernelParams {
    /// Length scales of region 1.
    pub theta1: [f64; 2],
    /// Length scales of region 2.
    pub theta2: [f64; 2],
    /// Crack angle in radians, in (0, pi).
    pub alpha: f64,
    /// Known fault location.
    pub fault_point: [f64; 2],
    /// Nugget applied on the diagonal when both point sets coincide.
    pub nugget: f64,
}

impl Default for FaultKernelParams {
    /// True generating values: theta = (0.600, 0.250, 0.900, 0.350, 1.309),
    /// fault point (0.6, 1), nugget 1e-2.
    fn default() -> Self {
        FaultKernelParams {
            theta1: [0.600, 0.250],
            theta2: [0.900, 0.350],
            alpha: 1.309,
            fault_point: [0.6, 1.0],
            nugget: 1e-2,
        }
    }
}

impl FaultKernelParams {
    /// Replace the five hyperparameters, keeping fault point and nugget.
    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 5 {
            return Err(KrigError::ThetaLength {
                expected: 5,
                got: theta.len(),
            });
        }
        let params = FaultKernelParams {
            theta1: [theta[0], theta[1]],
            theta2: [theta[2], theta[3]],
            alpha: theta[4],
            ..self.clone()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn theta(&self) -> [f64; 5] {
        [
            self.theta1[0],
            self.theta1[1],
            self.theta2[0],
            self.theta2[1],
            self.alpha,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::PI) {
            return Err(KrigError::Domain(format!(
                "crack angle must lie in (0, pi), got {}",
                self.alpha
            )));
        }
        for s in self.theta1.iter().chain(&self.theta2) {
            if !(*s > 0.0) {
                return Err(KrigError::Domain(format!(
                    "length scales must be > 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Angle of the vector from `p` to the fault point against the +x1 axis.
    pub fn region_angle(&self, p: &[f64]) -> Result<f64> {
        let dx = p[0] - self.fault_point[0];
        let dy = p[1] - self.fault_point[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist == 0.0 {
            return Err(KrigError::Domain(format!(
                "point ({}, {}) coincides with the fault point; region angle undefined",
                p[0], p[1]
            )));
        }
        Ok((-dx / dist).acos())
    }

    /// True when the point belongs to region 1.
    pub fn in_region1(&self, p: &[f64]) -> Result<bool> {
        Ok(self.region_angle(p)? <= self.alpha)
    }
}

fn matern32_separable(p: &[f64], q: &[f64], scales: &[f64; 2]) -> Result<f64> {
    let mut v = 1.0;
    for d in 0..2 {
        v *= eval_family(&CorrelationFamily::Matern32, (p[d] - q[d]).abs(), scales[d])?;
    }
    Ok(v)
}

/// Correlation block between the rows of `x1` and the rows of `x2` under the
/// fault-partitioned kernel. Same-region pairs use the region's separable
/// Matern 3/2; cross-region entries are exactly 0. When `x1` and `x2` are the
/// same point set, the nugget is added on the diagonal (matching how built-in
/// kernels apply the nugget to the training matrix only).
pub fn fault_kernel_matrix(params: &FaultKernelParams, x1: &Matrix, x2: &Matrix) -> Result<Matrix> {
    params.validate()?;
    if (x1.rows() > 0 && x1.cols() != 2) || (x2.rows() > 0 && x2.cols() != 2) {
        return Err(KrigError::DimensionMismatch(
            "fault kernel requires 2-D points".into(),
        ));
    }
    let region1_x1: Vec<bool> = (0..x1.rows())
        .map(|i| params.in_region1(x1.row(i)))
        .collect::<Result<_>>()?;
    let region1_x2: Vec<bool> = (0..x2.rows())
        .map(|j| params.in_region1(x2.row(j)))
        .collect::<Result<_>>()?;

    let mut r = Matrix::zeros(x1.rows(), x2.rows());
    for i in 0..x1.rows() {
        for j in 0..x2.rows() {
            if region1_x1[i] != region1_x2[j] {
                continue;
            }
            let scales = if region1_x1[i] {
                &params.theta1
            } else {
                &params.theta2
            };
            r[(i, j)] = matern32_separable(x1.row(i), x2.row(j), scales)?;
        }
    }
    if x1 == x2 {
        r.add_to_diagonal(params.nugget);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_corr_matrix, Composition, KernelSpec};
    use approx::assert_abs_diff_eq;

    fn params() -> FaultKernelParams {
        FaultKernelParams::default()
    }

    #[test]
    fn cross_region_entries_are_zero() {
        // (0.2, 0.5) lies left of the crack, (1.0, 0.5) right of it
        let a = Matrix::from_rows(&[vec![0.2, 0.5]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.5]]).unwrap();
        let p = params();
        assert!(p.in_region1(a.row(0)).unwrap());
        assert!(!p.in_region1(b.row(0)).unwrap());
        let r = fault_kernel_matrix(&p, &a, &b).unwrap();
        assert_eq!(r[(0, 0)], 0.0);
    }

    #[test]
    fn same_region_matches_plain_separable_matern32() {
        let p = params();
        let pts = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.8]]).unwrap();
        assert!(p.in_region1(pts.row(0)).unwrap() && p.in_region1(pts.row(1)).unwrap());
        let r = fault_kernel_matrix(&p, &pts, &pts.clone()).unwrap();
        let spec = KernelSpec {
            family: crate::kernel::CorrelationFamily::Matern32,
            composition: Composition::Separable,
            isotropic: false,
            nugget: 0.0,
            dim: 2,
            custom_matrix: None,
        };
        let theta = spec.make_theta(p.theta1.to_vec()).unwrap();
        let expected = crate::kernel::eval_kernel(&spec, pts.row(0), pts.row(1), &theta).unwrap();
        assert_abs_diff_eq!(r[(0, 1)], expected, epsilon = 1e-14);
    }

    #[test]
    fn self_block_of_single_point_carries_nugget() {
        let p = params();
        let pt = Matrix::from_rows(&[vec![1.0, 0.2]]).unwrap(); // region 2
        assert!(!p.in_region1(pt.row(0)).unwrap());
        let r = fault_kernel_matrix(&p, &pt, &pt.clone()).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 1.0 + 0.01, epsilon = 1e-15);
    }

    #[test]
    fn fault_point_itself_is_rejected() {
        let p = params();
        let pt = Matrix::from_rows(&[vec![0.6, 1.0]]).unwrap();
        assert!(matches!(
            fault_kernel_matrix(&p, &pt, &pt.clone()),
            Err(KrigError::Domain(_))
        ));
    }

    #[test]
    fn single_region_block_equals_builtin_matrix_including_nugget() {
        // all points in region 1: the fault kernel must reproduce the plain
        // separable Matern 3/2 training matrix with the same nugget handling
        let p = params();
        let pts = Matrix::from_rows(&[
            vec![0.05, 0.1],
            vec![0.2, 0.55],
            vec![0.35, 0.9],
            vec![0.1, 0.75],
        ])
        .unwrap();
        for i in 0..pts.rows() {
            assert!(p.in_region1(pts.row(i)).unwrap());
        }
        let fault_r = fault_kernel_matrix(&p, &pts, &pts.clone()).unwrap();
        let spec = KernelSpec {
            family: crate::kernel::CorrelationFamily::Matern32,
            composition: Composition::Separable,
            isotropic: false,
            nugget: p.nugget,
            dim: 2,
            custom_matrix: None,
        };
        let theta = spec.make_theta(p.theta1.to_vec()).unwrap();
        let builtin_r = build_corr_matrix(&spec, &pts, &theta).unwrap();
        for i in 0..pts.rows() {
            for j in 0..pts.rows() {
                assert!((fault_r[(i, j)] - builtin_r[(i, j)]).abs() <= 1e-14);
            }
        }
        // cross-correlation path: no nugget on either side
        let query = Matrix::from_rows(&[vec![0.12, 0.3]]).unwrap();
        let fault_cross = fault_kernel_matrix(&p, &pts, &query).unwrap();
        let builtin_cross = crate::kernel::build_cross_corr(&spec, &pts, &query, &theta).unwrap();
        for i in 0..pts.rows() {
            assert!((fault_cross[(i, 0)] - builtin_cross[(i, 0)]).abs() <= 1e-14);
        }
    }

    #[test]
    fn theta_repacking_and_bounds() {
        let p = params().with_theta(&[0.5, 0.2, 0.8, 0.3, 1.0]).unwrap();
        assert_eq!(p.theta(), [0.5, 0.2, 0.8, 0.3, 1.0]);
        assert!(params().with_theta(&[0.5, 0.2, 0.8, 0.3]).is_err());
        assert!(params().with_theta(&[0.5, 0.2, 0.8, 0.3, 4.0]).is_err()); // alpha >= pi
        assert!(params().with_theta(&[-0.5, 0.2, 0.8, 0.3, 1.0]).is_err());
    }
}
