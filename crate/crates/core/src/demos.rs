//! Analytical demo models and the synthetic fault-field scenario.

use crate::engine::JitterPolicy;
use crate::error::{KrigError, Result};
use crate::kernel::fault::FaultKernelParams;
use crate::kernel::{build_corr_matrix, Composition, CorrelationFamily, KernelSpec};
use crate::linalg::Matrix;
use crate::random::RandomStream;

/// Branin-Hoo test function:
/// `(x2 - 5.1/(2 pi)^2 x1^2 + 5/pi x1 - 6)^2 + 10 (1 - 1/(8 pi)) cos(x1) + 10`,
/// evaluated on `x1 in [-5, 10], x2 in [0, 15]`.
pub fn branin_point(x1: f64, x2: f64) -> f64 {
    use std::f64::consts::PI;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let inner = x2 - b * x1 * x1 + c * x1 - 6.0;
    inner * inner + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
}

pub fn branin(x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != 2 {
        return Err(KrigError::DimensionMismatch(format!(
            "branin expects 2-D inputs, got {}",
            x.cols()
        )));
    }
    Ok((0..x.rows())
        .map(|i| branin_point(x[(i, 0)], x[(i, 1)]))
        .collect())
}

/// The 1-D demo model `x sin(x)`.
pub fn xsinx(x: f64) -> f64 {
    x * x.sin()
}

/// High-fidelity member of the synthetic multi-fidelity pair:
/// `(6x - 2)^2 sin(12x - 4)` on `[0, 1]`.
pub fn forrester_hf(x: f64) -> f64 {
    let t = 6.0 * x - 2.0;
    t * t * (12.0 * x - 4.0).sin()
}

/// Low-fidelity companion: `0.5 hf(x) + 10 (x - 0.5) - 5`.
pub fn forrester_lf(x: f64) -> f64 {
    0.5 * forrester_hf(x) + 10.0 * (x - 0.5) - 5.0
}

/// Both fidelities at once.
pub fn demo_multifidelity(x: f64) -> (f64, f64) {
    (forrester_hf(x), forrester_lf(x))
}

/// Evaluate a named demo model on a design matrix. These are the models a
/// config can reference through `ExpDesign.TrueModel`.
pub fn true_model(name: &str, x: &Matrix) -> Result<Vec<f64>> {
    let column = |x: &Matrix| -> Result<Vec<f64>> {
        if x.cols() != 1 {
            return Err(KrigError::DimensionMismatch(format!(
                "model '{name}' expects 1-D inputs, got {}",
                x.cols()
            )));
        }
        Ok(x.col_vec(0))
    };
    match name.to_ascii_lowercase().as_str() {
        "branin" => branin(x),
        "xsinx" => Ok(column(x)?.into_iter().map(xsinx).collect()),
        "forrester-hf" => Ok(column(x)?.into_iter().map(forrester_hf).collect()),
        "forrester-lf" => Ok(column(x)?.into_iter().map(forrester_lf).collect()),
        other => Err(KrigError::UnknownName(format!("true model '{other}'"))),
    }
}

pub fn known_true_models() -> &'static [&'static str] {
    &["branin", "xsinx", "forrester-hf", "forrester-lf"]
}

/// Spatial domain of the fault scenario: `x1 in [0, 1.2], x2 in [0, 1]`,
/// fault point at (0.6, 1) on the top edge.
pub const FAULT_DOMAIN: ([f64; 2], [f64; 2]) = ([0.0, 1.2], [0.0, 1.0]);

/// Borehole x1 positions (boreholes A, B, C); the middle one crosses the
/// crack line within the domain for the true crack angle.
pub const FAULT_BOREHOLES: [f64; 3] = [0.2, 0.45, 0.9];

/// Vertical sampling points along the given boreholes.
pub fn borehole_points(borehole_x: &[f64], n_depth: usize) -> Matrix {
    let mut rows = Vec::with_capacity(borehole_x.len() * n_depth);
    for &bx in borehole_x {
        for k in 0..n_depth {
            // keep clear of the surface so no point coincides with the fault
            let depth = 0.02 + 0.94 * k as f64 / (n_depth.max(2) - 1) as f64;
            rows.push(vec![bx, depth]);
        }
    }
    Matrix::from_rows(&rows).expect("rectangular borehole grid")
}

/// Sample one realisation of the region-partitioned true field at the given
/// points: each region carries an independent zero-mean unit-variance
/// Gaussian process with that region's separable Matern 3/2 correlation.
pub fn demo_fault_field(
    xgrid: &Matrix,
    params: &FaultKernelParams,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if xgrid.cols() != 2 {
        return Err(KrigError::DimensionMismatch(
            "fault field expects 2-D points".into(),
        ));
    }
    let n = xgrid.rows();
    let mut region1 = Vec::new();
    let mut region2 = Vec::new();
    for i in 0..n {
        if params.in_region1(xgrid.row(i))? {
            region1.push(i);
        } else {
            region2.push(i);
        }
    }
    let mut values = vec![0.0; n];
    for (indices, scales) in [(region1, &params.theta1), (region2, &params.theta2)] {
        if indices.is_empty() {
            continue;
        }
        let spec = KernelSpec {
            family: CorrelationFamily::Matern32,
            composition: Composition::Separable,
            isotropic: false,
            nugget: 0.0,
            dim: 2,
            custom_matrix: None,
        };
        let theta = spec.make_theta(scales.to_vec())?;
        let points = xgrid.select_rows(&indices);
        let r = build_corr_matrix(&spec, &points, &theta)?;
        let chol = JitterPolicy::default().factorize(&r)?;
        let z = stream.standard_normal_draws(indices.len());
        let draw = chol.lower().matvec(&z)?;
        for (k, &i) in indices.iter().enumerate() {
            values[i] = draw[k];
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branin_known_minima_and_origin() {
        use std::f64::consts::PI;
        // classic minimizers of the listing form
        assert!((branin_point(-PI, 12.275) - 0.397887).abs() < 1e-6);
        assert!((branin_point(PI, 2.275) - 0.397887).abs() < 1e-6);
        let at_origin = 36.0 + 10.0 * (1.0 - 1.0 / (8.0 * PI)) + 10.0;
        assert!((branin_point(0.0, 0.0) - at_origin).abs() < 1e-12);
        assert!((at_origin - 55.602113).abs() < 1e-6);
    }

    #[test]
    fn branin_requires_two_dims() {
        assert!(branin(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn forrester_reference_values() {
        assert!((forrester_hf(1.0) - 16.0 * (8.0_f64).sin()).abs() < 1e-12);
        assert!((forrester_hf(1.0) - 15.830).abs() < 5e-4);
        let (hf, lf) = demo_multifidelity(0.5);
        assert!((hf - (2.0_f64).sin()).abs() < 1e-12);
        assert!((lf - (0.5 * hf - 5.0)).abs() < 1e-12);
        assert!((lf + 4.545).abs() < 5e-4);
    }

    #[test]
    fn lf_minus_half_hf_is_affine() {
        // lf - 0.5 hf = 10 (x - 0.5) - 5 exactly
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let (hf, lf) = demo_multifidelity(x);
            let residual = lf - 0.5 * hf;
            assert!((residual - (10.0 * (x - 0.5) - 5.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fault_field_is_reproducible_and_region_independent() {
        let params = FaultKernelParams::default();
        let grid = borehole_points(&FAULT_BOREHOLES, 12);

        let a = demo_fault_field(&grid, &params, &mut RandomStream::new(11)).unwrap();
        let b = demo_fault_field(&grid, &params, &mut RandomStream::new(11)).unwrap();
        assert_eq!(a, b);

        // cross-region empirical correlation of paired draws stays near zero
        // and same-point variance stays near one
        let p1 = Matrix::from_rows(&[vec![0.2, 0.5]]).unwrap(); // region 1
        let p2 = Matrix::from_rows(&[vec![1.0, 0.5]]).unwrap(); // region 2
        let pair = Matrix::from_rows(&[p1.row(0).to_vec(), p2.row(0).to_vec()]).unwrap();
        let mut stream = RandomStream::new(42);
        let n = 1000;
        let mut v1 = Vec::with_capacity(n);
        let mut v2 = Vec::with_capacity(n);
        for _ in 0..n {
            let draw = demo_fault_field(&pair, &params, &mut stream).unwrap();
            v1.push(draw[0]);
            v2.push(draw[1]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (m1, m2) = (mean(&v1), mean(&v2));
        let var1 = v1.iter().map(|v| (v - m1) * (v - m1)).sum::<f64>() / n as f64;
        let var2 = v2.iter().map(|v| (v - m2) * (v - m2)).sum::<f64>() / n as f64;
        let cov = v1
            .iter()
            .zip(&v2)
            .map(|(a, b)| (a - m1) * (b - m2))
            .sum::<f64>()
            / n as f64;
        let rho = cov / (var1 * var2).sqrt();
        assert!(rho.abs() <= 0.1, "cross-region correlation {rho}");
        assert!((var1 - 1.0).abs() <= 0.15, "region-1 variance {var1}");
        assert!((var2 - 1.0).abs() <= 0.15, "region-2 variance {var2}");
    }

    #[test]
    fn borehole_grid_shape_and_region_mix() {
        let params = FaultKernelParams::default();
        let grid = borehole_points(&FAULT_BOREHOLES, 15);
        assert_eq!((grid.rows(), grid.cols()), (45, 2));
        let mut in1 = 0;
        for i in 0..grid.rows() {
            if params.in_region1(grid.row(i)).unwrap() {
                in1 += 1;
            }
        }
        // borehole A lies fully in region 1, C fully in region 2, B crosses
        assert!(in1 > 15 && in1 < 30, "unexpected region split {in1}/45");
    }
}
