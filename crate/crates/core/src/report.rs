//! Fixed-format model report:
//!
//! ```text
//! Object Name:       Model 1
//! Input Dimension:   1
//!
//! Experimental Design
//!   Sampling:        User
//!   X size:          [8x1]
//!   Y size:          [8x1]
//!
//! Trend
//!   Type:             ordinary
//!   Degree:           0
//!
//! Gaussian Process
//!   Corr. Type:       ellipsoidal(anisotropic)
//!   Corr. family:     matern-5_2
//!   sigma^2:          4.787983e+01
//! Estimation method:  Cross-Validation
//!
//! Hyperparameters
//!   theta:         [ 0.00100 ]
//! Optim. method:       Hybrid Genetic Algorithm
//!
//! Leave-one-out error: 4.3698313e-01
//! ```

use std::fmt::Write as _;

use crate::engine::{EstimationMethod, FittedKriging};
use crate::kernel::KernelSpec;
use crate::session::KrigingModel;
use crate::trend::TrendSpec;

/// Scientific notation with a fixed fraction width and a signed two-digit
/// exponent (`4.787983e+01` style).
fn sci(v: f64, digits: usize) -> String {
    let formatted = format!("{v:.digits$e}");
    match formatted.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, rest) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{rest:0>2}")
        }
        None => formatted,
    }
}

fn corr_type_line(kernel: &KernelSpec) -> String {
    if let Some(name) = &kernel.custom_matrix {
        return format!("custom ({name})");
    }
    let iso = if kernel.isotropic {
        "isotropic"
    } else {
        "anisotropic"
    };
    format!("{}({})", kernel.composition.name(), iso)
}

fn corr_family_line(kernel: &KernelSpec) -> String {
    if kernel.custom_matrix.is_some() {
        "custom".to_string()
    } else {
        kernel.family.name().to_string()
    }
}

fn push_output_block(out: &mut String, fit: &FittedKriging) {
    let trend = fit.trend();
    out.push_str("Trend\n");
    let _ = writeln!(out, "  Type:             {}", trend.kind_name());
    if let Some(degree) = trend.degree() {
        let _ = writeln!(out, "  Degree:           {degree}");
    }
    if let TrendSpec::Simple { constant } = trend {
        let _ = writeln!(out, "  Known constant:   {constant}");
    }
    out.push('\n');

    out.push_str("Gaussian Process\n");
    let _ = writeln!(out, "  Corr. Type:       {}", corr_type_line(fit.kernel()));
    let _ = writeln!(
        out,
        "  Corr. family:     {}",
        corr_family_line(fit.kernel())
    );
    let _ = writeln!(out, "  sigma^2:          {}", sci(fit.sigma2(), 6));
    if fit.kernel().nugget > 0.0 {
        let _ = writeln!(out, "  Nugget:           {}", sci(fit.kernel().nugget, 6));
    }
    let _ = writeln!(out, "Estimation method:  {}", fit.estimation().label());
    out.push('\n');

    out.push_str("Hyperparameters\n");
    let theta: Vec<String> = fit
        .theta()
        .values
        .iter()
        .map(|v| format!("{v:.5}"))
        .collect();
    let _ = writeln!(out, "  theta:\t     [ {} ]", theta.join(" "));
}

fn objective_line(fit: &FittedKriging) -> String {
    match fit.estimation() {
        EstimationMethod::MaximumLikelihood => {
            format!("Neg. log-likelihood: {}", sci(fit.objective_value(), 7))
        }
        EstimationMethod::CrossValidation { k } if k == fit.n_train() => {
            format!("Leave-one-out error: {}", sci(fit.objective_value(), 7))
        }
        EstimationMethod::CrossValidation { k } => {
            format!(
                "Cross-validation error (K={k}): {}",
                sci(fit.objective_value(), 7)
            )
        }
    }
}

/// Render the fixed-format report for a fitted model.
pub fn print_report(model: &KrigingModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Object Name:       {}", model.name);
    let _ = writeln!(out, "Input Dimension:   {}", model.input_dim());
    out.push('\n');

    out.push_str("Experimental Design\n");
    let _ = writeln!(out, "  Sampling:        {}", model.sampling.label());
    let _ = writeln!(
        out,
        "  X size:          [{}x{}]",
        model.n_train(),
        model.input_dim()
    );
    let _ = writeln!(
        out,
        "  Y size:          [{}x{}]",
        model.n_train(),
        model.n_outputs()
    );
    out.push('\n');

    for (index, fit) in model.outputs.iter().enumerate() {
        if model.n_outputs() > 1 {
            let _ = writeln!(out, "Output {} of {}", index + 1, model.n_outputs());
        }
        push_output_block(&mut out, fit);
        let _ = writeln!(out, "Optim. method:       {}", model.optimizer.label());
        out.push('\n');
        let _ = writeln!(out, "{}", objective_line(fit));
        if index + 1 < model.n_outputs() {
            out.push('\n');
        }
    }

    if let Some(parent) = &model.parent {
        out.push('\n');
        out.push_str("Hierarchical trend: mean predictor of the low-fidelity model below\n");
        out.push('\n');
        for line in print_report(parent).lines() {
            let _ = writeln!(out, "    {line}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_format_matches_printout_style() {
        assert_eq!(sci(47.87983, 6), "4.787983e+01");
        assert_eq!(sci(0.00437, 6), "4.370000e-03");
        assert_eq!(sci(0.43698313, 7), "4.3698313e-01");
        assert_eq!(sci(0.0, 6), "0.000000e+00");
    }
}
