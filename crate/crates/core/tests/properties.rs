//! Property-based invariants over the numerical core, plus the fit-quality
//! scaling-invariance check and the fast-LOO timing comparison.

mod common;

use proptest::prelude::*;

use krig::config::{EdSource, ModelConfig, SamplingKind};
use krig::doe::{apply_scaling, sample_lhs, standardize, InputModel};
use krig::engine::{loo_fast, ExperimentalDesign};
use krig::kernel::{build_corr_matrix, eval_kernel, Composition, CorrelationFamily, KernelSpec};
use krig::linalg::{cholesky_with_jitter, Matrix};
use krig::random::RandomStream;
use krig::session::{create_model, validate};
use krig::stats::std_normal_quantile;
use krig::trend::{basis_vector, information_matrix, TrendSpec};

fn family_strategy() -> impl Strategy<Value = CorrelationFamily> {
    prop_oneof![
        Just(CorrelationFamily::Linear),
        Just(CorrelationFamily::Exponential),
        Just(CorrelationFamily::Matern32),
        Just(CorrelationFamily::Matern52),
        Just(CorrelationFamily::Gaussian),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// SPD solve round trip: A x = b reproduced after factor + solve.
    #[test]
    fn spd_solve_round_trip(seed in 0u64..1000, n in 2usize..8) {
        let mut stream = RandomStream::new(seed);
        let b = Matrix::from_fn(n, n, |_, _| stream.uniform_range(-1.0, 1.0));
        let mut a = b.transpose().matmul(&b).unwrap();
        a.add_to_diagonal(1.0);
        let chol = cholesky_with_jitter(&a, 0.0, 0.0).unwrap();
        prop_assert_eq!(chol.jitter_applied(), 0.0);
        let rhs: Vec<f64> = (0..n).map(|_| stream.uniform_range(-2.0, 2.0)).collect();
        let x = chol.solve_spd_vec(&rhs).unwrap();
        let back = a.matvec(&x).unwrap();
        let scale = rhs.iter().fold(1e-30_f64, |m, v| m.max(v.abs()));
        for (r, b2) in rhs.iter().zip(&back) {
            prop_assert!((r - b2).abs() <= 1e-8 * scale);
        }
    }

    /// Correlation matrices are exactly symmetric with exact unit diagonal
    /// and (jittered) positive semi-definite for every family/composition.
    #[test]
    fn corr_matrix_symmetric_unit_diag_psd(
        seed in 0u64..1000,
        n in 2usize..12,
        m in 1usize..4,
        family in family_strategy(),
        ellipsoidal in any::<bool>(),
    ) {
        let mut stream = RandomStream::new(seed);
        let spec = KernelSpec {
            family,
            composition: if ellipsoidal { Composition::Ellipsoidal } else { Composition::Separable },
            isotropic: false,
            nugget: 0.0,
            dim: m,
            custom_matrix: None,
        };
        let theta = spec
            .make_theta((0..m).map(|_| stream.uniform_range(0.3, 2.0)).collect())
            .unwrap();
        let x = Matrix::from_fn(n, m, |_, _| stream.uniform_range(-2.0, 2.0));
        let r = build_corr_matrix(&spec, &x, &theta).unwrap();
        for i in 0..n {
            prop_assert_eq!(r[(i, i)], 1.0);
            for j in 0..n {
                prop_assert_eq!(r[(i, j)], r[(j, i)]);
                prop_assert!(r[(i, j)] >= 0.0 && r[(i, j)] <= 1.0);
            }
        }
        let mut jittered = r;
        jittered.add_to_diagonal(1e-10);
        prop_assert!(cholesky_with_jitter(&jittered, 1e-10, 1e-6).is_ok());
    }

    /// The Gaussian family factorizes: separable and ellipsoidal composition
    /// agree to 1e-12.
    #[test]
    fn gaussian_composition_equivalence(seed in 0u64..1000, m in 1usize..5) {
        let mut stream = RandomStream::new(seed);
        let theta_values: Vec<f64> = (0..m).map(|_| stream.uniform_range(0.3, 2.0)).collect();
        let a: Vec<f64> = (0..m).map(|_| stream.uniform_range(-2.0, 2.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| stream.uniform_range(-2.0, 2.0)).collect();
        let sep = KernelSpec {
            family: CorrelationFamily::Gaussian,
            composition: Composition::Separable,
            isotropic: false,
            nugget: 0.0,
            dim: m,
            custom_matrix: None,
        };
        let ell = KernelSpec { composition: Composition::Ellipsoidal, ..sep.clone() };
        let ts = sep.make_theta(theta_values.clone()).unwrap();
        let te = ell.make_theta(theta_values).unwrap();
        let vs = eval_kernel(&sep, &a, &b, &ts).unwrap();
        let ve = eval_kernel(&ell, &a, &b, &te).unwrap();
        prop_assert!((vs - ve).abs() <= 1e-12);
    }

    /// Quantile/CDF round trip across the unit interval.
    #[test]
    fn quantile_cdf_round_trip(p in 1e-9f64..1.0) {
        prop_assume!(p < 1.0 - 1e-9);
        let z = std_normal_quantile(p).unwrap();
        let back = krig::stats::std_normal_cdf(z);
        prop_assert!((back - p).abs() <= 1e-12 * p.max(1e-3));
    }

    /// LHS stratification holds for arbitrary sizes and dimensions.
    #[test]
    fn lhs_stratification_property(seed in 0u64..1000, n in 1usize..40, m in 1usize..5) {
        let input = InputModel::uniform(&vec![(0.0, 1.0); m]).unwrap();
        let mut stream = RandomStream::new(seed);
        let x = sample_lhs(&input, n, &mut stream);
        for j in 0..m {
            let mut counts = vec![0usize; n];
            for i in 0..n {
                let k = ((x[(i, j)] * n as f64).floor() as usize).min(n - 1);
                counts[k] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c == 1));
        }
    }

    /// Standardize: zero mean, unit variance, exact round trip through
    /// apply_scaling on the training matrix.
    #[test]
    fn standardize_round_trip(seed in 0u64..1000, n in 2usize..30, m in 1usize..4) {
        let mut stream = RandomStream::new(seed);
        let x = Matrix::from_fn(n, m, |_, j| {
            stream.uniform_range(-3.0, 5.0) * (j + 1) as f64 + j as f64
        });
        // skip degenerate draws where a column collapses
        for j in 0..m {
            let col = x.col_vec(j);
            let spread = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - col.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-6);
        }
        let (u, record) = standardize(&x).unwrap();
        for j in 0..m {
            let col = u.col_vec(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-12);
            prop_assert!((var - 1.0).abs() <= 1e-10);
        }
        prop_assert_eq!(apply_scaling(&record, &x).unwrap(), u);
    }

    /// Trend basis stacking reproduces the information matrix exactly.
    #[test]
    fn information_matrix_stacks_bases(seed in 0u64..1000, n in 1usize..10, degree in 1usize..4) {
        let mut stream = RandomStream::new(seed);
        let x = Matrix::from_fn(n, 2, |_, _| stream.uniform_range(-2.0, 2.0));
        let spec = TrendSpec::Polynomial { degree };
        let f = information_matrix(&spec, &x).unwrap();
        for i in 0..n {
            let row = basis_vector(&spec, x.row(i)).unwrap();
            prop_assert_eq!(f.row(i), row.as_slice());
        }
    }
}

/// Fast LOO must beat naive refitting by a wide margin (spec pins 5x at
/// N = 20, M = 2); both sides run several repetitions to defeat timer noise.
#[test]
fn fast_loo_is_at_least_five_times_faster_than_naive() {
    let (n, m) = (20usize, 2usize);
    let mut stream = RandomStream::new(99);
    let x = common::spread_design(n, m, 8.0, &mut stream);
    let kernel = KernelSpec {
        family: CorrelationFamily::Matern52,
        composition: Composition::Separable,
        isotropic: false,
        nugget: 0.0,
        dim: m,
        custom_matrix: None,
    };
    let theta = kernel.make_theta(vec![1.0, 1.2]).unwrap();
    let y = common::gp_draw(&x, &kernel, &theta, 1.0, &mut stream);
    let ed = ExperimentalDesign::new(x, y).unwrap();
    let trend = TrendSpec::Ordinary;

    // equality first (1e-7 relative)
    let fast = loo_fast(&theta, &ed, &kernel, &trend).unwrap();
    let (obj, means, vars) = common::naive_loo(&ed, &kernel, &trend, &theta);
    assert!((fast.objective - obj).abs() <= 1e-7 * obj.max(1e-12));
    for i in 0..n {
        assert!((fast.means[i] - means[i]).abs() <= 1e-7 * means[i].abs().max(1.0));
        assert!((fast.variances[i] - vars[i]).abs() <= 1e-7 * vars[i].max(1e-12));
    }

    let reps = 60;
    let t_fast = std::time::Instant::now();
    for _ in 0..reps {
        std::hint::black_box(loo_fast(&theta, &ed, &kernel, &trend).unwrap());
    }
    let fast_time = t_fast.elapsed();

    let t_naive = std::time::Instant::now();
    for _ in 0..reps {
        std::hint::black_box(common::naive_loo(&ed, &kernel, &trend, &theta));
    }
    let naive_time = t_naive.elapsed();

    assert!(
        fast_time.as_secs_f64() * 5.0 <= naive_time.as_secs_f64(),
        "fast {fast_time:?} vs naive {naive_time:?}"
    );
}

/// Fit quality is not materially affected by input standardization: the
/// Branin fit with scaling on vs off (same seed and budget, default bounds
/// derived from the respective coordinates) gives validation NRMSE within a
/// factor of four of each other.
#[test]
fn scaling_on_off_fit_quality_within_factor_four() {
    let input = InputModel::uniform(&[(-5.0, 10.0), (0.0, 15.0)]).unwrap();
    let mut rows = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            rows.push(vec![-5.0 + 15.0 * i as f64 / 19.0, 15.0 * j as f64 / 19.0]);
        }
    }
    let xval = Matrix::from_rows(&rows).unwrap();
    let yval = krig::demos::branin(&xval).unwrap();

    let run = |scaling: Option<bool>| -> f64 {
        let config = ModelConfig {
            seed: 11,
            ed: EdSource::Generated {
                input: input.clone(),
                n: 15,
                sampling: SamplingKind::Lhs,
                true_model: "branin".into(),
            },
            scaling,
            ..Default::default()
        };
        let model = create_model(&config).unwrap();
        validate(&model, &xval, &yval).unwrap().nrmse
    };
    let on = run(Some(true));
    let off = run(Some(false));
    let ratio = on / off;
    assert!(
        (0.25..=4.0).contains(&ratio),
        "scaling on NRMSE {on} vs off {off} (ratio {ratio})"
    );
}
