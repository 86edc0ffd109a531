use lrglm::bounds::w2_gaussians;
use lrglm::conjugate::{
    conservativeness_check, entropy_loss, exact_posterior_dense, lr_posterior, precision_error,
    precision_error_dense,
};
use lrglm::data::{random_rotation, read_matrix_bin, write_matrix_bin};
use lrglm::linalg::{residual_spectrum, truncated_svd, Matrix, SvdMethod, Vector};
use lrglm::lr_laplace::probit_probability;
use lrglm::models::{Family, GaussianPrior};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gauss(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// `(N, D, M, seed)` with `1 <= M <= min(N, D)`.
fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..25, 2usize..25, any::<u64>())
        .prop_flat_map(|(n, d, s)| (Just(n), Just(d), 1..=n.min(d), Just(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lr_covariance_dominates_exact((n, d, m, seed) in shape(), tau in 0.1f64..5.0, s2 in 0.1f64..5.0) {
        let x = gauss(n, d, seed);
        let y = gauss(n, 1, seed ^ 1).column(0).into_owned();
        let prior = GaussianPrior::isotropic(d, s2).unwrap();
        // needs exact singular directions: for an arbitrary projector P,
        // XᵀX − P XᵀX P can be indefinite
        let svd = truncated_svd(&x, m, SvdMethod::Deterministic).unwrap();
        let lr = lr_posterior(&svd, &y, &prior, tau).unwrap();
        let exact = exact_posterior_dense(&x, &y, &prior, tau).unwrap();
        prop_assert!(conservativeness_check(&lr, &exact).unwrap() >= -1e-10);
    }

    #[test]
    fn precision_gap_is_residual_norm_squared((n, d, m, seed) in shape(), tau in 0.1f64..5.0) {
        let x = gauss(n, d, seed);
        let svd = truncated_svd(&x, m, SvdMethod::Deterministic).unwrap();
        let direct = precision_error_dense(&x, &svd, tau).unwrap();
        let formula = precision_error(&svd, tau);
        prop_assert!((direct - formula).abs() <= 1e-8 * formula.max(1.0));
    }

    #[test]
    fn entropy_loss_is_bracketed((n, d, m, seed) in shape(), tau in 0.1f64..5.0, s2 in 0.1f64..5.0) {
        let x = gauss(n, d, seed);
        let svd = truncated_svd(&x, m, SvdMethod::Deterministic).unwrap();
        let residuals = residual_spectrum(&x, &svd, n.min(d) - m).unwrap();
        let (loss, bound) = entropy_loss(&residuals, &GaussianPrior::isotropic(d, s2).unwrap(), tau).unwrap();
        prop_assert!(loss >= 0.0);
        prop_assert!(loss <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn entry_queries_match_dense((n, d, m, seed) in shape()) {
        let x = gauss(n, d, seed);
        let y = gauss(n, 1, seed ^ 2).column(0).into_owned();
        let diag = gauss(d, 1, seed ^ 3).column(0).map(|v| 0.5 + v.abs());
        let prior = GaussianPrior::diagonal(diag).unwrap();
        let svd = truncated_svd(&x, m, SvdMethod::randomized(seed)).unwrap();
        let lr = lr_posterior(&svd, &y, &prior, 1.0).unwrap();
        let dense = lr.to_dense().covariance;
        for i in 0..d {
            for j in 0..d {
                prop_assert!((lr.query(i, j) - dense[(i, j)]).abs() <= 1e-12 * dense.amax().max(1.0));
                prop_assert_eq!(lr.query(i, j), lr.query(j, i));
            }
        }
    }

    #[test]
    fn probit_is_a_symmetric_probability(m in -30.0f64..30.0, v in 0.0f64..100.0) {
        let p = probit_probability(m, v);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + probit_probability(-m, v) - 1.0).abs() <= 1e-12);
        prop_assert!(probit_probability(m + 0.5, v) >= p);
    }

    #[test]
    fn logistic_curvature_is_bounded(a in -50.0f64..50.0, positive in any::<bool>()) {
        let y = if positive { 1.0 } else { -1.0 };
        let d1 = Family::Logistic.derivative(y, a, 1);
        let d2 = Family::Logistic.derivative(y, a, 2);
        prop_assert!(d1.abs() <= 1.0);
        prop_assert!((-0.25..=0.0).contains(&d2));
    }

    #[test]
    fn w2_is_a_symmetric_distance(dim in 1usize..6, seed in any::<u64>()) {
        let a = gauss(dim, dim, seed);
        let b = gauss(dim, dim, seed ^ 4);
        let c1 = &a * a.transpose() + Matrix::identity(dim, dim) * 0.1;
        let c2 = &b * b.transpose() + Matrix::identity(dim, dim) * 0.1;
        let m1 = gauss(dim, 1, seed ^ 5).column(0).into_owned();
        let m2 = Vector::zeros(dim);
        let ab = w2_gaussians(&m1, &c1, &m2, &c2).unwrap();
        let ba = w2_gaussians(&m2, &c2, &m1, &c1).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.max(1.0));
        prop_assert!(w2_gaussians(&m1, &c1, &m1, &c1).unwrap() <= 1e-6);
        prop_assert!(ab >= (&m1 - &m2).norm() - 1e-12);
    }

    #[test]
    fn rotations_are_orthogonal(d in 1usize..30, seed in any::<u64>()) {
        let r = random_rotation(d, seed);
        prop_assert!((r.tr_mul(&r) - Matrix::identity(d, d)).amax() <= 1e-12);
    }

    #[test]
    fn binary_matrices_round_trip(rows in 0usize..8, cols in 0usize..8, seed in any::<u64>()) {
        let m = gauss(rows, cols, seed);
        let mut buf = Vec::new();
        write_matrix_bin(&m, &mut buf).unwrap();
        prop_assert_eq!(read_matrix_bin(buf.as_slice()).unwrap(), m);
    }
}
