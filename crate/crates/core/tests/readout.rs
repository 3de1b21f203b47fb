use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spherical_esn::readout::*;
use spherical_esn::EsnError;

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: &faer::Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.read(i, j))
}

/// `pinv([X; sqrt(l) I]) [Y; 0]`, transposed to N_out x N.
fn pinv_ridge(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (t, n) = x.shape();
    let mut a = DMatrix::zeros(t + n, n);
    a.rows_mut(0, t).copy_from(x);
    for i in 0..n {
        a[(t + i, i)] = lambda.sqrt();
    }
    let mut b = DMatrix::zeros(t + n, y.ncols());
    b.rows_mut(0, t).copy_from(y);
    let pinv = from_faer(&to_faer(&a).thin_svd().pseudoinverse());
    (pinv * b).transpose()
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

#[test]
fn ridge_matches_pseudo_inverse_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for &(t, n, k, lambda) in &[(50, 10, 1, 0.0), (80, 20, 3, 1e-3), (30, 30, 2, 0.5), (10, 25, 1, 1e-2), (200, 40, 5, 1e-8)] {
        let x = random(&mut rng, t, n);
        let y = random(&mut rng, t, k);
        let w = fit_ridge(&x, &y, lambda).unwrap();
        let oracle = pinv_ridge(&x, &y, lambda);
        let err = (&w.w_out - &oracle).amax() / oracle.amax();
        assert!(err < 1e-9, "T={t} N={n} lambda={lambda}: rel err {err:e}");
        assert_eq!(w.ridge_lambda, lambda);
    }
}

#[test]
fn one_factorization_serves_many_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random(&mut rng, 120, 15);
    let y = random(&mut rng, 120, 6);
    let factor = RidgeFactor::new(&x, Regularization::Absolute(1e-4)).unwrap();
    let all = factor.solve(&y).unwrap();
    for c in 0..6 {
        let single = factor.solve(&y.columns(c, 1).into_owned()).unwrap();
        assert_eq!(single.w_out.row(0), all.w_out.row(c));
    }
}

#[test]
fn noiseless_linear_target_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random(&mut rng, 100, 8);
    let truth = random(&mut rng, 2, 8);
    let y = &x * truth.transpose();
    let w = fit_ridge_with(&x, &y, Regularization::default()).unwrap();
    assert!((w.w_out - truth).amax() < 1e-9);
    let pred = predict(&fit_ridge(&x, &y, 0.0).unwrap(), &x).unwrap();
    assert_eq!(accuracy_gamma(nrmse(&pred, &y).unwrap()), 1.0 - nrmse(&pred, &y).unwrap());
    assert!(nrmse(&pred, &y).unwrap() < 1e-12);
}

#[test]
fn rank_deficient_without_ridge_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut x = random(&mut rng, 40, 5);
    let c = x.column(0).into_owned();
    x.set_column(4, &(c * 2.0));
    let y = random(&mut rng, 40, 1);
    assert!(matches!(fit_ridge(&x, &y, 0.0), Err(EsnError::SingularReadout)));
    let w = fit_ridge(&x, &y, 1e-6).unwrap();
    assert!((w.w_out - pinv_ridge(&x, &y, 1e-6)).amax() < 1e-7);
}

#[test]
fn gamma_unit_identities() {
    let y = DMatrix::from_fn(500, 1, |i, _| (i as f64 * 0.37).sin() + 0.2);
    assert_eq!(accuracy_gamma(nrmse(&y, &y).unwrap()), 1.0);
    let mean = DMatrix::from_element(500, 1, y.mean());
    let g = accuracy_gamma(nrmse(&mean, &y).unwrap());
    assert!(g.abs() < 1e-12, "{g}");
    assert_eq!(accuracy_gamma(f64::NAN), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nrmse_is_shift_and_scale_invariant(
        y in prop::collection::vec(-5.0f64..5.0, 3..60),
        noise in prop::collection::vec(-1.0f64..1.0, 60),
        shift in -100.0f64..100.0,
        scale in 0.1f64..10.0,
    ) {
        let t = y.len();
        let actual = DMatrix::from_vec(t, 1, y);
        prop_assume!(actual.variance() > 1e-6);
        let pred = DMatrix::from_fn(t, 1, |i, _| actual[(i, 0)] + noise[i]);
        let base = nrmse(&pred, &actual).unwrap();
        let shifted = nrmse(&pred.add_scalar(shift), &actual.add_scalar(shift)).unwrap();
        let scaled = nrmse(&(&pred * scale), &(&actual * scale)).unwrap();
        prop_assert!((base - shifted).abs() <= 1e-9 * (1.0 + base));
        prop_assert!((base - scaled).abs() <= 1e-12 * (1.0 + base));
    }

    #[test]
    fn gamma_of_valid_nrmse_is_in_unit_interval(e in 0.0f64..1e6) {
        let g = accuracy_gamma(e);
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert!(g == 0.0 || (g - (1.0 - e)).abs() < 1e-15);
    }
}
