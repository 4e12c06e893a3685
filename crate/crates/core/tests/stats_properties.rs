use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdslab::measure::{DrivingMeasure, MapAtom};
use rdslab::models::{AffineTorus, Matrix, Model, Pierrehumbert};
use rdslab::stats::{
    correlation_series, green_kubo_variance, ks_distance, mann_kendall, CorrelationMethod, GreenKuboOptions,
    Observable, StatsBudget,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x57a7),
        ..ProptestConfig::default()
    }
}

fn mode(band: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-band..=band, 2)
}

/// Real trigonometric polynomials built from cosine and sine terms.
fn real_observable(band: i64) -> impl Strategy<Value = Observable> {
    prop::collection::vec((mode(band), -2.0..2.0f64, any::<bool>()), 1..5).prop_map(|terms| {
        let parts: Vec<Observable> = terms
            .iter()
            .map(|(k, a, c)| {
                if *c {
                    Observable::cos_mode(k, *a)
                } else {
                    Observable::sin_mode(k, *a)
                }
            })
            .collect();
        Observable::new(2, parts.iter().flat_map(|p| p.terms().to_vec())).unwrap()
    })
}

fn complex_observable(band: i64) -> impl Strategy<Value = Observable> {
    prop::collection::vec((mode(band), -1.0..1.0f64, -1.0..1.0f64), 1..6)
        .prop_map(|t| Observable::new(2, t.into_iter().map(|(k, a, b)| (k, Complex64::new(a, b)))).unwrap())
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn real_observables_are_conjugate_symmetric(phi in real_observable(4)) {
        prop_assert!(phi.is_real());
        for (k, c) in phi.terms() {
            let minus: Vec<i64> = k.iter().map(|x| -x).collect();
            prop_assert!((phi.coefficient(&minus) - c.conj()).norm() < 1e-12);
        }
        for x in [[0.1, 0.7], [0.45, 0.2]] {
            prop_assert!(phi.eval(&x).im.abs() < 1e-12);
        }
    }

    #[test]
    fn ks_distance_is_a_probability(sample in prop::collection::vec(-10.0..10.0f64, 1..200), sigma2 in 0.0..5.0f64) {
        let d = ks_distance(&sample, sigma2);
        prop_assert!((0.0..=1.0).contains(&d), "{d}");
    }

    #[test]
    fn trend_p_values_are_probabilities(xs in prop::collection::vec(-1.0..1.0f64, 1..30)) {
        let mk = mann_kendall(&xs);
        prop_assert!((0.0..=1.0).contains(&mk.p_value));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn inner_product_matches_grid_quadrature(phi in complex_observable(6), psi in complex_observable(6)) {
        let n = 256;
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let x = [i as f64 / n as f64, j as f64 / n as f64];
                q += phi.eval(&x).conj() * psi.eval(&x);
            }
        }
        q /= (n * n) as f64;
        prop_assert!((phi.inner(&psi) - q).norm() < 1e-10, "{} vs {q}", phi.inner(&psi));
    }

    #[test]
    fn green_kubo_variance_is_nonnegative(tau in 0.3..2.5f64, phi in real_observable(2)) {
        let m = Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap());
        let gk = green_kubo_variance(&m, &Pierrehumbert::template(), &phi.centred(), &GreenKuboOptions::default()).unwrap();
        if let Some(s2) = gk.sigma2 {
            prop_assert!(s2 >= 0.0, "{s2}");
        }
    }
}

fn random_affine(rng: &mut ChaCha8Rng) -> (Model, DrivingMeasure) {
    let g = [
        Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
    ];
    let mats: Vec<Matrix> = (0..2)
        .map(|_| (0..rng.random_range(1..3)).fold(Matrix::identity(2, 2), |m, _| m * &g[rng.random_range(0..3)]))
        .collect();
    let offs: Vec<Vec<f64>> = (0..2).map(|_| vec![rng.random(), rng.random()]).collect();
    let p: f64 = rng.random_range(0.2..0.8);
    let m = Model::Affine(AffineTorus::new(&mats, Some(&offs), None).unwrap());
    (
        m,
        DrivingMeasure::finite(vec![MapAtom::new(0, p), MapAtom::new(1, 1.0 - p)]),
    )
}

fn random_observable(rng: &mut ChaCha8Rng) -> Observable {
    let terms: Vec<(Vec<i64>, Complex64)> = (0..rng.random_range(1..4))
        .map(|_| {
            let k = vec![rng.random_range(-2..=2), rng.random_range(-2..=2)];
            let a = rng.random_range(0.0..TAU);
            (k, Complex64::from_polar(1.0, a))
        })
        .collect();
    Observable::new(2, terms).unwrap()
}

#[test]
fn operator_and_monte_carlo_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 200;
    let mut agree = 0;
    for case in 0..cases {
        let (m, mu) = if case % 2 == 0 {
            random_affine(&mut rng)
        } else {
            let tau = rng.random_range(0.3..2.5);
            (
                Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap()),
                Pierrehumbert::template(),
            )
        };
        let phi = random_observable(&mut rng);
        let psi = random_observable(&mut rng);
        let n: usize = rng.random_range(0..=12);
        let budget = StatsBudget {
            samples: 4000,
            seed: case,
            k: None,
        };
        let op = correlation_series(&m, &mu, &phi, &psi, n, CorrelationMethod::Operator, &budget).unwrap();
        let mc = correlation_series(&m, &mu, &phi, &psi, n, CorrelationMethod::MonteCarlo, &budget).unwrap();
        let se = mc.stderr.as_ref().unwrap()[n];
        if (op.values[n] - mc.values[n]).norm() <= 3.0 * se {
            agree += 1;
        }
    }
    assert!(
        agree as f64 >= 0.99 * cases as f64,
        "{agree} of {cases} within 3 stderr"
    );
}
