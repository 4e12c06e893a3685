use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use rdslab::cocycle::{
    conormal_sweep, cotangent_expansion, expansion_lambda, lyapunov_spectrum, tangent_expansion, Budget,
    CotangentFrame, SearchPlan,
};
use rdslab::measure::{DrivingMeasure, MapAtom, Transform};
use rdslab::models::{lift_product, AffineTorus, Matrix, Model, Pierrehumbert, TorusPoint, HORIZONTAL, VERTICAL};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0xc0c1),
        ..ProptestConfig::default()
    }
}

fn sl2() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0..3usize, 1..5).prop_map(|gens| {
        let g = [
            Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
            Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        ];
        gens.iter().fold(Matrix::identity(2, 2), |m, &i| m * &g[i])
    })
}

fn sl3() -> impl Strategy<Value = Matrix> {
    prop::collection::vec((0..3usize, 0..3usize), 1..5).prop_map(|els| {
        els.iter().fold(Matrix::identity(3, 3), |m, &(i, j)| {
            let mut e = Matrix::identity(3, 3);
            e[(i, (i + 1 + j % 2) % 3)] = 1.0;
            m * e
        })
    })
}

/// A two-map affine model on the 2-torus with the uniform measure.
fn affine_pair() -> impl Strategy<Value = (Model, DrivingMeasure)> {
    (sl2(), sl2(), 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, s, t)| {
        let m = Model::Affine(AffineTorus::new(&[a, b], Some(&[vec![s, t], vec![t, s]]), None).unwrap());
        (
            m,
            DrivingMeasure::finite(vec![MapAtom::new(0, 0.5), MapAtom::new(1, 0.5)]),
        )
    })
}

fn pierrehumbert() -> impl Strategy<Value = (Model, DrivingMeasure)> {
    (0.2..2.5f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(tau, t0, t1)| {
        let m = Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap());
        let mu = DrivingMeasure::finite(vec![
            MapAtom::new(HORIZONTAL, 0.5).with_phase(t0),
            MapAtom::new(VERTICAL, 0.5).with_phase(t1),
        ]);
        (m, mu)
    })
}

fn two_dimensional() -> impl Strategy<Value = (Model, DrivingMeasure)> {
    prop_oneof![affine_pair(), pierrehumbert()]
}

fn unit2() -> impl Strategy<Value = Vec<f64>> {
    (0.0..std::f64::consts::TAU).prop_map(|a| vec![a.cos(), a.sin()])
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn conormal_identity_holds_word_by_word(sys in prop_oneof![
        two_dimensional(),
        (sl3(), sl3()).prop_map(|(a, b)| {
            let m = Model::Affine(AffineTorus::new(&[a, b], None, None).unwrap());
            (m, DrivingMeasure::finite(vec![MapAtom::new(0, 0.5), MapAtom::new(1, 0.5).with_transform(Transform::Inverse)]))
        }),
        pierrehumbert().prop_map(|(m, mu)| (lift_product(&m, 2).unwrap(), mu)),
    ], seed in any::<u64>(), len in 1usize..8) {
        let (m, mu) = sys;
        let sweep = conormal_sweep(&m, &mu, 200, len, seed).unwrap();
        prop_assert!(sweep.max_log_discrepancy < 1e-10, "discrepancy {}", sweep.max_log_discrepancy);
    }

    #[test]
    fn tangent_and_cotangent_agree_in_two_dimensions((m, mu) in two_dimensional(), x in prop::collection::vec(0.0..1.0f64, 2), v in unit2(), n in 1usize..4) {
        let base = TorusPoint::new(x);
        let budget = Budget::default();
        let t = tangent_expansion(&m, &mu, n, &base, &v, &budget).unwrap();
        let rv = vec![-v[1], v[0]];
        let c = cotangent_expansion(&m, &mu, n, &CotangentFrame::new(base, rv).unwrap(), &budget).unwrap();
        prop_assert!((t.value - c.value).abs() < 1e-10, "{} vs {}", t.value, c.value);
    }

    #[test]
    fn tangent_and_cotangent_infima_agree((m, mu) in affine_pair(), n in 1usize..3) {
        let budget = Budget::default();
        let t = expansion_lambda(&m, &mu, n, &SearchPlan::tangent(), &budget).unwrap();
        let c = expansion_lambda(&m, &mu, n, &SearchPlan::cotangent(), &budget).unwrap();
        let tol = 1e-3 * (1.0 + t.value.abs());
        prop_assert!((t.value - c.value).abs() <= tol + 3.0 * (t.stderr + c.stderr), "{} vs {}", t.value, c.value);
    }

    #[test]
    fn lyapunov_exponents_sum_to_zero(sys in prop_oneof![
        two_dimensional(),
        pierrehumbert().prop_map(|(m, mu)| (lift_product(&m, 2).unwrap(), mu)),
    ], seed in any::<u64>()) {
        let (m, mu) = sys;
        let x0 = TorusPoint::new(vec![0.3; m.dim()]);
        let r = lyapunov_spectrum(&m, &mu, 2000, &x0, seed, 10).unwrap();
        let sum: f64 = r.exponents.iter().sum();
        let conf: f64 = r.confidence.iter().sum();
        prop_assert!(sum.abs() <= conf + 1e-9, "sum {sum}, confidence {conf}");
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn two_point_lift_keeps_the_sign((m, mu) in affine_pair()) {
        let budget = Budget::default();
        let plan = SearchPlan::cotangent();
        let base = expansion_lambda(&m, &mu, 2, &plan, &budget).unwrap();
        let lifted = expansion_lambda(&lift_product(&m, 2).unwrap(), &mu, 2, &plan, &budget).unwrap();
        if base.value >= 0.0 {
            prop_assert!(lifted.value >= -1e-9, "base {} lifted {}", base.value, lifted.value);
        }
    }

    #[test]
    fn infimum_is_superadditive_in_the_word_length((m, mu) in affine_pair(), j in 2usize..=3) {
        let budget = Budget { word_cap: 1, mc_words: 4000, seed: 3 };
        let plan = SearchPlan::cotangent();
        let one = expansion_lambda(&m, &mu, 1, &plan, &budget).unwrap();
        let many = expansion_lambda(&m, &mu, j, &plan, &budget).unwrap();
        let slack = 3.0 * (one.stderr + many.stderr) + 1e-3 * (1.0 + one.value.abs());
        prop_assert!(many.value >= one.value - slack, "{} at {j} vs {} at 1", many.value, one.value);
    }
}
