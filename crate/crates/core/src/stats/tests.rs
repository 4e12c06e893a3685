use std::f64::consts::TAU;

use num_complex::Complex64;

use super::*;
use crate::measure::{enumerate_words, DrivingMeasure};
use crate::models::{AffineTorus, Matrix, Model, Pierrehumbert};
use crate::special::bessel_j0;

fn pierrehumbert(tau: f64) -> (Model, DrivingMeasure) {
    (
        Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap()),
        Pierrehumbert::template(),
    )
}

fn affine(mats: &[[f64; 4]], offsets: &[[f64; 2]]) -> Model {
    let m: Vec<Matrix> = mats.iter().map(|a| Matrix::from_row_slice(2, 2, a)).collect();
    let b: Vec<Vec<f64>> = offsets.iter().map(|o| o.to_vec()).collect();
    Model::Affine(AffineTorus::new(&m, Some(&b), None).unwrap())
}

fn op_budget() -> StatsBudget {
    StatsBudget::default()
}

#[test]
fn observable_basics() {
    let c = Observable::cos_mode(&[1, 0], 2f64.sqrt());
    assert!(c.is_real() && c.is_zero_mean());
    assert!((c.l2_norm_sq() - 1.0).abs() < 1e-15);
    assert!((c.eval_real(&[0.125, 0.3]) - 2f64.sqrt() * (TAU * 0.125).cos()).abs() < 1e-14);
    let s = Observable::sin_mode(&[2, 1], 1.0);
    assert!(s.is_real());
    assert!((s.eval(&[0.1, 0.2]).re - (TAU * 0.4).sin()).abs() < 1e-14);
    assert!(!Observable::exp_mode(&[1, 0]).is_real());
    assert!(Observable::new(2, [(vec![1], Complex64::new(1.0, 0.0))]).is_err());
    let p = c.product(&c).unwrap();
    // 2cos² = 1 + cos(4πx)
    assert!((p.coefficient(&[0, 0]).re - 1.0).abs() < 1e-15);
    assert!((p.coefficient(&[2, 0]).re - 0.5).abs() < 1e-15);
}

#[test]
fn plancherel_against_quadrature() {
    let phi = Observable::new(
        2,
        [
            (vec![1, -2], Complex64::new(0.3, -0.1)),
            (vec![0, 3], Complex64::new(-0.7, 0.2)),
            (vec![2, 2], Complex64::new(0.1, 0.4)),
        ],
    )
    .unwrap();
    let psi = Observable::cos_mode(&[1, -2], 1.0)
        .product(&Observable::sin_mode(&[1, 1], 1.0))
        .unwrap();
    let n = 256;
    let mut q = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let x = [i as f64 / n as f64, j as f64 / n as f64];
            q += phi.eval(&x).conj() * psi.eval(&x);
        }
    }
    q /= (n * n) as f64;
    assert!((q - phi.inner(&psi)).norm() < 1e-10);
}

#[test]
fn pierrehumbert_operator_series_is_geometric() {
    let (m, mu) = pierrehumbert(1.0);
    let phi = Observable::cos_mode(&[1, 0], 2f64.sqrt());
    let s = correlation_series(&m, &mu, &phi, &phi, 50, CorrelationMethod::Operator, &op_budget()).unwrap();
    let q = bessel_j0(1.0);
    for (n, v) in s.values.iter().enumerate() {
        assert!((v.re - q.powi(n as i32)).abs() < 1e-10 && v.im.abs() < 1e-12);
    }
    let fit = mixing_rate_fit(&s).unwrap();
    assert_eq!(fit.status, FitStatus::Decaying);
    assert!((fit.theta_hat.unwrap() - q).abs() < 1e-6);
}

#[test]
fn zero_steps_is_the_inner_product() {
    let m = affine(&[[2.0, 1.0, 1.0, 1.0]], &[[0.3, 0.1]]);
    let phi = Observable::cos_mode(&[1, 2], 1.0);
    let psi = Observable::cos_mode(&[1, 2], 0.5)
        .product(&Observable::cos_mode(&[0, 1], 1.0))
        .unwrap();
    let mu = DrivingMeasure::dirac(0);
    let s = correlation_series(&m, &mu, &phi, &psi, 0, CorrelationMethod::Operator, &op_budget()).unwrap();
    assert_eq!(s.values[0], phi.inner(&psi));
}

#[test]
fn affine_pair_correlations_match_enumeration() {
    let m = affine(
        &[[1.0, 2.0, 0.0, 1.0], [1.0, 0.0, 2.0, 1.0]],
        &[[0.1, 0.0], [0.0, 0.35]],
    );
    let mu = DrivingMeasure::finite(vec![
        crate::measure::MapAtom::new(0, 0.4),
        crate::measure::MapAtom::new(1, 0.6),
    ]);
    let k1 = [1i64, -1];
    let psi = Observable::exp_mode(&k1);
    let mut terms = Vec::new();
    for a in -40..=40i64 {
        for b in -40..=40i64 {
            terms.push((
                vec![a, b],
                Complex64::new(
                    ((a * 7 + b * 3).rem_euclid(5) + 1) as f64,
                    (a - 2 * b).rem_euclid(3) as f64,
                ),
            ));
        }
    }
    let phi = Observable::new(2, terms).unwrap();
    let s = correlation_series(&m, &mu, &phi, &psi, 6, CorrelationMethod::Operator, &op_budget()).unwrap();
    assert_eq!(s.values[0], phi.inner(&psi));
    for n in 1..=6 {
        // e_k ∘ f_w: transport k through the letters from the last one
        let mut want = Complex64::new(0.0, 0.0);
        for w in enumerate_words(&mu, n, 1 << 20).unwrap() {
            let mut k = k1.to_vec();
            let mut phase = 0.0;
            for a in w.letters.iter().rev() {
                let mat = m.linear_part(a).unwrap();
                let mut b = vec![0.0; 2];
                m.apply_in_place(a, &mut b);
                phase += k[0] as f64 * b[0] + k[1] as f64 * b[1];
                k = vec![
                    (mat[(0, 0)] * k[0] as f64 + mat[(1, 0)] * k[1] as f64).round() as i64,
                    (mat[(0, 1)] * k[0] as f64 + mat[(1, 1)] * k[1] as f64).round() as i64,
                ];
            }
            want += w.weight * phi.coefficient(&k).conj() * Complex64::from_polar(1.0, TAU * phase);
        }
        assert!(want.norm() > 1e-3, "n = {n}: {want}");
        assert!(
            (s.values[n] - want).norm() < 1e-10,
            "n = {n}: {} vs {want}",
            s.values[n]
        );
    }
}

#[test]
fn monte_carlo_agrees_with_operator() {
    let (m, mu) = pierrehumbert(1.0);
    let phi = Observable::cos_mode(&[1, 0], 2f64.sqrt());
    let budget = StatsBudget {
        samples: 20_000,
        seed: 7,
        k: None,
    };
    let op = correlation_series(&m, &mu, &phi, &phi, 10, CorrelationMethod::Operator, &budget).unwrap();
    let mc = correlation_series(&m, &mu, &phi, &phi, 10, CorrelationMethod::MonteCarlo, &budget).unwrap();
    let se = mc.stderr.as_ref().unwrap();
    let bad = (0..=10)
        .filter(|&n| (op.values[n] - mc.values[n]).norm() > 3.0 * se[n])
        .count();
    assert!(bad <= 1, "{bad} deviations beyond 3σ");
}

#[test]
fn geometric_input_fits_exactly() {
    let q: f64 = 0.37;
    let s = CorrelationSeries {
        method: CorrelationMethod::Operator,
        values: (0..20).map(|n| Complex64::new(q.powi(n), 0.0)).collect(),
        stderr: None,
        samples: 0,
        k: None,
        max_truncation_loss: 0.0,
        warnings: vec![],
    };
    let f = mixing_rate_fit(&s).unwrap();
    assert!((f.theta_hat.unwrap() - q).abs() < 1e-10);
    let mut short = s.clone();
    short.values.truncate(5);
    assert!(mixing_rate_fit(&short).is_err());
}

#[test]
fn translations_do_not_mix() {
    let m = affine(
        &[[1.0, 0.0, 0.0, 1.0]],
        &[[0.5 * (5f64.sqrt() - 1.0), 2f64.sqrt() - 1.0]],
    );
    let mu = DrivingMeasure::dirac(0);
    let phi = Observable::cos_mode(&[1, 0], 1.0)
        .product(&Observable::cos_mode(&[0, 1], 1.0))
        .unwrap();
    let phi = Observable::new(
        2,
        phi.terms()
            .iter()
            .cloned()
            .chain(Observable::cos_mode(&[1, 1], 0.3).terms().iter().cloned()),
    )
    .unwrap();
    let s = correlation_series(&m, &mu, &phi, &phi, 60, CorrelationMethod::Operator, &op_budget()).unwrap();
    let f = mixing_rate_fit(&s).unwrap();
    assert_ne!(f.status, FitStatus::Decaying, "{f:?}");
    let gk = green_kubo_variance(&m, &mu, &phi, &GreenKuboOptions::default()).unwrap();
    assert_eq!(gk.status, GreenKuboStatus::NonDecaying);
    assert!(gk.sigma2.is_none());
    let r = clt_experiment(&m, &mu, &phi, 100, 1000, 1, &GreenKuboOptions::default()).unwrap();
    assert_eq!(r.status, CltStatus::NonMixing);
}

#[test]
fn triple_correlation_reductions() {
    let (m, mu) = pierrehumbert(1.0);
    let c = Observable::cos_mode(&[1, 0], 1.0);
    let one = Observable::new(2, [(vec![0, 0], Complex64::new(1.0, 0.0))]).unwrap();
    let budget = StatsBudget {
        k: Some(4),
        ..StatsBudget::default()
    };
    let t = triple_correlation(&m, &mu, [&c, &one, &c], 2, 5, CorrelationMethod::Operator, &budget).unwrap();
    let p = correlation_series(&m, &mu, &c, &c, 5, CorrelationMethod::Operator, &budget).unwrap();
    assert!((t.value - p.values[5]).norm() < 1e-12);

    // (2,4): 𝒢²(c · q² c) = q² 𝒢²(½ + ½cos 4πx) so the value is q² · q²(2) · ¼
    let t = triple_correlation(&m, &mu, [&c, &c, &c], 2, 4, CorrelationMethod::Operator, &budget).unwrap();
    let q = bessel_j0(1.0);
    let want = 0.25 * q * q * bessel_j0(2.0).powi(2);
    let c4 = Observable::cos_mode(&[2, 0], 1.0);
    let t2 = triple_correlation(&m, &mu, [&c4, &c, &c], 2, 4, CorrelationMethod::Operator, &budget).unwrap();
    assert!((t.value.re).abs() < 1e-14);
    assert!((t2.value.re - want).abs() < 1e-12, "{} vs {want}", t2.value.re);
    let mc = triple_correlation(
        &m,
        &mu,
        [&c4, &c, &c],
        2,
        4,
        CorrelationMethod::MonteCarlo,
        &StatsBudget {
            samples: 50_000,
            seed: 3,
            k: None,
        },
    )
    .unwrap();
    assert!((mc.value - t2.value).norm() < 4.0 * mc.stderr.unwrap());

    let tiny = StatsBudget {
        k: Some(1),
        samples: 1000,
        seed: 0,
    };
    let f = triple_correlation(&m, &mu, [&c, &c, &c], 1, 2, CorrelationMethod::Operator, &tiny).unwrap();
    assert_eq!(f.method, CorrelationMethod::MonteCarlo);
    assert!(!f.warnings.is_empty());
}

#[test]
fn green_kubo_closed_form() {
    let (m, mu) = pierrehumbert(1.0);
    let phi = Observable::cos_mode(&[1, 0], 1.0);
    let g = green_kubo_variance(&m, &mu, &phi, &GreenKuboOptions::default()).unwrap();
    let q = bessel_j0(1.0);
    let want = 0.5 * (1.0 + q) / (1.0 - q);
    assert_eq!(g.status, GreenKuboStatus::Ok);
    assert!((g.sigma2.unwrap() - want).abs() < 1e-6);
    assert!((want - 3.758902).abs() < 1e-6);
}

#[test]
fn green_kubo_without_returns_is_the_norm() {
    let m = affine(&[[2.0, 1.0, 1.0, 1.0]], &[[0.0, 0.0]]);
    let phi = Observable::cos_mode(&[1, 0], 1.0);
    let opts = GreenKuboOptions { n_max: 20, k: None };
    let g = green_kubo_variance(&m, &DrivingMeasure::dirac(0), &phi, &opts).unwrap();
    assert_eq!(g.status, GreenKuboStatus::Ok);
    assert_eq!(g.sigma2, Some(0.5));
}

#[test]
fn clt_zero_observable_is_degenerate() {
    let (m, mu) = pierrehumbert(1.0);
    let r = clt_experiment(
        &m,
        &mu,
        &Observable::zero(2),
        100,
        1000,
        0,
        &GreenKuboOptions::default(),
    )
    .unwrap();
    assert_eq!(r.status, CltStatus::Degenerate);
    assert_eq!(r.sigma2_mc, 0.0);
    assert_eq!(r.ks_distance, 0.0);
}

#[test]
fn clt_small_scale() {
    let (m, mu) = pierrehumbert(1.0);
    let phi = Observable::cos_mode(&[1, 0], 1.0);
    let r = clt_experiment(&m, &mu, &phi, 400, 4000, 11, &GreenKuboOptions::default()).unwrap();
    assert_eq!(r.status, CltStatus::Ok);
    assert!((r.sigma2_mc / r.sigma2_gk.unwrap() - 1.0).abs() < 0.1, "{r:?}");
    assert!(r.ks_distance < 0.05);
    assert!(clt_experiment(&m, &mu, &phi, 10, 4000, 11, &GreenKuboOptions::default()).is_err());
}

#[test]
fn mann_kendall_exact() {
    let t = mann_kendall(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(t.s, 6);
    assert!((t.p_value - 1.0 / 24.0).abs() < 1e-15);
    let t = mann_kendall(&[4.0, 3.0, 2.0, 1.0]);
    assert_eq!(t.p_value, 1.0);
    let t = mann_kendall(&[1.0, 3.0, 2.0]);
    assert_eq!(t.s, 1);
    assert!((t.p_value - 0.5).abs() < 1e-15);
}

#[test]
fn ks_of_normal_quantiles_is_small() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let g = Normal::new(0.0, 2.0).unwrap();
    let n = 1000;
    let xs: Vec<f64> = (0..n).map(|i| g.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
    let d = ks_distance(&xs, 4.0);
    assert!((d - 0.5 / n as f64).abs() < 1e-9);
    assert!(ks_distance(&xs, 1.0) > 0.1);
}

#[test]
fn berry_esseen_single_horizon() {
    let (m, mu) = pierrehumbert(1.0);
    let phi = Observable::cos_mode(&[1, 0], 1.0);
    let b = berry_esseen_scaling(&m, &mu, &phi, &[100], 1000, 0, &GreenKuboOptions::default()).unwrap();
    assert_eq!(b.rows.len(), 1);
    assert!(b.trend.is_none() && b.increasing_trend.is_none());
}
