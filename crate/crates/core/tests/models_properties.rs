use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use rdslab::measure::{MapAtom, Transform};
use rdslab::models::{
    lift_product, AffineTorus, Matrix, Model, Pierrehumbert, StandardMap, TorusPoint, HORIZONTAL, VERTICAL,
};
use rdslab::numeric::circle_delta;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x0de1),
        ..ProptestConfig::default()
    }
}

fn sl2() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0..3usize, 1..4).prop_map(|gens| {
        let g = [
            Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
            Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        ];
        gens.iter().fold(Matrix::identity(2, 2), |m, &i| m * &g[i])
    })
}

/// A conservative model with a few of its atoms.
fn system() -> impl Strategy<Value = (Model, Vec<MapAtom>)> {
    let phase = 0.0..1.0f64;
    prop_oneof![
        (sl2(), 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b0, b1)| {
            let m = Model::Affine(AffineTorus::new(&[a], Some(&[vec![b0, b1]]), None).unwrap());
            (
                m,
                vec![
                    MapAtom::new(0, 1.0),
                    MapAtom::new(0, 1.0).with_transform(Transform::Inverse),
                ],
            )
        }),
        (0.1..3.0f64, phase.clone(), phase.clone()).prop_map(|(tau, t0, t1)| {
            let m = Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap());
            (
                m,
                vec![
                    MapAtom::new(HORIZONTAL, 1.0).with_phase(t0),
                    MapAtom::new(VERTICAL, 1.0).with_phase(t1),
                    MapAtom::new(HORIZONTAL, 1.0)
                        .with_phase(t1)
                        .with_transform(Transform::Inverse),
                ],
            )
        }),
        (0.5..20.0f64, 0.01..1.0f64, -1.0..1.0f64).prop_map(|(kick, eps, w)| {
            let s = StandardMap::new(kick, eps).unwrap();
            let atoms = vec![
                s.atom_for_omega(w * eps),
                s.atom_for_omega(-w * eps).with_transform(Transform::Inverse),
            ];
            (Model::Standard(s), atoms)
        }),
        (0.1..2.0f64, phase).prop_map(|(tau, t)| {
            let p = Model::Pierrehumbert(Pierrehumbert::new(tau).unwrap());
            (
                lift_product(&p, 2).unwrap(),
                vec![MapAtom::new(VERTICAL, 1.0).with_phase(t)],
            )
        }),
    ]
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, d)
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn jacobians_preserve_volume((m, atoms) in system(), x in point(4), pick in 0usize..3) {
        let atom = &atoms[pick % atoms.len()];
        let x = TorusPoint::new(x[..m.dim()].to_vec());
        let jp = m.jacobian_pair(atom, &x).unwrap();
        let d = m.fiber_dim();
        prop_assert!((jp.det_jac.abs() - 1.0).abs() < 1e-10);
        prop_assert!((&jp.cojac * jp.jac.transpose() - Matrix::identity(d, d)).amax() < 1e-10);
    }

    #[test]
    fn inverse_jacobian_at_the_image((m, atoms) in system(), x in point(4), pick in 0usize..3) {
        let atom = &atoms[pick % atoms.len()];
        let inv = MapAtom { transform: atom.transform.then(Transform::Inverse), ..atom.clone() };
        let x = TorusPoint::new(x[..m.dim()].to_vec());
        let fx = m.apply(atom, &x).unwrap();
        let back = m.jacobian_pair(&inv, &fx).unwrap().jac;
        let fwd = m.jacobian_pair(atom, &x).unwrap().jac;
        prop_assert!((back - fwd.try_inverse().unwrap()).amax() < 1e-9);
        let round = m.apply(&inv, &fx).unwrap();
        for (a, b) in round.coords().iter().zip(x.coords()) {
            prop_assert!(circle_delta(*a, *b).abs() < 1e-10);
        }
    }

    #[test]
    fn chain_rule_along_words((m, atoms) in system(), x in point(4), picks in prop::collection::vec(0usize..3, 1..=5)) {
        let d = m.dim();
        let x = x[..d].to_vec();
        let word: Vec<MapAtom> = picks.iter().map(|&i| atoms[i % atoms.len()].clone()).collect();
        let mut prod = Matrix::identity(d, d);
        let mut p = x.clone();
        for a in &word {
            prod = m.jacobian(a, &p) * prod;
            m.apply_in_place(a, &mut p);
        }
        let h = 1e-6;
        let scale = prod.norm().max(1.0);
        for j in 0..d {
            let (mut plus, mut minus) = (x.clone(), x.clone());
            plus[j] += h;
            minus[j] -= h;
            m.apply_word(&word, &mut plus);
            m.apply_word(&word, &mut minus);
            for i in 0..d {
                let fd = circle_delta(plus[i], minus[i]) / (2.0 * h);
                prop_assert!((fd - prod[(i, j)]).abs() / scale < 1e-5, "entry ({i},{j}): {fd} vs {}", prod[(i, j)]);
            }
        }
    }

    #[test]
    fn points_reduce_into_the_unit_cube(x in prop::collection::vec(-5.0..5.0f64, 1..5)) {
        let p = TorusPoint::new(x);
        prop_assert!(p.coords().iter().all(|c| (0.0..1.0).contains(c)));
    }
}
