//! Eigenvalue-one multiplicities and the weak-mixing detector on models that
//! are not ergodic, with the Pierrehumbert model as a mixing control.
//!
//! `cargo run --release --example non_ergodic_detectors [K]`

use rdslab::measure::DrivingMeasure;
use rdslab::models::{build_model, AffineTorus, BlockLayout, Matrix, Model, ModelConfig, Pierrehumbert};
use rdslab::spectral::{build_galerkin, operator_spectrum};

fn main() -> rdslab::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let q = 4;
    let offs: Vec<Vec<f64>> = (0..q * q)
        .map(|i| vec![(i / q) as f64 / q as f64, (i % q) as f64 / q as f64])
        .collect();
    let rational = Model::Affine(AffineTorus::new(
        &vec![Matrix::identity(2, 2); offs.len()],
        Some(&offs),
        None,
    )?);
    let ids: Vec<usize> = (0..offs.len()).collect();
    let rep = operator_spectrum(&build_galerkin(&rational, &DrivingMeasure::uniform(&ids), k, 0.0)?, 0.0)?;
    println!(
        "translations by (Z/{q})^2, K = {k}: unit multiplicity {}, obstruction {}",
        rep.unit_multiplicity, rep.weak_mixing_obstruction
    );

    let t4 = build_model(&ModelConfig::BlockShear {
        base: vec![
            vec![vec![2.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 1.0], vec![1.0, 2.0]],
        ],
        power: 1,
        shear: 10.0,
        layout: BlockLayout::Factoring,
        torus: true,
    })?;
    let rep = operator_spectrum(&build_galerkin(&t4, &t4.template(), 4, 0.0)?, 0.0)?;
    println!(
        "T^4 factoring over the identity, K = 4: unit multiplicity {}, obstruction {}",
        rep.unit_multiplicity, rep.weak_mixing_obstruction
    );

    let p = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let rep = operator_spectrum(&build_galerkin(&p, &p.template(), 16, 0.0)?, 0.0)?;
    println!(
        "Pierrehumbert tau = 1, K = 16: unit multiplicity {}, obstruction {}",
        rep.unit_multiplicity, rep.weak_mixing_obstruction
    );
    Ok(())
}
