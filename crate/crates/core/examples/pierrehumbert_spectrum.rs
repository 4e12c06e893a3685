//! Galerkin spectrum of the averaged Pierrehumbert shear operator.
//!
//! `cargo run --release --example pierrehumbert_spectrum [tau] [K]`

use rdslab::models::{Model, Pierrehumbert};
use rdslab::spectral::{build_galerkin, operator_spectrum};

fn main() -> rdslab::Result<()> {
    let mut args = std::env::args().skip(1);
    let tau: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let k: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(16);
    let model = Model::Pierrehumbert(Pierrehumbert::new(tau)?);

    let op = build_galerkin(&model, &Pierrehumbert::template(), k, 0.0)?;
    let rep = operator_spectrum(&op, 0.0)?;
    println!(
        "tau = {tau}, K = {k}: {} modes, diagonal = {}",
        op.len(),
        op.is_diagonal()
    );
    println!("leading {:.12}", rep.leading);
    println!("subleading |lambda| = {:.12}", rep.subleading_modulus);
    println!("weak mixing obstruction: {}", rep.weak_mixing_obstruction);
    for z in rep.eigenvalues.iter().take(8) {
        println!("  {:+.10} {:+.10}i  |{:.10}|", z.re, z.im, z.norm());
    }

    // Finitely many phases break the diagonal structure.
    for q in [1, 2, 4, 8] {
        let op = build_galerkin(&model, &Pierrehumbert::discretised_template(q), k, 0.0)?;
        let r = operator_spectrum(&op, 0.0)?;
        println!(
            "Q = {q:2}: subleading {:.8}, peripheral {}",
            r.subleading_modulus, r.peripheral_count
        );
    }
    Ok(())
}
