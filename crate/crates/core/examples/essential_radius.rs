//! High-frequency decay of the transfer operator and a Lasota–Yorke fit.
//!
//! `cargo run --release --example essential_radius [s]`

use rdslab::measure::DrivingMeasure;
use rdslab::models::{AffineTorus, Matrix, Model};
use rdslab::spectral::{essential_radius_estimate, lasota_yorke_fit, ProbeSet};

fn main() -> rdslab::Result<()> {
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let mats = [
        Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]),
    ];
    let model = Model::Affine(AffineTorus::new(&mats, None, None)?);
    let mu = DrivingMeasure::uniform(&[0, 1]);
    let probes = ProbeSet::default();

    let e = essential_radius_estimate(&model, &mu, s, 10.0, 8, &probes)?;
    println!("s = {s}, {} probes beyond |k| = {}", e.probes, e.r);
    for (n, rho) in e.rho_max.iter().enumerate() {
        println!(
            "  n = {}: rho_n = {rho:.6}, rho_n^(1/n) = {:.6}",
            n + 1,
            rho.powf(1.0 / (n + 1) as f64)
        );
    }
    println!(
        "eta_hat = {:.6} (fit rms {:.1e}), covector bound {:.6}",
        e.eta_hat, e.fit_rms, e.covector_eta
    );

    let mut ly_probes = probes.modes(2, 10.0);
    ly_probes.extend([vec![1, 0], vec![0, 1], vec![1, 1]]);
    let ly = lasota_yorke_fit(&model, &mu, s, 0.55, &[1, 2, 4, 8], &ly_probes, e.eta_hat)?;
    println!(
        "Lasota-Yorke at s_bar = {}: feasible {}, gapless {}",
        ly.s_bar, ly.feasible, ly.gapless
    );
    for (n, c) in &ly.table {
        println!("  C_{n} = {c:.4}");
    }
    Ok(())
}
