//! Stability of the subleading eigenvalue as the Pierrehumbert phase law is
//! discretised, with the dd distance of each member to a reference law with eight phases.
//!
//! `cargo run --release --example phase_stability [K]`

use rdslab::measure::{DrivingMeasure, GridPlan};
use rdslab::models::{Model, Pierrehumbert};
use rdslab::spectral::{pierrehumbert_phase_sweep, stability_sweep};

fn main() -> rdslab::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let qs: Vec<usize> = (2..=16).collect();
    let sw = pierrehumbert_phase_sweep(1.0, &qs, k, 0.0)?;
    println!("base subleading {:.10}", sw.base_subleading);
    for m in &sw.members {
        println!(
            "{:>5}: |lambda| = {:.10}, deviation {:.2e}",
            m.label, m.subleading_modulus, m.deviation
        );
    }

    let model = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let family: Vec<(String, f64, DrivingMeasure)> = [1, 2, 3, 4]
        .iter()
        .map(|&q| (format!("Q={q}"), q as f64, Pierrehumbert::discretised_template(q)))
        .collect();
    let sweep = stability_sweep(
        &model,
        &Pierrehumbert::discretised_template(8),
        &family,
        6,
        0.0,
        Some(&GridPlan::new(16)),
    )?;
    for m in &sweep.members {
        println!(
            "{:>8}: dd = {:.4}, deviation {:.3e}",
            m.label,
            m.dd_to_base.unwrap_or(f64::NAN),
            m.deviation
        );
    }
    println!("log-log slope {:?}", sweep.log_log_slope);
    Ok(())
}
