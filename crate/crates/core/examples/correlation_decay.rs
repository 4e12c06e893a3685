//! Pair and triple correlations: operator powers against Monte Carlo.
//!
//! `cargo run --release --example correlation_decay [samples]`

use rdslab::models::{Model, Pierrehumbert};
use rdslab::stats::{
    correlation_series, mixing_rate_fit, triple_correlation, CorrelationMethod, Observable, StatsBudget,
};

fn main() -> rdslab::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let model = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let mu = Pierrehumbert::template();
    let phi = Observable::cos_mode(&[1, 0], 2f64.sqrt());
    let psi = Observable::sin_mode(&[1, 1], 1.0);
    let budget = StatsBudget {
        samples,
        seed: 7,
        k: None,
    };

    let op = correlation_series(&model, &mu, &phi, &phi, 30, CorrelationMethod::Operator, &budget)?;
    let mc = correlation_series(&model, &mu, &phi, &phi, 8, CorrelationMethod::MonteCarlo, &budget)?;
    let se = mc.stderr.clone().unwrap_or_default();
    println!(" n   operator        monte carlo     stderr");
    for (n, (m, e)) in mc.values.iter().zip(&se).enumerate() {
        println!("{n:2}  {:+.8}  {:+.8}  {e:.1e}", op.values[n].re, m.re);
    }
    let fit = mixing_rate_fit(&op)?;
    println!("fit: {:?}, theta_hat = {:?}", fit.status, fit.theta_hat);

    let mixed = correlation_series(&model, &mu, &phi, &psi, 10, CorrelationMethod::Operator, &budget)?;
    println!("<cos x, G^n sin(x+y)>, n = 10: {:.3e}", mixed.values[10].norm());

    let c = Observable::cos_mode(&[2, 0], 1.0);
    for (n1, n2) in [(1, 1), (2, 3), (4, 4)] {
        let t = triple_correlation(
            &model,
            &mu,
            [&phi, &phi, &c],
            n1,
            n2,
            CorrelationMethod::MonteCarlo,
            &budget,
        )?;
        println!(
            "triple ({n1}, {n2}): {:+.5} +- {:.1e}",
            t.value.re,
            t.stderr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
