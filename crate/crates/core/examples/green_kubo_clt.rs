//! Green–Kubo variance and CLT for the Pierrehumbert shear model.
//!
//! `cargo run --release --example green_kubo_clt [trials]`

use rdslab::models::{Model, Pierrehumbert};
use rdslab::stats::{berry_esseen_scaling, clt_experiment, green_kubo_variance, GreenKuboOptions, Observable};

fn main() -> rdslab::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4000);
    let model = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let mu = Pierrehumbert::template();
    let phi = Observable::cos_mode(&[1, 0], 1.0);
    let opts = GreenKuboOptions::default();

    let gk = green_kubo_variance(&model, &mu, &phi, &opts)?;
    println!(
        "sigma2_gk = {:.8}  (tail bound {:.1e}, rate {:.6})",
        gk.sigma2.unwrap_or(f64::NAN),
        gk.tail_bound,
        gk.fit.theta_hat.unwrap_or(f64::NAN)
    );

    let t = std::time::Instant::now();
    let clt = clt_experiment(&model, &mu, &phi, 10_000, trials, 1, &opts)?;
    println!(
        "N = 10000, trials = {trials}: sigma2_mc = {:.5}, ks = {:.4}, status {:?} ({:.1?})",
        clt.sigma2_mc,
        clt.ks_distance,
        clt.status,
        t.elapsed()
    );

    let t = std::time::Instant::now();
    let be = berry_esseen_scaling(&model, &mu, &phi, &[100, 400, 1600, 6400], trials, 2, &opts)?;
    for row in &be.rows {
        println!(
            "N = {:5}  ks = {:.5}  sqrt(N)*ks = {:.4}",
            row.n, row.ks_distance, row.sqrt_n_ks
        );
    }
    if let Some(mk) = &be.trend {
        println!("Mann-Kendall S = {}, p = {:.4} ({:.1?})", mk.s, mk.p_value, t.elapsed());
    }
    Ok(())
}
