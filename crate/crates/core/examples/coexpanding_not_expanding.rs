//! A T⁴ block-shear cocycle that expands covectors on average while a flat
//! subspace of tangent vectors never grows.
//!
//! `cargo run --release --example coexpanding_not_expanding [power]`

use rdslab::cocycle::{expansion_lambda, per_word_log_growth, tangent_expansion, Budget, Bundle, SearchPlan};
use rdslab::models::{build_model, BlockLayout, ModelConfig, TorusPoint};

fn main() -> rdslab::Result<()> {
    let power: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let base = vec![
        vec![vec![2.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![1.0, 2.0]],
    ];
    let budget = Budget::default();

    let lin = build_model(&ModelConfig::LinearCocycle {
        matrices: base.clone(),
        weights: None,
        power: Some(power),
    })?;
    let cot = expansion_lambda(&lin, &lin.template(), 1, &SearchPlan::cotangent(), &budget)?;
    println!(
        "base tuple at power {power}: one-step cotangent constant {:.4}",
        cot.value
    );
    println!("threshold ln 100 + ln 20 = {:.4}", 100f64.ln() + 20f64.ln());

    let model = build_model(&ModelConfig::BlockShear {
        base,
        power,
        shear: 10.0,
        layout: BlockLayout::Coexpanding,
        torus: false,
    })?;
    let mu = model.template();
    let est = expansion_lambda(&model, &mu, 1, &SearchPlan::cotangent(), &budget)?;
    println!(
        "T^4 cotangent expansion {:.4} +- {:.1e} ({:?})",
        est.value, est.stderr, est.mode
    );
    if let Some(w) = &est.witness {
        println!("  witness covector {:?}", w.direction);
    }

    let x = TorusPoint::base_point();
    let flat = [0.0, 0.0, 1.0, 0.0];
    let t = tangent_expansion(&model, &mu, 1, &x, &flat, &budget)?;
    let logs = per_word_log_growth(&model, &mu, 1, Bundle::Tangent, &x, &flat, 1 << 20)?;
    let worst = logs.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    println!(
        "flat tangent expansion {} (max per-word |ln growth| {worst} over {} words)",
        t.value,
        logs.len()
    );
    Ok(())
}
