//! Covolume growth of hyperplanes against growth of their conormals under
//! the inverse-transpose cocycle, word by word.
//!
//! `cargo run --release --example conormal_identity [pairs]`

use rdslab::cocycle::conormal_sweep;
use rdslab::models::{lift_product, AffineTorus, Matrix, Model, Pierrehumbert};

fn main() -> rdslab::Result<()> {
    let pairs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let p = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let a = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    let b = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    let t3 = Model::Affine(AffineTorus::new(&[a, b], None, None)?);
    let t4 = lift_product(&p, 2)?;

    for (name, m) in [("Pierrehumbert T^2", &p), ("affine T^3", &t3), ("product T^4", &t4)] {
        let sw = conormal_sweep(m, &m.template(), pairs, 8, 1)?;
        println!(
            "{name:18} d = {}: max |log discrepancy| = {:.2e}, max |log growth| = {:.2}",
            sw.dim, sw.max_log_discrepancy, sw.max_abs_log_growth
        );
    }
    Ok(())
}
