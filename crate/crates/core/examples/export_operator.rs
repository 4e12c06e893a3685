//! Writes a Galerkin operator to the portable binary format and reads it back.
//!
//! `cargo run --release --example export_operator [file]`

use std::fs::File;
use std::io::{BufReader, BufWriter};

use rdslab::models::{Model, Pierrehumbert};
use rdslab::spectral::{build_galerkin, read_operator, write_operator};

fn main() -> rdslab::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "pierrehumbert_k8.op".into());
    let model = Model::Pierrehumbert(Pierrehumbert::new(1.0)?);
    let s = 0.05;
    let op = build_galerkin(&model, &Pierrehumbert::discretised_template(3), 8, s)?;

    let bytes = write_operator(&op, s, BufWriter::new(File::create(&path)?))?;
    println!(
        "wrote {bytes} bytes to {path} ({} modes, model {})",
        op.len(),
        &op.model_hash[..12]
    );

    let back = read_operator(BufReader::new(File::open(&path)?))?;
    let dense = op.dense_weighted(s);
    let max_diff = back
        .entries
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!(
        "read d = {}, K = {}, s = {}, order {}, max entry difference {max_diff:e}",
        back.dim, back.radius, back.s, back.order
    );
    Ok(())
}
