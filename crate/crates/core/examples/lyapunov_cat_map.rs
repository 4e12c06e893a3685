//! Lyapunov spectra by QR along random orbits, and the Furstenberg integral.
//!
//! `cargo run --release --example lyapunov_cat_map [steps]`

use rdslab::cocycle::{furstenberg_integral, lyapunov_spectrum};
use rdslab::measure::{DrivingMeasure, MapAtom, Transform};
use rdslab::models::{AffineTorus, Matrix, Model, TorusPoint};

fn main() -> rdslab::Result<()> {
    let t: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let cat = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
    let model = Model::Affine(AffineTorus::new(&[cat], None, None)?);
    let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let x0 = TorusPoint::new(vec![0.1, 0.2]);

    let dirac = DrivingMeasure::dirac(0);
    let r = lyapunov_spectrum(&model, &dirac, t, &x0, 1, 10)?;
    println!("cat map, T = {t}: {:?} (exact +-{exact:.9})", r.exponents);

    let up = [1.0, (5f64.sqrt() - 1.0) / 2.0];
    let f = furstenberg_integral(&model, &dirac, 100, 10_000, 2, Some(&up))?;
    println!(
        "Furstenberg from the unstable direction: {:.9} +- {:.1e}",
        f.value, f.stderr
    );

    let pair = DrivingMeasure::finite(vec![
        MapAtom::new(0, 0.5),
        MapAtom::new(0, 0.5).with_transform(Transform::Inverse),
    ]);
    let r = lyapunov_spectrum(&model, &pair, t, &x0, 3, 10)?;
    let f = furstenberg_integral(&model, &pair, 1000, 100_000, 4, None)?;
    println!(
        "uniform on {{A, A^-1}}: QR {:.5} +- {:.1e}, Furstenberg {:.5} +- {:.1e}",
        r.exponents[0], r.stderr[0], f.value, f.stderr
    );
    Ok(())
}
