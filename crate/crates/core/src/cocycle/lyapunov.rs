//! Lyapunov spectra by periodic QR and the Furstenberg integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, Sampler};
use crate::models::{Matrix, Model, TorusPoint};
use crate::numeric::mean_stderr;
use crate::rng::StreamFamily;

const BATCHES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Sorted in decreasing order.
    pub exponents: Vec<f64>,
    pub orbit_length: usize,
    pub reorthonormalization_period: usize,
    /// Twice the batch-means standard error, per exponent.
    pub confidence: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Exponents of the derivative cocycle along one random orbit.
pub fn lyapunov_spectrum(
    model: &Model,
    mu: &DrivingMeasure,
    t: usize,
    x0: &TorusPoint,
    seed: u64,
    period: usize,
) -> Result<LyapunovReport> {
    if t < 1000 {
        return Err(Error::Config("orbit length must be at least 1000".into()));
    }
    if x0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x0.dim(),
        });
    }
    model.validate_measure(mu)?;
    let p = period.max(1);
    match run_qr(model, mu, t, x0, seed, p) {
        Ok(r) => Ok(r),
        Err(Error::Numerical(_)) if p > 1 => run_qr(model, mu, t, x0, seed, (p / 2).max(1)),
        Err(e) => Err(e),
    }
}

fn run_qr(
    model: &Model,
    mu: &DrivingMeasure,
    t: usize,
    x0: &TorusPoint,
    seed: u64,
    p: usize,
) -> Result<LyapunovReport> {
    let d = model.fiber_dim();
    let sampler = Sampler::new(mu)?;
    let mut rng = StreamFamily::new(seed).stream(0);
    let mut x = x0.coords().to_vec();
    let mut q = Matrix::identity(d, d);
    let batch_len = t / BATCHES;
    let mut batch = vec![vec![0.0; d]; BATCHES];
    let mut letters = Vec::new();
    for step in 0..BATCHES * batch_len {
        letters.clear();
        sampler.sample_step(&mut rng, &mut letters);
        for a in &letters {
            q = model.jacobian(a, &x) * q;
            model.apply_in_place(a, &mut x);
        }
        if (step + 1) % p == 0 || step + 1 == BATCHES * batch_len {
            let qr = q.clone().qr();
            let r = qr.r();
            let mut nq = qr.q();
            // sign-fix so that the diagonal of R is positive
            for i in 0..d {
                let l = r[(i, i)].abs().ln();
                if !l.is_finite() {
                    return Err(Error::Numerical("frame collapsed during QR iteration".into()));
                }
                batch[step / batch_len][i] += l;
                if r[(i, i)] < 0.0 {
                    nq.column_mut(i).neg_mut();
                }
            }
            q = nq;
        } else if !q.amax().is_finite() {
            return Err(Error::Numerical("frame overflow between re-orthonormalisations".into()));
        }
    }
    let mut rows: Vec<(f64, f64)> = (0..d)
        .map(|i| {
            let means: Vec<f64> = batch.iter().map(|b| b[i] / batch_len as f64).collect();
            mean_stderr(&means)
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovReport {
        exponents: rows.iter().map(|r| r.0).collect(),
        orbit_length: BATCHES * batch_len,
        reorthonormalization_period: p,
        confidence: rows.iter().map(|r| 2.0 * r.1).collect(),
        stderr: rows.iter().map(|r| r.1).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FurstenbergEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `∬ ln ‖F v‖ dν(v) dμ(F)` with `ν` the empirical law of a projective
/// orbit after `burn_in` steps.
pub fn furstenberg_integral(
    model: &Model,
    mu: &DrivingMeasure,
    burn_in: usize,
    samples: usize,
    seed: u64,
    v0: Option<&[f64]>,
) -> Result<FurstenbergEstimate> {
    if !model.has_constant_jacobian() {
        return Err(Error::UnsupportedModel(
            "the Furstenberg integral needs a linear or affine fibre action".into(),
        ));
    }
    if samples < 2 * BATCHES {
        return Err(Error::Config(format!("need at least {} samples", 2 * BATCHES)));
    }
    model.validate_measure(mu)?;
    let d = model.fiber_dim();
    let mut v = match v0 {
        Some(v) if v.len() == d => nalgebra::DVector::from_vec(super::unit(v.to_vec())?),
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            })
        }
        None => nalgebra::DVector::from_fn(d, |i, _| 1.0 / ((i + 1) as f64).sqrt()).normalize(),
    };
    let sampler = Sampler::new(mu)?;
    let mut rng = StreamFamily::new(seed).stream(0);
    let zero = vec![0.0; model.dim()];
    let mut letters = Vec::new();
    let mut step = |v: &mut nalgebra::DVector<f64>, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        letters.clear();
        sampler.sample_step(rng, &mut letters);
        let mut log = 0.0;
        for a in &letters {
            let w = model.jacobian(a, &zero) * &*v;
            let n = w.norm();
            log += n.ln();
            *v = w / n;
        }
        log
    };
    for _ in 0..burn_in {
        step(&mut v, &mut rng);
    }
    let batch_len = samples / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|_| (0..batch_len).map(|_| step(&mut v, &mut rng)).sum::<f64>() / batch_len as f64)
        .collect();
    let (value, stderr) = mean_stderr(&means);
    Ok(FurstenbergEstimate {
        value,
        stderr,
        samples: BATCHES * batch_len,
    })
}
