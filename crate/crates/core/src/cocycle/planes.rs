//! Covolume growth of k-planes and the conormal identity.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_base, step_matrix, Budget, Bundle, EstimateMode, ExpansionEstimate, Witness, WordIntegral};
use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom, Sampler, Word};
use crate::models::{Matrix, Model, TorusPoint};
use crate::numeric::{mean_stderr, pairwise_sum};
use crate::rng::{uniform01, StreamFamily};

/// An orthonormal k-frame at a base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame {
    pub base: TorusPoint,
    /// `k` orthonormal vectors of length `d`.
    pub basis: Vec<Vec<f64>>,
}

impl PlaneFrame {
    /// Orthonormalises the spanning vectors; rank-deficient input is rejected.
    pub fn spanned_by(base: TorusPoint, vectors: &[Vec<f64>]) -> Result<Self> {
        let k = vectors.len();
        let d = vectors.first().map(|v| v.len()).unwrap_or(0);
        if k == 0 || k > d || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Degenerate(format!("cannot span a plane from {k} vectors")));
        }
        let m = Matrix::from_fn(d, k, |i, j| vectors[j][i]);
        let (q, log) = orthonormalise(m);
        if !log.is_finite() || log < -30.0 {
            return Err(Error::Degenerate("frame vectors are linearly dependent".into()));
        }
        Ok(PlaneFrame {
            base,
            basis: (0..k).map(|j| q.column(j).iter().copied().collect()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn matrix(&self) -> Matrix {
        let d = self.basis[0].len();
        Matrix::from_fn(d, self.dim(), |i, j| self.basis[j][i])
    }

    fn check(&self, model: &Model) -> Result<()> {
        check_base(model, &self.base)?;
        let d = model.fiber_dim();
        if self.basis.is_empty() || self.basis.len() > d || self.basis.iter().any(|v| v.len() != d) {
            return Err(Error::Degenerate("plane frame does not fit the fibre".into()));
        }
        let m = self.matrix();
        let gram = m.transpose() * &m;
        if (gram - Matrix::identity(self.dim(), self.dim())).amax() > 1e-10 {
            return Err(Error::Degenerate("plane frame is not orthonormal".into()));
        }
        Ok(())
    }
}

/// Thin QR; returns `Q` and `ln |det R|`.
fn orthonormalise(g: Matrix) -> (Matrix, f64) {
    let qr = g.qr();
    let r = qr.r();
    let log: f64 = (0..r.ncols()).map(|i| r[(i, i)].abs().ln()).sum();
    (qr.q(), log)
}

/// `ln` of the covolume factor of the frame pushed along `letters`,
/// re-orthonormalising after every letter.
fn covolume_log(model: &Model, letters: &[MapAtom], x0: &[f64], frame: &Matrix) -> f64 {
    let mut x = x0.to_vec();
    let mut q = frame.clone();
    let mut log = 0.0;
    for a in letters {
        let j = model.jacobian(a, &x);
        let (nq, l) = orthonormalise(j * q);
        q = nq;
        log += l;
        model.apply_in_place(a, &mut x);
    }
    log
}

fn vector_log(model: &Model, bundle: Bundle, letters: &[MapAtom], x0: &[f64], v: &[f64]) -> f64 {
    let mut x = x0.to_vec();
    let mut u = nalgebra::DVector::from_column_slice(v);
    let mut log = 0.0;
    for a in letters {
        let next = step_matrix(model, bundle, a, &x) * &u;
        let n = next.norm();
        log += n.ln();
        u = next / n;
        model.apply_in_place(a, &mut x);
    }
    log
}

/// The unit covector annihilating a `(d-1)`-frame, from the cofactor
/// expansion (generalised cross product).
pub fn conormal_of(basis: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = basis.len();
    let d = k + 1;
    if basis.iter().any(|v| v.len() != d) {
        return Err(Error::Degenerate("conormal needs a (d-1)-frame".into()));
    }
    let mut nu = vec![0.0; d];
    for (i, slot) in nu.iter_mut().enumerate() {
        let minor = Matrix::from_fn(k, k, |r, c| {
            let row = if r < i { r } else { r + 1 };
            basis[c][row]
        });
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * if k == 0 { 1.0 } else { minor.determinant() };
    }
    super::unit(nu)
}

/// Covolume growth of the plane and inverse-transpose growth of its unit
/// conormal along one word.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConormalGrowth {
    pub covolume_growth: f64,
    pub conormal_growth: f64,
    pub log_covolume: f64,
    pub log_conormal: f64,
}

/// For volume-preserving maps the two growths coincide.
pub fn conormal_check(model: &Model, word: &Word, plane: &PlaneFrame) -> Result<ConormalGrowth> {
    if !model.is_volume_preserving() {
        return Err(Error::UnsupportedModel(
            "the conormal identity needs a volume-preserving model".into(),
        ));
    }
    plane.check(model)?;
    if plane.dim() + 1 != model.fiber_dim() {
        return Err(Error::Degenerate("conormal check needs a (d-1)-plane".into()));
    }
    for a in &word.letters {
        model.validate_atom(a)?;
    }
    let x = plane.base.coords();
    let log_covolume = covolume_log(model, &word.letters, x, &plane.matrix());
    let nu = conormal_of(&plane.basis)?;
    let log_conormal = vector_log(model, Bundle::Cotangent, &word.letters, x, &nu);
    Ok(ConormalGrowth {
        covolume_growth: log_covolume.exp(),
        conormal_growth: log_conormal.exp(),
        log_covolume,
        log_conormal,
    })
}

/// Worst disagreement between covolume and conormal growth over random
/// (word, hyperplane) pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConormalSweep {
    pub pairs: usize,
    pub word_length: usize,
    pub dim: usize,
    /// `max |ln covolume growth − ln conormal growth|`.
    pub max_log_discrepancy: f64,
    pub max_abs_log_growth: f64,
    /// Pair index attaining the maximum discrepancy.
    pub worst: usize,
}

/// Samples `pairs` words of `word_length` steps from `mu`, uniform base
/// points and Gaussian hyperplane frames; pair `i` uses stream `i`.
pub fn conormal_sweep(
    model: &Model,
    mu: &DrivingMeasure,
    pairs: usize,
    word_length: usize,
    seed: u64,
) -> Result<ConormalSweep> {
    if pairs == 0 || word_length == 0 {
        return Err(Error::Config(
            "conormal sweep needs pairs >= 1 and word_length >= 1".into(),
        ));
    }
    let d = model.fiber_dim();
    if d < 2 {
        return Err(Error::Degenerate("conormal sweep needs fibre dimension >= 2".into()));
    }
    let sampler = Sampler::new(mu)?;
    let fam = StreamFamily::new(seed);
    let out: Vec<Result<ConormalGrowth>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = fam.stream(i as u64);
            let base: Vec<f64> = (0..model.dim()).map(|_| uniform01(&mut rng)).collect();
            let word = sampler.sample_word(&mut rng, word_length);
            let vectors: Vec<Vec<f64>> = (0..d - 1)
                .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let plane = PlaneFrame::spanned_by(TorusPoint::new(base), &vectors)?;
            conormal_check(model, &word, &plane)
        })
        .collect();
    let mut sweep = ConormalSweep {
        pairs,
        word_length,
        dim: d,
        max_log_discrepancy: 0.0,
        max_abs_log_growth: 0.0,
        worst: 0,
    };
    for (i, g) in out.into_iter().enumerate() {
        let g = g?;
        let gap = (g.log_covolume - g.log_conormal).abs();
        if gap > sweep.max_log_discrepancy || !gap.is_finite() {
            sweep.max_log_discrepancy = if gap.is_finite() { gap } else { f64::INFINITY };
            sweep.worst = i;
        }
        sweep.max_abs_log_growth = sweep.max_abs_log_growth.max(g.log_covolume.abs());
    }
    Ok(sweep)
}

/// `N⁻¹ ∫ ln ‖F^N_ω|vol_V‖ dμ^N` for a k-plane `V`.
pub fn kplane_expansion(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    plane: &PlaneFrame,
    budget: &Budget,
) -> Result<ExpansionEstimate> {
    plane.check(model)?;
    let words = WordIntegral::new(model, mu, n, budget)?;
    let frame = plane.matrix();
    let x = plane.base.coords();
    let vals = words.map_words(|letters| covolume_log(model, letters, x, &frame) / n as f64);
    let (value, stderr) = match words.mode {
        EstimateMode::ExactEnumeration => {
            let t: Vec<f64> = vals.iter().map(|(w, v)| w * v).collect();
            (pairwise_sum(&t), 0.0)
        }
        EstimateMode::MonteCarlo => mean_stderr(&vals.iter().map(|p| p.1).collect::<Vec<_>>()),
    };
    Ok(ExpansionEstimate {
        value,
        stderr,
        samples: vals.len(),
        mode: words.mode,
        steps: n,
        per_step: true,
        witness: Some(Witness {
            base: x.to_vec(),
            direction: plane.basis.concat(),
        }),
        warnings: words.warnings.clone(),
    })
}
