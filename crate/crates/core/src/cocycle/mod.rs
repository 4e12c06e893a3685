//! Expansion-on-average integrals for the derivative cocycle and its
//! inverse transpose, on vectors, covectors and k-planes.

mod lyapunov;
mod planes;
mod search;

pub use lyapunov::{furstenberg_integral, lyapunov_spectrum, FurstenbergEstimate, LyapunovReport};
pub use planes::{
    conormal_check, conormal_of, conormal_sweep, kplane_expansion, ConormalGrowth, ConormalSweep, PlaneFrame,
};
pub use search::{direction_design, expansion_lambda, SearchPlan};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{enumerate_words, word_count, DrivingMeasure, MapAtom, Sampler};
use crate::models::{Matrix, Model, TorusPoint};
use crate::numeric::{mean_stderr, pairwise_sum};
use crate::rng::StreamFamily;

/// Which derivative cocycle acts on the fibre.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bundle {
    Tangent,
    #[default]
    Cotangent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    ExactEnumeration,
    MonteCarlo,
}

/// Limits for the word integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Enumerate exactly when the number of words is at most this.
    pub word_cap: u128,
    /// Monte Carlo sample size otherwise.
    pub mc_words: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            word_cap: 1_000_000,
            mc_words: 100_000,
            seed: 0,
        }
    }
}

/// A unit covector at a base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentFrame {
    pub base: TorusPoint,
    pub covector: Vec<f64>,
}

impl CotangentFrame {
    /// Normalises `covector`; a zero covector is rejected.
    pub fn new(base: TorusPoint, covector: Vec<f64>) -> Result<Self> {
        Ok(CotangentFrame {
            base,
            covector: unit(covector)?,
        })
    }
}

pub(crate) fn unit(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate("zero or non-finite direction".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
}

/// A per-step expansion rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionEstimate {
    /// Nats per step (the N-step integral divided by N).
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub mode: EstimateMode,
    pub steps: usize,
    pub per_step: bool,
    pub witness: Option<Witness>,
    pub warnings: Vec<String>,
}

/// Leaves are renormalised only once entries leave `[1/RESCALE, RESCALE]`,
/// so moderate words keep exact arithmetic.
const RESCALE: f64 = 1e100;

/// The cocycle matrix along one word, stored as `scale · exp(log_scale)`.
#[derive(Clone, Debug)]
pub(crate) struct Leaf {
    pub weight: f64,
    pub mat: Matrix,
    pub log_scale: f64,
}

impl Leaf {
    pub fn log_norm(&self, v: &[f64]) -> f64 {
        let d = v.len();
        let mut s = 0.0;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.mat[(i, j)] * v[j];
            }
            s += acc * acc;
        }
        0.5 * (s.ln() - vv.ln()) + self.log_scale
    }
}

/// The words an estimator integrates over: all of them with their
/// probabilities, or an i.i.d. sample.
pub(crate) struct WordIntegral {
    pub mode: EstimateMode,
    pub steps: usize,
    choices: Vec<(Vec<MapAtom>, f64)>,
    sampler: Option<Sampler>,
    family: StreamFamily,
    samples: usize,
    pub warnings: Vec<String>,
}

impl WordIntegral {
    pub fn new(model: &Model, mu: &DrivingMeasure, n: usize, budget: &Budget) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("number of steps must be at least 1".into()));
        }
        model.validate_measure(mu)?;
        let mut warnings = Vec::new();
        let family = StreamFamily::new(budget.seed);
        if mu.is_finitely_supported() {
            let total = word_count(mu, n)?;
            if total <= budget.word_cap {
                return Ok(WordIntegral {
                    mode: EstimateMode::ExactEnumeration,
                    steps: n,
                    choices: mu.step_choices()?,
                    sampler: None,
                    family,
                    samples: total as usize,
                    warnings,
                });
            }
            warnings.push(format!(
                "exact enumeration needs {total} words (cap {}); fell back to Monte Carlo",
                budget.word_cap
            ));
        }
        if budget.mc_words < 2 {
            return Err(Error::Config("Monte Carlo needs at least 2 words".into()));
        }
        Ok(WordIntegral {
            mode: EstimateMode::MonteCarlo,
            steps: n,
            choices: Vec::new(),
            sampler: Some(Sampler::new(mu)?),
            family,
            samples: budget.mc_words,
            warnings,
        })
    }

    /// Cocycle matrices of every word at base point `x`.
    pub fn leaves(&self, model: &Model, bundle: Bundle, x: &[f64]) -> Vec<Leaf> {
        let d = model.fiber_dim();
        match &self.sampler {
            None => {
                let start = Leaf {
                    weight: 1.0,
                    mat: Matrix::identity(d, d),
                    log_scale: 0.0,
                };
                let n = self.steps;
                self.choices
                    .par_iter()
                    .map(|(letters, w)| {
                        let mut out = Vec::new();
                        let mut y = x.to_vec();
                        let mut leaf = start.clone();
                        leaf.weight = *w;
                        push_letters(model, bundle, letters, &mut y, &mut leaf);
                        self.descend(model, bundle, n - 1, y, leaf, &mut out);
                        out
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .flatten()
                    .collect()
            }
            Some(sampler) => (0..self.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = self.family.stream(i);
                    let mut letters = Vec::new();
                    for _ in 0..self.steps {
                        sampler.sample_step(&mut rng, &mut letters);
                    }
                    let mut y = x.to_vec();
                    let mut leaf = Leaf {
                        weight: 1.0 / self.samples as f64,
                        mat: Matrix::identity(d, d),
                        log_scale: 0.0,
                    };
                    push_letters(model, bundle, &letters, &mut y, &mut leaf);
                    leaf
                })
                .collect(),
        }
    }

    /// `(weight, f(letters))` for every word, in the same order as `leaves`.
    pub fn map_words<F>(&self, f: F) -> Vec<(f64, f64)>
    where
        F: Fn(&[MapAtom]) -> f64 + Sync,
    {
        match &self.sampler {
            None => {
                let m = self.choices.len() as u64;
                (0..self.samples as u64)
                    .into_par_iter()
                    .map(|idx| {
                        let mut digits = vec![0usize; self.steps];
                        let mut r = idx;
                        for slot in digits.iter_mut().rev() {
                            *slot = (r % m) as usize;
                            r /= m;
                        }
                        let mut letters = Vec::new();
                        let mut w = 1.0;
                        for d in digits {
                            letters.extend(self.choices[d].0.iter().cloned());
                            w *= self.choices[d].1;
                        }
                        (w, f(&letters))
                    })
                    .collect()
            }
            Some(sampler) => (0..self.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = self.family.stream(i);
                    let mut letters = Vec::new();
                    for _ in 0..self.steps {
                        sampler.sample_step(&mut rng, &mut letters);
                    }
                    (1.0 / self.samples as f64, f(&letters))
                })
                .collect(),
        }
    }

    fn descend(&self, model: &Model, bundle: Bundle, left: usize, x: Vec<f64>, leaf: Leaf, out: &mut Vec<Leaf>) {
        if left == 0 {
            out.push(leaf);
            return;
        }
        for (letters, w) in &self.choices {
            let mut y = x.clone();
            let mut next = leaf.clone();
            next.weight *= w;
            push_letters(model, bundle, letters, &mut y, &mut next);
            self.descend(model, bundle, left - 1, y, next, out);
        }
    }

    /// Per-step estimate of `E ln ‖M v‖` over these leaves.
    pub fn estimate(&self, leaves: &[Leaf], v: &[f64]) -> ExpansionEstimate {
        let n = self.steps as f64;
        let (value, stderr) = match self.mode {
            EstimateMode::ExactEnumeration => {
                let terms: Vec<f64> = leaves.iter().map(|l| l.weight * l.log_norm(v)).collect();
                (pairwise_sum(&terms) / n, 0.0)
            }
            EstimateMode::MonteCarlo => {
                let terms: Vec<f64> = leaves.iter().map(|l| l.log_norm(v) / n).collect();
                mean_stderr(&terms)
            }
        };
        ExpansionEstimate {
            value,
            stderr,
            samples: leaves.len(),
            mode: self.mode,
            steps: self.steps,
            per_step: true,
            witness: None,
            warnings: self.warnings.clone(),
        }
    }

    /// The objective alone, for search loops.
    pub fn value(&self, leaves: &[Leaf], v: &[f64]) -> f64 {
        let terms: Vec<f64> = leaves.iter().map(|l| l.weight * l.log_norm(v)).collect();
        pairwise_sum(&terms) / self.steps as f64
    }
}

pub(crate) fn step_matrix(model: &Model, bundle: Bundle, a: &MapAtom, x: &[f64]) -> Matrix {
    match bundle {
        Bundle::Tangent => model.jacobian(a, x),
        Bundle::Cotangent => model.cojacobian(a, x),
    }
}

fn push_letters(model: &Model, bundle: Bundle, letters: &[MapAtom], x: &mut [f64], leaf: &mut Leaf) {
    for a in letters {
        let m = step_matrix(model, bundle, a, x);
        leaf.mat = m * &leaf.mat;
        model.apply_in_place(a, x);
    }
    let s = leaf.mat.amax();
    if s.is_finite() && (s > RESCALE || (s > 0.0 && s < RESCALE.recip())) {
        leaf.mat /= s;
        leaf.log_scale += s.ln();
    }
}

fn check_base(model: &Model, base: &TorusPoint) -> Result<()> {
    if base.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: base.dim(),
        });
    }
    Ok(())
}

fn check_direction(model: &Model, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != model.fiber_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.fiber_dim(),
            got: v.len(),
        });
    }
    unit(v.to_vec())
}

fn expansion(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    bundle: Bundle,
    base: &TorusPoint,
    v: &[f64],
    budget: &Budget,
) -> Result<ExpansionEstimate> {
    check_base(model, base)?;
    let v = check_direction(model, v)?;
    let words = WordIntegral::new(model, mu, n, budget)?;
    let leaves = words.leaves(model, bundle, base.coords());
    let mut est = words.estimate(&leaves, &v);
    est.witness = Some(Witness {
        base: base.coords().to_vec(),
        direction: v,
    });
    Ok(est)
}

/// `N⁻¹ ∫ ln ‖(D_x f)^{-T} ξ‖ dμ^N(f)` at one covector.
pub fn cotangent_expansion(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    frame: &CotangentFrame,
    budget: &Budget,
) -> Result<ExpansionEstimate> {
    expansion(model, mu, n, Bundle::Cotangent, &frame.base, &frame.covector, budget)
}

/// `N⁻¹ ∫ ln ‖D_x f v‖ dμ^N(f)` at one vector.
pub fn tangent_expansion(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    base: &TorusPoint,
    v: &[f64],
    budget: &Budget,
) -> Result<ExpansionEstimate> {
    expansion(model, mu, n, Bundle::Tangent, base, v, budget)
}

/// Per-word log-growth `ln ‖M_w v‖` for every enumerated word, in
/// enumeration order; used to check statements that hold word by word.
pub fn per_word_log_growth(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    bundle: Bundle,
    base: &TorusPoint,
    v: &[f64],
    cap: u128,
) -> Result<Vec<f64>> {
    check_base(model, base)?;
    let v = check_direction(model, v)?;
    model.validate_measure(mu)?;
    let words = enumerate_words(mu, n, cap)?;
    Ok(words
        .par_iter()
        .map(|w| {
            let mut x = base.coords().to_vec();
            let mut u = v.clone();
            let mut log = 0.0;
            for a in &w.letters {
                let m = step_matrix(model, bundle, a, &x);
                let next = &m * nalgebra::DVector::from_column_slice(&u);
                let nn = next.norm();
                log += nn.ln();
                u = (next / nn).as_slice().to_vec();
                model.apply_in_place(a, &mut x);
            }
            log
        })
        .collect())
}
