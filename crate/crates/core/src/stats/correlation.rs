use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observable::Observable;
use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom, Sampler};
use crate::models::Model;
use crate::numeric::linear_fit;
use crate::rng::{uniform01, StreamFamily};
use crate::spectral::{build_galerkin, AffinePropagator, FourierOperator, ModeVector};

/// Samples per deterministic reduction chunk.
pub(crate) const CHUNK: usize = 1024;
/// Operator-method values below this are treated as zero by the rate fit.
pub const OPERATOR_NOISE_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    Operator,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsBudget {
    /// Monte Carlo samples (words with a uniform initial point).
    pub samples: usize,
    pub seed: u64,
    /// Galerkin box radius for the operator method; defaults to the
    /// observables' band.
    pub k: Option<usize>,
}

impl Default for StatsBudget {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub method: CorrelationMethod,
    /// `⟨φ, 𝒢ⁿψ⟩` for `n = 0..=n_max`.
    pub values: Vec<Complex64>,
    /// Standard error of each value (Monte Carlo only).
    pub stderr: Option<Vec<f64>>,
    pub samples: usize,
    /// `None` when the operator was propagated exactly on `ℤ^d`.
    pub k: Option<usize>,
    pub max_truncation_loss: f64,
    pub warnings: Vec<String>,
}

/// How `𝒢` acts on coefficient vectors for the operator method.
pub(crate) enum Propagator {
    Exact(AffinePropagator),
    Galerkin(FourierOperator),
}

impl Propagator {
    pub(crate) fn new(model: &Model, mu: &DrivingMeasure, k: Option<usize>, band: usize) -> Result<Self> {
        if model.has_constant_jacobian() && mu.is_finitely_supported() && k.is_none() {
            return Ok(Propagator::Exact(AffinePropagator::new(model, mu)?));
        }
        let k = k.unwrap_or(band.max(1));
        if k < band {
            return Err(Error::Config(format!(
                "observables reach |k| = {band}, outside the operator box K = {k}"
            )));
        }
        Ok(Propagator::Galerkin(build_galerkin(model, mu, k, 0.0)?))
    }

    fn k(&self) -> Option<usize> {
        match self {
            Propagator::Exact(_) => None,
            Propagator::Galerkin(op) => Some(op.radius()),
        }
    }

    fn loss(&self) -> f64 {
        match self {
            Propagator::Exact(_) => 0.0,
            Propagator::Galerkin(op) => op.max_truncation_loss(),
        }
    }

    pub(crate) fn lift(&self, phi: &Observable) -> State {
        match self {
            Propagator::Exact(_) => State::Sparse(phi.terms().iter().cloned().collect()),
            Propagator::Galerkin(op) => State::Dense(phi.to_vector(&op.lattice).expect("band checked against the box")),
        }
    }

    pub(crate) fn step(&self, v: &State) -> Result<State> {
        Ok(match (self, v) {
            (Propagator::Exact(p), State::Sparse(v)) => State::Sparse(p.step(v)?),
            (Propagator::Galerkin(op), State::Dense(v)) => State::Dense(op.apply(v)),
            _ => unreachable!("state matches its propagator"),
        })
    }

    pub(crate) fn lower(&self, v: &State) -> Observable {
        match (self, v) {
            (_, State::Sparse(v)) => Observable::new(self.dim(), v.iter().map(|(k, c)| (k.clone(), *c)))
                .expect("propagated modes keep their dimension"),
            (Propagator::Galerkin(op), State::Dense(v)) => Observable::from_vector(&op.lattice, v),
            _ => unreachable!("state matches its propagator"),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Propagator::Exact(p) => p.dim(),
            Propagator::Galerkin(op) => op.lattice.dim,
        }
    }

    pub(crate) fn pair(&self, phi: &Observable, v: &State) -> Complex64 {
        match (self, v) {
            (_, State::Sparse(v)) => phi
                .terms()
                .iter()
                .map(|(k, c)| c.conj() * v.get(k).copied().unwrap_or_default())
                .sum(),
            (Propagator::Galerkin(op), State::Dense(v)) => phi.pair_vector(&op.lattice, v),
            _ => unreachable!("state matches its propagator"),
        }
    }

    /// Whether `phi` fits the propagator's box.
    pub(crate) fn holds(&self, phi: &Observable) -> bool {
        match self {
            Propagator::Exact(_) => true,
            Propagator::Galerkin(op) => phi.band() <= op.radius(),
        }
    }
}

pub(crate) enum State {
    Sparse(ModeVector),
    Dense(Vec<Complex64>),
}

fn check_observable(model: &Model, phi: &Observable) -> Result<()> {
    if phi.dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi.dim,
        });
    }
    Ok(())
}

/// Pair correlations `⟨φ, 𝒢ⁿψ⟩ = E ∫ conj(φ(x)) ψ(f_n ⋯ f_1 x) dx`.
pub fn correlation_series(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    psi: &Observable,
    n_max: usize,
    method: CorrelationMethod,
    budget: &StatsBudget,
) -> Result<CorrelationSeries> {
    check_observable(model, phi)?;
    check_observable(model, psi)?;
    model.validate_measure(mu)?;
    match method {
        CorrelationMethod::Operator => operator_series(model, mu, phi, psi, n_max, budget),
        CorrelationMethod::MonteCarlo => mc_series(model, mu, phi, psi, n_max, budget),
    }
}

fn operator_series(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    psi: &Observable,
    n_max: usize,
    budget: &StatsBudget,
) -> Result<CorrelationSeries> {
    let prop = Propagator::new(model, mu, budget.k, phi.band().max(psi.band()))?;
    let mut v = prop.lift(psi);
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        values.push(prop.pair(phi, &v));
        if n < n_max {
            v = prop.step(&v)?;
        }
    }
    let loss = prop.loss();
    let mut warnings = Vec::new();
    if loss > 0.0 {
        warnings.push(format!("Galerkin truncation loss up to {loss:.3e} per step"));
    }
    Ok(CorrelationSeries {
        method: CorrelationMethod::Operator,
        values,
        stderr: None,
        samples: 0,
        k: prop.k(),
        max_truncation_loss: loss,
        warnings,
    })
}

/// Running sums of a complex sample: `Σ re, Σ im, Σ re², Σ im²`.
#[derive(Clone, Copy, Default)]
pub(crate) struct Moments {
    pub(crate) s: [f64; 4],
    pub(crate) n: usize,
}

impl Moments {
    pub(crate) fn push(&mut self, z: Complex64) {
        self.s[0] += z.re;
        self.s[1] += z.im;
        self.s[2] += z.re * z.re;
        self.s[3] += z.im * z.im;
        self.n += 1;
    }

    pub(crate) fn merge(&mut self, o: &Moments) {
        for i in 0..4 {
            self.s[i] += o.s[i];
        }
        self.n += o.n;
    }

    /// Mean and the standard error of the mean (real and imaginary parts combined).
    pub(crate) fn mean_stderr(&self) -> (Complex64, f64) {
        let n = self.n as f64;
        let m = Complex64::new(self.s[0] / n, self.s[1] / n);
        if self.n < 2 {
            return (m, f64::NAN);
        }
        let var = ((self.s[2] - n * m.re * m.re) + (self.s[3] - n * m.im * m.im)).max(0.0) / (n - 1.0);
        (m, (var / n).sqrt())
    }
}

/// Run `samples` independent draws in fixed chunks and merge the chunk
/// results in order, so the outcome is independent of the thread count.
pub(crate) fn chunked<T, F, M>(samples: usize, init: impl Fn() -> T + Sync, f: F, merge: M) -> T
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
    M: Fn(&mut T, T),
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R, d: usize, x: &mut Vec<f64>) {
    x.clear();
    x.extend((0..d).map(|_| uniform01(rng)));
}

pub(crate) fn advance<R: Rng + ?Sized>(
    model: &Model,
    sampler: &Sampler,
    rng: &mut R,
    buf: &mut Vec<MapAtom>,
    x: &mut [f64],
) {
    buf.clear();
    sampler.sample_step(rng, buf);
    model.apply_word(buf, x);
}

fn mc_series(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    psi: &Observable,
    n_max: usize,
    budget: &StatsBudget,
) -> Result<CorrelationSeries> {
    if budget.samples < 2 {
        return Err(Error::Config("Monte Carlo correlations need at least 2 samples".into()));
    }
    let sampler = Sampler::new(mu)?;
    let fam = StreamFamily::new(budget.seed);
    let d = model.dim();
    let moments = chunked(
        budget.samples,
        || vec![Moments::default(); n_max + 1],
        |i, acc| {
            let mut rng = fam.stream(i as u64);
            let mut x = Vec::with_capacity(d);
            let mut buf = Vec::new();
            uniform_point(&mut rng, d, &mut x);
            let a = phi.eval(&x).conj();
            for (n, m) in acc.iter_mut().enumerate() {
                if n > 0 {
                    advance(model, &sampler, &mut rng, &mut buf, &mut x);
                }
                m.push(a * psi.eval(&x));
            }
        },
        |t, p| t.iter_mut().zip(&p).for_each(|(a, b)| a.merge(b)),
    );
    let (values, stderr) = moments.iter().map(|m| m.mean_stderr()).unzip();
    Ok(CorrelationSeries {
        method: CorrelationMethod::MonteCarlo,
        values,
        stderr: Some(stderr),
        samples: budget.samples,
        k: None,
        max_truncation_loss: 0.0,
        warnings: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Decaying,
    /// Fitted rate at or above 1, or no decay across the window.
    NoDecay,
    /// No usable window above the noise floor.
    BelowNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingFit {
    pub status: FitStatus,
    /// `exp` of the fitted slope of `ln |value|`.
    pub theta_hat: Option<f64>,
    /// Inclusive index range used by the fit.
    pub window: Option<(usize, usize)>,
    pub residual: Option<f64>,
}

/// Geometric rate of the longest run of values above the noise floor.
pub fn mixing_rate_fit(series: &CorrelationSeries) -> Result<MixingFit> {
    let n = series.values.len();
    if n < 6 {
        return Err(Error::Config(format!("rate fit needs at least 6 values, got {n}")));
    }
    let above = |i: usize| -> bool {
        let v = series.values[i].norm();
        match &series.stderr {
            Some(se) => v > 10.0 * se[i],
            None => v > OPERATOR_NOISE_FLOOR,
        }
    };
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=n {
        let ok = i < n && above(i);
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    let below = MixingFit {
        status: FitStatus::BelowNoise,
        theta_hat: None,
        window: best,
        residual: None,
    };
    let Some((a, b)) = best.filter(|(a, b)| b - a >= 2) else {
        return Ok(below);
    };
    let xs: Vec<f64> = (a..=b).map(|i| i as f64).collect();
    let ys: Vec<f64> = (a..=b).map(|i| series.values[i].norm().ln()).collect();
    let (_, slope, rms) = linear_fit(&xs, &ys);
    let theta = slope.exp();
    let half = (a + b).div_ceil(2);
    let head = (a..half).map(|i| series.values[i].norm()).fold(0.0, f64::max);
    let tail = (half..=b).map(|i| series.values[i].norm()).fold(0.0, f64::max);
    let flat = b - a + 1 >= 16 && tail >= 0.5 * head;
    let status = if theta >= 1.0 - 1e-9 || flat {
        FitStatus::NoDecay
    } else {
        FitStatus::Decaying
    };
    Ok(MixingFit {
        status,
        theta_hat: Some(theta),
        window: Some((a, b)),
        residual: Some(rms),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleCorrelation {
    pub method: CorrelationMethod,
    pub value: Complex64,
    pub stderr: Option<f64>,
    pub samples: usize,
    pub warnings: Vec<String>,
}

/// `E ∫ conj(φ₀) · 𝒢^{n₁}(φ₁ · 𝒢^{n₂-n₁} φ₂) dx`.
///
/// The operator method multiplies in mode space and falls back to Monte
/// Carlo (with a warning) when the product leaves the operator box.
#[allow(clippy::too_many_arguments)]
pub fn triple_correlation(
    model: &Model,
    mu: &DrivingMeasure,
    phis: [&Observable; 3],
    n1: usize,
    n2: usize,
    method: CorrelationMethod,
    budget: &StatsBudget,
) -> Result<TripleCorrelation> {
    for p in phis {
        check_observable(model, p)?;
    }
    model.validate_measure(mu)?;
    if n2 < n1 {
        return Err(Error::Config(format!("need n1 <= n2, got n1 = {n1}, n2 = {n2}")));
    }
    let (m1, m2) = (n1, n2 - n1);
    let mut warnings = Vec::new();
    if method == CorrelationMethod::Operator {
        let band = phis.iter().map(|p| p.band()).max().unwrap_or(0);
        let prop = Propagator::new(model, mu, budget.k, band)?;
        let mut v = prop.lift(phis[2]);
        for _ in 0..m2 {
            v = prop.step(&v)?;
        }
        let prod = phis[1].product(&prop.lower(&v))?;
        if prop.holds(&prod) {
            let mut v = prop.lift(&prod);
            for _ in 0..m1 {
                v = prop.step(&v)?;
            }
            if prop.loss() > 0.0 {
                warnings.push(format!("Galerkin truncation loss up to {:.3e} per step", prop.loss()));
            }
            return Ok(TripleCorrelation {
                method,
                value: prop.pair(phis[0], &v),
                stderr: None,
                samples: 0,
                warnings,
            });
        }
        warnings.push("mode product leaves the operator box; using Monte Carlo".into());
    }
    if budget.samples < 2 {
        return Err(Error::Config("Monte Carlo correlations need at least 2 samples".into()));
    }
    let sampler = Sampler::new(mu)?;
    let fam = StreamFamily::new(budget.seed);
    let d = model.dim();
    let m = chunked(
        budget.samples,
        Moments::default,
        |i, acc| {
            let mut rng = fam.stream(i as u64);
            let mut x = Vec::with_capacity(d);
            let mut buf = Vec::new();
            uniform_point(&mut rng, d, &mut x);
            let a = phis[0].eval(&x).conj();
            for _ in 0..m1 {
                advance(model, &sampler, &mut rng, &mut buf, &mut x);
            }
            let b = phis[1].eval(&x);
            for _ in 0..m2 {
                advance(model, &sampler, &mut rng, &mut buf, &mut x);
            }
            acc.push(a * b * phis[2].eval(&x));
        },
        |t, p| t.merge(&p),
    );
    let (value, se) = m.mean_stderr();
    Ok(TripleCorrelation {
        method: CorrelationMethod::MonteCarlo,
        value,
        stderr: Some(se),
        samples: budget.samples,
        warnings,
    })
}
