//! High-frequency decay of exact word sums: the essential-radius surrogate
//! and Lasota-Yorke constants.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lattice::sobolev_weight;
use crate::error::{Error, Result};
use crate::measure::DrivingMeasure;
use crate::models::Model;
use crate::numeric::linear_fit;

/// Sparse Fourier coefficients on the whole lattice `ℤ^d`.
pub type ModeVector = BTreeMap<Vec<i64>, Complex64>;

const MAX_TRACKED_MODES: usize = 1_000_000;

/// `‖φ‖_s` for `φ = Σ c_k e_k`.
pub fn sobolev_norm(v: &ModeVector, s: f64) -> f64 {
    v.iter()
        .map(|(k, c)| c.norm_sqr() * sobolev_weight(k, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One composite step `f = f_L ∘ … ∘ f_0` with integer `Aᵀ` and offset per letter.
#[derive(Clone, Debug)]
struct AffineChoice {
    weight: f64,
    letters: Vec<(Vec<i64>, Vec<f64>)>,
    /// `(A_L ⋯ A_0)ᵀ`, row-major, for covector transport.
    cojac_inverse: Vec<f64>,
}

/// Exact action of `𝒢` on finitely supported mode vectors, for affine
/// measures with finitely many atoms. No truncation.
#[derive(Clone, Debug)]
pub struct AffinePropagator {
    dim: usize,
    choices: Vec<AffineChoice>,
}

impl AffinePropagator {
    pub fn new(model: &Model, mu: &DrivingMeasure) -> Result<Self> {
        model.validate_measure(mu)?;
        if !model.has_constant_jacobian() || model.dim() == 0 {
            return Err(Error::UnsupportedModel(format!(
                "exact word sums need an affine torus model, not {}",
                model.name()
            )));
        }
        let d = model.dim();
        let zero = vec![0.0; d];
        let choices = mu
            .step_choices()?
            .into_iter()
            .map(|(letters, weight)| {
                let mut prod = nalgebra::DMatrix::<f64>::identity(d, d);
                let letters = letters
                    .iter()
                    .map(|a| {
                        let m = model.jacobian(a, &zero);
                        prod = &m * &prod;
                        let at = (0..d * d).map(|i| m[(i % d, i / d)].round() as i64).collect();
                        let mut b = zero.clone();
                        model.apply_in_place(a, &mut b);
                        (at, b)
                    })
                    .collect();
                let pt = prod.transpose();
                AffineChoice {
                    weight,
                    letters,
                    cojac_inverse: (0..d * d).map(|i| pt[(i / d, i % d)]).collect(),
                }
            })
            .collect();
        Ok(AffinePropagator { dim: d, choices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `𝒢φ`; mode collisions are summed.
    pub fn step(&self, v: &ModeVector) -> Result<ModeVector> {
        let d = self.dim;
        let mut out = ModeVector::new();
        for ch in &self.choices {
            for (k, c) in v {
                let mut k = k.clone();
                let mut coef = *c * ch.weight;
                // e_k ∘ f_L first, down to f_0
                for (at, b) in ch.letters.iter().rev() {
                    let phase: f64 = k.iter().zip(b).map(|(&kc, bc)| kc as f64 * bc).sum();
                    coef *= Complex64::from_polar(1.0, TAU * phase);
                    k = (0..d)
                        .map(|i| {
                            (0..d).try_fold(0i64, |acc, j| {
                                at[i * d + j].checked_mul(k[j]).and_then(|t| acc.checked_add(t))
                            })
                        })
                        .collect::<Option<Vec<i64>>>()
                        .ok_or_else(|| Error::Numerical("Fourier mode index overflows i64".into()))?;
                }
                *out.entry(k).or_insert(Complex64::new(0.0, 0.0)) += coef;
            }
            if out.len() > MAX_TRACKED_MODES {
                return Err(Error::BudgetExceeded {
                    what: "tracked Fourier modes".into(),
                    required: out.len() as u128,
                    limit: MAX_TRACKED_MODES as u128,
                });
            }
        }
        Ok(out)
    }

    /// `∫ ‖(D(f⁻¹)*)⁻¹ ξ‖^{-s} dμ^n` for `n = 1..=n_max`, by exact enumeration.
    pub fn covector_moment(&self, xi: &[f64], s: f64, n_max: usize, cap: u128) -> Result<Vec<f64>> {
        let m = self.choices.len() as u128;
        let need = m.checked_pow(n_max as u32).unwrap_or(u128::MAX);
        if need > cap {
            return Err(Error::BudgetExceeded {
                what: "covector moment words".into(),
                required: need,
                limit: cap,
            });
        }
        let mut sums = vec![0.0; n_max];
        self.moment_dfs(xi, 1.0, 0, n_max, s, &mut sums);
        Ok(sums)
    }

    fn moment_dfs(&self, v: &[f64], w: f64, depth: usize, n_max: usize, s: f64, sums: &mut [f64]) {
        if depth == n_max {
            return;
        }
        let d = self.dim;
        for ch in &self.choices {
            let u: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| ch.cojac_inverse[i * d + j] * v[j]).sum())
                .collect();
            let ww = w * ch.weight;
            let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            sums[depth] += ww * n.powf(-s);
            self.moment_dfs(&u, ww, depth + 1, n_max, s, sums);
        }
    }
}

/// Probe modes for high-frequency estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeSet {
    /// Every integer mode with `r < ‖k‖ ≤ r + width`.
    Shell {
        width: f64,
    },
    Modes {
        modes: Vec<Vec<i64>>,
    },
}

impl Default for ProbeSet {
    fn default() -> Self {
        ProbeSet::Shell { width: 1.0 }
    }
}

impl ProbeSet {
    pub fn modes(&self, dim: usize, r: f64) -> Vec<Vec<i64>> {
        match self {
            ProbeSet::Modes { modes } => modes.clone(),
            ProbeSet::Shell { width } => {
                let hi = r + width;
                let b = hi.floor() as i64;
                let mut out = Vec::new();
                let side = (2 * b + 1) as usize;
                let total = side.pow(dim as u32);
                for mut idx in 0..total {
                    let k: Vec<i64> = (0..dim)
                        .map(|_| {
                            let c = (idx % side) as i64 - b;
                            idx /= side;
                            c
                        })
                        .collect();
                    let n = k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                    if n > r && n <= hi {
                        out.push(k);
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssentialRadius {
    pub s: f64,
    pub r: f64,
    pub n_max: usize,
    pub probes: usize,
    /// `exp(slope)` of `ln max_k ρ_n(k)` over `n ∈ [n_max/2, n_max]`.
    pub eta_hat: f64,
    pub fit_slope: f64,
    pub fit_intercept: f64,
    pub fit_rms: f64,
    pub fit_range: (usize, usize),
    /// `max_k ρ_n(k)` for `n = 1..=n_max`.
    pub rho_max: Vec<f64>,
    /// The same fit applied to `sup_ξ ∫ ‖(D(f⁻¹)*)⁻¹ξ‖^{-s} dμ^n` over probe directions.
    pub covector_eta: f64,
    pub covector_moment_max: Vec<f64>,
}

fn fit_rate(series: &[f64], n_max: usize) -> (f64, f64, f64, (usize, usize)) {
    let lo = n_max.div_ceil(2).max(1);
    let xs: Vec<f64> = (lo..=n_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = (lo..=n_max).map(|n| series[n - 1].ln()).collect();
    if xs.len() < 2 {
        let slope = ys[0] / xs[0];
        return (slope, 0.0, 0.0, (lo, n_max));
    }
    let (a, b, rms) = linear_fit(&xs, &ys);
    (b, a, rms, (lo, n_max))
}

/// `ρ_n(k) = ‖𝒢ⁿ e_k‖_{-s} / ‖e_k‖_{-s}` over probes with `‖k‖ > r`,
/// computed from exact word sums, and its geometric rate.
pub fn essential_radius_estimate(
    model: &Model,
    mu: &DrivingMeasure,
    s: f64,
    r: f64,
    n_max: usize,
    probes: &ProbeSet,
) -> Result<EssentialRadius> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Config(format!("essential radius needs s in (0, 1], got {s}")));
    }
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let prop = AffinePropagator::new(model, mu)?;
    let modes: Vec<Vec<i64>> = probes
        .modes(prop.dim(), r)
        .into_iter()
        .filter(|k| k.len() == prop.dim() && k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt() > r)
        .collect();
    if modes.is_empty() {
        return Err(Error::Config("probe set is empty".into()));
    }
    let count = (prop.choices.len() as u128)
        .checked_pow(n_max as u32)
        .unwrap_or(u128::MAX);
    if count > 1_000_000 {
        return Err(Error::BudgetExceeded {
            what: format!("exact word sums ({}^{n_max})", prop.choices.len()),
            required: count,
            limit: 1_000_000,
        });
    }
    let mut rho_max = vec![0.0f64; n_max];
    let mut mom_max = vec![0.0f64; n_max];
    for k in &modes {
        let mut v = ModeVector::new();
        v.insert(k.clone(), Complex64::new(1.0, 0.0));
        let base = sobolev_norm(&v, -s);
        for slot in rho_max.iter_mut() {
            v = prop.step(&v)?;
            *slot = slot.max(sobolev_norm(&v, -s) / base);
        }
        let nk = k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let xi: Vec<f64> = k.iter().map(|&c| c as f64 / nk).collect();
        let mom = prop.covector_moment(&xi, s, n_max, 1_000_000)?;
        for (m, x) in mom_max.iter_mut().zip(mom) {
            *m = m.max(x);
        }
    }
    let (slope, intercept, rms, range) = fit_rate(&rho_max, n_max);
    let (cslope, _, _, _) = fit_rate(&mom_max, n_max);
    Ok(EssentialRadius {
        s,
        r,
        n_max,
        probes: modes.len(),
        eta_hat: slope.exp(),
        fit_slope: slope,
        fit_intercept: intercept,
        fit_rms: rms,
        fit_range: range,
        rho_max,
        covector_eta: cslope.exp(),
        covector_moment_max: mom_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LasotaYorke {
    pub eta: f64,
    pub s: f64,
    pub s_bar: f64,
    /// `(n, C_n)`.
    pub table: Vec<(usize, f64)>,
    pub feasible: bool,
    /// `η ≥ 1`: no contraction of the strong norm is available.
    pub gapless: bool,
    /// Largest `C_{n+1} / C_n` over consecutive table entries with `C_n > 0`.
    pub max_growth_ratio: Option<f64>,
    pub probes: usize,
}

/// Smallest `C_n` with `‖𝒢ⁿφ‖_{-s} ≤ ηⁿ‖φ‖_{-s} + C_n‖φ‖_{-s̄}` on every probe.
pub fn lasota_yorke_fit(
    model: &Model,
    mu: &DrivingMeasure,
    s: f64,
    s_bar: f64,
    n_list: &[usize],
    probes: &[Vec<i64>],
    eta: f64,
) -> Result<LasotaYorke> {
    if !(s_bar > s) {
        return Err(Error::Config(format!("need s_bar > s, got s = {s}, s_bar = {s_bar}")));
    }
    if probes.is_empty() {
        return Err(Error::Config("probe set is empty".into()));
    }
    let prop = AffinePropagator::new(model, mu)?;
    let n_top = n_list.iter().copied().max().unwrap_or(0);
    let mut table: Vec<(usize, f64)> = n_list.iter().map(|&n| (n, 0.0)).collect();
    for k in probes {
        if k.len() != prop.dim() {
            return Err(Error::DimensionMismatch {
                expected: prop.dim(),
                got: k.len(),
            });
        }
        let mut v = ModeVector::new();
        v.insert(k.clone(), Complex64::new(1.0, 0.0));
        let strong = sobolev_norm(&v, -s);
        let weak = sobolev_norm(&v, -s_bar);
        for n in 1..=n_top {
            v = prop.step(&v)?;
            for entry in table.iter_mut().filter(|e| e.0 == n) {
                let excess = sobolev_norm(&v, -s) - eta.powi(n as i32) * strong;
                // equality up to round-off counts as satisfied
                let excess = if excess <= 1e-12 * strong { 0.0 } else { excess };
                entry.1 = entry.1.max(excess / weak);
            }
        }
    }
    let mut ratio: Option<f64> = None;
    for w in table.windows(2) {
        if w[0].1 > 0.0 {
            let r = w[1].1 / w[0].1;
            ratio = Some(ratio.map_or(r, |x: f64| x.max(r)));
        }
    }
    let gapless = eta >= 1.0 - 1e-12;
    Ok(LasotaYorke {
        eta,
        s,
        s_bar,
        feasible: !gapless && table.iter().all(|e| e.1.is_finite()),
        gapless,
        table,
        max_growth_ratio: ratio,
        probes: probes.len(),
    })
}
