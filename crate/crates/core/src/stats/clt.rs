use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::correlation::{
    advance, chunked, correlation_series, mixing_rate_fit, uniform_point, CorrelationMethod, FitStatus, MixingFit,
    StatsBudget, OPERATOR_NOISE_FLOOR,
};
use super::observable::Observable;
use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, Sampler};
use crate::models::Model;
use crate::numeric::{pairwise_sum, sample_variance};
use crate::rng::StreamFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenKuboOptions {
    /// Terms of the partial sum.
    pub n_max: usize,
    /// Galerkin box radius; `None` lets the operator method choose.
    pub k: Option<usize>,
}

impl Default for GreenKuboOptions {
    fn default() -> Self {
        Self { n_max: 200, k: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenKuboStatus {
    Ok,
    /// Correlations do not decay; no variance is claimed.
    NonDecaying,
    /// The partial sum is negative beyond its tail bound.
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenKubo {
    pub status: GreenKuboStatus,
    /// `‖φ‖² + 2 Σ_{n≥1} ⟨φ, 𝒢ⁿφ⟩`, partial sum plus geometric tail.
    pub sigma2: Option<f64>,
    pub partial_sum: f64,
    /// Magnitude of the geometric tail beyond `n_max`.
    pub tail_bound: f64,
    pub n_max: usize,
    pub norm2: f64,
    pub fit: MixingFit,
    pub max_truncation_loss: f64,
    pub diagnostic: Option<String>,
}

fn check_real_zero_mean(model: &Model, phi: &Observable) -> Result<()> {
    if phi.dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi.dim,
        });
    }
    if !phi.is_real() {
        return Err(Error::Config("observable must be real (c_{-k} = conj c_k)".into()));
    }
    if !phi.is_zero_mean() {
        return Err(Error::Config("observable must have zero mean".into()));
    }
    Ok(())
}

/// Green–Kubo variance from operator-method correlations.
pub fn green_kubo_variance(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    opts: &GreenKuboOptions,
) -> Result<GreenKubo> {
    check_real_zero_mean(model, phi)?;
    if opts.n_max < 6 {
        return Err(Error::Config("Green–Kubo needs n_max >= 6".into()));
    }
    let budget = StatsBudget {
        k: opts.k,
        ..StatsBudget::default()
    };
    let series = correlation_series(model, mu, phi, phi, opts.n_max, CorrelationMethod::Operator, &budget)?;
    let c: Vec<f64> = series.values.iter().map(|z| z.re).collect();
    let norm2 = phi.l2_norm_sq();
    let partial = c[0] + 2.0 * pairwise_sum(&c[1..]);
    let fit = mixing_rate_fit(&series)?;
    let quiet = c[1..].iter().all(|v| v.abs() <= OPERATOR_NOISE_FLOOR);
    let mut out = GreenKubo {
        status: GreenKuboStatus::Ok,
        sigma2: None,
        partial_sum: partial,
        tail_bound: 0.0,
        n_max: opts.n_max,
        norm2,
        fit: fit.clone(),
        max_truncation_loss: series.max_truncation_loss,
        diagnostic: None,
    };
    let tail = match (fit.status, fit.theta_hat) {
        _ if phi.is_zero() => 0.0,
        (FitStatus::Decaying, Some(q)) => 2.0 * c[opts.n_max] * q / (1.0 - q),
        (FitStatus::BelowNoise, _) if quiet => 0.0,
        // the series died out before the window closed
        (FitStatus::BelowNoise, _) if c[opts.n_max].abs() <= OPERATOR_NOISE_FLOOR => 0.0,
        _ => {
            out.status = GreenKuboStatus::NonDecaying;
            out.diagnostic = Some(format!(
                "correlations do not decay (fit status {:?}, rate {:?})",
                fit.status, fit.theta_hat
            ));
            return Ok(out);
        }
    };
    out.tail_bound = tail.abs();
    let sigma2 = partial + tail;
    if sigma2 < -out.tail_bound {
        out.status = GreenKuboStatus::Negative;
        out.diagnostic = Some(format!("partial sum {partial:.6e} is negative beyond the tail bound"));
        return Ok(out);
    }
    out.sigma2 = Some(sigma2.max(0.0));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CltStatus {
    /// KS distance is measured against the Green–Kubo Gaussian.
    Ok,
    /// `φ = 0` or `σ² = 0`: all sums vanish.
    Degenerate,
    /// The correlation series does not decay; no CLT verdict.
    NonMixing,
    /// No operator available; KS is against the empirical-variance Gaussian.
    GkUnavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub status: CltStatus,
    pub sigma2_gk: Option<f64>,
    /// Empirical variance of `S_N/√N`.
    pub sigma2_mc: f64,
    pub mean: f64,
    pub ks_distance: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub green_kubo: Option<GreenKubo>,
    pub warnings: Vec<String>,
}

/// `S_N/√N` at each horizon in `horizons` (increasing), per trial, with
/// `S_N = Σ_{j<N} φ(f_j ⋯ f_1 x₀)`.
fn birkhoff_sums(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    horizons: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let sampler = Sampler::new(mu)?;
    let fam = StreamFamily::new(seed);
    let d = model.dim();
    let last = *horizons.last().expect("at least one horizon");
    let rows = chunked(
        trials,
        Vec::new,
        |i, acc: &mut Vec<Vec<f64>>| {
            let mut rng = fam.stream(i as u64);
            let mut x = Vec::with_capacity(d);
            let mut buf = Vec::new();
            uniform_point(&mut rng, d, &mut x);
            let mut out = Vec::with_capacity(horizons.len());
            let mut s = 0.0;
            let mut h = 0;
            for j in 0..last {
                if j > 0 {
                    advance(model, &sampler, &mut rng, &mut buf, &mut x);
                }
                s += phi.eval_real(&x);
                if j + 1 == horizons[h] {
                    out.push(s / (horizons[h] as f64).sqrt());
                    h += 1;
                }
            }
            acc.push(out);
        },
        |t, p| t.extend(p),
    );
    Ok((0..horizons.len())
        .map(|h| rows.iter().map(|r| r[h]).collect())
        .collect())
}

/// Kolmogorov–Smirnov distance between the sample and `N(0, σ²)`.
pub fn ks_distance(sample: &[f64], sigma2: f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf: Box<dyn Fn(f64) -> f64> = if sigma2 > 0.0 {
        let g = Normal::new(0.0, sigma2.sqrt()).expect("positive variance");
        Box::new(move |x| g.cdf(x))
    } else {
        Box::new(|x: f64| if x >= 0.0 { 1.0 } else { 0.0 })
    };
    let left = |x: f64| {
        if sigma2 > 0.0 {
            cdf(x)
        } else if x > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        d = d
            .max((left(xs[i]) - i as f64 / n).abs())
            .max(((j + 1) as f64 / n - cdf(xs[i])).abs());
        i = j + 1;
    }
    d.clamp(0.0, 1.0)
}

struct Reference {
    status: CltStatus,
    sigma2: Option<f64>,
    gk: Option<GreenKubo>,
    warnings: Vec<String>,
}

fn reference(model: &Model, mu: &DrivingMeasure, phi: &Observable, gk: &GreenKuboOptions) -> Result<Reference> {
    let mut warnings = Vec::new();
    if phi.is_zero() {
        return Ok(Reference {
            status: CltStatus::Degenerate,
            sigma2: Some(0.0),
            gk: None,
            warnings,
        });
    }
    match green_kubo_variance(model, mu, phi, gk) {
        Ok(g) => {
            let status = match (g.status, g.sigma2) {
                (GreenKuboStatus::Ok, Some(s)) if s <= 0.0 => CltStatus::Degenerate,
                (GreenKuboStatus::Ok, Some(_)) => CltStatus::Ok,
                (GreenKuboStatus::NonDecaying, _) => CltStatus::NonMixing,
                _ => CltStatus::GkUnavailable,
            };
            if let Some(msg) = &g.diagnostic {
                warnings.push(msg.clone());
            }
            Ok(Reference {
                status,
                sigma2: g.sigma2,
                gk: Some(g),
                warnings,
            })
        }
        Err(e @ (Error::UnsupportedModel(_) | Error::UnsupportedMeasure(_) | Error::BudgetExceeded { .. })) => {
            warnings.push(format!("Green–Kubo variance unavailable: {e}"));
            Ok(Reference {
                status: CltStatus::GkUnavailable,
                sigma2: None,
                gk: None,
                warnings,
            })
        }
        Err(e) => Err(e),
    }
}

fn check_sizes(n: usize, trials: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::Config(format!("CLT horizon N must be at least 100, got {n}")));
    }
    if trials < 1000 {
        return Err(Error::Config(format!("CLT needs at least 1000 trials, got {trials}")));
    }
    Ok(())
}

/// Distribution of `S_N/√N` against the Green–Kubo Gaussian.
pub fn clt_experiment(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    n: usize,
    trials: usize,
    seed: u64,
    gk: &GreenKuboOptions,
) -> Result<CltReport> {
    check_real_zero_mean(model, phi)?;
    check_sizes(n, trials)?;
    let r = reference(model, mu, phi, gk)?;
    let sums = birkhoff_sums(model, mu, phi, &[n], trials, seed)?.remove(0);
    let sigma2_mc = sample_variance(&sums);
    let mean = pairwise_sum(&sums) / trials as f64;
    let against = match r.status {
        CltStatus::Ok | CltStatus::Degenerate => r.sigma2.unwrap_or(0.0),
        _ => sigma2_mc,
    };
    Ok(CltReport {
        status: r.status,
        sigma2_gk: r.sigma2,
        sigma2_mc,
        mean,
        ks_distance: ks_distance(&sums, against),
        n,
        trials,
        seed,
        green_kubo: r.gk,
        warnings: r.warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenRow {
    pub n: usize,
    pub ks_distance: f64,
    pub sqrt_n_ks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    pub s: i64,
    /// One-sided p-value for an increasing trend.
    pub p_value: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseen {
    pub status: CltStatus,
    pub sigma2_gk: Option<f64>,
    pub rows: Vec<BerryEsseenRow>,
    pub max_sqrt_n_ks: f64,
    /// Mean KS distance of `trials` exact Gaussian draws, `√(π/2)·ln 2/√trials`.
    /// `√N` times this grows with `N` regardless of the dynamics.
    pub ks_noise_floor: f64,
    /// `None` for fewer than three horizons.
    pub trend: Option<MannKendall>,
    pub increasing_trend: Option<bool>,
    pub trials: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Trend level used by `berry_esseen_scaling`.
pub const TREND_LEVEL: f64 = 0.05;

/// `√N · KS` across horizons. Every horizon reads prefix sums of the same
/// trial orbits.
pub fn berry_esseen_scaling(
    model: &Model,
    mu: &DrivingMeasure,
    phi: &Observable,
    horizons: &[usize],
    trials: usize,
    seed: u64,
    gk: &GreenKuboOptions,
) -> Result<BerryEsseen> {
    check_real_zero_mean(model, phi)?;
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "horizons must be nonempty and strictly increasing".into(),
        ));
    }
    check_sizes(horizons[0], trials)?;
    let r = reference(model, mu, phi, gk)?;
    let sums = birkhoff_sums(model, mu, phi, horizons, trials, seed)?;
    let rows: Vec<BerryEsseenRow> = horizons
        .iter()
        .zip(&sums)
        .map(|(&n, s)| {
            let against = match (r.status, r.sigma2) {
                (CltStatus::Ok | CltStatus::Degenerate, Some(v)) => v,
                _ => sample_variance(s),
            };
            let ks = ks_distance(s, against);
            BerryEsseenRow {
                n,
                ks_distance: ks,
                sqrt_n_ks: (n as f64).sqrt() * ks,
            }
        })
        .collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.sqrt_n_ks).collect();
    let trend = (vals.len() >= 3).then(|| mann_kendall(&vals));
    Ok(BerryEsseen {
        status: r.status,
        sigma2_gk: r.sigma2,
        max_sqrt_n_ks: vals.iter().copied().fold(0.0, f64::max),
        ks_noise_floor: (std::f64::consts::FRAC_PI_2).sqrt() * std::f64::consts::LN_2 / (trials as f64).sqrt(),
        increasing_trend: trend.as_ref().map(|t| t.p_value < TREND_LEVEL),
        trend,
        rows,
        trials,
        seed,
        warnings: r.warnings,
    })
}

/// Mann–Kendall statistic with a one-sided p-value for an increasing trend.
/// Exact (via inversion counts) up to 40 untied values, normal
/// approximation otherwise.
pub fn mann_kendall(xs: &[f64]) -> MannKendall {
    let n = xs.len();
    let mut s = 0i64;
    let mut ties = false;
    for i in 0..n {
        for j in i + 1..n {
            match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => s += 1,
                Some(std::cmp::Ordering::Less) => s -= 1,
                _ => ties = true,
            }
        }
    }
    if !ties && n <= 40 {
        // S = C(n,2) - 2·inv; count permutations with at most inv inversions
        let pairs = (n * n.saturating_sub(1) / 2) as i64;
        let inv = ((pairs - s) / 2) as usize;
        let counts = mahonian(n);
        let total: f64 = counts.iter().sum();
        let tail: f64 = counts[..=inv].iter().sum();
        return MannKendall {
            s,
            p_value: tail / total,
            exact: true,
        };
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let g = Normal::new(0.0, 1.0).expect("unit normal");
    MannKendall {
        s,
        p_value: 1.0 - g.cdf(z),
        exact: false,
    }
}

/// Number of permutations of `n` items with each inversion count.
fn mahonian(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 1..=n {
        let mut next = vec![0.0; row.len() + m - 1];
        for (i, c) in row.iter().enumerate() {
            for slot in &mut next[i..i + m] {
                *slot += c;
            }
        }
        row = next;
    }
    row
}
