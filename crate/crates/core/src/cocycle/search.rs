//! Infimum of the expansion integral over base points and unit directions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{unit, Budget, Bundle, ExpansionEstimate, Leaf, Witness, WordIntegral};
use crate::error::{Error, Result};
use crate::measure::DrivingMeasure;
use crate::models::Model;

/// Where to look for the worst frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchPlan {
    pub bundle: Bundle,
    /// Base lattice resolution; `None` picks 16 per axis in d ≤ 2 and 8 above.
    pub base_points_per_axis: Option<usize>,
    /// Sphere design size; `None` picks 64 in d = 2 and 256 above.
    pub directions: Option<usize>,
    pub refinement_rounds: usize,
}

impl Default for SearchPlan {
    fn default() -> Self {
        SearchPlan {
            bundle: Bundle::Cotangent,
            base_points_per_axis: None,
            directions: None,
            refinement_rounds: 3,
        }
    }
}

impl SearchPlan {
    pub fn tangent() -> Self {
        SearchPlan {
            bundle: Bundle::Tangent,
            ..Default::default()
        }
    }

    pub fn cotangent() -> Self {
        Self::default()
    }

    fn base_points(&self, model: &Model) -> Result<Vec<Vec<f64>>> {
        let d = model.dim();
        if d == 0 || model.has_constant_jacobian() {
            return Ok(vec![vec![0.0; d]]);
        }
        let n = self.base_points_per_axis.unwrap_or(if d <= 2 { 16 } else { 8 });
        if n == 0 {
            return Err(Error::Config("search plan has no base points".into()));
        }
        let total = n.pow(d as u32);
        Ok((0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|_| {
                        let c = idx % n;
                        idx /= n;
                        c as f64 / n as f64
                    })
                    .collect()
            })
            .collect())
    }
}

/// Low-discrepancy unit directions. In two dimensions the half circle
/// suffices because the objective is even in the direction.
pub fn direction_design(d: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 || d == 0 {
        return Err(Error::Config("search plan has no directions".into()));
    }
    if d == 1 {
        return Ok(vec![vec![1.0]]);
    }
    if d == 2 {
        return Ok((0..count)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect());
    }
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    if d > PRIMES.len() {
        return Err(Error::Config(format!("direction design supports d ≤ {}", PRIMES.len())));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (1..=count as u64)
        .map(|i| {
            let v = (0..d).map(|c| normal.inverse_cdf(halton(i, PRIMES[c]))).collect();
            unit(v)
        })
        .collect()
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Typical angular spacing of the design.
fn design_spacing(d: usize, count: usize) -> f64 {
    if d == 2 {
        std::f64::consts::PI / count as f64
    } else {
        // area of the unit sphere shared between the points
        let area = match d {
            3 => 4.0 * std::f64::consts::PI,
            4 => 2.0 * std::f64::consts::PI.powi(2),
            _ => 8.0,
        };
        (area / count as f64).powf(1.0 / (d - 1) as f64)
    }
}

fn tangent_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for e in 0..d {
        let mut u = vec![0.0; d];
        u[e] = 1.0;
        for b in std::iter::once(v).chain(basis.iter().map(|b| b.as_slice())) {
            let dot: f64 = u.iter().zip(b).map(|(a, c)| a * c).sum();
            u.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
        }
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            u.iter_mut().for_each(|a| *a /= n);
            basis.push(u);
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    basis
}

fn refine(words: &WordIntegral, leaves: &[Leaf], start: Vec<f64>, step0: f64, rounds: usize) -> (Vec<f64>, f64) {
    let mut v = start;
    let mut best = words.value(leaves, &v);
    let mut step = step0;
    for _ in 0..rounds {
        for _pass in 0..32 {
            let mut moved = false;
            for t in tangent_basis(&v) {
                for sign in [1.0, -1.0] {
                    let cand: Vec<f64> = v.iter().zip(&t).map(|(a, b)| a + sign * step * b).collect();
                    let Ok(cand) = unit(cand) else { continue };
                    let val = words.value(leaves, &cand);
                    if val < best {
                        best = val;
                        v = cand;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        step *= 0.5;
    }
    (v, best)
}

/// The minimum of the per-step expansion integral over the search set,
/// with the minimising frame as witness.
pub fn expansion_lambda(
    model: &Model,
    mu: &DrivingMeasure,
    n: usize,
    plan: &SearchPlan,
    budget: &Budget,
) -> Result<ExpansionEstimate> {
    let d = model.fiber_dim();
    let count = plan.directions.unwrap_or(if d == 2 { 64 } else { 256 });
    let dirs = direction_design(d, count)?;
    let bases = plan.base_points(model)?;
    let words = WordIntegral::new(model, mu, n, budget)?;

    let mut best: Option<(f64, usize, usize)> = None;
    for (bi, x) in bases.iter().enumerate() {
        let leaves = words.leaves(model, plan.bundle, x);
        let vals: Vec<f64> = dirs.par_iter().map(|v| words.value(&leaves, v)).collect();
        for (di, &val) in vals.iter().enumerate() {
            if best.is_none_or(|(b, _, _)| val < b) {
                best = Some((val, bi, di));
            }
        }
    }
    let (_, bi, di) = best.ok_or_else(|| Error::Config("empty search".into()))?;
    let x = &bases[bi];
    let leaves = words.leaves(model, plan.bundle, x);
    let step = 0.5 * design_spacing(d, count);
    let (v, _) = refine(&words, &leaves, dirs[di].clone(), step, plan.refinement_rounds);
    let mut est = words.estimate(&leaves, &v);
    est.witness = Some(Witness {
        base: x.clone(),
        direction: v,
    });
    Ok(est)
}
