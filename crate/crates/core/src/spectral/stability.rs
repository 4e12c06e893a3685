//! Perturbation sweeps of the subleading eigenvalue.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::operator_spectrum;
use super::galerkin::{build_galerkin, FourierOperator};
use crate::error::{Error, Result};
use crate::measure::{dd_distance, DrivingMeasure, GridPlan};
use crate::models::{Model, Pierrehumbert};
use crate::numeric::linear_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMember {
    pub label: String,
    /// The family parameter (e.g. the number of phases).
    pub parameter: f64,
    pub subleading: Complex64,
    pub subleading_modulus: f64,
    /// `|λ_ε - λ_0|`.
    pub deviation: f64,
    pub dd_to_base: Option<f64>,
    pub max_truncation_loss: f64,
    pub unit_multiplicity: usize,
    pub peripheral_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub k: usize,
    pub s: f64,
    pub base_subleading: Complex64,
    pub members: Vec<SweepMember>,
    /// Least-squares slope of `ln deviation` against `ln parameter`, over
    /// members with nonzero deviation.
    pub log_log_slope: Option<f64>,
}

/// Subleading eigenvalue of each family member against the base operator.
pub fn stability_sweep_operators(
    base: &FourierOperator,
    members: &[(String, f64, FourierOperator, Option<f64>)],
    s: f64,
) -> Result<StabilitySweep> {
    let b = operator_spectrum(base, s)?;
    let mut out = Vec::with_capacity(members.len());
    for (label, param, op, dd) in members {
        if op.radius() != base.radius() || op.lattice != base.lattice {
            return Err(Error::Config(format!(
                "family member {label} was built at K = {}, base at K = {}",
                op.radius(),
                base.radius()
            )));
        }
        let r = operator_spectrum(op, s)?;
        out.push(SweepMember {
            label: label.clone(),
            parameter: *param,
            subleading: r.subleading,
            subleading_modulus: r.subleading_modulus,
            deviation: (r.subleading - b.subleading).norm(),
            dd_to_base: *dd,
            max_truncation_loss: r.max_truncation_loss,
            unit_multiplicity: r.unit_multiplicity,
            peripheral_count: r.peripheral_count,
        });
    }
    let pts: Vec<(f64, f64)> = out
        .iter()
        .filter(|m| m.deviation > 0.0 && m.parameter > 0.0)
        .map(|m| (m.parameter.ln(), m.deviation.ln()))
        .collect();
    let log_log_slope = (pts.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&xs, &ys).1
    });
    Ok(StabilitySweep {
        k: base.radius(),
        s,
        base_subleading: b.subleading,
        members: out,
        log_log_slope,
    })
}

/// Sweep over a family of measures for one model, all built at the same `K`.
pub fn stability_sweep(
    model: &Model,
    base: &DrivingMeasure,
    family: &[(String, f64, DrivingMeasure)],
    k: usize,
    s: f64,
    grid: Option<&GridPlan>,
) -> Result<StabilitySweep> {
    let base_op = build_galerkin(model, base, k, s)?;
    let mut members = Vec::with_capacity(family.len());
    for (label, param, mu) in family {
        let op = build_galerkin(model, mu, k, s)?;
        let dd = if mu == base {
            Some(0.0)
        } else if let Some(g) = grid {
            dd_distance(model, base, mu, g).ok()
        } else {
            None
        };
        members.push((label.clone(), *param, op, dd));
    }
    stability_sweep_operators(&base_op, &members, s)
}

/// Uniform phases replaced by `q` equally spaced phases, for each `q`.
pub fn pierrehumbert_phase_sweep(tau: f64, qs: &[usize], k: usize, s: f64) -> Result<StabilitySweep> {
    let model = Model::Pierrehumbert(Pierrehumbert::new(tau)?);
    if qs.contains(&0) {
        return Err(Error::Config("phase counts must be positive".into()));
    }
    let family: Vec<(String, f64, DrivingMeasure)> = qs
        .iter()
        .map(|&q| (format!("Q={q}"), q as f64, Pierrehumbert::discretised_template(q)))
        .collect();
    stability_sweep(&model, &Pierrehumbert::template(), &family, k, s, None)
}

/// True when every value is at most its predecessor plus `floor`.
pub fn is_nonincreasing(values: &[f64], floor: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + floor)
}
