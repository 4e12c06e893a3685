//! The `dd` transport distance between finitely supported driving measures.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::{DrivingMeasure, MapAtom, Transform};
use crate::error::{Error, Result};
use crate::models::{Matrix, Model};
use crate::numeric::torus_distance;

const MAX_ATOMS: usize = 64;
const MAX_GRID_POINTS: usize = 1 << 20;

/// Lattice on which C² discrepancies are maximised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPlan {
    pub points_per_axis: usize,
}

impl Default for GridPlan {
    fn default() -> Self {
        GridPlan { points_per_axis: 64 }
    }
}

impl GridPlan {
    pub fn new(points_per_axis: usize) -> Self {
        GridPlan { points_per_axis }
    }

    /// Cell-centred lattice points of the `dim`-torus.
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.points_per_axis;
        if n == 0 {
            return Err(Error::Config("dd grid is empty".into()));
        }
        if dim == 0 {
            return Ok(vec![Vec::new()]);
        }
        let total = n
            .checked_pow(dim as u32)
            .filter(|&t| t <= MAX_GRID_POINTS)
            .ok_or(Error::BudgetExceeded {
                what: "dd grid points".into(),
                required: (n as u128).saturating_pow(dim as u32),
                limit: MAX_GRID_POINTS as u128,
            })?;
        let h = 1.0 / n as f64;
        Ok((0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let c = idx % n;
                        idx /= n;
                        (c as f64 + 0.5) * h
                    })
                    .collect()
            })
            .collect())
    }
}

/// Value, derivative and Hessians of a composition `letters[last] ∘ … ∘ letters[0]`.
struct Jet {
    value: Vec<f64>,
    jac: Matrix,
    hess: Vec<Matrix>,
}

fn jet(model: &Model, letters: &[MapAtom], x: &[f64]) -> Jet {
    let d = x.len();
    let mut value = x.to_vec();
    let mut jac = Matrix::identity(d, d);
    let mut hess = vec![Matrix::zeros(d, d); d];
    for a in letters {
        let dg = model.jacobian(a, &value);
        let hg = model.hessians(a, &value);
        let mut next = Vec::with_capacity(d);
        for i in 0..d {
            let mut h = jac.transpose() * &hg[i] * &jac;
            for j in 0..d {
                h += &hess[j] * dg[(i, j)];
            }
            next.push(h);
        }
        hess = next;
        jac = dg * jac;
        model.apply_in_place(a, &mut value);
    }
    Jet { value, jac, hess }
}

fn inverse_letters(letters: &[MapAtom]) -> Vec<MapAtom> {
    letters
        .iter()
        .rev()
        .map(|a| MapAtom {
            transform: a.transform.then(Transform::Inverse),
            ..a.clone()
        })
        .collect()
}

fn c2_distance(model: &Model, f: &[MapAtom], g: &[MapAtom], grid: &[Vec<f64>]) -> f64 {
    let (mut v, mut d1, mut d2) = (0.0f64, 0.0f64, 0.0f64);
    for x in grid {
        let a = jet(model, f, x);
        let b = jet(model, g, x);
        v = v.max(torus_distance(&a.value, &b.value));
        d1 = d1.max((&a.jac - &b.jac).norm());
        let h = a
            .hess
            .iter()
            .zip(&b.hess)
            .map(|(p, q)| (p - q).norm_squared())
            .sum::<f64>()
            .sqrt();
        d2 = d2.max(h);
    }
    v + d1 + d2
}

/// `inf_π ∫ sqrt(d_C²(f, g) + d_C²(f⁻¹, g⁻¹)) dπ(f, g)` over couplings of `mu`
/// and `mu_tilde`, with `d_C²` replaced by its maximum over the grid.
pub fn dd_distance(model: &Model, mu: &DrivingMeasure, mu_tilde: &DrivingMeasure, grid: &GridPlan) -> Result<f64> {
    model.validate_measure(mu)?;
    model.validate_measure(mu_tilde)?;
    if model.dim() == 0 {
        return Err(Error::UnsupportedModel("dd needs maps on a torus".into()));
    }
    // canonical order makes the value exactly symmetric
    let key = |m: &DrivingMeasure| serde_json::to_string(m).unwrap_or_default();
    let (mu, mu_tilde) = if key(mu) <= key(mu_tilde) {
        (mu, mu_tilde)
    } else {
        (mu_tilde, mu)
    };
    let left = mu.step_choices()?;
    let right = mu_tilde.step_choices()?;
    for side in [&left, &right] {
        if side.len() > MAX_ATOMS {
            return Err(Error::BudgetExceeded {
                what: "dd atoms".into(),
                required: side.len() as u128,
                limit: MAX_ATOMS as u128,
            });
        }
    }
    let pts = grid.points(model.dim())?;
    let mut cost = vec![vec![0.0; right.len()]; left.len()];
    for (i, (f, _)) in left.iter().enumerate() {
        let finv = inverse_letters(f);
        for (j, (g, _)) in right.iter().enumerate() {
            if f == g {
                continue;
            }
            let ginv = inverse_letters(g);
            cost[i][j] = (c2_distance(model, f, g, &pts) + c2_distance(model, &finv, &ginv, &pts)).sqrt();
        }
    }
    transport(
        &left.iter().map(|c| c.1).collect::<Vec<_>>(),
        &right.iter().map(|c| c.1).collect::<Vec<_>>(),
        &cost,
    )
}

/// Exact optimal transport between two discrete laws.
pub(crate) fn transport(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> Result<f64> {
    if p.len() == 1 || q.len() == 1 {
        let mut total = 0.0;
        for (i, pi) in p.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                total += pi * qj * cost[i][j];
            }
        }
        return Ok(total.max(0.0));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, pi) in p.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *pi);
    }
    // the last column constraint is implied by the others
    for (j, qj) in q.iter().enumerate().take(q.len() - 1) {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, *qj);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Numerical(format!("transport LP failed: {e}")))?;
    let mut total = 0.0;
    for (i, row) in vars.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            total += sol[*v].max(0.0) * cost[i][j];
        }
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AffineTorus;

    fn translations(b: &[[f64; 2]]) -> Model {
        let id = Matrix::identity(2, 2);
        let mats = vec![id; b.len()];
        let offs: Vec<Vec<f64>> = b.iter().map(|v| v.to_vec()).collect();
        Model::Affine(AffineTorus::new(&mats, Some(&offs), None).unwrap())
    }

    #[test]
    fn translation_pair_closed_form() {
        let m = translations(&[[0.1, 0.2], [0.35, 0.1]]);
        let d = dd_distance(
            &m,
            &DrivingMeasure::dirac(0),
            &DrivingMeasure::dirac(1),
            &GridPlan::new(8),
        )
        .unwrap();
        let dist = (0.25f64.powi(2) + 0.1f64.powi(2)).sqrt();
        assert!((d - (2.0 * dist).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_and_relabelled_measures() {
        let m = translations(&[[0.1, 0.2], [0.35, 0.1]]);
        let mu = DrivingMeasure::uniform(&[0, 1]);
        let nu = DrivingMeasure::uniform(&[1, 0]);
        assert_eq!(dd_distance(&m, &mu, &mu, &GridPlan::new(4)).unwrap(), 0.0);
        assert!(dd_distance(&m, &mu, &nu, &GridPlan::new(4)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn transport_matches_brute_force_on_permutations() {
        let cost = vec![vec![1.0, 5.0, 2.0], vec![4.0, 1.0, 3.0], vec![2.0, 2.0, 7.0]];
        let u = [1.0 / 3.0; 3];
        let best = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        assert!((transport(&u, &u, &cost).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let m = translations(&[[0.1, 0.2]]);
        let mu = DrivingMeasure::dirac(0);
        assert!(dd_distance(&m, &mu, &mu, &GridPlan::new(0)).is_err());
    }
}
