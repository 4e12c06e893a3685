//! Matrix of the averaged transfer operator on a truncated Fourier box.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::lattice::{sobolev_weight, ModeLattice};
use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom};
use crate::models::{Model, HORIZONTAL};
use crate::special::bessel_j_symmetric;

/// Entries below this are dropped (and counted as truncation loss).
const ENTRY_FLOOR: f64 = 1e-15;
/// Phase characteristic values below this are exact zeros up to round-off.
const CHAR_SNAP: f64 = 1e-12;
/// Extra Bessel orders beyond `|z|`; `J_n(z)` is below 1e-17 there.
const BESSEL_MARGIN: usize = 30;

/// `𝒢φ = ∫ φ∘f dμ(f)` restricted to the modes `‖k‖_∞ ≤ K`.
///
/// Entries are stored unweighted; the Sobolev index `s` is applied as the
/// similarity `W 𝒢 W⁻¹` with `W = diag((1+‖k‖²)^{s/2})` when a weighted view
/// is requested.
#[derive(Clone, Debug)]
pub struct FourierOperator {
    pub lattice: ModeLattice,
    pub s: f64,
    columns: Vec<Vec<(u32, Complex64)>>,
    /// ℓ¹ weight mapped outside the box (or below the entry floor), per column.
    pub truncation_loss: Vec<f64>,
    pub model_hash: String,
}

impl FourierOperator {
    pub fn radius(&self) -> usize {
        self.lattice.radius as usize
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Nonzero entries `(row, value)` of column `c`, rows ascending.
    pub fn column(&self, c: usize) -> &[(u32, Complex64)] {
        &self.columns[c]
    }

    pub fn entry(&self, row: &[i64], col: &[i64]) -> Complex64 {
        let (Some(r), Some(c)) = (self.lattice.index(row), self.lattice.index(col)) else {
            return Complex64::new(0.0, 0.0);
        };
        self.columns[c]
            .binary_search_by_key(&(r as u32), |e| e.0)
            .map(|i| self.columns[c][i].1)
            .unwrap_or_default()
    }

    /// Entry of `W 𝒢 W⁻¹` at Sobolev index `s`.
    pub fn weighted_entry(&self, r: usize, c: usize, value: Complex64, s: f64) -> Complex64 {
        if s == 0.0 {
            return value;
        }
        let wr = sobolev_weight(&self.lattice.mode(r), s);
        let wc = sobolev_weight(&self.lattice.mode(c), s);
        value * (wr / wc)
    }

    pub fn max_truncation_loss(&self) -> f64 {
        self.truncation_loss.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.columns
            .iter()
            .enumerate()
            .all(|(c, col)| col.iter().all(|&(r, _)| r as usize == c))
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    /// Coefficient vector of `𝒢φ` from that of `φ` (unweighted).
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for (c, col) in self.columns.iter().enumerate() {
            let x = v[c];
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, a) in col {
                out[r as usize] += a * x;
            }
        }
        out
    }

    /// The weighted matrix, column-major.
    pub fn dense_weighted(&self, s: f64) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, a) in col {
                out[c * n + r as usize] = self.weighted_entry(r as usize, c, a, s);
            }
        }
        out
    }

    /// Largest column ℓ¹ norm of the weighted matrix (an operator-norm bound on ℓ¹).
    pub fn column_sums(&self, s: f64) -> Vec<f64> {
        self.columns
            .iter()
            .enumerate()
            .map(|(c, col)| {
                col.iter()
                    .map(|&(r, a)| self.weighted_entry(r as usize, c, a, s).norm())
                    .sum()
            })
            .collect()
    }

    pub(crate) fn columns(&self) -> &[Vec<(u32, Complex64)>] {
        &self.columns
    }
}

/// Identifies the (model, measure) pair an operator was built from.
pub fn model_hash(model: &Model, mu: &DrivingMeasure) -> String {
    let mut h = Sha256::new();
    h.update(format!("{model:?}").as_bytes());
    h.update(b"|");
    h.update(serde_json::to_string(mu).unwrap_or_default().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// How a single atom acts on modes.
#[derive(Clone, Debug)]
enum AtomAction {
    /// `e_k ↦ w e^{2πi⟨k,b⟩} e_{Aᵀk}`.
    Affine { at: Vec<i64>, b: Vec<f64>, weight: f64 },
    /// A sinusoidal shear applied to every copy, phases averaged by `law`.
    Shear {
        horizontal: bool,
        tau: f64,
        copies: usize,
        law: PhaseLaw,
    },
}

/// The (sub-probability) law of the shear phase, through its Fourier
/// coefficients `ĉ(n) = ∫ e^{2πint} dν(t)`.
#[derive(Clone, Debug)]
enum PhaseLaw {
    Atoms(Vec<(f64, f64)>),
    Uniform { period: f64, weight: f64 },
}

impl PhaseLaw {
    fn coefficient(&self, n: i64) -> Complex64 {
        let c = match self {
            PhaseLaw::Atoms(a) => a
                .iter()
                .map(|&(w, t)| Complex64::from_polar(w, TAU * n as f64 * t))
                .sum(),
            PhaseLaw::Uniform { period, weight } => {
                if n == 0 {
                    Complex64::new(*weight, 0.0)
                } else {
                    let th = TAU * n as f64 * period;
                    (Complex64::from_polar(1.0, th) - 1.0) / Complex64::new(0.0, th) * *weight
                }
            }
        };
        if c.norm() < CHAR_SNAP {
            Complex64::new(0.0, 0.0)
        } else {
            c
        }
    }
}

fn shear_kind(model: &Model) -> Option<(f64, usize)> {
    match model {
        Model::Pierrehumbert(p) => Some((p.tau, 1)),
        Model::Product(pl) => match pl.base.as_ref() {
            Model::Pierrehumbert(p) => Some((p.tau, pl.copies)),
            _ => None,
        },
        _ => None,
    }
}

fn affine_action(model: &Model, atom: &MapAtom) -> AtomAction {
    let d = model.dim();
    let a = model.jacobian(atom, &vec![0.0; d]);
    let at = (0..d * d).map(|i| a[(i % d, i / d)].round() as i64).collect();
    let mut b = vec![0.0; d];
    model.apply_in_place(atom, &mut b);
    AtomAction::Affine {
        // row-major Aᵀ: entry (i, j) of Aᵀ is A[(j, i)]
        at,
        b,
        weight: atom.weight,
    }
}

fn factor_actions(model: &Model, factor: &DrivingMeasure) -> Result<Vec<AtomAction>> {
    match factor {
        DrivingMeasure::FiniteAtoms { atoms } => {
            if let Some((tau, copies)) = shear_kind(model) {
                let mut groups: Vec<((usize, bool), Vec<(f64, f64)>)> = Vec::new();
                for a in atoms {
                    let key = (a.map_id, a.transform.has_inverse());
                    let t = a.phase.unwrap_or(0.0);
                    match groups.iter_mut().find(|g| g.0 == key) {
                        Some(g) => g.1.push((a.weight, t)),
                        None => groups.push((key, vec![(a.weight, t)])),
                    }
                }
                Ok(groups
                    .into_iter()
                    .map(|((id, inv), law)| AtomAction::Shear {
                        horizontal: id == HORIZONTAL,
                        tau: if inv { -tau } else { tau },
                        copies,
                        law: PhaseLaw::Atoms(law),
                    })
                    .collect())
            } else if model.has_constant_jacobian() && model.dim() > 0 {
                Ok(atoms.iter().map(|a| affine_action(model, a)).collect())
            } else {
                Err(Error::UnsupportedModel(format!(
                    "no Fourier-Galerkin assembly for the {} model",
                    model.name()
                )))
            }
        }
        DrivingMeasure::ParametricUniformPhase {
            map_id,
            phase_period,
            transform,
        } => {
            let (tau, copies) = shear_kind(model).ok_or_else(|| {
                Error::UnsupportedModel(format!(
                    "uniform-phase averaging is analytic only for shears, not {}",
                    model.name()
                ))
            })?;
            Ok(vec![AtomAction::Shear {
                horizontal: *map_id == HORIZONTAL,
                tau: if transform.has_inverse() { -tau } else { tau },
                copies,
                law: PhaseLaw::Uniform {
                    period: *phase_period,
                    weight: 1.0,
                },
            }])
        }
        DrivingMeasure::ConvolutionOfMeasures { .. } => {
            Err(Error::Internal("nested convolution reached the atom level".into()))
        }
    }
}

fn add(map: &mut BTreeMap<Vec<i64>, Complex64>, k: Vec<i64>, v: Complex64) {
    *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
}

/// Image of `e_k` under the averaged action, without truncation.
fn action_column(actions: &[AtomAction], k: &[i64], out: &mut BTreeMap<Vec<i64>, Complex64>) {
    let d = k.len();
    for act in actions {
        match act {
            AtomAction::Affine { at, b, weight } => {
                let row: Vec<i64> = (0..d).map(|i| (0..d).map(|j| at[i * d + j] * k[j]).sum()).collect();
                let phase: f64 = k.iter().zip(b).map(|(&kc, bc)| kc as f64 * bc).sum();
                add(out, row, Complex64::from_polar(*weight, TAU * phase));
            }
            AtomAction::Shear {
                horizontal,
                tau,
                copies,
                law,
            } => shear_column(*horizontal, *tau, *copies, law, k, out),
        }
    }
}

fn shear_column(
    horizontal: bool,
    tau: f64,
    copies: usize,
    law: &PhaseLaw,
    k: &[i64],
    out: &mut BTreeMap<Vec<i64>, Complex64>,
) {
    // per copy: Bessel argument, shifted coordinate, and J_n table
    let mut tables = Vec::with_capacity(copies);
    for c in 0..copies {
        let (src, dst) = if horizontal {
            (2 * c, 2 * c + 1)
        } else {
            (2 * c + 1, 2 * c)
        };
        let z = k[src] as f64 * tau;
        let nmax = if z == 0.0 {
            0
        } else {
            z.abs().ceil() as usize + BESSEL_MARGIN
        };
        tables.push((dst, nmax as i64, bessel_j_symmetric(nmax, z)));
    }
    let mut shifts = vec![0i64; copies];
    for (c, t) in tables.iter().enumerate() {
        shifts[c] = -t.1;
    }
    loop {
        let total: i64 = shifts.iter().sum();
        let ch = law.coefficient(total);
        if ch != Complex64::new(0.0, 0.0) {
            let mut coef = ch;
            for (c, t) in tables.iter().enumerate() {
                coef *= t.2[(shifts[c] + t.1) as usize];
            }
            if coef != Complex64::new(0.0, 0.0) {
                let mut row = k.to_vec();
                for (c, t) in tables.iter().enumerate() {
                    row[t.0] += shifts[c];
                }
                add(out, row, coef);
            }
        }
        let mut c = 0;
        loop {
            if c == copies {
                return;
            }
            shifts[c] += 1;
            if shifts[c] <= tables[c].1 {
                break;
            }
            shifts[c] = -tables[c].1;
            c += 1;
        }
    }
}

struct Sparse {
    columns: Vec<Vec<(u32, Complex64)>>,
    loss: Vec<f64>,
}

fn factor_operator(model: &Model, factor: &DrivingMeasure, lattice: &ModeLattice) -> Result<Sparse> {
    if let DrivingMeasure::ConvolutionOfMeasures { factors } = factor {
        let mut ops = factors.iter().map(|f| factor_operator(model, f, lattice));
        let mut acc = ops
            .next()
            .ok_or_else(|| Error::Config("convolution has no factors".into()))??;
        for op in ops {
            acc = multiply(&acc, &op?);
        }
        return Ok(acc);
    }
    let actions = factor_actions(model, factor)?;
    let cols: Vec<(Vec<(u32, Complex64)>, f64)> = (0..lattice.len())
        .into_par_iter()
        .map(|c| {
            let k = lattice.mode(c);
            let mut map = BTreeMap::new();
            action_column(&actions, &k, &mut map);
            let mut col = Vec::with_capacity(map.len());
            let mut loss = 0.0;
            for (row, v) in map {
                match lattice.index(&row) {
                    Some(r) if v.norm() > ENTRY_FLOOR => col.push((r as u32, v)),
                    _ => loss += v.norm(),
                }
            }
            col.sort_unstable_by_key(|e| e.0);
            (col, loss)
        })
        .collect();
    let (columns, loss) = cols.into_iter().unzip();
    Ok(Sparse { columns, loss })
}

/// `A·B` (B acts first on coefficient vectors); the loss of the product is
/// bounded by `loss_B + |B|ᵀ loss_A`.
fn multiply(a: &Sparse, b: &Sparse) -> Sparse {
    let n = b.columns.len();
    let cols: Vec<(Vec<(u32, Complex64)>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc: BTreeMap<u32, Complex64> = BTreeMap::new();
            let mut loss = b.loss[j];
            for &(i, bij) in &b.columns[j] {
                loss += bij.norm() * a.loss[i as usize];
                for &(r, ari) in &a.columns[i as usize] {
                    *acc.entry(r).or_insert(Complex64::new(0.0, 0.0)) += ari * bij;
                }
            }
            let mut col = Vec::with_capacity(acc.len());
            for (r, v) in acc {
                if v.norm() > ENTRY_FLOOR {
                    col.push((r, v));
                } else {
                    loss += v.norm();
                }
            }
            col.sort_unstable_by_key(|e| e.0);
            (col, loss)
        })
        .collect();
    let (columns, loss) = cols.into_iter().unzip();
    Sparse { columns, loss }
}

/// Assemble the Galerkin matrix of `𝒢` for `mu` on the box of radius `k`.
pub fn build_galerkin(model: &Model, mu: &DrivingMeasure, k: usize, s: f64) -> Result<FourierOperator> {
    model.validate_measure(mu)?;
    if !s.is_finite() {
        return Err(Error::Config("Sobolev index must be finite".into()));
    }
    let lattice = ModeLattice::new(model.dim(), k)?;
    let mut op = factor_operator(model, mu, &lattice)?;
    // 𝒢1 = 1 holds exactly; remove the round-off of the weight sum
    let z = lattice.zero_index();
    op.columns[z] = vec![(z as u32, Complex64::new(1.0, 0.0))];
    op.loss[z] = 0.0;
    Ok(FourierOperator {
        lattice,
        s,
        columns: op.columns,
        truncation_loss: op.loss,
        model_hash: model_hash(model, mu),
    })
}
