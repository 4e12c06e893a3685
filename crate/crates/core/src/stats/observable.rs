use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ModeLattice;

/// Conjugate symmetry tolerance for real observables.
const REAL_TOL: f64 = 1e-12;

/// A trigonometric polynomial `φ(x) = Σ c_k e^{2πi⟨k,x⟩}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub dim: usize,
    /// Sorted by mode, no zero coefficients, no duplicates.
    terms: Vec<(Vec<i64>, Complex64)>,
}

impl Observable {
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut acc: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k, c) in terms {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.len(),
                });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Config(format!("coefficient of mode {k:?} is not finite")));
            }
            *acc.entry(k).or_default() += c;
        }
        Ok(Self {
            dim,
            terms: acc.into_iter().filter(|(_, c)| c.norm() != 0.0).collect(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// `amplitude · cos(2π⟨k,x⟩)`.
    pub fn cos_mode(k: &[i64], amplitude: f64) -> Self {
        let neg: Vec<i64> = k.iter().map(|c| -c).collect();
        let h = Complex64::new(0.5 * amplitude, 0.0);
        Self::new(k.len(), [(k.to_vec(), h), (neg, h)]).expect("mode dimension matches")
    }

    /// `amplitude · sin(2π⟨k,x⟩)`.
    pub fn sin_mode(k: &[i64], amplitude: f64) -> Self {
        let neg: Vec<i64> = k.iter().map(|c| -c).collect();
        let h = Complex64::new(0.0, -0.5 * amplitude);
        Self::new(k.len(), [(k.to_vec(), h), (neg, -h)]).expect("mode dimension matches")
    }

    /// `e^{2πi⟨k,x⟩}`.
    pub fn exp_mode(k: &[i64]) -> Self {
        Self::new(k.len(), [(k.to_vec(), Complex64::new(1.0, 0.0))]).expect("mode dimension matches")
    }

    pub fn terms(&self) -> &[(Vec<i64>, Complex64)] {
        &self.terms
    }

    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        self.terms
            .binary_search_by(|(m, _)| m.as_slice().cmp(k))
            .map(|i| self.terms[i].1)
            .unwrap_or_default()
    }

    /// `‖k‖_∞` over the support.
    pub fn band(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(k, _)| k.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.coefficient(&vec![0; self.dim]) == Complex64::new(0.0, 0.0)
    }

    /// Coefficients satisfy `c_{-k} = conj(c_k)`.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            (self.coefficient(&neg) - c.conj()).norm() <= REAL_TOL
        })
    }

    /// The observable minus its mean.
    pub fn centred(&self) -> Self {
        let zero = vec![0; self.dim];
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(k, _)| *k != zero).cloned().collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.dim, self.terms.iter().map(|(k, c)| (k.clone(), c * a))).expect("same dimension")
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let t: f64 = k.iter().zip(x).map(|(k, x)| *k as f64 * x).sum();
                c * Complex64::from_polar(1.0, TAU * t)
            })
            .sum()
    }

    /// Real part of `φ(x)`, for real observables.
    pub fn eval_real(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let t: f64 = TAU * k.iter().zip(x).map(|(k, x)| *k as f64 * x).sum::<f64>();
                c.re * t.cos() - c.im * t.sin()
            })
            .sum()
    }

    /// `⟨φ, ψ⟩ = ∫ conj(φ) ψ dx`.
    pub fn inner(&self, other: &Observable) -> Complex64 {
        self.terms.iter().map(|(k, c)| c.conj() * other.coefficient(k)).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    /// Pointwise product (mode convolution).
    pub fn product(&self, other: &Observable) -> Result<Observable> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.push((a.iter().zip(b).map(|(x, y)| x + y).collect(), ca * cb));
            }
        }
        Observable::new(self.dim, out)
    }

    /// Coefficient vector on `lattice`; `None` if a mode lies outside the box.
    pub fn to_vector(&self, lattice: &ModeLattice) -> Option<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); lattice.len()];
        for (k, c) in &self.terms {
            v[lattice.index(k)?] = *c;
        }
        Some(v)
    }

    pub fn from_vector(lattice: &ModeLattice, v: &[Complex64]) -> Observable {
        let terms: Vec<(Vec<i64>, Complex64)> = v
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(i, c)| (lattice.mode(i), *c))
            .collect();
        Observable::new(lattice.dim, terms).expect("lattice modes have the lattice dimension")
    }

    /// `Σ conj(c_k) v_k` against a coefficient vector on `lattice`.
    pub fn pair_vector(&self, lattice: &ModeLattice, v: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(k, c)| lattice.index(k).map(|i| c.conj() * v[i]))
            .sum()
    }
}
