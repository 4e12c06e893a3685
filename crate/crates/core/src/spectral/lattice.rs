use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice the assembler accepts.
pub const MAX_MODES: usize = 20_000;

/// The box `‖k‖_∞ ≤ K` of Fourier modes in `d` dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLattice {
    pub dim: usize,
    pub radius: i64,
    side: usize,
    len: usize,
}

impl ModeLattice {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedModel("Fourier lattices need a torus".into()));
        }
        if radius == 0 {
            return Err(Error::Config("lattice radius K must be at least 1".into()));
        }
        let side = 2 * radius + 1;
        let len = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= MAX_MODES)
            .ok_or_else(|| Error::BudgetExceeded {
                what: format!("Fourier lattice ({side}^{dim} modes)"),
                required: (side as u128).saturating_pow(dim as u32),
                limit: MAX_MODES as u128,
            })?;
        Ok(ModeLattice {
            dim,
            radius: radius as i64,
            side,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.iter().all(|c| c.abs() <= self.radius)
    }

    /// Position of mode `k`, if inside the box. The first coordinate varies fastest.
    pub fn index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim || !self.contains(k) {
            return None;
        }
        let mut idx = 0usize;
        for c in k.iter().rev() {
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    pub fn mode(&self, mut idx: usize) -> Vec<i64> {
        (0..self.dim)
            .map(|_| {
                let c = idx % self.side;
                idx /= self.side;
                c as i64 - self.radius
            })
            .collect()
    }

    pub fn zero_index(&self) -> usize {
        self.index(&vec![0; self.dim]).expect("zero mode")
    }

    pub fn modes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len).map(|i| self.mode(i))
    }
}

/// `(1 + ‖k‖²)^{s/2}`.
pub fn sobolev_weight(k: &[i64], s: f64) -> f64 {
    let n2: f64 = k.iter().map(|&c| (c * c) as f64).sum();
    (1.0 + n2).powf(0.5 * s)
}
