use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom};
use crate::numeric::wrap01;

use super::Matrix;

/// Randomly kicked standard map `f(x, y) = (L psi(x) - y + omega, x)` with
/// `psi(x) = sin(2 pi x) / (2 pi)` and `omega` uniform on `[-eps, eps]`.
///
/// The phase `t` of an atom lives in `[0, 2 eps)` and `omega = t - eps`.
#[derive(Clone, Debug)]
pub struct StandardMap {
    pub kick: f64,
    pub epsilon: f64,
}

impl StandardMap {
    pub fn new(kick: f64, epsilon: f64) -> Result<Self> {
        if !(kick > 0.0 && kick.is_finite()) {
            return Err(Error::Config(format!("standard-map L must be positive, got {kick}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "standard-map epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        Ok(Self { kick, epsilon })
    }

    pub fn template(&self) -> DrivingMeasure {
        DrivingMeasure::parametric(0, 2.0 * self.epsilon)
    }

    /// The atom with noise value `omega`.
    pub fn atom_for_omega(&self, omega: f64) -> MapAtom {
        MapAtom::new(0, 1.0).with_phase(omega + self.epsilon)
    }

    #[inline]
    fn omega(&self, atom: &MapAtom) -> f64 {
        atom.phase.unwrap_or(self.epsilon) - self.epsilon
    }

    #[inline]
    fn psi(x: f64) -> f64 {
        (TAU * x).sin() / TAU
    }

    #[inline]
    pub fn apply_in_place(&self, atom: &MapAtom, p: &mut [f64]) {
        let w = self.omega(atom);
        let (x, y) = (p[0], p[1]);
        if atom.transform.has_inverse() {
            p[0] = y;
            p[1] = wrap01(self.kick * Self::psi(y) - x + w);
        } else {
            p[0] = wrap01(self.kick * Self::psi(x) - y + w);
            p[1] = x;
        }
    }

    pub fn jacobian(&self, atom: &MapAtom, p: &[f64]) -> Matrix {
        if atom.transform.has_inverse() {
            let c = self.kick * (TAU * p[1]).cos();
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, c])
        } else {
            let c = self.kick * (TAU * p[0]).cos();
            Matrix::from_row_slice(2, 2, &[c, -1.0, 1.0, 0.0])
        }
    }

    pub fn cojacobian(&self, atom: &MapAtom, p: &[f64]) -> Matrix {
        // [[a, b], [c, d]] with det 1 has inverse-transpose [[d, -c], [-b, a]]
        let j = self.jacobian(atom, p);
        Matrix::from_row_slice(2, 2, &[j[(1, 1)], -j[(1, 0)], -j[(0, 1)], j[(0, 0)]])
    }

    pub fn hessians(&self, atom: &MapAtom, p: &[f64]) -> Vec<Matrix> {
        let mut h = vec![Matrix::zeros(2, 2), Matrix::zeros(2, 2)];
        if atom.transform.has_inverse() {
            h[1][(1, 1)] = -TAU * self.kick * (TAU * p[1]).sin();
        } else {
            h[0][(0, 0)] = -TAU * self.kick * (TAU * p[0]).sin();
        }
        h
    }
}
