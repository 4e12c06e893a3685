use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom};
use crate::numeric::wrap01;

use super::Matrix;

/// Map id of the horizontal shear `(x, y) -> (x + (tau/2pi) sin(2pi(y + t)), y)`.
pub const HORIZONTAL: usize = 0;
/// Map id of the vertical shear `(x, y) -> (x, y + (tau/2pi) sin(2pi(x + t)))`.
pub const VERTICAL: usize = 1;

/// Random alternating sinusoidal shears with uniform phases, on the unit torus.
#[derive(Clone, Debug)]
pub struct Pierrehumbert {
    pub tau: f64,
}

impl Pierrehumbert {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("pierrehumbert tau must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    /// Horizontal shear with uniform phase, then vertical shear with an
    /// independent uniform phase.
    pub fn template() -> DrivingMeasure {
        DrivingMeasure::convolution(vec![
            DrivingMeasure::parametric(HORIZONTAL, 1.0),
            DrivingMeasure::parametric(VERTICAL, 1.0),
        ])
    }

    /// The same system with each phase restricted to `{j / q : j < q}`.
    pub fn discretised_template(q: usize) -> DrivingMeasure {
        let atoms = |id: usize| {
            DrivingMeasure::finite(
                (0..q)
                    .map(|j| MapAtom::new(id, 1.0 / q as f64).with_phase(j as f64 / q as f64))
                    .collect(),
            )
        };
        DrivingMeasure::convolution(vec![atoms(HORIZONTAL), atoms(VERTICAL)])
    }

    #[inline]
    fn signed_tau(&self, atom: &MapAtom) -> f64 {
        if atom.transform.has_inverse() {
            -self.tau
        } else {
            self.tau
        }
    }

    #[inline]
    pub fn apply_in_place(&self, atom: &MapAtom, p: &mut [f64]) {
        let t = atom.phase.unwrap_or(0.0);
        let amp = self.signed_tau(atom) / TAU;
        if atom.map_id == HORIZONTAL {
            p[0] = wrap01(p[0] + amp * (TAU * (p[1] + t)).sin());
        } else {
            p[1] = wrap01(p[1] + amp * (TAU * (p[0] + t)).sin());
        }
    }

    pub fn jacobian(&self, atom: &MapAtom, p: &[f64]) -> Matrix {
        let t = atom.phase.unwrap_or(0.0);
        let tau = self.signed_tau(atom);
        if atom.map_id == HORIZONTAL {
            let a = tau * (TAU * (p[1] + t)).cos();
            Matrix::from_row_slice(2, 2, &[1.0, a, 0.0, 1.0])
        } else {
            let a = tau * (TAU * (p[0] + t)).cos();
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, a, 1.0])
        }
    }

    pub fn cojacobian(&self, atom: &MapAtom, p: &[f64]) -> Matrix {
        let t = atom.phase.unwrap_or(0.0);
        let tau = self.signed_tau(atom);
        if atom.map_id == HORIZONTAL {
            let a = tau * (TAU * (p[1] + t)).cos();
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, -a, 1.0])
        } else {
            let a = tau * (TAU * (p[0] + t)).cos();
            Matrix::from_row_slice(2, 2, &[1.0, -a, 0.0, 1.0])
        }
    }

    pub fn hessians(&self, atom: &MapAtom, p: &[f64]) -> Vec<Matrix> {
        let t = atom.phase.unwrap_or(0.0);
        let tau = self.signed_tau(atom);
        let mut h = vec![Matrix::zeros(2, 2), Matrix::zeros(2, 2)];
        if atom.map_id == HORIZONTAL {
            h[0][(1, 1)] = -TAU * tau * (TAU * (p[1] + t)).sin();
        } else {
            h[1][(0, 0)] = -TAU * tau * (TAU * (p[0] + t)).sin();
        }
        h
    }
}
