use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom, Transform};

use super::Matrix;

/// Invertible matrices acting on the fibre of the trivial bundle over a
/// single point.
#[derive(Clone, Debug)]
pub struct LinearCocycle {
    pub dim: usize,
    /// Per map: identity, inverse, transpose, inverse-transpose.
    pub matrices: Vec<[Matrix; 4]>,
    pub template: DrivingMeasure,
}

impl LinearCocycle {
    pub fn new(mats: Vec<Matrix>, weights: Option<Vec<f64>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::Config("linear-cocycle needs at least one matrix".into()));
        }
        let dim = mats[0].nrows();
        let mut matrices = Vec::with_capacity(mats.len());
        for m in mats {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Config(
                    "linear-cocycle matrices must share one square shape".into(),
                ));
            }
            let inv = m
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Config("linear-cocycle matrix is singular".into()))?;
            let t = m.transpose();
            let it = inv.transpose();
            matrices.push([m, inv, t, it]);
        }
        let template = match weights {
            Some(w) => {
                if w.len() != matrices.len() {
                    return Err(Error::Config("weights and matrices differ in length".into()));
                }
                DrivingMeasure::finite(w.into_iter().enumerate().map(|(i, w)| MapAtom::new(i, w)).collect())
            }
            None => DrivingMeasure::uniform(&(0..matrices.len()).collect::<Vec<_>>()),
        };
        template.validate()?;
        Ok(Self {
            dim,
            matrices,
            template,
        })
    }

    pub fn matrix(&self, atom: &MapAtom) -> &Matrix {
        self.matrix_for(atom.map_id, atom.transform)
    }

    pub fn matrix_for(&self, map_id: usize, t: Transform) -> &Matrix {
        let slot = match t {
            Transform::Identity => 0,
            Transform::Inverse => 1,
            Transform::Transpose => 2,
            Transform::InverseTranspose => 3,
        };
        &self.matrices[map_id][slot]
    }

    pub fn is_volume_preserving(&self) -> bool {
        self.matrices
            .iter()
            .all(|m| (m[0].determinant().abs() - 1.0).abs() < 1e-10)
    }
}
