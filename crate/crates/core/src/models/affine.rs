use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom, Transform};
use crate::numeric::wrap01;

use super::Matrix;

/// `x -> A x + b` on `T^d` with `A` unimodular.
///
/// The four associated maps are precomputed. The transposed map is
/// `x -> A^T x + b`; the inverse-transposed map is its inverse.
#[derive(Clone, Debug)]
pub struct AffineMap {
    variants: [AffineVariant; 4],
}

#[derive(Clone, Debug)]
struct AffineVariant {
    int_matrix: Vec<i64>,
    matrix: Matrix,
    offset: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AffineTorus {
    pub dim: usize,
    pub maps: Vec<AffineMap>,
    pub template: DrivingMeasure,
}

fn slot(t: Transform) -> usize {
    match t {
        Transform::Identity => 0,
        Transform::Inverse => 1,
        Transform::Transpose => 2,
        Transform::InverseTranspose => 3,
    }
}

impl AffineMap {
    pub fn new(matrix: &Matrix, offset: &[f64]) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || offset.len() != d {
            return Err(Error::Config(
                "affine map: matrix and offset dimensions disagree".into(),
            ));
        }
        let mut ints = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                let v = matrix[(i, j)];
                if (v - v.round()).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "affine-torus matrix entry {v} is not an integer"
                    )));
                }
                ints[i * d + j] = v.round() as i64;
            }
        }
        let det = matrix.determinant();
        if (det.abs() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "affine-torus matrix has determinant {det}; need +-1"
            )));
        }
        let inv = integer_inverse(&ints, d)?;
        let a = to_matrix(&ints, d);
        let ai = to_matrix(&inv, d);
        let b = offset.to_vec();
        let minus = |m: &Matrix, v: &[f64]| -> Vec<f64> {
            (m * nalgebra::DVector::from_column_slice(v))
                .iter()
                .map(|x| -x)
                .collect()
        };

        let ident = AffineVariant {
            int_matrix: ints.clone(),
            matrix: a.clone(),
            offset: b.clone(),
        };
        let inverse = AffineVariant {
            int_matrix: inv.clone(),
            offset: minus(&ai, &b),
            matrix: ai.clone(),
        };
        let at = a.transpose();
        let ait = ai.transpose();
        let transpose = AffineVariant {
            int_matrix: transpose_int(&ints, d),
            matrix: at,
            offset: b.clone(),
        };
        let inv_t = AffineVariant {
            int_matrix: transpose_int(&inv, d),
            offset: minus(&ait, &b),
            matrix: ait,
        };
        Ok(Self {
            variants: [ident, inverse, transpose, inv_t],
        })
    }

    pub fn matrix(&self, t: Transform) -> &Matrix {
        &self.variants[slot(t)].matrix
    }

    /// Row-major integer matrix of the `t`-transformed map.
    pub fn int_matrix(&self, t: Transform) -> &[i64] {
        &self.variants[slot(t)].int_matrix
    }

    pub fn offset(&self, t: Transform) -> &[f64] {
        &self.variants[slot(t)].offset
    }
}

impl AffineTorus {
    pub fn new(matrices: &[Matrix], offsets: Option<&[Vec<f64>]>, weights: Option<&[f64]>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Config("affine-torus needs at least one matrix".into()));
        }
        let dim = matrices[0].nrows();
        let mut maps = Vec::with_capacity(matrices.len());
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != dim {
                return Err(Error::Config("affine-torus matrices differ in dimension".into()));
            }
            let zero = vec![0.0; dim];
            let b = match offsets {
                Some(o) => o
                    .get(j)
                    .ok_or_else(|| Error::Config("fewer offsets than matrices".into()))?,
                None => &zero,
            };
            maps.push(AffineMap::new(m, b)?);
        }
        let template = match weights {
            Some(w) => {
                if w.len() != maps.len() {
                    return Err(Error::Config("weights and matrices differ in length".into()));
                }
                DrivingMeasure::finite(w.iter().enumerate().map(|(i, &w)| MapAtom::new(i, w)).collect())
            }
            None => DrivingMeasure::uniform(&(0..maps.len()).collect::<Vec<_>>()),
        };
        template.validate()?;
        Ok(Self { dim, maps, template })
    }

    pub fn apply_in_place(&self, atom: &MapAtom, x: &mut [f64]) {
        let v = &self.maps[atom.map_id].variants[slot(atom.transform)];
        let d = self.dim;
        let mut out = [0.0f64; super::MAX_LIFT_DIM];
        for i in 0..d {
            let mut s = v.offset[i];
            for j in 0..d {
                s += v.int_matrix[i * d + j] as f64 * x[j];
            }
            out[i] = wrap01(s);
        }
        x.copy_from_slice(&out[..d]);
    }

    pub fn map(&self, id: usize) -> &AffineMap {
        &self.maps[id]
    }
}

fn to_matrix(ints: &[i64], d: usize) -> Matrix {
    Matrix::from_fn(d, d, |i, j| ints[i * d + j] as f64)
}

fn transpose_int(m: &[i64], d: usize) -> Vec<i64> {
    let mut out = vec![0i64; d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = m[i * d + j];
        }
    }
    out
}

fn integer_inverse(m: &[i64], d: usize) -> Result<Vec<i64>> {
    let inv = to_matrix(m, d)
        .try_inverse()
        .ok_or_else(|| Error::Config("affine-torus matrix is singular".into()))?;
    let ints: Vec<i64> = (0..d * d).map(|k| inv[(k / d, k % d)].round() as i64).collect();
    for i in 0..d {
        for j in 0..d {
            let s: i64 = (0..d).map(|k| m[i * d + k] * ints[k * d + j]).sum();
            if s != i64::from(i == j) {
                return Err(Error::Internal("integer inverse check failed".into()));
            }
        }
    }
    Ok(ints)
}
