use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{lift_product, matrix_from_rows, AffineTorus, LinearCocycle, Matrix, Model, Pierrehumbert, StandardMap};

/// Declarative description of a model, as found in experiment configs.
/// Matrices are row-major lists of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    AffineTorus {
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offsets: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Pierrehumbert {
        tau: f64,
    },
    StandardMap {
        #[serde(alias = "L")]
        kick: f64,
        epsilon: f64,
        #[serde(default)]
        profile: ShearProfile,
    },
    LinearCocycle {
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        /// Replace the tuple by all products of this many letters.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        power: Option<usize>,
    },
    ProductLift {
        base: Box<ModelConfig>,
        copies: usize,
    },
    /// Four-dimensional block systems built from a 2x2 tuple: atoms
    /// `diag(A_w, Id)` for every word `w` of length `power`, plus one
    /// constant shear of strength `shear`, each half of the mass.
    BlockShear {
        base: Vec<Vec<Vec<f64>>>,
        power: usize,
        shear: f64,
        layout: BlockLayout,
        /// Realise as affine maps of `T^4` instead of a point-base cocycle.
        #[serde(default)]
        torus: bool,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShearProfile {
    #[default]
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockLayout {
    /// Shear `[[Id, 0], [L Id, Id]]`: coexpanding, not expanding.
    Coexpanding,
    /// Shear `[[Id, L Id], [0, Id]]`: every map factors over the identity
    /// of the last two coordinates.
    Factoring,
}

pub fn build_model(config: &ModelConfig) -> Result<Model> {
    match config {
        ModelConfig::AffineTorus {
            matrices,
            offsets,
            weights,
        } => {
            let mats = matrices
                .iter()
                .map(|m| matrix_from_rows(m))
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Affine(AffineTorus::new(
                &mats,
                offsets.as_deref(),
                weights.as_deref(),
            )?))
        }
        ModelConfig::Pierrehumbert { tau } => Ok(Model::Pierrehumbert(Pierrehumbert::new(*tau)?)),
        ModelConfig::StandardMap { kick, epsilon, .. } => Ok(Model::Standard(StandardMap::new(*kick, *epsilon)?)),
        ModelConfig::LinearCocycle {
            matrices,
            weights,
            power,
        } => {
            let mats = matrices
                .iter()
                .map(|m| matrix_from_rows(m))
                .collect::<Result<Vec<_>>>()?;
            let w = weights
                .clone()
                .unwrap_or_else(|| vec![1.0 / mats.len() as f64; mats.len()]);
            let (mats, w) = match power {
                Some(p) if *p >= 1 => word_products(&mats, &w, *p)?,
                Some(_) => return Err(Error::Config("linear-cocycle power must be >= 1".into())),
                None => (mats, w),
            };
            Ok(Model::Linear(LinearCocycle::new(mats, Some(w))?))
        }
        ModelConfig::ProductLift { base, copies } => lift_product(&build_model(base)?, *copies),
        ModelConfig::BlockShear {
            base,
            power,
            shear,
            layout,
            torus,
        } => {
            let mats = base.iter().map(|m| matrix_from_rows(m)).collect::<Result<Vec<_>>>()?;
            if mats.iter().any(|m| m.nrows() != 2) {
                return Err(Error::Config("block-shear base matrices must be 2x2".into()));
            }
            let (mats, weights) = block_shear_atoms(&mats, *power, *shear, *layout)?;
            if *torus {
                Ok(Model::Affine(AffineTorus::new(&mats, None, Some(&weights))?))
            } else {
                Ok(Model::Linear(LinearCocycle::new(mats, Some(weights))?))
            }
        }
    }
}

/// All products `M_{w_{p-1}} ... M_{w_0}` with product weights.
pub(crate) fn word_products(mats: &[Matrix], weights: &[f64], p: usize) -> Result<(Vec<Matrix>, Vec<f64>)> {
    let count = (mats.len() as u128).saturating_pow(p as u32);
    if count > 1 << 16 {
        return Err(Error::BudgetExceeded {
            what: "matrix word products".into(),
            required: count,
            limit: 1 << 16,
        });
    }
    let mut acc = vec![(Matrix::identity(mats[0].nrows(), mats[0].nrows()), 1.0)];
    for _ in 0..p {
        let mut next = Vec::with_capacity(acc.len() * mats.len());
        for (m, w) in &acc {
            for (a, v) in mats.iter().zip(weights) {
                next.push((a * m, w * v));
            }
        }
        acc = next;
    }
    Ok(acc.into_iter().unzip())
}

/// Atoms of the block systems; the last atom is the shear.
pub fn block_shear_atoms(
    base: &[Matrix],
    power: usize,
    shear: f64,
    layout: BlockLayout,
) -> Result<(Vec<Matrix>, Vec<f64>)> {
    if power == 0 {
        return Err(Error::Config("block-shear power must be >= 1".into()));
    }
    let uniform = vec![1.0 / base.len() as f64; base.len()];
    let (words, w) = word_products(base, &uniform, power)?;
    let mut mats = Vec::with_capacity(words.len() + 1);
    let mut weights = Vec::with_capacity(words.len() + 1);
    for (a, wt) in words.iter().zip(&w) {
        let mut m = Matrix::identity(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(a);
        mats.push(m);
        weights.push(0.5 * wt);
    }
    let mut s = Matrix::identity(4, 4);
    match layout {
        BlockLayout::Coexpanding => {
            s[(2, 0)] = shear;
            s[(3, 1)] = shear;
        }
        BlockLayout::Factoring => {
            s[(0, 2)] = shear;
            s[(1, 3)] = shear;
        }
    }
    mats.push(s);
    weights.push(0.5);
    Ok((mats, weights))
}
