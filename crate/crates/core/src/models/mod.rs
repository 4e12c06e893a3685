//! The map zoo: volume-preserving random systems on tori and linear
//! cocycles over a point, with exact forward/inverse evaluation and
//! analytic derivatives.

mod affine;
mod config;
mod linear;
mod shear;
mod standard;

pub use affine::{AffineMap, AffineTorus};
pub use config::{build_model, BlockLayout, ModelConfig, ShearProfile};
pub use linear::LinearCocycle;
pub use shear::{Pierrehumbert, HORIZONTAL, VERTICAL};
pub use standard::StandardMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, MapAtom, Transform};
use crate::numeric::wrap01;

/// Largest product-space dimension accepted by [`lift_product`].
pub const MAX_LIFT_DIM: usize = 8;

pub type Matrix = DMatrix<f64>;

/// A point of `R^d / Z^d`, every coordinate in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self {
            coords: coords.into_iter().map(wrap01).collect(),
        }
    }

    /// The formal point of a point-base bundle.
    pub fn base_point() -> Self {
        Self { coords: Vec::new() }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Derivative data of one map at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianPair {
    pub jac: Matrix,
    /// `(jac^T)^{-1}`, the action on covectors.
    pub cojac: Matrix,
    pub det_jac: f64,
}

/// A built model. Map ids index the model's own map table.
#[derive(Clone, Debug)]
pub enum Model {
    Affine(AffineTorus),
    Pierrehumbert(Pierrehumbert),
    Standard(StandardMap),
    Linear(LinearCocycle),
    Product(ProductLift),
}

/// `copies` points driven by the same sampled map.
#[derive(Clone, Debug)]
pub struct ProductLift {
    pub base: Box<Model>,
    pub copies: usize,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Affine(_) => "affine-torus",
            Model::Pierrehumbert(_) => "pierrehumbert",
            Model::Standard(_) => "standard-map",
            Model::Linear(_) => "linear-cocycle",
            Model::Product(_) => "product-lift",
        }
    }

    /// Dimension of the base space (0 for a cocycle over a point).
    pub fn dim(&self) -> usize {
        match self {
            Model::Affine(m) => m.dim,
            Model::Pierrehumbert(_) | Model::Standard(_) => 2,
            Model::Linear(_) => 0,
            Model::Product(p) => p.copies * p.base.dim(),
        }
    }

    /// Dimension of the fibre the derivative cocycle acts on.
    pub fn fiber_dim(&self) -> usize {
        match self {
            Model::Affine(m) => m.dim,
            Model::Pierrehumbert(_) | Model::Standard(_) => 2,
            Model::Linear(m) => m.dim,
            Model::Product(p) => p.copies * p.base.fiber_dim(),
        }
    }

    pub fn map_count(&self) -> usize {
        match self {
            Model::Affine(m) => m.maps.len(),
            Model::Pierrehumbert(_) => 2,
            Model::Standard(_) => 1,
            Model::Linear(m) => m.matrices.len(),
            Model::Product(p) => p.base.map_count(),
        }
    }

    pub fn is_volume_preserving(&self) -> bool {
        match self {
            Model::Linear(m) => m.is_volume_preserving(),
            Model::Product(p) => p.base.is_volume_preserving(),
            _ => true,
        }
    }

    /// True when every map's derivative is independent of the point.
    pub fn has_constant_jacobian(&self) -> bool {
        match self {
            Model::Affine(_) | Model::Linear(_) => true,
            Model::Product(p) => p.base.has_constant_jacobian(),
            _ => false,
        }
    }

    /// Maps that form a one-parameter phase family.
    pub fn is_phase_family(&self, map_id: usize) -> bool {
        match self {
            Model::Pierrehumbert(_) | Model::Standard(_) => map_id < self.map_count(),
            Model::Product(p) => p.base.is_phase_family(map_id),
            _ => false,
        }
    }

    pub fn supports_transform(&self, map_id: usize, t: Transform) -> bool {
        if map_id >= self.map_count() {
            return false;
        }
        match self {
            Model::Affine(_) | Model::Linear(_) => true,
            Model::Pierrehumbert(_) | Model::Standard(_) => !t.has_transpose(),
            Model::Product(p) => p.base.supports_transform(map_id, t),
        }
    }

    /// Default driving measure registered with the model.
    pub fn template(&self) -> DrivingMeasure {
        match self {
            Model::Affine(m) => m.template.clone(),
            Model::Pierrehumbert(_) => Pierrehumbert::template(),
            Model::Standard(m) => m.template(),
            Model::Linear(m) => m.template.clone(),
            Model::Product(p) => p.base.template(),
        }
    }

    pub fn validate_atom(&self, atom: &MapAtom) -> Result<()> {
        if atom.map_id >= self.map_count() {
            return Err(Error::Config(format!(
                "map_id {} out of range for {} model with {} maps",
                atom.map_id,
                self.name(),
                self.map_count()
            )));
        }
        if atom.phase.is_some() != self.is_phase_family(atom.map_id) {
            return Err(Error::Config(format!(
                "map {} of the {} model {} a phase",
                atom.map_id,
                self.name(),
                if self.is_phase_family(atom.map_id) {
                    "requires"
                } else {
                    "does not take"
                }
            )));
        }
        if !self.supports_transform(atom.map_id, atom.transform) {
            return Err(Error::UnsupportedTransform {
                transform: atom.transform.to_string(),
                model: self.name().into(),
            });
        }
        Ok(())
    }

    /// Checks that a measure is well formed and only references maps this
    /// model can realise.
    pub fn validate_measure(&self, mu: &DrivingMeasure) -> Result<()> {
        mu.validate()?;
        self.validate_node(mu)
    }

    fn validate_node(&self, mu: &DrivingMeasure) -> Result<()> {
        match mu {
            DrivingMeasure::FiniteAtoms { atoms } => atoms.iter().try_for_each(|a| self.validate_atom(a)),
            DrivingMeasure::ParametricUniformPhase { map_id, transform, .. } => {
                if !self.is_phase_family(*map_id) {
                    return Err(Error::Config(format!(
                        "map {map_id} of the {} model is not a phase family",
                        self.name()
                    )));
                }
                if !self.supports_transform(*map_id, *transform) {
                    return Err(Error::UnsupportedTransform {
                        transform: transform.to_string(),
                        model: self.name().into(),
                    });
                }
                Ok(())
            }
            DrivingMeasure::ConvolutionOfMeasures { factors } => factors.iter().try_for_each(|f| self.validate_node(f)),
        }
    }

    /// `x <- f(x)`, reduced mod 1. Panics if `x.len() != self.dim()`.
    pub fn apply_in_place(&self, atom: &MapAtom, x: &mut [f64]) {
        match self {
            Model::Affine(m) => m.apply_in_place(atom, x),
            Model::Pierrehumbert(m) => m.apply_in_place(atom, x),
            Model::Standard(m) => m.apply_in_place(atom, x),
            Model::Linear(_) => {}
            Model::Product(p) => {
                let d = p.base.dim();
                for chunk in x.chunks_mut(d.max(1)).take(p.copies) {
                    if d > 0 {
                        p.base.apply_in_place(atom, chunk);
                    }
                }
            }
        }
    }

    pub fn apply(&self, atom: &MapAtom, x: &TorusPoint) -> Result<TorusPoint> {
        self.check_point(x)?;
        self.validate_atom(atom)?;
        let mut c = x.coords.clone();
        self.apply_in_place(atom, &mut c);
        Ok(TorusPoint { coords: c })
    }

    /// Apply every letter of a word in order.
    pub fn apply_word(&self, letters: &[MapAtom], x: &mut [f64]) {
        for a in letters {
            self.apply_in_place(a, x);
        }
    }

    /// Analytic derivative `D_x f`.
    pub fn jacobian(&self, atom: &MapAtom, x: &[f64]) -> Matrix {
        match self {
            Model::Affine(m) => m.map(atom.map_id).matrix(atom.transform).clone(),
            Model::Pierrehumbert(m) => m.jacobian(atom, x),
            Model::Standard(m) => m.jacobian(atom, x),
            Model::Linear(m) => m.matrix(atom).clone(),
            Model::Product(p) => {
                let bd = p.base.dim();
                let fd = p.base.fiber_dim();
                let mut out = Matrix::zeros(fd * p.copies, fd * p.copies);
                for c in 0..p.copies {
                    let block = p.base.jacobian(atom, &x[c * bd..(c + 1) * bd]);
                    out.view_mut((c * fd, c * fd), (fd, fd)).copy_from(&block);
                }
                out
            }
        }
    }

    /// `(D_x f)^{-T}`, analytic where the model provides it.
    pub fn cojacobian(&self, atom: &MapAtom, x: &[f64]) -> Matrix {
        match self {
            Model::Affine(m) => m
                .map(atom.map_id)
                .matrix(atom.transform.then(Transform::InverseTranspose))
                .clone(),
            Model::Pierrehumbert(m) => m.cojacobian(atom, x),
            Model::Standard(m) => m.cojacobian(atom, x),
            Model::Linear(m) => m
                .matrix_for(atom.map_id, atom.transform.then(Transform::InverseTranspose))
                .clone(),
            Model::Product(p) => {
                let bd = p.base.dim();
                let fd = p.base.fiber_dim();
                let mut out = Matrix::zeros(fd * p.copies, fd * p.copies);
                for c in 0..p.copies {
                    let block = p.base.cojacobian(atom, &x[c * bd..(c + 1) * bd]);
                    out.view_mut((c * fd, c * fd), (fd, fd)).copy_from(&block);
                }
                out
            }
        }
    }

    pub fn jacobian_pair(&self, atom: &MapAtom, x: &TorusPoint) -> Result<JacobianPair> {
        self.check_point(x)?;
        self.validate_atom(atom)?;
        let jac = self.jacobian(atom, x.coords());
        let cojac = self.cojacobian(atom, x.coords());
        let det_jac = jac.determinant();
        if det_jac.abs() < 1e-8 {
            return Err(Error::Internal(format!("singular jacobian (det {det_jac:e})")));
        }
        Ok(JacobianPair { jac, cojac, det_jac })
    }

    /// Second derivatives: entry `i` is the Hessian of output coordinate `i`.
    pub fn hessians(&self, atom: &MapAtom, x: &[f64]) -> Vec<Matrix> {
        match self {
            Model::Affine(m) => vec![Matrix::zeros(m.dim, m.dim); m.dim],
            Model::Pierrehumbert(m) => m.hessians(atom, x),
            Model::Standard(m) => m.hessians(atom, x),
            Model::Linear(_) => Vec::new(),
            Model::Product(p) => {
                let bd = p.base.dim();
                let n = bd * p.copies;
                let mut out = vec![Matrix::zeros(n, n); n];
                for c in 0..p.copies {
                    let hs = p.base.hessians(atom, &x[c * bd..(c + 1) * bd]);
                    for (i, h) in hs.into_iter().enumerate() {
                        out[c * bd + i].view_mut((c * bd, c * bd), (bd, bd)).copy_from(&h);
                    }
                }
                out
            }
        }
    }

    /// The constant derivative of an atom, for models that have one.
    pub fn linear_part(&self, atom: &MapAtom) -> Option<Matrix> {
        if self.has_constant_jacobian() {
            let x = vec![0.0; self.dim()];
            Some(self.jacobian(atom, &x))
        } else {
            None
        }
    }

    fn check_point(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }
}

/// The `k`-point motion of a model.
pub fn lift_product(model: &Model, k: usize) -> Result<Model> {
    lift_product_with_limit(model, k, MAX_LIFT_DIM)
}

pub fn lift_product_with_limit(model: &Model, k: usize, max_dim: usize) -> Result<Model> {
    if k < 2 {
        return Err(Error::Config(format!("product lift needs k >= 2, got {k}")));
    }
    let dim = k * model.fiber_dim();
    if dim > max_dim {
        return Err(Error::BudgetExceeded {
            what: "product-lift dimension".into(),
            required: dim as u128,
            limit: max_dim as u128,
        });
    }
    Ok(Model::Product(ProductLift {
        base: Box::new(model.clone()),
        copies: k,
    }))
}

/// Dense matrix from row-major rows.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("matrices must be square and nonempty".into()));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}
