//! Spectra of Galerkin operators.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::prelude::default;
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::galerkin::FourierOperator;
use super::radius::{EssentialRadius, LasotaYorke};
use crate::error::{Error, Result};

/// Eigenvalues closer than this to 1 count towards the unit multiplicity.
pub const UNIT_TOL: f64 = 1e-8;
/// Non-constant eigenvalues with modulus this close to 1 trigger the
/// weak-mixing detector.
pub const PERIPHERAL_TOL: f64 = 1e-6;
/// Largest irreducible block handed to the dense eigensolver.
pub const MAX_DENSE_BLOCK: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// The constant mode's eigenvalue, unless something else is larger by
    /// more than the peripheral tolerance.
    pub leading: Complex64,
    /// Largest eigenvalue once the constant mode is deflated.
    pub subleading: Complex64,
    pub subleading_modulus: f64,
    /// Eigenvalues with `|λ - 1| ≤ 1e-8`, the constant mode included.
    pub unit_multiplicity: usize,
    /// Non-constant eigenvalues with `||λ| - 1| ≤ 1e-6`.
    pub peripheral_count: usize,
    /// The Galerkin spectrum has a non-constant eigenvalue on the unit
    /// circle, so band-limited solutions of `𝒢φ = e^{iθ}φ` may exist.
    pub weak_mixing_obstruction: bool,
    pub max_truncation_loss: f64,
    pub blocks: usize,
    pub largest_block: usize,
    pub s: f64,
    pub essential: Option<EssentialRadius>,
    pub lasota_yorke: Option<LasotaYorke>,
}

/// Eigenvalues of the weighted operator, with the constant mode deflated
/// for the subleading modulus.
///
/// The sparsity graph is split into strongly connected components; the
/// matrix is block triangular in that order, so its spectrum is the union
/// of the diagonal blocks' spectra.
pub fn operator_spectrum(op: &FourierOperator, s: f64) -> Result<SpectralReport> {
    let n = op.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, op.nnz());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (c, col) in op.columns().iter().enumerate() {
        for &(r, _) in col {
            if r as usize != c {
                g.add_edge(nodes[c], nodes[r as usize], ());
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    let largest = comps.iter().map(|c| c.len()).max().unwrap_or(0);
    if largest > MAX_DENSE_BLOCK {
        return Err(Error::BudgetExceeded {
            what: "dense eigen-block size".into(),
            required: largest as u128,
            limit: MAX_DENSE_BLOCK as u128,
        });
    }
    let zero = op.lattice.zero_index();
    let solved: Vec<Result<(bool, Vec<Complex64>)>> =
        comps.par_iter().map(|comp| block_eigs(op, comp, s, zero)).collect();
    let mut constant = Complex64::new(1.0, 0.0);
    let mut rest = Vec::with_capacity(n);
    for r in solved {
        let (is_const, eigs) = r?;
        if is_const {
            constant = eigs[0];
        } else {
            rest.extend(eigs);
        }
    }
    sort_by_modulus(&mut rest);
    let subleading = rest.first().copied().unwrap_or_default();
    let peripheral_count = rest.iter().filter(|l| (l.norm() - 1.0).abs() <= PERIPHERAL_TOL).count();
    let mut all = rest.clone();
    all.push(constant);
    sort_by_modulus(&mut all);
    let unit_multiplicity = all.iter().filter(|l| (**l - 1.0).norm() <= UNIT_TOL).count();
    let leading = if all[0].norm() > constant.norm() + PERIPHERAL_TOL {
        all[0]
    } else {
        constant
    };
    Ok(SpectralReport {
        leading,
        eigenvalues: all,
        subleading,
        subleading_modulus: subleading.norm(),
        unit_multiplicity,
        peripheral_count,
        weak_mixing_obstruction: peripheral_count > 0,
        max_truncation_loss: op.max_truncation_loss(),
        blocks: comps.len(),
        largest_block: largest,
        s,
        essential: None,
        lasota_yorke: None,
    })
}

fn sort_by_modulus(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

fn block_eigs(op: &FourierOperator, comp: &[usize], s: f64, zero: usize) -> Result<(bool, Vec<Complex64>)> {
    if comp.len() == 1 {
        let c = comp[0];
        let d = op
            .column(c)
            .iter()
            .find(|e| e.0 as usize == c)
            .map(|e| e.1)
            .unwrap_or_default();
        return Ok((c == zero, vec![d]));
    }
    let m = comp.len();
    let mut block = faer::Mat::<faer::c64>::zeros(m, m);
    for (j, &c) in comp.iter().enumerate() {
        for &(r, a) in op.column(c) {
            if let Ok(i) = comp.binary_search(&(r as usize)) {
                let w = op.weighted_entry(r as usize, c, a, s);
                block[(i, j)] = faer::c64::new(w.re, w.im);
            }
        }
    }
    let par = faer::Par::Seq;
    let mut eigs = faer::diag::Diag::<faer::c64>::zeros(m);
    let scratch = evd::evd_scratch::<faer::c64>(m, ComputeEigenvectors::No, ComputeEigenvectors::No, par, default());
    evd::evd_cplx(
        block.as_ref(),
        eigs.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut MemBuffer::new(scratch)),
        default(),
    )
    .map_err(|e| Error::Numerical(format!("eigensolver did not converge on a {m}x{m} block: {e:?}")))?;
    Ok((
        false,
        eigs.column_vector()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect(),
    ))
}
