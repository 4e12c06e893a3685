//! The averaged transfer operator on truncated Fourier lattices: assembly,
//! spectra, high-frequency decay and perturbation sweeps.

mod eigen;
mod export;
mod galerkin;
mod lattice;
mod radius;
mod stability;

pub use eigen::{operator_spectrum, SpectralReport, PERIPHERAL_TOL, UNIT_TOL};
pub use export::{export_size, read_operator, write_operator, ExportedOperator, FORMAT_VERSION, MAGIC};
pub use galerkin::{build_galerkin, model_hash, FourierOperator};
pub use lattice::{sobolev_weight, ModeLattice, MAX_MODES};
pub use radius::{
    essential_radius_estimate, lasota_yorke_fit, sobolev_norm, AffinePropagator, EssentialRadius, LasotaYorke,
    ModeVector, ProbeSet,
};
pub use stability::{
    is_nonincreasing, pierrehumbert_phase_sweep, stability_sweep, stability_sweep_operators, StabilitySweep,
    SweepMember,
};
