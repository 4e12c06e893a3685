//! A numerical laboratory for random volume-preserving dynamics on tori.
//!
//! The crate covers four layers:
//!
//! * [`measure`] and [`models`]: driving measures on map tables and the
//!   concrete systems (affine torus maps, random shears, the randomly kicked
//!   standard map, linear cocycles over a point, k-point lifts);
//! * [`cocycle`]: expansion-on-average integrals for vectors, covectors and
//!   k-planes, Lyapunov spectra and Furstenberg integrals;
//! * [`spectral`]: the averaged transfer operator on truncated Fourier
//!   lattices, its spectrum, high-frequency decay and stability sweeps;
//! * [`stats`]: correlation decay, multiple mixing, Green-Kubo variance and
//!   central-limit experiments.
//!
//! [`cli`] ties these together behind declarative TOML experiment files.

pub mod cli;
pub mod cocycle;
pub mod error;
pub mod measure;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
