//! Circuit models, spectra and measurement reduction for RF-SQUIDs whose
//! weak link is either a skewed Josephson element or a phase-slip element.
//!
//! Energies are in GHz (`E / h`), fluxes in flux quanta and phases in
//! radians throughout. The numerical kernels are generic over [`Real`];
//! the aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod circuit;
pub mod config;
pub mod dataops;
pub mod error;
pub mod export;
pub mod fit;
pub mod landscape;
pub mod oscillator;
pub mod presets;
pub mod qps;
pub mod scalar;
pub mod special;
pub mod spectra;
pub mod sweep;

pub use cavity::{dressed_branch, hybridize, CavityParams};
pub use error::{Error, Result};
pub use scalar::Real;
pub use sweep::{run_sweep, InitialWell, ResonanceCurve, SweepPlan};

pub type CircuitSpec = circuit::CircuitSpec<f64>;
pub type WeakLinkModel = circuit::WeakLinkModel<f64>;
pub type FluxPoint = circuit::FluxPoint<f64>;
pub type PhysicalElements = circuit::PhysicalElements<f64>;
pub type PotentialField = landscape::PotentialField<f64>;
pub type MinimumRecord = landscape::MinimumRecord<f64>;
pub type SimpleSpec = spectra::SimpleSpec<f64>;
pub type Spectrum = spectra::Spectrum<f64>;
