//! Diffraction of atoms and weakly bound dimers by transmission gratings.
//!
//! The numerical modules are generic over the scalar type ([`num::Real`]:
//! `f32` or `f64`). The aliases at the crate root fix `f64`, which is what the
//! CLI and the tolerances in the test-suite assume.

pub mod ags;
pub mod bar_amplitude;
pub mod cli;
pub mod config;
pub mod error;
pub mod grating;
pub mod num;
pub mod quadrature;
pub mod special;
pub mod surface;
pub mod units;
pub mod wavefunction;

pub use error::{Error, Result};

pub type DimerModel = wavefunction::DimerModel<f64>;
pub type SizeMeasures = wavefunction::SizeMeasures<f64>;
pub type BeamState = bar_amplitude::BeamState<f64>;
pub type BarSpec = bar_amplitude::BarSpec<f64>;
pub type ComplexAmplitude = bar_amplitude::ComplexAmplitude<f64>;
pub type Particle<'a> = bar_amplitude::Particle<'a, f64>;
pub type GratingGeometry = grating::GratingGeometry<f64>;
pub type DiffractionPattern = grating::DiffractionPattern<f64>;
pub type SurfaceSpec = surface::SurfaceSpec<f64>;
pub type FiniteModel = ags::FiniteModel<f64>;
