//! Quantum (Lindblad) and mean-field models of a single atom self-ordering in a
//! transversally pumped ring cavity with a tilted pump beam.
//!
//! Units throughout: ħ = 1, k = 1, energies and rates in ω_rec = ħk²/2m, so an
//! atom carrying momentum `p` (in units of ħk) has kinetic energy `p²`.

pub mod blocks;
pub mod effective;
pub mod error;
pub mod hilbert;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod quantum;
pub mod steady;
pub mod sweep;

pub use error::{Error, Result};
pub use hilbert::{DensityState, LatticeSpec, Operator, RationalAngle};
pub use model::PhysicalParams;

pub type C64 = num_complex::Complex64;
