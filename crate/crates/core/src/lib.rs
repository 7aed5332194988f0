//! Multiharmonic finite element solver for a time-periodic parabolic optimal
//! control problem, with guaranteed a posteriori error and cost majorants.

pub mod assembly;
pub mod error;
pub mod flux;
pub mod fourier;
pub mod majorants;
pub mod mesh;
pub mod minres;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
