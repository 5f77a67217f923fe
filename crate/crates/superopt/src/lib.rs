//! Superoptimal analytic approximation for the four-block and Nehari
//! problems with symbols given by finite Fourier expansions.

pub mod error;
pub mod factor;
pub mod fft;
pub mod operators;
pub mod report;
pub mod solver;
pub mod weights;
pub mod symbol;

pub use error::{Result, SuperoptError};
