//! Weighted Steklov eigenvalue laboratory on the unit disk.
//!
//! The boundary weight `w = e^v` is a positive trigonometric series; the
//! Dirichlet-to-Neumann operator is diagonal in the Fourier basis, so the
//! spectral problem reduces to a generalized symmetric eigenproblem
//! `A u = sigma B u` with `A = pi diag(|k|)` and `B` the weighted mass matrix.

pub mod ellipse;
pub mod elliptic;
pub mod error;
pub mod functional;
pub mod immersion;
pub mod linalg;
pub mod optimizer;
pub mod steklov;
pub mod test_metrics;
pub mod trig;

pub use error::{Error, Result};
pub use functional::FunctionalParams;
pub use steklov::{BoundaryWeight, SteklovSpectrum};
pub use trig::{Parity, TrigSeries};
