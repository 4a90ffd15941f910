//! Numerical core for space-time fractional diffusion: special functions, stable
//! symbols, Green functions, subordinated kernels, kernel estimates and a mild
//! solver for the semilinear problem.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod experiments;
pub mod fourier;
pub mod green;
pub mod grid;
pub mod io;
pub mod quad;
pub mod solver;
pub mod specfun;
pub mod spectral;
pub mod subkernels;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use spectral::{SpectralMeasure, StableSymbol};
pub use subkernels::{KernelRoute, KernelTable};
