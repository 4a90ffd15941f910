//! Shared fixtures for the criterion benchmarks in `benches/`.

use fdlab_core::solver::{bump, SolverConfig};
use fdlab_core::{Field, Grid, SpectralMeasure, StableSymbol};

/// Symmetric stable symbol on the line.
pub fn line_symbol(beta: f64) -> StableSymbol {
    StableSymbol::new(beta, SpectralMeasure::symmetric_atoms(1.0).expect("valid atoms")).expect("valid symbol")
}

/// The desk-scale blow-up setting with `steps` mesh intervals up to `horizon`.
pub fn fujita_problem(gamma: f64, horizon: f64, steps: usize) -> (SolverConfig, Field) {
    let grid = Grid::new(1, 512, 64.0).expect("valid grid");
    let measure = SpectralMeasure::symmetric_atoms(1.0).expect("valid atoms");
    let cfg = SolverConfig::new(0.5, 1.0, gamma, measure, grid, horizon, steps);
    let u0 = bump(grid, 1.0, 1.0).expect("valid bump");
    (cfg, u0)
}
