//! Green function of `d_t G + Psi(-i grad) G = 0` by spectral synthesis, and
//! grid convolution.

use crate::error::{Error, Result};
use crate::fourier::{psi_modes, Fourier};
use crate::grid::{Field, Grid};
use crate::spectral::StableSymbol;

/// Checks that the length scale `ell` satisfies `4h <= ell <= L/8`.
pub fn resolution_guard(what: &str, ell: f64, grid: &Grid) -> Result<()> {
    let h = grid.h();
    let l = grid.half_width();
    if ell < 4.0 * h {
        return Err(Error::Resolution(format!(
            "{what}: length scale {ell:.4e} is below 4h = {:.4e}; refine the grid (larger n) or use a later time",
            4.0 * h
        )));
    }
    if ell > l / 8.0 {
        return Err(Error::Resolution(format!(
            "{what}: length scale {ell:.4e} exceeds L/8 = {:.4e}; enlarge the domain or use an earlier time",
            l / 8.0
        )));
    }
    Ok(())
}

/// `G(t, .)` sampled on the grid; refuses unless `t^{1/beta}` lies in `[4h, L/8]`.
pub fn green_function(sym: &StableSymbol, t: f64, grid: &Grid) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("green_function requires t > 0, got {t}")));
    }
    check_dims(sym, grid)?;
    resolution_guard("green_function", t.powf(1.0 / sym.beta()), grid)?;
    Ok(green_unguarded(sym, t, grid))
}

/// Spectral synthesis of `G(t, .)` without the resolution guard.
pub(crate) fn green_unguarded(sym: &StableSymbol, t: f64, grid: &Grid) -> Field {
    let ft = Fourier::new(*grid);
    let mult: Vec<f64> = psi_modes(sym, grid).iter().map(|p| (-t * p).exp()).collect();
    Field::new(*grid, ft.synthesize(&mult), t).expect("finite synthesis")
}

pub(crate) fn check_dims(sym: &StableSymbol, grid: &Grid) -> Result<()> {
    if sym.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!("symbol lives in d = {} but grid has d = {}", sym.dim(), grid.dim())));
    }
    Ok(())
}

/// Circular convolution `(k * f)(x_i) = h^d sum_j k(x_i - x_j) f(x_j)`.
///
/// Both fields use the grid's node positions, so the kernel's origin is node `n/2`.
/// The result carries the time label `k.time + f.time`.
pub fn convolve(k: &Field, f: &Field) -> Result<Field> {
    if !k.grid().same_as(f.grid()) {
        return Err(Error::GridMismatch("convolve: fields live on different grids".into()));
    }
    let ft = Fourier::new(*k.grid());
    let kh = ft.kernel_multiplier(k.values());
    let fh = ft.forward(f.values());
    let prod = kh.iter().zip(&fh).map(|(a, b)| a * b).collect();
    Field::new(*k.grid(), ft.inverse_real(prod), k.time() + f.time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralMeasure;

    #[test]
    fn cauchy_kernel() {
        let sym = StableSymbol::new(1.0, SpectralMeasure::symmetric_atoms(1.0).unwrap()).unwrap();
        let grid = Grid::new(1, 4096, 256.0).unwrap();
        let g = green_function(&sym, 1.0, &grid).unwrap();
        assert!((g.at_origin() - 1.0 / std::f64::consts::PI).abs() < 1e-4);
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_refuses() {
        let sym = StableSymbol::new(1.0, SpectralMeasure::symmetric_atoms(1.0).unwrap()).unwrap();
        let grid = Grid::new(1, 64, 8.0).unwrap();
        assert!(matches!(green_function(&sym, 1e-3, &grid), Err(Error::Resolution(_))));
        assert!(matches!(green_function(&sym, 100.0, &grid), Err(Error::Resolution(_))));
    }
}
