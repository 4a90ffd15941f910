//! DFT plumbing: spectral synthesis of kernels from their Fourier multipliers and
//! multiplier application to fields.

use crate::grid::Grid;
use crate::spectral::{psi, StableSymbol};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward and inverse plans for one grid. Cheap to clone; safe to share.
#[derive(Clone)]
pub struct Fourier {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n());
        let inv = planner.plan_fft_inverse(grid.n());
        Fourier { grid, fwd, inv }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        if self.grid.dim() == 2 {
            let mut col = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                plan.process_with_scratch(&mut col, &mut scratch);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    /// Normalized inverse DFT, returning the real part.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inv);
        let s = 1.0 / self.grid.len() as f64;
        data.iter().map(|c| c.re * s).collect()
    }

    /// `IFFT(mult * spec)` for a real multiplier.
    pub fn apply(&self, spec: &[Complex64], mult: &[f64]) -> Vec<f64> {
        let data: Vec<Complex64> = spec.iter().zip(mult).map(|(c, m)| c * m).collect();
        self.inverse_real(data)
    }

    /// Samples at the nodes of the kernel whose continuous Fourier transform is `mult`
    /// (given at the DFT frequencies in FFT order).
    pub fn synthesize(&self, mult: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let data: Vec<Complex64> = (0..g.len())
            .map(|idx| {
                let [i, j] = g.unflatten(idx);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * mult[idx], 0.0)
            })
            .collect();
        let scale = g.len() as f64 / (2.0 * g.half_width()).powi(g.dim() as i32);
        self.inverse_real(data).into_iter().map(|v| v * scale).collect()
    }

    /// Continuous-transform multiplier of a kernel sampled with its origin at node `n/2`.
    pub fn kernel_multiplier(&self, kernel: &[f64]) -> Vec<Complex64> {
        let g = &self.grid;
        let cell = g.cell();
        let mut spec = self.forward(kernel);
        for (idx, c) in spec.iter_mut().enumerate() {
            let [i, j] = g.unflatten(idx);
            let sign = if (i + j) % 2 == 0 { cell } else { -cell };
            *c *= sign;
        }
        spec
    }
}

/// `psi` at every DFT frequency, in FFT order.
pub fn psi_modes(sym: &StableSymbol, grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let x = grid.xi(idx);
            psi(sym, &x[..grid.dim()])
        })
        .collect()
}

/// Distinct values of a mode array with the map back to modes.
///
/// Kernel multipliers depend on the mode only through `psi`, so evaluations are
/// shared between modes with equal symbol values.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub values: Vec<f64>,
    pub index: Vec<u32>,
}

impl ModeSet {
    pub fn new(modes: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..modes.len() as u32).collect();
        order.sort_by(|&a, &b| modes[a as usize].total_cmp(&modes[b as usize]));
        let mut values = Vec::new();
        let mut index = vec![0u32; modes.len()];
        for &o in &order {
            let v = modes[o as usize];
            if values.last() != Some(&v) {
                values.push(v);
            }
            index[o as usize] = (values.len() - 1) as u32;
        }
        ModeSet { values, index }
    }

    /// Expands per-value results to per-mode results.
    pub fn expand(&self, per_value: &[f64]) -> Vec<f64> {
        self.index.iter().map(|&i| per_value[i as usize]).collect()
    }
}
