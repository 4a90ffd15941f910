//! Spectral measures on the unit sphere, the angular function `omega_mu` and the
//! stable symbol `psi(xi) = |xi|^beta omega_mu(xi/|xi|)`.

use crate::error::{domain, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Angular density laws available for `d = 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DensityLaw {
    /// Constant density `level`.
    Uniform { level: f64 },
    /// `c0 + c1 cos(m theta)`.
    Cosine { c0: f64, c1: f64, m: u32 },
}

impl DensityLaw {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            DensityLaw::Uniform { level } => level,
            DensityLaw::Cosine { c0, c1, m } => c0 + c1 * (m as f64 * theta).cos(),
        }
    }

    fn integral(&self) -> f64 {
        match *self {
            DensityLaw::Uniform { level } => 2.0 * PI * level,
            DensityLaw::Cosine { c0, m, c1 } => 2.0 * PI * c0 + if m == 0 { 2.0 * PI * c1 } else { 0.0 },
        }
    }
}

/// How the measure is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureKind {
    /// Atoms at `+1` and `-1` on `S^0`.
    Atoms { plus: f64, minus: f64 },
    /// Density on the circle, with the node count used for diagnostics.
    Density { law: DensityLaw, nodes: usize },
}

/// Finite measure on `S^{d-1}` for `d` in `{1, 2}`.
///
/// Construction only checks structure; Hypothesis (H1) positivity and central
/// symmetry are reported by [`check_h1`] and enforced by [`StableSymbol::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    dim: usize,
    kind: MeasureKind,
    total_mass: f64,
}

impl SpectralMeasure {
    /// Two atoms on `S^0 = {-1, +1}`.
    pub fn two_atom(plus: f64, minus: f64) -> Result<Self> {
        if !(plus.is_finite() && minus.is_finite()) {
            return domain("atom weights must be finite");
        }
        Ok(SpectralMeasure { dim: 1, kind: MeasureKind::Atoms { plus, minus }, total_mass: plus + minus })
    }

    /// Symmetric atoms of total mass `mass` on `S^0`.
    pub fn symmetric_atoms(mass: f64) -> Result<Self> {
        Self::two_atom(0.5 * mass, 0.5 * mass)
    }

    /// Density on `S^1`.
    pub fn density(law: DensityLaw, nodes: usize) -> Result<Self> {
        if nodes < 8 || !nodes.is_multiple_of(2) {
            return domain(format!("density node count {nodes} must be even and >= 8"));
        }
        let total_mass = law.integral();
        Ok(SpectralMeasure { dim: 2, kind: MeasureKind::Density { law, nodes }, total_mass })
    }

    /// The uniform probability measure on `S^1`.
    pub fn isotropic_2d() -> Self {
        Self::density(DensityLaw::Uniform { level: 1.0 / (2.0 * PI) }, 512).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Short human-readable descriptor used in manifests.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            MeasureKind::Atoms { plus, minus } => format!("d=1 atoms(+1:{plus}, -1:{minus})"),
            MeasureKind::Density { law: DensityLaw::Uniform { level }, .. } => {
                format!("d=2 uniform({level})")
            }
            MeasureKind::Density { law: DensityLaw::Cosine { c0, c1, m }, .. } => {
                format!("d=2 cosine({c0} + {c1} cos({m} theta))")
            }
        }
    }
}

fn unit_check(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return domain(format!("direction has {} components, measure lives in d = {dim}", theta.len()));
    }
    let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return domain(format!("direction is not a unit vector (norm {norm})"));
    }
    Ok(())
}

/// `omega_mu(theta) = int |theta . eta|^beta mu(d eta)`.
pub fn omega_mu(m: &SpectralMeasure, beta: f64, theta: &[f64]) -> Result<f64> {
    unit_check(m.dim, theta)?;
    if !(beta > 0.0 && beta < 2.0) {
        return domain(format!("beta = {beta} outside (0, 2)"));
    }
    match &m.kind {
        MeasureKind::Atoms { plus, minus } => Ok(plus + minus),
        MeasureKind::Density { law, .. } => omega_angle(law, beta, theta[1].atan2(theta[0])),
    }
}

fn omega_angle(law: &DensityLaw, beta: f64, t: f64) -> Result<f64> {
    let t = t.rem_euclid(2.0 * PI);
    let mut pts = vec![t, t + 0.5 * PI, t + PI, t + 1.5 * PI, t + 2.0 * PI];
    pts.dedup();
    let f = |phi: f64| (phi - t).cos().abs().powf(beta) * law.eval(phi);
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 2000 };
    Ok(integrate_with_breaks(f, &pts, tol)?.value)
}

/// Outcome of the Hypothesis (H1) check.
#[derive(Debug, Clone, Serialize)]
pub struct H1Report {
    pub pass: bool,
    pub min_density: f64,
    pub symmetry_residual: f64,
    /// Max magnitude of finite-difference derivatives of orders 1..=4 (d = 2 only).
    pub smoothness: Vec<f64>,
    pub notes: Vec<String>,
}

/// Reports positivity, central symmetry and finite-difference smoothness of a measure.
///
/// Smoothness diagnostics cannot certify the differentiability order required by
/// (H1); they only flag visibly rough densities.
pub fn check_h1(m: &SpectralMeasure) -> H1Report {
    let mut notes = Vec::new();
    match &m.kind {
        MeasureKind::Atoms { plus, minus } => {
            let min = plus.min(*minus);
            let sym = (plus - minus).abs();
            if min <= 0.0 {
                notes.push("non-positive atom weight".into());
            }
            if sym > 1e-10 {
                notes.push("atoms are not centrally symmetric".into());
            }
            H1Report {
                pass: min > 0.0 && sym <= 1e-10,
                min_density: min,
                symmetry_residual: sym,
                smoothness: vec![],
                notes,
            }
        }
        MeasureKind::Density { law, nodes } => {
            let k = *nodes;
            let h = 2.0 * PI / k as f64;
            let vals: Vec<f64> = (0..k).map(|j| law.eval(j as f64 * h)).collect();
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let sym = (0..k).map(|j| (vals[j] - vals[(j + k / 2) % k]).abs()).fold(0.0, f64::max);
            let mut smooth = Vec::new();
            let mut diff = vals.clone();
            for _ in 0..4 {
                diff = (0..k).map(|j| (diff[(j + 1) % k] - diff[(j + k - 1) % k]) / (2.0 * h)).collect();
                smooth.push(diff.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            if min <= 0.0 {
                notes.push("density is not strictly positive".into());
            }
            if sym > 1e-10 {
                notes.push("density is not centrally symmetric".into());
            }
            notes.push(
                "finite-difference smoothness is diagnostic only; differentiability order is not certified".into(),
            );
            H1Report {
                pass: min > 0.0 && sym <= 1e-10,
                min_density: min,
                symmetry_residual: sym,
                smoothness: smooth,
                notes,
            }
        }
    }
}

/// Stable symbol `psi` with tabulated angular function.
#[derive(Debug, Clone, Serialize)]
pub struct StableSymbol {
    beta: f64,
    measure: SpectralMeasure,
    omega_table: Vec<f64>,
}

/// Angular table size used for `d = 2`.
pub const OMEGA_TABLE_SIZE: usize = 1024;

impl StableSymbol {
    /// Builds the symbol; fails unless the measure satisfies (H1) numerically.
    pub fn new(beta: f64, measure: SpectralMeasure) -> Result<Self> {
        if !(beta > 0.0 && beta < 2.0) {
            return domain(format!("beta = {beta} outside (0, 2)"));
        }
        let rep = check_h1(&measure);
        if !rep.pass {
            return domain(format!("measure fails (H1): {}", rep.notes.join("; ")));
        }
        let omega_table = match &measure.kind {
            MeasureKind::Atoms { plus, minus } => vec![plus + minus, plus + minus],
            MeasureKind::Density { law, .. } => {
                let k = OMEGA_TABLE_SIZE;
                let mut half = Vec::with_capacity(k / 2);
                for j in 0..k / 2 {
                    half.push(omega_angle(law, beta, 2.0 * PI * j as f64 / k as f64)?);
                }
                let mut t = half.clone();
                t.extend_from_slice(&half);
                t
            }
        };
        if omega_table.iter().any(|&w| !(w > 0.0)) {
            return domain("omega_mu is not strictly positive");
        }
        Ok(StableSymbol { beta, measure, omega_table })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.measure.dim
    }

    pub fn omega_table(&self) -> &[f64] {
        &self.omega_table
    }

    /// Interpolated angular function at polar angle `t` (d = 2) or sign (d = 1).
    pub fn omega_at_angle(&self, t: f64) -> f64 {
        if self.measure.dim == 1 {
            return self.omega_table[0];
        }
        let k = self.omega_table.len();
        let pos = t.rem_euclid(2.0 * PI) / (2.0 * PI) * k as f64;
        let i = pos.floor() as isize;
        let s = pos - i as f64;
        let at = |j: isize| self.omega_table[j.rem_euclid(k as isize) as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Cubic Lagrange on nodes -1, 0, 1, 2.
        let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }
}

/// `psi(xi) = |xi|^beta omega_mu(xi/|xi|)`, with `psi(0) = 0`.
pub fn psi(sym: &StableSymbol, xi: &[f64]) -> f64 {
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    let w = if sym.measure.dim == 1 { sym.omega_table[0] } else { sym.omega_at_angle(xi[1].atan2(xi[0])) };
    r.powf(sym.beta) * w
}
