//! Fundamental solutions `Z` and `Y` of the time-fractional problem, built by
//! subordination of the Green function `G`, with the Fourier-side oracle
//! `Z^ = E_{a,1}(-t^a psi)`, `Y^ = t^{a-1} E_{a,a}(-t^a psi)`.

use crate::error::{domain, Error, Result};
use crate::fourier::{psi_modes, Fourier, ModeSet};
use crate::green::{check_dims, resolution_guard};
use crate::grid::{Field, Grid};
use crate::io::{read_field, write_field};
use crate::quad::{integrate, GaussLegendre, Tolerance};
use crate::specfun::{g_kernel, ln_subordination_weight, recip_gamma, MLParams, MittagLefflerTable, StableIndex};
use crate::spectral::{SpectralMeasure, StableSymbol};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How kernel slices are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelRoute {
    /// Mittag-Leffler multipliers, one evaluation per distinct symbol value.
    Fourier,
    /// Quadrature of `G(t^a s)` against the subordination weight.
    Subordination,
}

/// Checks the kernel length scale `t^{a/beta}` against the grid.
pub fn kernel_guard(sym: &StableSymbol, alpha: f64, t: f64, grid: &Grid) -> Result<()> {
    check_alpha(alpha)?;
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("kernel time must be positive, got {t}"));
    }
    check_dims(sym, grid)?;
    resolution_guard("kernel", t.powf(alpha / sym.beta()), grid)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} outside (0, 1)"));
    }
    Ok(())
}

/// Quadrature rule for `int_0^inf f(s) M_a(s) ds` in `u = ln s`.
///
/// Gauss-Legendre panels of width 1/4 on `[-30, u_hi]`, with `u_hi` where
/// `s M_a(s)` drops below 1e-18.
#[derive(Debug, Clone)]
pub struct SubordinationRule {
    alpha: f64,
    s: Vec<f64>,
    w: Vec<f64>,
}

const RULE_U_LO: f64 = -30.0;
const RULE_PANEL: f64 = 0.25;
const RULE_POINTS: usize = 12;

impl SubordinationRule {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let idx = StableIndex::new(alpha)?;
        let mut u_hi = 0.0;
        while u_hi < 30.0 {
            let s = f64::exp(u_hi);
            if ln_subordination_weight(idx, s)? + 2.0 * u_hi < -41.5 {
                break;
            }
            u_hi += RULE_PANEL;
        }
        let gl = GaussLegendre::new(RULE_POINTS);
        let panels = ((u_hi - RULE_U_LO) / RULE_PANEL).round() as usize;
        let mut s = Vec::with_capacity(panels * RULE_POINTS);
        let mut w = Vec::with_capacity(panels * RULE_POINTS);
        for p in 0..panels {
            let a = RULE_U_LO + p as f64 * RULE_PANEL;
            for (x, wx) in gl.nodes.iter().zip(&gl.weights) {
                let u = a + 0.5 * RULE_PANEL * (x + 1.0);
                let su = u.exp();
                let lm = ln_subordination_weight(idx, su)?;
                s.push(su);
                w.push(0.5 * RULE_PANEL * wx * (lm + u).exp());
            }
        }
        Ok(SubordinationRule { alpha, s, w })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `sum_i W_i f(s_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.s.iter().zip(&self.w).map(|(&s, &w)| w * f(s)).sum()
    }

    /// `int e^{-lambda s} M_a(s) ds` and `int s e^{-lambda s} M_a(s) ds`.
    fn laplace_pair(&self, lambda: f64) -> (f64, f64) {
        let (mut z, mut y) = (0.0, 0.0);
        for (&s, &w) in self.s.iter().zip(&self.w) {
            let e = lambda * s;
            if e > 745.0 {
                break;
            }
            let v = w * (-e).exp();
            z += v;
            y += v * s;
        }
        (z, y)
    }
}

/// Per-alpha evaluation state shared across the slices of one table.
enum Multipliers {
    Fourier { e1: MittagLefflerTable, ea: MittagLefflerTable },
    Subordination(SubordinationRule),
}

impl Multipliers {
    fn new(alpha: f64, route: KernelRoute) -> Result<Self> {
        Ok(match route {
            KernelRoute::Fourier => Multipliers::Fourier {
                e1: MittagLefflerTable::new(MLParams::new(alpha, 1.0)?)?,
                ea: MittagLefflerTable::new(MLParams::new(alpha, alpha)?)?,
            },
            KernelRoute::Subordination => Multipliers::Subordination(SubordinationRule::new(alpha)?),
        })
    }

    /// `(Z^, Y^)` for the symbol values in `modes` at time `t`.
    fn eval(&self, alpha: f64, t: f64, modes: &ModeSet, want_z: bool, want_y: bool) -> (Vec<f64>, Vec<f64>) {
        let ta = t.powf(alpha);
        let tam1 = t.powf(alpha - 1.0);
        let mut z = Vec::with_capacity(if want_z { modes.values.len() } else { 0 });
        let mut y = Vec::with_capacity(if want_y { modes.values.len() } else { 0 });
        match self {
            Multipliers::Fourier { e1, ea } => {
                for &p in &modes.values {
                    if want_z {
                        z.push(e1.eval_neg(ta * p));
                    }
                    if want_y {
                        y.push(tam1 * ea.eval_neg(ta * p));
                    }
                }
            }
            Multipliers::Subordination(rule) => {
                for &p in &modes.values {
                    let (zv, yv) = rule.laplace_pair(ta * p);
                    if want_z {
                        z.push(zv);
                    }
                    if want_y {
                        y.push(alpha * tam1 * yv);
                    }
                }
            }
        }
        let ex = |v: &[f64]| if v.is_empty() { Vec::new() } else { modes.expand(v) };
        (ex(&z), ex(&y))
    }
}

fn single_slice(
    sym: &StableSymbol,
    alpha: f64,
    t: f64,
    grid: &Grid,
    route: KernelRoute,
    want_y: bool,
) -> Result<Field> {
    kernel_guard(sym, alpha, t, grid)?;
    let modes = ModeSet::new(&psi_modes(sym, grid));
    let m = Multipliers::new(alpha, route)?;
    let (z, y) = m.eval(alpha, t, &modes, !want_y, want_y);
    let ft = Fourier::new(*grid);
    Field::new(*grid, ft.synthesize(if want_y { &y } else { &z }), t)
}

/// `Z(t, .) = int_0^inf G(t^a s, .) M_a(s) ds` by quadrature in `ln s`.
pub fn z_kernel(sym: &StableSymbol, alpha: f64, t: f64, grid: &Grid) -> Result<Field> {
    single_slice(sym, alpha, t, grid, KernelRoute::Subordination, false)
}

/// `Z(t, .)` from its Fourier transform `E_{a,1}(-t^a psi)`.
pub fn z_kernel_fourier(sym: &StableSymbol, alpha: f64, t: f64, grid: &Grid) -> Result<Field> {
    single_slice(sym, alpha, t, grid, KernelRoute::Fourier, false)
}

/// `Y(t, .) = a t^{a-1} int_0^inf G(t^a s, .) s M_a(s) ds` by quadrature in `ln s`.
pub fn y_kernel(sym: &StableSymbol, alpha: f64, t: f64, grid: &Grid) -> Result<Field> {
    single_slice(sym, alpha, t, grid, KernelRoute::Subordination, true)
}

/// `Y(t, .)` from its Fourier transform `t^{a-1} E_{a,a}(-t^a psi)`.
pub fn y_kernel_fourier(sym: &StableSymbol, alpha: f64, t: f64, grid: &Grid) -> Result<Field> {
    single_slice(sym, alpha, t, grid, KernelRoute::Fourier, true)
}

/// `Z` and `Y` on a time ladder over one grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    sym: StableSymbol,
    alpha: f64,
    grid: Grid,
    route: KernelRoute,
    times: Vec<f64>,
    z_slices: Vec<Field>,
    y_slices: Vec<Field>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableManifest {
    format: String,
    version: u32,
    alpha: f64,
    beta: f64,
    measure: SpectralMeasure,
    measure_descriptor: String,
    grid: Grid,
    route: KernelRoute,
    times: Vec<f64>,
    z_files: Vec<String>,
    y_files: Vec<String>,
}

const TABLE_FORMAT: &str = "fdlab-kernel-table";

impl KernelTable {
    /// Builds every slice; each time must pass [`kernel_guard`].
    pub fn build(sym: &StableSymbol, alpha: f64, grid: &Grid, times: &[f64], route: KernelRoute) -> Result<Self> {
        check_alpha(alpha)?;
        check_ladder(times)?;
        for &t in times {
            kernel_guard(sym, alpha, t, grid)?;
        }
        let modes = ModeSet::new(&psi_modes(sym, grid));
        let m = Multipliers::new(alpha, route)?;
        let ft = Fourier::new(*grid);
        let mut z_slices = Vec::with_capacity(times.len());
        let mut y_slices = Vec::with_capacity(times.len());
        for &t in times {
            let (z, y) = m.eval(alpha, t, &modes, true, true);
            z_slices.push(Field::new(*grid, ft.synthesize(&z), t)?);
            y_slices.push(Field::new(*grid, ft.synthesize(&y), t)?);
        }
        Ok(KernelTable { sym: sym.clone(), alpha, grid: *grid, route, times: times.to_vec(), z_slices, y_slices })
    }

    /// Passes every slice through the radial exponential filter
    /// `exp(-36 (|xi| h / pi)^order)`.
    ///
    /// Truncating a slowly decaying multiplier at the Nyquist frequency leaves
    /// oscillations that swamp the small far-field values in two dimensions; the
    /// filter trades them for smoothing on the scale of a few cells. Masses are
    /// unchanged.
    pub fn spectrally_filtered(mut self, order: i32) -> Result<Self> {
        if order < 2 {
            return domain(format!("filter order must be at least 2, got {order}"));
        }
        let g = self.grid;
        let ft = Fourier::new(g);
        let kmax = std::f64::consts::PI / g.h();
        let sigma: Vec<f64> = (0..g.len())
            .map(|idx| {
                let [a, b] = g.xi(idx);
                (-36.0 * ((a * a + b * b).sqrt() / kmax).powi(order)).exp()
            })
            .collect();
        for f in self.z_slices.iter_mut().chain(self.y_slices.iter_mut()) {
            let spec = ft.forward(f.values());
            *f = Field::new(g, ft.apply(&spec, &sigma), f.time())?;
        }
        Ok(self)
    }

    pub fn sym(&self) -> &StableSymbol {
        &self.sym
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn route(&self) -> KernelRoute {
        self.route
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn z_slices(&self) -> &[Field] {
        &self.z_slices
    }

    pub fn y_slices(&self) -> &[Field] {
        &self.y_slices
    }

    pub fn z(&self, i: usize) -> &Field {
        &self.z_slices[i]
    }

    pub fn y(&self, i: usize) -> &Field {
        &self.y_slices[i]
    }

    /// Writes `manifest.json` plus one binary field file per slice into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut z_files = Vec::new();
        let mut y_files = Vec::new();
        for (i, (z, y)) in self.z_slices.iter().zip(&self.y_slices).enumerate() {
            let zn = format!("z_{i:04}.bin");
            let yn = format!("y_{i:04}.bin");
            write_field(z, std::io::BufWriter::new(std::fs::File::create(dir.join(&zn))?))?;
            write_field(y, std::io::BufWriter::new(std::fs::File::create(dir.join(&yn))?))?;
            z_files.push(zn);
            y_files.push(yn);
        }
        let man = TableManifest {
            format: TABLE_FORMAT.into(),
            version: 1,
            alpha: self.alpha,
            beta: self.sym.beta(),
            measure: self.sym.measure().clone(),
            measure_descriptor: self.sym.measure().descriptor(),
            grid: self.grid,
            route: self.route,
            times: self.times.clone(),
            z_files,
            y_files,
        };
        let json = serde_json::to_string_pretty(&man).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }

    /// Reads a table written by [`KernelTable::export`].
    pub fn import(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let man: TableManifest = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if man.format != TABLE_FORMAT || man.version != 1 {
            return Err(Error::Format(format!("unsupported table format {} v{}", man.format, man.version)));
        }
        if man.z_files.len() != man.times.len() || man.y_files.len() != man.times.len() {
            return Err(Error::Format("manifest lists a wrong number of slice files".into()));
        }
        check_alpha(man.alpha)?;
        check_ladder(&man.times)?;
        let sym = StableSymbol::new(man.beta, man.measure)?;
        let load = |name: &str, t: f64| -> Result<Field> {
            let f = read_field(std::io::BufReader::new(std::fs::File::open(dir.join(name))?))?;
            if !f.grid().same_as(&man.grid) {
                return Err(Error::Format(format!("{name}: grid differs from the manifest")));
            }
            if (f.time() - t).abs() > 1e-12 * t {
                return Err(Error::Format(format!("{name}: time {} differs from the manifest ({t})", f.time())));
            }
            Ok(f)
        };
        let mut z_slices = Vec::new();
        let mut y_slices = Vec::new();
        for (i, &t) in man.times.iter().enumerate() {
            z_slices.push(load(&man.z_files[i], t)?);
            y_slices.push(load(&man.y_files[i], t)?);
        }
        Ok(KernelTable {
            sym,
            alpha: man.alpha,
            grid: man.grid,
            route: man.route,
            times: man.times,
            z_slices,
            y_slices,
        })
    }
}

fn check_ladder(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return domain("time ladder is empty");
    }
    if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return domain("time ladder must be positive and finite");
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return domain("time ladder must be strictly increasing");
    }
    Ok(())
}

/// Geometric ladder of `count` times from `t0` to `t1`.
pub fn geometric_ladder(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![t0];
    }
    let q = (t1 / t0).ln() / (count - 1) as f64;
    (0..count).map(|k| t0 * (q * k as f64).exp()).collect()
}

/// One evaluation of the relation `Y = d/dt (g_a * Z)` at a probe.
#[derive(Debug, Clone, Serialize)]
pub struct YzEntry {
    pub probe: usize,
    pub x_norm: f64,
    pub t: f64,
    pub omega: f64,
    pub y: f64,
    pub derivative: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct YzReport {
    pub entries: Vec<YzEntry>,
    /// Probes closer than `4h` to the origin, not evaluated.
    pub skipped: Vec<usize>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest ratio of adjacent ladder times accepted by [`verify_yz_relation`].
pub const MAX_LADDER_RATIO: f64 = 1.2;
/// Relative residual tolerance of [`verify_yz_relation`].
pub const YZ_TOLERANCE: f64 = 2e-2;

/// Checks `Y(t, x) = d/dt int_0^t g_a(t - r) Z(r, x) dr` at the given probes.
///
/// The time integral uses exact product weights for piecewise-linear `Z` between
/// ladder times and the far-field law `Z ~ r^a` below the first time; the
/// derivative is a three-point difference on the ladder. Evaluation times are
/// interior ladder times at least ten times the first one.
pub fn verify_yz_relation(table: &KernelTable, x_probe: &[usize]) -> Result<YzReport> {
    let times = table.times();
    if times.len() < 3 {
        return Err(Error::Precondition("time ladder needs at least three times".into()));
    }
    let worst = times.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    if worst > MAX_LADDER_RATIO {
        return Err(Error::Precondition(format!(
            "time ladder too coarse: adjacent ratio {worst:.3} exceeds {MAX_LADDER_RATIO}"
        )));
    }
    let grid = table.grid();
    let a = table.alpha();
    let beta = table.sym().beta();
    let t0 = times[0];
    let eval: Vec<usize> = (1..times.len() - 1).filter(|&k| times[k] >= 10.0 * t0).collect();
    if eval.is_empty() {
        return Err(Error::Precondition("time ladder must span more than a decade".into()));
    }
    let ga1 = recip_gamma(a + 1.0);
    let ga2 = recip_gamma(a + 2.0);
    let j1 = |s: f64| s.powf(a) * ga1;
    let i2 = |s: f64| s.powf(a + 1.0) * ga2;
    let tol = Tolerance::new(0.0, 1e-10);

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for &p in x_probe {
        if p >= grid.len() {
            return domain(format!("probe index {p} outside the grid"));
        }
        let r = grid.radius(p);
        if r < 4.0 * grid.h() {
            skipped.push(p);
            continue;
        }
        let zs: Vec<f64> = table.z_slices().iter().map(|f| f.values()[p]).collect();
        let conv = |k: usize| -> Result<f64> {
            let t = times[k];
            let z0 = zs[0];
            let head = integrate(|r| g_kernel(a, t - r).unwrap_or(0.0) * z0 * (r / t0).powf(a), 0.0, t0, tol)?.value;
            let mut body = 0.0;
            for j in 0..k {
                let (ta, tb) = (times[j], times[j + 1]);
                let dl = tb - ta;
                let (sa, sb) = (t - ta, t - tb);
                let d2 = (i2(sa) - i2(sb)) / dl;
                body += zs[j] * (j1(sa) - d2) + zs[j + 1] * (d2 - j1(sb));
            }
            Ok(head + body)
        };
        for &k in &eval {
            let (fm, f0, fp) = (conv(k - 1)?, conv(k)?, conv(k + 1)?);
            let h1 = times[k] - times[k - 1];
            let h2 = times[k + 1] - times[k];
            let der = -h2 / (h1 * (h1 + h2)) * fm + (h2 - h1) / (h1 * h2) * f0 + h1 / (h2 * (h1 + h2)) * fp;
            let y = table.y(k).values()[p];
            let residual = (y - der).abs() / y.abs();
            entries.push(YzEntry {
                probe: p,
                x_norm: r,
                t: times[k],
                omega: r.powf(beta) / times[k].powf(a),
                y,
                derivative: der,
                residual,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::Precondition("no probe satisfies |x| >= 4h".into()));
    }
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(YzReport { entries, skipped, max_residual, tolerance: YZ_TOLERANCE, pass: max_residual <= YZ_TOLERANCE })
}
