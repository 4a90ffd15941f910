//! Mild solutions of `u(t) = Z(t)*u0 + int_0^t Y(t-s) * f(u(s)) ds` on the periodic
//! grid, by product integration in time and Picard iteration at each level.
//!
//! Everything runs in Fourier space: `Z(t)` acts as the multiplier `E_{a,1}(-t^a psi)`
//! and `Y(tau)` as `g_a(tau)` times the unit-mass profile `Gamma(a) E_{a,a}(-tau^a psi)`.
//! `f(u)` is interpolated linearly in time. On history intervals away from the current
//! level the profile is frozen at the midpoint lag and the weights of the two end values
//! are the exact integrals of `g_a` against the hat functions. On intervals touching the
//! singularity the profile varies too fast to freeze, and the weights are the exact
//! per-mode integrals of `tau^{a-1} E_{a,a}(-tau^a psi)` against the hats.

use crate::error::{domain, Error, Result};
use crate::fourier::{psi_modes, Fourier, ModeSet};
use crate::grid::{Field, Grid};
use crate::quad::GaussLegendre;
use crate::specfun::{g_any, gamma_fn, mittag_leffler, MLParams, MittagLefflerTable};
use crate::spectral::{SpectralMeasure, StableSymbol};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parameters of a mild solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Nonlinearity exponent, `f(u) = |u|^{gamma-1} u`.
    pub gamma: f64,
    pub measure: SpectralMeasure,
    pub grid: Grid,
    /// Horizon `T`.
    pub horizon: f64,
    /// Base mesh size `N` of `t_k = T (k/N)^r`.
    pub steps: usize,
    /// Grading exponent `r`; `None` means `max(1, 1/alpha)`.
    pub grading: Option<f64>,
    /// Picard stopping tolerance on `|u^{m+1} - u^m|_inf / max(1, |u^{m+1}|_inf)`.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Truncation level `n` of `g_n`; `None` uses the plain nonlinearity.
    pub truncation: Option<u32>,
    /// Blow-up guard on `|u|_inf`; `None` means `1e3 |u0|_inf`.
    pub blowup_threshold: Option<f64>,
    /// Exponent of the `L^p` diagnostic.
    pub norm_p: f64,
    /// `false` drops the nonlinear term (linear mode).
    pub nonlinear: bool,
    /// Largest number of bisections of one mesh step when Picard fails.
    pub max_refinements: usize,
}

impl SolverConfig {
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        measure: SpectralMeasure,
        grid: Grid,
        horizon: f64,
        steps: usize,
    ) -> Self {
        SolverConfig {
            alpha,
            beta,
            gamma,
            measure,
            grid,
            horizon,
            steps,
            grading: None,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            truncation: None,
            blowup_threshold: None,
            norm_p: 2.0,
            nonlinear: true,
            max_refinements: 40,
        }
    }

    pub fn grading_exponent(&self) -> f64 {
        self.grading.unwrap_or_else(|| (1.0 / self.alpha).max(1.0))
    }

    /// Base mesh `t_k = T (k/N)^r`, `k = 0..=N`.
    pub fn mesh(&self) -> Vec<f64> {
        let r = self.grading_exponent();
        (0..=self.steps).map(|k| self.horizon * (k as f64 / self.steps as f64).powf(r)).collect()
    }

    pub fn symbol(&self) -> Result<StableSymbol> {
        StableSymbol::new(self.beta, self.measure.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if !(self.gamma > 1.0) {
            return domain(format!("gamma = {} must exceed 1", self.gamma));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon {} must be positive", self.horizon));
        }
        if self.steps == 0 {
            return domain("the mesh needs at least one step");
        }
        if let Some(r) = self.grading {
            if !(r >= 1.0) {
                return domain(format!("grading exponent {r} must be at least 1"));
            }
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return domain("Picard tolerance and iteration cap must be positive");
        }
        if self.truncation == Some(0) {
            return domain("truncation level must be at least 1");
        }
        if !(self.norm_p >= 1.0) {
            return domain(format!("norm exponent {} must be at least 1", self.norm_p));
        }
        if self.measure.dim() != self.grid.dim() {
            return Err(Error::GridMismatch(format!(
                "measure lives in d = {}, grid in d = {}",
                self.measure.dim(),
                self.grid.dim()
            )));
        }
        Ok(())
    }

    fn nonlinearity(&self, u: f64) -> f64 {
        match self.truncation {
            Some(n) => truncated_nonlinearity(n, self.gamma, u),
            None => u.abs().powf(self.gamma - 1.0) * u,
        }
    }
}

/// `g_n`: zero for `r < 0`, `r^gamma` on `[0, n]`, and `a_n - b_n e^{-r}` beyond,
/// with `b_n = gamma n^{gamma-1} e^n` and `a_n = n^gamma + gamma n^{gamma-1}` so that
/// the pieces match to first order at `r = n`.
pub fn truncated_nonlinearity(n: u32, gamma: f64, r: f64) -> f64 {
    let n = n.max(1) as f64;
    if r <= 0.0 {
        0.0
    } else if r <= n {
        r.powf(gamma)
    } else {
        n.powf(gamma) - gamma * n.powf(gamma - 1.0) * (n - r).exp_m1()
    }
}

/// Lipschitz constant `gamma n^{gamma-1}` of `g_n`.
pub fn truncation_lipschitz(n: u32, gamma: f64) -> f64 {
    gamma * (n as f64).powf(gamma - 1.0)
}

/// `(|u0|_inf + 1/n) E_{a,1}(gamma n^{gamma-1} t^a)`.
pub fn apriori_bound(cfg: &SolverConfig, u0_sup: f64, t: f64) -> Result<f64> {
    let n = cfg.truncation.ok_or_else(|| Error::Precondition("the a priori bound needs a truncation level".into()))?;
    if !(t >= 0.0) {
        return domain(format!("apriori_bound needs t >= 0, got {t}"));
    }
    let arg = truncation_lipschitz(n, cfg.gamma) * t.powf(cfg.alpha);
    Ok((u0_sup + 1.0 / n as f64) * mittag_leffler(MLParams::new(cfg.alpha, 1.0)?, arg)?)
}

/// Window of admissible `p'` values.
#[derive(Debug, Clone, Serialize)]
pub struct PPrimeWindow {
    pub lower: f64,
    pub upper: f64,
    /// `true` when the lower end is the single admissible value `p' = 1`.
    pub pinned_at_one: bool,
    pub nonempty: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamReport {
    pub dim: usize,
    pub kappa: f64,
    pub critical_exponent: f64,
    /// `1 < p < inf`.
    pub mild_admissible: bool,
    /// `alpha = beta / 2`.
    pub alpha_is_half_beta: bool,
    /// Blow-up hypotheses with `1 < gamma < 1 + beta/d`.
    pub blowup_subcritical: bool,
    /// Blow-up hypotheses with `gamma = 1 + beta/d` (large data).
    pub blowup_critical: bool,
    /// `gamma > 1 + beta/d`.
    pub supercritical: bool,
    /// Lower end of the `p` window, `max(1, kappa, d(gamma-1)/beta)`.
    pub p_lower: f64,
    pub p_in_window: bool,
    pub p_prime_window: PPrimeWindow,
    pub p_prime_in_window: Option<bool>,
    /// All hypotheses of the global existence and decay result hold.
    pub global_window: bool,
    pub notes: Vec<String>,
}

/// Reports which parameter regimes `cfg`, `p` and `p'` satisfy.
pub fn validate_params(cfg: &SolverConfig, p: f64, p_prime: Option<f64>) -> ParamReport {
    let d = cfg.grid.dim() as f64;
    let beta = cfg.beta;
    let gamma = cfg.gamma;
    let ratio = d / beta;
    let kappa = if d > beta { ratio } else { 1.0 };
    let crit = 1.0 + beta / d;
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let alpha_is_half_beta = eq(cfg.alpha, beta / 2.0);
    let subcritical = gamma > 1.0 && gamma < crit && !eq(gamma, crit);
    let critical = eq(gamma, crit);
    let supercritical = gamma > crit && !critical;
    let p_lower = 1f64.max(kappa).max(d * (gamma - 1.0) / beta);
    let p_in_window = p.is_finite() && p > p_lower;
    let upper = ratio * (gamma - 1.0);
    let window = if d < beta {
        PPrimeWindow { lower: 1.0, upper, pinned_at_one: true, nonempty: 1.0 < upper }
    } else {
        PPrimeWindow { lower: ratio, upper, pinned_at_one: false, nonempty: ratio < upper }
    };
    let p_prime_in_window = p_prime.map(|q| {
        if window.pinned_at_one {
            eq(q, 1.0) && window.nonempty
        } else {
            q > window.lower && q < window.upper
        }
    });
    let mut notes = Vec::new();
    if d > beta {
        notes.push("d > beta: the p' window need not be nonempty".into());
    }
    if !window.nonempty {
        notes.push(format!("empty p' window: lower {} >= upper {}", window.lower, window.upper));
    }
    if critical {
        notes.push("critical exponent: blow-up requires sufficiently large data".into());
    }
    let global_window = supercritical && p_in_window && p_prime_in_window == Some(true);
    ParamReport {
        dim: cfg.grid.dim(),
        kappa,
        critical_exponent: crit,
        mild_admissible: p > 1.0 && p.is_finite(),
        alpha_is_half_beta,
        blowup_subcritical: alpha_is_half_beta && subcritical,
        blowup_critical: alpha_is_half_beta && critical,
        supercritical,
        p_lower,
        p_in_window,
        p_prime_window: window,
        p_prime_in_window,
        global_window,
        notes,
    }
}

/// Per-level diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct LevelDiagnostics {
    pub t: f64,
    pub l1: f64,
    pub lp: f64,
    pub linf: f64,
    pub min: f64,
    pub mass: f64,
    pub picard_iterations: usize,
    /// Picard residuals in iteration order.
    pub residuals: Vec<f64>,
    /// Residuals failed to decrease monotonically.
    pub non_monotone: bool,
    /// Number of bisections needed to reach this level.
    pub refinements: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupSuspected { t: f64, sup: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub fields: Vec<Field>,
    pub diagnostics: Vec<LevelDiagnostics>,
    pub termination: Termination,
    pub blowup_threshold: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.fields.last().expect("trajectory holds the initial level")
    }

    pub fn sup_trace(&self) -> Vec<(f64, f64)> {
        self.diagnostics.iter().map(|d| (d.t, d.linf)).collect()
    }

    /// Smallest grid value over all levels.
    pub fn min_value(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min).fold(f64::INFINITY, f64::min)
    }

    /// Field at the first level with `t >= t_query`.
    pub fn field_at(&self, t_query: f64) -> Option<&Field> {
        self.times.iter().position(|&t| t >= t_query).map(|k| &self.fields[k])
    }

    /// Norm trace as CSV.
    pub fn norms_csv(&self) -> String {
        let mut s = format!("t,l1,l{},linf,min,mass,picard_iterations,refinements\n", self.config.norm_p);
        for d in &self.diagnostics {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                d.t, d.l1, d.lp, d.linf, d.min, d.mass, d.picard_iterations, d.refinements
            ));
        }
        s
    }

    /// Run metadata (config echo, residual history, termination) as JSON.
    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialization")
    }
}

fn diagnostics(f: &Field, p: f64, iters: usize, residuals: Vec<f64>, refinements: usize) -> LevelDiagnostics {
    let non_monotone = residuals.windows(2).any(|w| w[1] > w[0]);
    LevelDiagnostics {
        t: f.time(),
        l1: f.l1(),
        lp: f.lp(p),
        linf: f.linf(),
        min: f.min(),
        mass: f.mass(),
        picard_iterations: iters,
        residuals,
        non_monotone,
        refinements,
    }
}

/// Weights `(A, B)` with `int_{t_j}^{t_{j+1}} g_a(t - s) f(s) ds = A f_j + B f_{j+1}` for
/// `f` linear on the interval; `a = t - t_j > b = t - t_{j+1} >= 0`.
pub(crate) fn hat_weights(alpha: f64, a: f64, b: f64, gl: &GaussLegendre) -> (f64, f64) {
    let delta = a - b;
    if b < delta {
        let g1 = |x: f64| if x > 0.0 { g_any(alpha + 1.0, x) } else { 0.0 };
        let g2 = |x: f64| if x > 0.0 { g_any(alpha + 2.0, x) } else { 0.0 };
        let d1 = g1(a) - g1(b);
        let d2 = alpha * (g2(a) - g2(b));
        ((d2 - b * d1) / delta, (a * d1 - d2) / delta)
    } else {
        // The singularity sits at least one interval away; Gauss-Legendre avoids
        // the cancellation of the closed form.
        let ga = |s: f64| g_any(alpha, s);
        let wa = gl.integrate(|s| ga(s) * (s - b) / delta, b, a);
        let wb = gl.integrate(|s| ga(s) * (a - s) / delta, b, a);
        (wa, wb)
    }
}

struct Kernels {
    modes: ModeSet,
    e1: MittagLefflerTable,
    ea: MittagLefflerTable,
    e_a1: MittagLefflerTable,
    e_a2: MittagLefflerTable,
    gamma_a: f64,
    alpha: f64,
}

impl Kernels {
    /// `Z^(t)` per distinct symbol value.
    fn z(&self, t: f64) -> Vec<f64> {
        let ta = t.powf(self.alpha);
        self.modes.values.iter().map(|&p| self.e1.eval_neg(ta * p)).collect()
    }

    /// Unit-mass profile of `Y(tau)` per distinct symbol value.
    fn profile(&self, tau: f64) -> Vec<f64> {
        let ta = tau.powf(self.alpha);
        self.modes.values.iter().map(|&p| self.gamma_a * self.ea.eval_neg(ta * p)).collect()
    }

    /// Per-mode hat weights of `Y` on lags `[b, a]`, from the antiderivatives
    /// `P = tau^a E_{a,a+1}(-tau^a psi)` of the kernel and `Q = tau^{a+1} E_{a,a+2}(-tau^a psi)` of `P`.
    fn exact_weights(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let delta = a - b;
        let (pa, qa) = (a.powf(self.alpha), a.powf(self.alpha + 1.0));
        let (pb, qb) = (b.powf(self.alpha), b.powf(self.alpha + 1.0));
        let mut wa = Vec::with_capacity(self.modes.values.len());
        let mut wb = Vec::with_capacity(self.modes.values.len());
        for &p in &self.modes.values {
            let big_p = |tp: f64| if tp > 0.0 { tp * self.e_a1.eval_neg(tp * p) } else { 0.0 };
            let big_q = |tp: f64, tq: f64| if tp > 0.0 { tq * self.e_a2.eval_neg(tp * p) } else { 0.0 };
            let dq = (big_q(pa, qa) - big_q(pb, qb)) / delta;
            wa.push(big_p(pa) - dq);
            wb.push(dq - big_p(pb));
        }
        (wa, wb)
    }
}

/// Solves the mild equation on the mesh of `cfg`, bisecting steps where Picard
/// iteration fails to converge.
pub fn mild_solve(cfg: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = cfg.grid;
    if !u0.grid().same_as(&grid) {
        return Err(Error::GridMismatch("initial datum and solver grid differ".into()));
    }
    let sym = cfg.symbol()?;
    let ell = cfg.horizon.powf(cfg.alpha / cfg.beta);
    if ell > grid.half_width() / 8.0 {
        return Err(Error::Resolution(format!(
            "kernel scale {ell:.4e} at the horizon exceeds L/8 = {:.4e}; enlarge the domain",
            grid.half_width() / 8.0
        )));
    }
    let alpha = cfg.alpha;
    let ks = Kernels {
        modes: ModeSet::new(&psi_modes(&sym, &grid)),
        e1: MittagLefflerTable::new(MLParams::new(alpha, 1.0)?)?,
        ea: MittagLefflerTable::new(MLParams::new(alpha, alpha)?)?,
        e_a1: MittagLefflerTable::new(MLParams::new(alpha, alpha + 1.0)?)?,
        e_a2: MittagLefflerTable::new(MLParams::new(alpha, alpha + 2.0)?)?,
        gamma_a: gamma_fn(alpha)?,
        alpha,
    };
    let idx = &ks.modes.index;
    let ft = Fourier::new(grid);
    let gl = GaussLegendre::new(10);
    let u0_hat = ft.forward(u0.values());
    let sup0 = u0.linf();
    let threshold = cfg.blowup_threshold.unwrap_or(1e3 * sup0);
    let nl_hat = |u: &[f64]| -> Vec<Complex64> {
        let f: Vec<f64> = u.iter().map(|&v| cfg.nonlinearity(v)).collect();
        ft.forward(&f)
    };

    let mut times = vec![0.0];
    let mut fields = vec![u0.clone().with_time(0.0)];
    let mut f_hat = vec![if cfg.nonlinear { nl_hat(u0.values()) } else { Vec::new() }];
    let mut diags = vec![diagnostics(&fields[0], cfg.norm_p, 0, vec![], 0)];
    let mut termination = Termination::Completed;
    if cfg.truncation.is_some() {
        check_bound(cfg, sup0, &diags[0])?;
    }

    let mut targets: Vec<f64> = cfg.mesh()[1..].iter().rev().cloned().collect();
    let mut depth = 0usize;
    while let Some(&t_new) = targets.last() {
        let k = times.len();
        let t_prev = times[k - 1];
        let z = ks.z(t_new);
        let mut known: Vec<Complex64> = u0_hat.iter().zip(idx).map(|(c, &i)| c * z[i as usize]).collect();
        let mut last = None;
        if cfg.nonlinear {
            for j in 0..k - 1 {
                let (a, b) = (t_new - times[j], t_new - times[j + 1]);
                if b < a - b {
                    let (wa, wb) = ks.exact_weights(a, b);
                    for (m, acc) in known.iter_mut().enumerate() {
                        let i = idx[m] as usize;
                        *acc += f_hat[j][m] * wa[i] + f_hat[j + 1][m] * wb[i];
                    }
                } else {
                    let (wa, wb) = hat_weights(alpha, a, b, &gl);
                    let prof = ks.profile(0.5 * (a + b));
                    for (m, acc) in known.iter_mut().enumerate() {
                        *acc += (f_hat[j][m] * wa + f_hat[j + 1][m] * wb) * prof[idx[m] as usize];
                    }
                }
            }
            let (wa, wb) = ks.exact_weights(t_new - t_prev, 0.0);
            for (m, acc) in known.iter_mut().enumerate() {
                *acc += f_hat[k - 1][m] * wa[idx[m] as usize];
            }
            last = Some(wb);
        }

        let (u_new, iters, residuals, fh) = match last {
            None => (ft.inverse_real(known), 0, vec![], Vec::new()),
            Some(wb) => {
                let mut u = fields[k - 1].values().to_vec();
                let mut fh = f_hat[k - 1].clone();
                let mut residuals = Vec::new();
                let mut converged = false;
                for _ in 0..cfg.picard_max_iter {
                    let data: Vec<Complex64> =
                        known.iter().zip(&fh).zip(idx).map(|((c, f), &i)| c + f * wb[i as usize]).collect();
                    let next = ft.inverse_real(data);
                    let sup = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let diff = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    let res = diff / sup.max(1.0);
                    residuals.push(res);
                    u = next;
                    fh = nl_hat(&u);
                    if !res.is_finite() {
                        break;
                    }
                    if res <= cfg.picard_tol {
                        converged = true;
                        break;
                    }
                    let n = residuals.len();
                    if n >= 4 && residuals[n - 1] > residuals[n - 2] && residuals[n - 2] > residuals[n - 3] {
                        break;
                    }
                }
                if !converged {
                    if depth >= cfg.max_refinements {
                        return Err(Error::PicardDivergence { t: t_new, residuals });
                    }
                    targets.push(0.5 * (t_prev + t_new));
                    depth += 1;
                    continue;
                }
                let iters = residuals.len();
                (u, iters, residuals, fh)
            }
        };
        targets.pop();
        let field = Field::new(grid, u_new, t_new)?;
        let diag = diagnostics(&field, cfg.norm_p, iters, residuals, depth);
        depth = 0;
        if cfg.truncation.is_some() {
            check_bound(cfg, sup0, &diag)?;
        }
        let sup = diag.linf;
        times.push(t_new);
        fields.push(field);
        f_hat.push(fh);
        diags.push(diag);
        if sup > threshold {
            termination = Termination::BlowupSuspected { t: t_new, sup };
            break;
        }
    }
    Ok(Trajectory { config: cfg.clone(), times, fields, diagnostics: diags, termination, blowup_threshold: threshold })
}

fn check_bound(cfg: &SolverConfig, sup0: f64, d: &LevelDiagnostics) -> Result<()> {
    let bound = apriori_bound(cfg, sup0, d.t)?;
    if d.linf > bound + 1e-6 {
        return Err(Error::AprioriViolation { t: d.t, sup: d.linf, bound });
    }
    Ok(())
}

/// Monotone scheme with data `u0 + 1/n` and nonlinearity `g_n`.
pub fn positivity_run(cfg: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    let n = cfg.truncation.ok_or_else(|| Error::Precondition("positivity_run needs a truncation level n".into()))?;
    if u0.min() < 0.0 {
        return domain(format!("positivity_run needs u0 >= 0, found {}", u0.min()));
    }
    let shift = 1.0 / n as f64;
    let data = Field::new(*u0.grid(), u0.values().iter().map(|v| v + shift).collect(), 0.0)?;
    mild_solve(cfg, &data)
}

/// Comparison of two positivity runs with truncation levels `n < m`.
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    /// End of the window where the level-`n` run stays below `n`, so neither truncation is active.
    pub t_star: f64,
    /// Number of shared levels compared.
    pub levels: usize,
    /// Largest pointwise excess `u_m - u_n` over the window.
    pub max_excess: f64,
}

/// Checks `u_m <= u_n` pointwise on the shared levels of two positivity runs, up to the
/// last time at which `u_n` stays below `n`. Beyond that time `g_m >= g_n` and the
/// ordering need not hold.
pub fn monotone_in_n(coarse: &Trajectory, fine: &Trajectory) -> Result<MonotoneReport> {
    let n = match (coarse.config.truncation, fine.config.truncation) {
        (Some(n), Some(m)) if n < m => n,
        _ => return Err(Error::Precondition("monotone_in_n needs truncation levels n < m".into())),
    };
    if !coarse.config.grid.same_as(&fine.config.grid) {
        return Err(Error::GridMismatch("trajectories live on different grids".into()));
    }
    let mut t_star = 0.0;
    let mut levels = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for (f, d) in coarse.fields.iter().zip(&coarse.diagnostics) {
        if d.linf > n as f64 {
            break;
        }
        t_star = f.time();
        if let Some(g) = fine.fields.iter().find(|g| g.time() == f.time()) {
            levels += 1;
            let ex = g.values().iter().zip(f.values()).fold(f64::NEG_INFINITY, |acc, (a, b)| acc.max(a - b));
            max_excess = max_excess.max(ex);
        }
    }
    Ok(MonotoneReport { t_star, levels, max_excess })
}

/// Smooth compactly supported bump `amp * exp(1 - 1/(1 - |x|^2/w^2))` of half-width `w`.
pub fn bump(grid: Grid, amp: f64, width: f64) -> Result<Field> {
    if !(width > 0.0) {
        return domain(format!("bump width {width} must be positive"));
    }
    Field::from_fn(grid, 0.0, |x| {
        let r2 = x.iter().map(|v| v * v).sum::<f64>() / (width * width);
        if r2 < 1.0 {
            amp * (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
}
