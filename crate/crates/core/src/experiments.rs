//! Fujita dichotomy experiments: blow-up detection below `1 + beta/d`, the heat-kernel
//! functional `F(t)`, and small-data decay above the critical exponent.

use crate::error::{domain, Error, Result};
use crate::green::convolve;
use crate::grid::{Field, Grid};
use crate::solver::{bump, mild_solve, validate_params, SolverConfig, Termination, Trajectory};
use crate::subkernels::z_kernel_fourier;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `1 + beta/d`.
pub fn critical_exponent(beta: f64, d: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 2.0) {
        return domain(format!("beta = {beta} outside (0, 2)"));
    }
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    Ok(1.0 + beta / d as f64)
}

fn heat_guard(t: f64, grid: &Grid) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("heat kernel time must be positive, got {t}"));
    }
    let s = t.sqrt();
    if s < 2.0 * grid.h() || s > grid.half_width() / 8.0 {
        return Err(Error::Resolution(format!(
            "heat kernel: sqrt(t) = {s:.4e} outside [2h, L/8] = [{:.4e}, {:.4e}]",
            2.0 * grid.h(),
            grid.half_width() / 8.0
        )));
    }
    Ok(())
}

/// `H(t, x) = (4 pi t)^{-d/2} exp(-|x|^2 / 4t)`; refuses unless `sqrt(t)` lies in `[2h, L/8]`.
pub fn heat_kernel(t: f64, grid: &Grid) -> Result<Field> {
    heat_guard(t, grid)?;
    let c = (4.0 * PI * t).powf(-(grid.dim() as f64) / 2.0);
    Field::from_fn(*grid, t, |x| c * (-x.iter().map(|v| v * v).sum::<f64>() / (4.0 * t)).exp())
}

/// `F(t) = int H(t, x) u(x) dx` by grid quadrature.
pub fn fujita_functional(u: &Field, t: f64) -> Result<f64> {
    let h = heat_kernel(t, u.grid())?;
    Ok(h.values().iter().zip(u.values()).map(|(a, b)| a * b).sum::<f64>() * u.grid().cell())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BlowupSingle,
    GammaSweep,
    GlobalDecay,
}

/// One experiment: a solver template, bump data `amp * bump(width)` and the sweep values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub template: SolverConfig,
    /// Sweep exponents; empty means the template's `gamma`.
    pub gammas: Vec<f64>,
    /// Data amplitudes; single runs use exactly one.
    pub amplitudes: Vec<f64>,
    /// Half-width of the bump.
    pub bump_width: f64,
    /// Blow-up threshold as a multiple of `|u0|_inf`.
    pub threshold_factor: f64,
    /// Decay fit window `[t_min, t_max]`.
    pub fit_window: [f64; 2],
    /// Largest amplitude counted as small data.
    pub small_amplitude: f64,
    /// Worker threads for sweeps.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, template: SolverConfig) -> Self {
        ExperimentSpec {
            kind,
            template,
            gammas: Vec::new(),
            amplitudes: vec![1.0],
            bump_width: 1.0,
            threshold_factor: 1e3,
            fit_window: [1.0, 20.0],
            small_amplitude: 0.05,
            jobs: 1,
        }
    }

    /// The desk-scale Fujita setting: `d = 1`, `beta = 1`, `alpha = 1/2`, `n = 512`,
    /// `L = 64`, `T = 50`, `N = 400`.
    pub fn fujita_1d(kind: ExperimentKind, gamma: f64) -> Result<Self> {
        let grid = Grid::new(1, 512, 64.0)?;
        let measure = crate::spectral::SpectralMeasure::symmetric_atoms(1.0)?;
        Ok(Self::new(kind, SolverConfig::new(0.5, 1.0, gamma, measure, grid, 50.0, 400)))
    }

    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&self.gammas) || !sorted(&self.amplitudes) {
            return domain("sweep values must be strictly increasing");
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return domain("amplitudes must be a nonempty list of nonnegative numbers");
        }
        if self.gammas.iter().any(|g| !(*g > 1.0)) {
            return domain("every swept gamma must exceed 1");
        }
        if self.kind != ExperimentKind::GammaSweep && (self.amplitudes.len() != 1 || !self.gammas.is_empty()) {
            return domain("single runs take one amplitude and the template gamma");
        }
        let [a, b] = self.fit_window;
        if !(a > 0.0 && a < b && b <= self.template.horizon) {
            return domain(format!("fit window [{a}, {b}] must lie inside (0, {}]", self.template.horizon));
        }
        if !(self.bump_width > 0.0) || !(self.threshold_factor > 1.0) || self.jobs == 0 {
            return domain("bump width, threshold factor and jobs must be positive (factor > 1)");
        }
        Ok(())
    }

    fn data(&self, amplitude: f64) -> Result<Field> {
        bump(self.template.grid, amplitude, self.bump_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RunVerdict {
    BlowupDetected { t_star: f64 },
    NoBlowupWithinHorizon,
    DecayConfirmed { linf_slope: f64 },
    Inconclusive { reason: String },
}

impl RunVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            RunVerdict::BlowupDetected { .. } => "blowup_detected",
            RunVerdict::NoBlowupWithinHorizon => "no_blowup_within_horizon",
            RunVerdict::DecayConfirmed { .. } => "decay_confirmed",
            RunVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, RunVerdict::BlowupDetected { .. })
    }
}

/// Weighted norm traces of the decay estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub p: f64,
    pub p_prime: f64,
    pub window: [f64; 2],
    /// Weights `t^e` of the `L^1`, `L^p` and `L^inf` traces.
    pub exponents: [f64; 3],
    /// Rows `(t, w_1, w_p, w_inf)` over the window.
    pub weighted: Vec<[f64; 4]>,
    /// Largest value of each weighted trace over its value at the window start.
    pub ratio_to_start: [f64; 3],
    /// Largest value of each weighted trace over `|u0|_1 + |u0|_p + |u0|_inf`.
    pub ratio_to_data: [f64; 3],
    /// Least-squares slope of `ln |u|_inf` against `ln t` over the window.
    pub linf_slope: f64,
    /// `-alpha d/(beta p') + 0.2`.
    pub slope_bound: f64,
    /// The weighted `L^inf` trace never increases along the window.
    pub weighted_linf_nonincreasing: bool,
}

/// Result of one experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub gamma: f64,
    pub amplitude: f64,
    #[serde(flatten)]
    pub verdict: RunVerdict,
    pub times: Vec<f64>,
    pub l1: Vec<f64>,
    pub lp: Vec<f64>,
    pub linf: Vec<f64>,
    /// `(t, F(t))` at levels where the heat kernel is resolvable.
    pub f_trace: Vec<[f64; 2]>,
    pub f_increasing: Option<bool>,
    pub scaled_f_increasing: Option<bool>,
    /// `|u|_inf` never increases for `t >= 1`.
    pub linf_nonincreasing_after_one: bool,
    /// Fitted `C2` of `Z(t)*u0 >= C2 t^{-alpha d/beta} exp(-|x|^2/t)` for `t >= 1`.
    pub lower_bound_c2: Option<f64>,
    pub decay: Option<DecayReport>,
    pub refinements: usize,
    pub notes: Vec<String>,
}

impl RunReport {
    fn empty(gamma: f64, amplitude: f64, verdict: RunVerdict) -> Self {
        RunReport {
            gamma,
            amplitude,
            verdict,
            times: vec![],
            l1: vec![],
            lp: vec![],
            linf: vec![],
            f_trace: vec![],
            f_increasing: None,
            scaled_f_increasing: None,
            linf_nonincreasing_after_one: false,
            lower_bound_c2: None,
            decay: None,
            refinements: 0,
            notes: vec![],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Norm trace `t, l1, lp, linf` as CSV.
    pub fn traces_csv(&self) -> String {
        let mut s = String::from("t,l1,lp,linf\n");
        for k in 0..self.times.len() {
            s.push_str(&format!("{},{},{},{}\n", self.times[k], self.l1[k], self.lp[k], self.linf[k]));
        }
        s
    }

    pub fn t_star(&self) -> Option<f64> {
        match self.verdict {
            RunVerdict::BlowupDetected { t_star } => Some(t_star),
            _ => None,
        }
    }
}

fn strictly_increasing(v: &[f64]) -> Option<bool> {
    (v.len() >= 2).then(|| v.windows(2).all(|w| w[1] > w[0]))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Threshold crossing with the last three levels increasing and `ln |u|_inf`
/// growing faster than linearly in `t`.
fn blowup_verdict(tr: &Trajectory) -> RunVerdict {
    match tr.termination {
        Termination::Completed => RunVerdict::NoBlowupWithinHorizon,
        Termination::BlowupSuspected { t, .. } => {
            let d = &tr.diagnostics;
            if d.len() < 3 {
                return RunVerdict::Inconclusive { reason: "guard crossed within two levels".into() };
            }
            let k = d.len();
            let (a, b, c) = (&d[k - 3], &d[k - 2], &d[k - 1]);
            let s1 = (b.linf.ln() - a.linf.ln()) / (b.t - a.t);
            let s2 = (c.linf.ln() - b.linf.ln()) / (c.t - b.t);
            if a.linf < b.linf && b.linf < c.linf && s2 > s1 && s1 > 0.0 {
                RunVerdict::BlowupDetected { t_star: t }
            } else {
                RunVerdict::Inconclusive {
                    reason: format!(
                        "guard crossed at t = {t} without accelerating growth (log slopes {s1:.3e}, {s2:.3e})"
                    ),
                }
            }
        }
    }
}

/// Smallest ratio `Z(t)*u0 / (t^{-alpha d/beta} exp(-|x|^2/t))` over `|x| <= 2 sqrt(t)`
/// at `t = 1, 2, 4, ...` up to the horizon.
fn lower_bound_constant(cfg: &SolverConfig, u0: &Field) -> Result<Option<f64>> {
    let sym = cfg.symbol()?;
    let grid = cfg.grid;
    let d = grid.dim() as f64;
    let mut best: Option<f64> = None;
    let mut t = 1.0;
    while t <= cfg.horizon {
        if let Ok(z) = z_kernel_fourier(&sym, cfg.alpha, t, &grid) {
            let u1 = convolve(&z, u0)?;
            let pref = t.powf(-cfg.alpha * d / cfg.beta);
            for (i, &v) in u1.values().iter().enumerate() {
                let r = grid.radius(i);
                if r <= 2.0 * t.sqrt() {
                    let ratio = v / (pref * (-r * r / t).exp());
                    best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
                }
            }
        }
        t *= 2.0;
    }
    Ok(best)
}

fn run_one(spec: &ExperimentSpec, gamma: f64, amplitude: f64) -> RunReport {
    let mut cfg = spec.template.clone();
    cfg.gamma = gamma;
    let u0 = match spec.data(amplitude) {
        Ok(u) => u,
        Err(e) => return RunReport::empty(gamma, amplitude, RunVerdict::Inconclusive { reason: e.to_string() }),
    };
    cfg.blowup_threshold = Some(spec.threshold_factor * u0.linf());
    let tr = match mild_solve(&cfg, &u0) {
        Ok(tr) => tr,
        Err(e) => return RunReport::empty(gamma, amplitude, RunVerdict::Inconclusive { reason: e.to_string() }),
    };
    let verdict = blowup_verdict(&tr);
    let mut rep = RunReport::empty(gamma, amplitude, verdict);
    let dg = &tr.diagnostics;
    rep.times = tr.times.clone();
    rep.l1 = dg.iter().map(|d| d.l1).collect();
    rep.lp = dg.iter().map(|d| d.lp).collect();
    rep.linf = dg.iter().map(|d| d.linf).collect();
    rep.refinements = dg.iter().map(|d| d.refinements).sum();
    let half_d = cfg.grid.dim() as f64 / 2.0;
    for f in &tr.fields {
        if let Ok(v) = fujita_functional(f, f.time()) {
            rep.f_trace.push([f.time(), v]);
        }
    }
    let fs: Vec<f64> = rep.f_trace.iter().map(|p| p[1]).collect();
    let sfs: Vec<f64> = rep.f_trace.iter().map(|p| p[0].powf(half_d) * p[1]).collect();
    rep.f_increasing = strictly_increasing(&fs);
    rep.scaled_f_increasing = strictly_increasing(&sfs);
    if fs.iter().any(|v| !v.is_finite() || (u0.min() >= 0.0 && *v < 0.0)) {
        rep.notes.push("F(t) negative or non-finite for nonnegative data".into());
    }
    let after: Vec<f64> = dg.iter().filter(|d| d.t >= 1.0).map(|d| d.linf).collect();
    rep.linf_nonincreasing_after_one = after.windows(2).all(|w| w[1] <= w[0]);
    if rep.verdict.is_blowup() {
        match lower_bound_constant(&cfg, &u0) {
            Ok(c) => rep.lower_bound_c2 = c,
            Err(e) => rep.notes.push(format!("lower-bound diagnostic failed: {e}")),
        }
    }
    if dg.iter().any(|d| d.non_monotone) {
        rep.notes.push("non-monotone Picard residuals at some levels".into());
    }
    rep
}

fn require_half_beta(cfg: &SolverConfig) -> Result<()> {
    if (cfg.alpha - cfg.beta / 2.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "blow-up experiments need alpha = beta/2, got alpha = {}, beta = {}",
            cfg.alpha, cfg.beta
        )));
    }
    Ok(())
}

/// Single run at the template `gamma` and the single amplitude.
pub fn run_blowup(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    require_half_beta(&spec.template)?;
    Ok(run_one(spec, spec.template.gamma, spec.amplitudes[0]))
}

/// Empirical amplitude frontier at one exponent.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeFrontier {
    pub gamma: f64,
    pub largest_persisting: Option<f64>,
    pub smallest_blowing_up: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub critical_exponent: f64,
    pub runs: Vec<RunReport>,
    /// Every sub-critical run blew up.
    pub subcritical_all_blowup: bool,
    /// Every super-critical small-data run persisted with `|u|_inf` nonincreasing after `t = 1`.
    pub supercritical_small_persist: bool,
    /// At each amplitude, no blow-up above an exponent that persisted.
    pub monotone_in_gamma: bool,
    pub frontiers: Vec<AmplitudeFrontier>,
    /// Some run was inconclusive.
    pub flagged: bool,
    pub consistent: bool,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// One row per run: `gamma,amplitude,verdict,t_star,linf_slope`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("gamma,amplitude,verdict,t_star,linf_slope\n");
        for r in &self.runs {
            let t = r.t_star().map(|v| v.to_string()).unwrap_or_default();
            let sl = r.decay.as_ref().map(|d| d.linf_slope.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{}\n", r.gamma, r.amplitude, r.verdict.name(), t, sl));
        }
        s
    }
}

/// Runs every `(gamma, amplitude)` pair, in parallel over `spec.jobs` threads.
pub fn run_gamma_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    spec.validate()?;
    require_half_beta(&spec.template)?;
    let gammas = if spec.gammas.is_empty() { vec![spec.template.gamma] } else { spec.gammas.clone() };
    let pairs: Vec<(f64, f64)> = gammas.iter().flat_map(|&g| spec.amplitudes.iter().map(move |&a| (g, a))).collect();
    let mut runs: Vec<Option<RunReport>> = vec![None; pairs.len()];
    let jobs = spec.jobs.min(pairs.len()).max(1);
    std::thread::scope(|s| {
        let chunks: Vec<_> = runs
            .chunks_mut(pairs.len().div_ceil(jobs))
            .zip(pairs.chunks(pairs.len().div_ceil(jobs)))
            .map(|(out, ps)| {
                s.spawn(move || {
                    for (o, &(g, a)) in out.iter_mut().zip(ps) {
                        *o = Some(run_one(spec, g, a));
                    }
                })
            })
            .collect();
        for c in chunks {
            c.join().expect("sweep worker panicked");
        }
    });
    let runs: Vec<RunReport> = runs.into_iter().map(|r| r.expect("every run filled")).collect();
    let crit = critical_exponent(spec.template.beta, spec.template.grid.dim())?;
    let eq = |g: f64| (g - crit).abs() <= 1e-12;
    let subcritical_all_blowup = runs.iter().filter(|r| r.gamma < crit && !eq(r.gamma)).all(|r| r.verdict.is_blowup());
    let supercritical_small_persist = runs
        .iter()
        .filter(|r| r.gamma > crit && !eq(r.gamma) && r.amplitude <= spec.small_amplitude)
        .all(|r| r.verdict == RunVerdict::NoBlowupWithinHorizon && r.linf_nonincreasing_after_one);
    let mut monotone_in_gamma = true;
    for &a in &spec.amplitudes {
        let mut persisted = false;
        for r in runs.iter().filter(|r| r.amplitude == a) {
            if r.verdict.is_blowup() && persisted {
                monotone_in_gamma = false;
            }
            persisted |= r.verdict == RunVerdict::NoBlowupWithinHorizon;
        }
    }
    let frontiers = gammas
        .iter()
        .map(|&g| {
            let at: Vec<&RunReport> = runs.iter().filter(|r| r.gamma == g).collect();
            AmplitudeFrontier {
                gamma: g,
                largest_persisting: at
                    .iter()
                    .filter(|r| r.verdict == RunVerdict::NoBlowupWithinHorizon)
                    .map(|r| r.amplitude)
                    .reduce(f64::max),
                smallest_blowing_up: at.iter().filter(|r| r.verdict.is_blowup()).map(|r| r.amplitude).reduce(f64::min),
            }
        })
        .collect();
    let flagged = runs.iter().any(|r| matches!(r.verdict, RunVerdict::Inconclusive { .. }));
    let consistent = subcritical_all_blowup && supercritical_small_persist && monotone_in_gamma && !flagged;
    Ok(SweepReport {
        critical_exponent: crit,
        runs,
        subcritical_all_blowup,
        supercritical_small_persist,
        monotone_in_gamma,
        frontiers,
        flagged,
        consistent,
    })
}

/// Small-data run checked against the weighted decay estimate over the fit window.
pub fn run_global_decay(spec: &ExperimentSpec, p: f64, p_prime: f64) -> Result<RunReport> {
    spec.validate()?;
    let params = validate_params(&spec.template, p, Some(p_prime));
    if !params.global_window {
        return Err(Error::Precondition(format!(
            "(gamma, p, p') = ({}, {p}, {p_prime}) outside the global existence window: {}",
            spec.template.gamma,
            params.notes.join("; ")
        )));
    }
    let amplitude = spec.amplitudes[0];
    if amplitude > spec.small_amplitude {
        return Err(Error::Precondition(format!(
            "amplitude {amplitude} exceeds the small-data bound {}",
            spec.small_amplitude
        )));
    }
    let mut local = spec.clone();
    local.template.norm_p = p;
    let mut rep = run_one(&local, spec.template.gamma, amplitude);
    if rep.verdict != RunVerdict::NoBlowupWithinHorizon {
        return Ok(rep);
    }
    let cfg = &local.template;
    let ad = cfg.alpha * cfg.grid.dim() as f64 / cfg.beta;
    let exponents = [0.0, ad * (1.0 / p_prime - 1.0 / p), ad / p_prime];
    let [t0, t1] = spec.fit_window;
    let idx: Vec<usize> = (0..rep.times.len()).filter(|&k| rep.times[k] >= t0 && rep.times[k] <= t1).collect();
    if idx.len() < 3 {
        rep.verdict = RunVerdict::Inconclusive { reason: "fewer than three levels in the fit window".into() };
        return Ok(rep);
    }
    let weighted: Vec<[f64; 4]> = idx
        .iter()
        .map(|&k| {
            let t = rep.times[k];
            [t, rep.l1[k], t.powf(exponents[1]) * rep.lp[k], t.powf(exponents[2]) * rep.linf[k]]
        })
        .collect();
    let u0 = local.data(amplitude)?;
    let data_norm = u0.l1() + u0.lp(p) + u0.linf();
    let mut ratio_to_start = [0.0; 3];
    let mut ratio_to_data = [0.0; 3];
    for c in 0..3 {
        let mx = weighted.iter().map(|w| w[c + 1]).fold(0.0, f64::max);
        ratio_to_start[c] = mx / weighted[0][c + 1];
        ratio_to_data[c] = mx / data_norm;
    }
    let lt: Vec<f64> = idx.iter().map(|&k| rep.times[k].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&k| rep.linf[k].ln()).collect();
    let linf_slope = slope(&lt, &ly);
    let slope_bound = -exponents[2] + 0.2;
    let weighted_linf_nonincreasing = weighted.windows(2).all(|w| w[1][3] <= w[0][3]);
    let bounded = ratio_to_start.iter().all(|r| *r <= 5.0);
    rep.verdict = if bounded && linf_slope <= slope_bound {
        RunVerdict::DecayConfirmed { linf_slope }
    } else {
        RunVerdict::Inconclusive {
            reason: format!(
                "weighted traces grew by {ratio_to_start:?} or L-inf slope {linf_slope:.4} > {slope_bound:.4}"
            ),
        }
    };
    rep.decay = Some(DecayReport {
        p,
        p_prime,
        window: spec.fit_window,
        exponents,
        weighted,
        ratio_to_start,
        ratio_to_data,
        linf_slope,
        slope_bound,
        weighted_linf_nonincreasing,
    });
    Ok(rep)
}
