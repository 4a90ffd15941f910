//! Run-configuration schema: one TOML file with a section per module.
//!
//! `[model]` and `[grid]` are required; every other section is optional and
//! filled with defaults. Unknown sections or keys, wrong types and out-of-range
//! values are collected as [`SchemaError`]s carrying the 1-based line of the
//! offending item.

use fdlab_core::solver::SolverConfig;
use fdlab_core::spectral::DensityLaw;
use fdlab_core::{Grid, KernelRoute, SpectralMeasure, StableSymbol};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use toml_edit::{ImDocument, Item, Table, Value};

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every violation found in one pass over the file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigErrors(pub Vec<SchemaError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSection {
    pub alpha: f64,
    pub beta: f64,
    pub measure: SpectralMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    /// The semilinear mild solution.
    Mild,
    /// `u = Z * u0`, no forcing.
    Linear,
    /// Monotone scheme with truncated nonlinearity and shifted data.
    Positivity,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSection {
    pub gamma: Option<f64>,
    pub horizon: f64,
    pub steps: usize,
    pub grading: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub max_refinements: usize,
    pub truncation: Option<u32>,
    /// Blow-up guard as a multiple of `|u0|_inf`.
    pub threshold_factor: f64,
    pub norm_p: f64,
    pub mode: SolveMode,
}

/// Initial data: a smooth bump of given amplitude and half-width.
#[derive(Debug, Clone, Serialize)]
pub struct DataSection {
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelsSection {
    pub times: Vec<f64>,
    pub route: KernelRoute,
    /// Compare every slice with the other route.
    pub oracle: bool,
}

/// Which estimate cases `verify-estimates` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matrix {
    /// Every reachable case row with controls, plus lower bounds, increments and shifts.
    Default,
    /// One case row with controls and the cheap checks.
    Quick,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatesSection {
    pub matrix: Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSection {
    /// Empty means the `[solver]` gamma.
    pub gammas: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub fit_window: [f64; 2],
    pub small_amplitude: f64,
    pub p: f64,
    pub p_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSection {
    pub output: Option<String>,
    pub snapshot_times: Vec<f64>,
    pub jobs: usize,
}

/// A fully validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub grid: Grid,
    pub solver: SolverSection,
    pub data: DataSection,
    pub kernels: KernelsSection,
    pub estimates: EstimatesSection,
    pub experiment: ExperimentSection,
    /// Hex SHA-256 of the configuration text.
    pub hash: String,
}

impl RunConfig {
    /// Solver settings at the given exponent.
    pub fn solver_config(&self, gamma: f64) -> SolverConfig {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(
            self.model.alpha,
            self.model.beta,
            gamma,
            self.model.measure.clone(),
            self.grid,
            s.horizon,
            s.steps,
        );
        cfg.grading = s.grading;
        cfg.picard_tol = s.picard_tol;
        cfg.picard_max_iter = s.picard_max_iter;
        cfg.max_refinements = s.max_refinements;
        cfg.truncation = s.truncation;
        cfg.norm_p = s.norm_p;
        cfg.nonlinear = s.mode != SolveMode::Linear;
        cfg
    }

    pub fn symbol(&self) -> StableSymbol {
        StableSymbol::new(self.model.beta, self.model.measure.clone()).expect("checked while parsing")
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

const SECTIONS: &[&str] = &["run", "model", "grid", "solver", "data", "kernels", "estimates", "experiment"];

struct Parser<'a> {
    text: &'a str,
    errors: Vec<SchemaError>,
}

impl<'a> Parser<'a> {
    fn line(&self, span: Option<Range<usize>>) -> Option<usize> {
        span.map(|r| self.text[..r.start.min(self.text.len())].matches('\n').count() + 1)
    }

    fn push(&mut self, span: Option<Range<usize>>, message: String) {
        let line = self.line(span);
        self.errors.push(SchemaError { line, message });
    }
}

/// Typed access to one section, recording every problem in the parser.
struct Section<'p, 'a> {
    p: &'p mut Parser<'a>,
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'p, 'a> Section<'p, 'a> {
    fn new(p: &'p mut Parser<'a>, doc: &'a Table, name: &'static str, allowed: &[&str], required: bool) -> Self {
        let table = match doc.get_key_value(name) {
            None => {
                if required {
                    p.push(None, format!("missing required section [{name}]"));
                }
                None
            }
            Some((key, item)) => match item.as_table() {
                Some(t) => {
                    for (k, _) in t.iter() {
                        if !allowed.contains(&k) {
                            let span = t.get_key_value(k).and_then(|(kk, _)| kk.span());
                            p.push(span, format!("unknown key `{k}` in [{name}]"));
                        }
                    }
                    Some(t)
                }
                None => {
                    p.push(key.span().or_else(|| item.span()), format!("`{name}` must be a table section"));
                    None
                }
            },
        };
        Section { p, name, table }
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn item(&self, key: &str) -> Option<(&'a Item, Option<Range<usize>>)> {
        let t = self.table?;
        let (k, item) = t.get_key_value(key)?;
        Some((item, item.span().or_else(|| k.span())))
    }

    fn type_error(&mut self, span: Option<Range<usize>>, key: &str, what: &str) {
        let msg = format!("{}.{key} must be {what}", self.name);
        self.p.push(span, msg);
    }

    fn f64_opt(&mut self, key: &str) -> Option<(f64, Option<Range<usize>>)> {
        let (item, span) = self.item(key)?;
        match item.as_value().and_then(as_f64) {
            Some(v) => Some((v, span)),
            None => {
                self.type_error(span, key, "a number");
                None
            }
        }
    }

    /// Number checked against `ok`; `range` names the constraint in the message.
    fn f64_in(&mut self, key: &str, default: Option<f64>, ok: impl Fn(f64) -> bool, range: &str) -> Option<f64> {
        match self.f64_opt(key) {
            Some((v, span)) => {
                if ok(v) {
                    Some(v)
                } else {
                    let msg = format!("{}.{key} = {v} outside {range}", self.name);
                    self.p.push(span, msg);
                    None
                }
            }
            None if self.item(key).is_some() => None,
            None => {
                if default.is_none() && self.present() {
                    let span = self.table.and_then(|t| t.span());
                    let msg = format!("missing required key {}.{key}", self.name);
                    self.p.push(span, msg);
                }
                default
            }
        }
    }

    fn usize_in(&mut self, key: &str, default: Option<usize>, min: usize) -> Option<usize> {
        let Some((item, span)) = self.item(key) else {
            if default.is_none() && self.present() {
                let span = self.table.and_then(|t| t.span());
                let msg = format!("missing required key {}.{key}", self.name);
                self.p.push(span, msg);
            }
            return default;
        };
        match item.as_integer() {
            Some(v) if v >= min as i64 => Some(v as usize),
            Some(v) => {
                let msg = format!("{}.{key} = {v} must be at least {min}", self.name);
                self.p.push(span, msg);
                None
            }
            None => {
                self.type_error(span, key, "an integer");
                None
            }
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        let Some((item, span)) = self.item(key) else { return default };
        item.as_bool().unwrap_or_else(|| {
            self.type_error(span, key, "true or false");
            default
        })
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: Option<T>) -> Option<T> {
        let Some((item, span)) = self.item(key) else { return default };
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        match item.as_str() {
            Some(s) => match options.iter().find(|o| o.0 == s) {
                Some(o) => Some(o.1),
                None => {
                    let msg = format!("{}.{key} = \"{s}\" is not one of {names:?}", self.name);
                    self.p.push(span, msg);
                    None
                }
            },
            None => {
                self.type_error(span, key, &format!("one of {names:?}"));
                None
            }
        }
    }

    /// Array of numbers, each checked against `ok`.
    fn list(&mut self, key: &str, default: Vec<f64>, ok: impl Fn(f64) -> bool, range: &str) -> Option<Vec<f64>> {
        let Some((item, span)) = self.item(key) else { return Some(default) };
        let Some(arr) = item.as_array() else {
            self.type_error(span, key, "an array of numbers");
            return None;
        };
        let mut out = Vec::new();
        let mut good = true;
        for v in arr.iter() {
            match as_f64(v) {
                Some(x) if ok(x) => out.push(x),
                Some(x) => {
                    let msg = format!("{}.{key} entry {x} outside {range}", self.name);
                    self.p.push(v.span().or(span.clone()), msg);
                    good = false;
                }
                None => {
                    let msg = format!("{}.{key} entries must be numbers", self.name);
                    self.p.push(v.span().or(span.clone()), msg);
                    good = false;
                }
            }
        }
        good.then_some(out)
    }

    fn span_of(&self, key: &str) -> Option<Range<usize>> {
        self.item(key).and_then(|(_, s)| s).or_else(|| self.table.and_then(|t| t.span()))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Parses and validates a configuration; on failure returns every violation found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let doc = match ImDocument::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let mut p = Parser { text, errors: Vec::new() };
            p.push(e.span(), format!("TOML syntax error: {}", e.message()));
            return Err(ConfigErrors(p.errors));
        }
    };
    let root = doc.as_table();
    let mut p = Parser { text, errors: Vec::new() };
    for (k, _) in root.iter() {
        if !SECTIONS.contains(&k) {
            let span = root.get_key_value(k).and_then(|(kk, item)| kk.span().or_else(|| item.span()));
            p.push(span, format!("unknown section [{k}]"));
        }
    }

    let run = {
        let mut s = Section::new(&mut p, root, "run", &["output", "snapshot_times", "jobs"], false);
        let output = match s.item("output") {
            Some((item, span)) => match item.as_str() {
                Some(v) => Some(v.to_string()),
                None => {
                    s.type_error(span, "output", "a string");
                    None
                }
            },
            None => None,
        };
        let snaps = s.list("snapshot_times", vec![], |t| t >= 0.0 && t.is_finite(), "[0, inf)");
        if let Some(v) = &snaps {
            if !increasing(v) {
                let span = s.span_of("snapshot_times");
                s.p.push(span, "run.snapshot_times must be strictly increasing".into());
            }
        }
        let jobs = s.usize_in("jobs", Some(1), 1);
        (output, snaps, jobs)
    };

    let model = {
        let keys = ["alpha", "beta", "measure", "weights", "level", "c0", "c1", "m", "nodes"];
        let mut s = Section::new(&mut p, root, "model", &keys, true);
        let alpha = s.f64_in("alpha", None, |a| a > 0.0 && a < 1.0, "(0,1)");
        let beta = s.f64_in("beta", None, |b| b > 0.0 && b < 2.0, "(0,2)");
        #[derive(Clone, Copy, PartialEq)]
        enum Kind {
            TwoAtom,
            Uniform,
            Cosine,
        }
        let kinds = [("two-atom", Kind::TwoAtom), ("uniform", Kind::Uniform), ("cosine", Kind::Cosine)];
        let kind = s.choice("measure", &kinds, Some(Kind::TwoAtom));
        let nodes = s.usize_in("nodes", Some(512), 8);
        let finite = |v: f64| v.is_finite();
        let measure = match kind {
            Some(Kind::TwoAtom) => {
                s.list("weights", vec![0.5, 0.5], |w| w >= 0.0 && w.is_finite(), "[0, inf)").and_then(|w| {
                    if w.len() != 2 {
                        let span = s.span_of("weights");
                        s.p.push(span, "model.weights takes two entries [plus, minus]".into());
                        return None;
                    }
                    SpectralMeasure::two_atom(w[0], w[1]).ok()
                })
            }
            Some(Kind::Uniform) => {
                let level = s.f64_in("level", Some(1.0 / (2.0 * PI)), |v| v > 0.0 && v.is_finite(), "(0, inf)");
                level.zip(nodes).and_then(|(level, n)| SpectralMeasure::density(DensityLaw::Uniform { level }, n).ok())
            }
            Some(Kind::Cosine) => {
                let c0 = s.f64_in("c0", Some(1.0 / (2.0 * PI)), finite, "the reals");
                let c1 = s.f64_in("c1", Some(0.0), finite, "the reals");
                let m = s.usize_in("m", Some(2), 0);
                match (c0, c1, m, nodes) {
                    (Some(c0), Some(c1), Some(m), Some(n)) => {
                        SpectralMeasure::density(DensityLaw::Cosine { c0, c1, m: m as u32 }, n).ok()
                    }
                    _ => None,
                }
            }
            None => None,
        };
        if let (Some(b), Some(m)) = (beta, &measure) {
            if let Err(e) = StableSymbol::new(b, m.clone()) {
                let span = s.span_of("measure");
                s.p.push(span, format!("model.measure rejected: {e}"));
            }
        }
        let span = s.span_of("measure");
        (alpha, beta, measure, span)
    };

    let grid = {
        let mut s = Section::new(&mut p, root, "grid", &["dim", "n", "half_width"], true);
        let dim = s.usize_in("dim", Some(1), 1);
        let n = s.usize_in("n", None, 2);
        let l = s.f64_in("half_width", None, |v| v > 0.0 && v.is_finite(), "(0, inf)");
        match (dim, n, l) {
            (Some(d), Some(n), Some(l)) if s.present() => match Grid::new(d, n, l) {
                Ok(g) => Some(g),
                Err(e) => {
                    let span = s.table.and_then(|t| t.span());
                    s.p.push(span, format!("[grid] rejected: {e}"));
                    None
                }
            },
            _ => None,
        }
    };
    if let (Some(g), Some(m)) = (&grid, &model.2) {
        if g.dim() != m.dim() {
            p.push(model.3.clone(), format!("measure lives in d = {}, grid.dim = {}", m.dim(), g.dim()));
        }
    }

    let solver = {
        let keys = [
            "gamma",
            "horizon",
            "steps",
            "grading",
            "picard_tol",
            "picard_max_iter",
            "max_refinements",
            "truncation",
            "threshold_factor",
            "norm_p",
            "mode",
        ];
        let mut s = Section::new(&mut p, root, "solver", &keys, false);
        let gamma = s.f64_opt("gamma").and_then(|(g, span)| {
            if g > 1.0 && g.is_finite() {
                Some(g)
            } else {
                s.p.push(span, format!("solver.gamma = {g} outside (1, inf)"));
                None
            }
        });
        let horizon = s.f64_in("horizon", Some(1.0), |v| v > 0.0 && v.is_finite(), "(0, inf)");
        let steps = s.usize_in("steps", Some(200), 1);
        let grading = s.f64_opt("grading").and_then(|(r, span)| {
            if r >= 1.0 && r.is_finite() {
                Some(r)
            } else {
                s.p.push(span, format!("solver.grading = {r} outside [1, inf)"));
                None
            }
        });
        let picard_tol = s.f64_in("picard_tol", Some(1e-10), |v| v > 0.0 && v < 1.0, "(0,1)");
        let picard_max_iter = s.usize_in("picard_max_iter", Some(60), 1);
        let max_refinements = s.usize_in("max_refinements", Some(40), 0);
        let truncation = match s.item("truncation") {
            Some(_) => s.usize_in("truncation", None, 1).map(|v| Some(v as u32)),
            None => Some(None),
        };
        let threshold_factor = s.f64_in("threshold_factor", Some(1e3), |v| v > 1.0 && v.is_finite(), "(1, inf)");
        let norm_p = s.f64_in("norm_p", Some(2.0), |v| v >= 1.0 && v.is_finite(), "[1, inf)");
        let modes = [("mild", SolveMode::Mild), ("linear", SolveMode::Linear), ("positivity", SolveMode::Positivity)];
        let mode = s.choice("mode", &modes, Some(SolveMode::Mild));
        if mode == Some(SolveMode::Positivity) && truncation == Some(None) {
            let span = s.span_of("mode");
            s.p.push(span, "solver.mode = \"positivity\" needs solver.truncation".into());
        }
        let ok =
            (horizon, steps, picard_tol, picard_max_iter, max_refinements, truncation, threshold_factor, norm_p, mode);
        match ok {
            (
                Some(horizon),
                Some(steps),
                Some(picard_tol),
                Some(picard_max_iter),
                Some(max_refinements),
                Some(truncation),
                Some(threshold_factor),
                Some(norm_p),
                Some(mode),
            ) => Some(SolverSection {
                gamma,
                horizon,
                steps,
                grading,
                picard_tol,
                picard_max_iter,
                max_refinements,
                truncation,
                threshold_factor,
                norm_p,
                mode,
            }),
            _ => None,
        }
    };

    let data = {
        let mut s = Section::new(&mut p, root, "data", &["amplitude", "width"], false);
        let amplitude = s.f64_in("amplitude", Some(1.0), |v| v >= 0.0 && v.is_finite(), "[0, inf)");
        let width = s.f64_in("width", Some(1.0), |v| v > 0.0 && v.is_finite(), "(0, inf)");
        amplitude.zip(width).map(|(amplitude, width)| DataSection { amplitude, width })
    };

    let kernels = {
        let mut s = Section::new(&mut p, root, "kernels", &["times", "route", "oracle"], false);
        let times = s.list("times", vec![0.25, 1.0, 4.0], |t| t > 0.0 && t.is_finite(), "(0, inf)");
        if times.as_ref().is_some_and(|t| t.is_empty() || !increasing(t)) {
            let span = s.span_of("times");
            s.p.push(span, "kernels.times must be a nonempty increasing list".into());
        }
        let routes = [("fourier", KernelRoute::Fourier), ("subordination", KernelRoute::Subordination)];
        let route = s.choice("route", &routes, Some(KernelRoute::Fourier));
        let oracle = s.bool_or("oracle", true);
        times.zip(route).map(|(times, route)| KernelsSection { times, route, oracle })
    };

    let estimates = {
        let mut s = Section::new(&mut p, root, "estimates", &["matrix"], false);
        let matrix =
            s.choice("matrix", &[("default", Matrix::Default), ("quick", Matrix::Quick)], Some(Matrix::Default));
        matrix.map(|matrix| EstimatesSection { matrix })
    };

    let experiment = {
        let keys = ["gammas", "amplitudes", "fit_window", "small_amplitude", "p", "p_prime"];
        let mut s = Section::new(&mut p, root, "experiment", &keys, false);
        let gammas = s.list("gammas", vec![], |g| g > 1.0 && g.is_finite(), "(1, inf)");
        let amplitudes = s.list("amplitudes", vec![1.0], |a| a >= 0.0 && a.is_finite(), "[0, inf)");
        for (key, v) in [("gammas", &gammas), ("amplitudes", &amplitudes)] {
            if v.as_ref().is_some_and(|v| !increasing(v)) {
                let span = s.span_of(key);
                s.p.push(span, format!("experiment.{key} must be strictly increasing"));
            }
        }
        if amplitudes.as_ref().is_some_and(|a| a.is_empty()) {
            let span = s.span_of("amplitudes");
            s.p.push(span, "experiment.amplitudes must not be empty".into());
        }
        let window = s.list("fit_window", vec![1.0, 20.0], |t| t > 0.0 && t.is_finite(), "(0, inf)");
        let window = window.and_then(|w| {
            if w.len() == 2 && w[0] < w[1] {
                Some([w[0], w[1]])
            } else {
                let span = s.span_of("fit_window");
                s.p.push(span, "experiment.fit_window must be [t0, t1] with t0 < t1".into());
                None
            }
        });
        let small = s.f64_in("small_amplitude", Some(0.05), |v| v > 0.0 && v.is_finite(), "(0, inf)");
        let pp = s.f64_in("p", Some(4.0), |v| v > 1.0 && v.is_finite(), "(1, inf)");
        let pq = s.f64_in("p_prime", Some(1.5), |v| v >= 1.0 && v.is_finite(), "[1, inf)");
        match (gammas, amplitudes, window, small, pp, pq) {
            (Some(gammas), Some(amplitudes), Some(fit_window), Some(small_amplitude), Some(p), Some(p_prime)) => {
                Some(ExperimentSection { gammas, amplitudes, fit_window, small_amplitude, p, p_prime })
            }
            _ => None,
        }
    };

    let (alpha, beta, measure, _) = model;
    let (output, snaps, jobs) = run;
    if !p.errors.is_empty() {
        return Err(ConfigErrors(p.errors));
    }
    match (alpha, beta, measure, grid, snaps, jobs, solver, data, kernels, estimates, experiment) {
        (
            Some(alpha),
            Some(beta),
            Some(measure),
            Some(grid),
            Some(snapshot_times),
            Some(jobs),
            Some(solver),
            Some(data),
            Some(kernels),
            Some(estimates),
            Some(experiment),
        ) => Ok(RunConfig {
            run: RunSection { output, snapshot_times, jobs },
            model: ModelSection { alpha, beta, measure },
            grid,
            solver,
            data,
            kernels,
            estimates,
            experiment,
            hash: sha256_hex(text.as_bytes()),
        }),
        _ => Err(ConfigErrors(vec![SchemaError { line: None, message: "configuration incomplete".into() }])),
    }
}
