//! Batch front-end: parses a run configuration, runs one subcommand and writes
//! its reports together with a manifest.
//!
//! Every output is held in memory until the subcommand has finished, so an
//! invalid configuration or a failed run leaves the output directory untouched.
//! Exit codes: 0 pass or complete, 1 error, 2 failed verification, 3 inconclusive.

pub mod config;
pub mod suite;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use config::{parse_config, sha256_hex, ConfigErrors, RunConfig, SolveMode};
use fdlab_core::experiments::{
    run_gamma_sweep, run_global_decay, ExperimentKind, ExperimentSpec, RunVerdict, SweepReport,
};
use fdlab_core::io::field_to_bytes;
use fdlab_core::solver::{bump, mild_solve, positivity_run, Termination};
use fdlab_core::specfun::g_kernel;
use fdlab_core::subkernels::{y_kernel, y_kernel_fourier, z_kernel, z_kernel_fourier};
use fdlab_core::{KernelRoute, KernelTable};
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Error,
    Failed,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Error => 1,
            Status::Failed => 2,
            Status::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build and export a kernel table, with mass and cross-route checks.
    Kernels,
    /// Run the estimate verification matrix.
    VerifyEstimates,
    /// Single mild solve with snapshots.
    Solve,
    /// Blow-up runs over the configured exponents and amplitudes.
    FujitaSweep,
    /// Small-data run checked against the weighted decay estimate.
    Decay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::VerifyEstimates => "verify-estimates",
            Command::Solve => "solve",
            Command::FujitaSweep => "fujita-sweep",
            Command::Decay => "decay",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fdlab", version, about = "Space-time fractional diffusion laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `run.output`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; overrides `run.jobs`.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Comma-separated snapshot times; overrides `run.snapshot_times`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

/// Files produced by a subcommand, keyed by path relative to the output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), bytes.into());
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    /// Writes every file, then `manifest.json` listing each file's SHA-256 and
    /// echoing the configuration hash.
    pub fn commit(&self, dir: &Path, command: Command, cfg: &RunConfig, status: Status) -> anyhow::Result<()> {
        let mut listing = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            listing.push(json!({ "path": name, "bytes": bytes.len(), "sha256": sha256_hex(bytes) }));
        }
        let manifest = json!({
            "tool": "fdlab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command.name(),
            "config_sha256": cfg.hash,
            "status": status,
            "exit_code": status.code(),
            "files": listing,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(dir.join("manifest.json"), text).context("writing manifest.json")?;
        Ok(())
    }
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

/// Result of running a subcommand before anything is written.
pub struct Run {
    pub status: Status,
    pub outputs: Outputs,
}

fn kernels(cfg: &RunConfig) -> anyhow::Result<Run> {
    let k = &cfg.kernels;
    let (alpha, grid) = (cfg.model.alpha, cfg.grid);
    let sym = cfg.symbol();
    let table = KernelTable::build(&sym, alpha, &grid, &k.times, k.route)?;
    let mut out = Outputs::default();
    let mut checks = Vec::new();
    let mut ok = true;
    let mut csv = String::from("t,z_mass,y_mass,g_alpha,z_mass_err,y_mass_rel_err,z_route_err,y_route_err\n");
    for (i, &t) in k.times.iter().enumerate() {
        let (z, y) = (table.z(i), table.y(i));
        let g = g_kernel(alpha, t)?;
        let z_err = (z.mass() - 1.0).abs();
        let y_err = (y.mass() - g).abs() / g;
        let mass_ok = z_err <= 2e-3 && y_err <= 2e-3;
        let (mut zr, mut yr) = (f64::NAN, f64::NAN);
        let mut route_ok = true;
        if k.oracle {
            let (zo, yo) = match k.route {
                KernelRoute::Fourier => (z_kernel(&sym, alpha, t, &grid)?, y_kernel(&sym, alpha, t, &grid)?),
                KernelRoute::Subordination => {
                    (z_kernel_fourier(&sym, alpha, t, &grid)?, y_kernel_fourier(&sym, alpha, t, &grid)?)
                }
            };
            zr = z.max_abs_diff(&zo)? / z.linf();
            yr = y.max_abs_diff(&yo)? / y.linf();
            route_ok = zr <= 1e-3 && yr <= 2e-3;
        }
        ok &= mass_ok && route_ok;
        csv.push_str(&format!("{t},{},{},{g},{z_err},{y_err},{zr},{yr}\n", z.mass(), y.mass()));
        checks.push(json!({
            "t": t, "z_mass_error": z_err, "y_mass_relative_error": y_err, "mass_pass": mass_ok,
            "z_route_error": if k.oracle { json!(zr) } else { json!(null) },
            "y_route_error": if k.oracle { json!(yr) } else { json!(null) },
            "route_pass": route_ok,
        }));
    }
    for (i, (z, y)) in table.z_slices().iter().zip(table.y_slices()).enumerate() {
        out.add(format!("table/z_{i:04}.bin"), field_to_bytes(z));
        out.add(format!("table/y_{i:04}.bin"), field_to_bytes(y));
    }
    let status = if ok { Status::Pass } else { Status::Failed };
    let report = json!({
        "alpha": alpha, "beta": cfg.model.beta, "measure": cfg.model.measure.descriptor(),
        "grid": grid, "route": k.route, "times": k.times, "checks": checks, "pass": ok,
    });
    out.add("kernels_report.json", to_json(&report)?);
    out.add("kernels_checks.csv", csv);
    Ok(Run { status, outputs: out })
}

fn verify_estimates(cfg: &RunConfig) -> anyhow::Result<Run> {
    let rep = suite::run_matrix(cfg.estimates.matrix, cfg.run.jobs)?;
    let status = if rep.failed > 0 {
        Status::Failed
    } else if rep.inconclusive > 0 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let mut out = Outputs::default();
    out.add("estimates_report.json", rep.to_json() + "\n");
    out.add("estimates_summary.csv", rep.summary_csv());
    Ok(Run { status, outputs: out })
}

fn gamma_of(cfg: &RunConfig) -> anyhow::Result<f64> {
    cfg.solver.gamma.ok_or_else(|| anyhow!("solver.gamma is required for this subcommand"))
}

fn solve(cfg: &RunConfig) -> anyhow::Result<Run> {
    let mut sc = cfg.solver_config(gamma_of(cfg)?);
    let u0 = bump(cfg.grid, cfg.data.amplitude, cfg.data.width)?;
    sc.blowup_threshold = Some(cfg.solver.threshold_factor * u0.linf().max(f64::MIN_POSITIVE));
    let tr = match cfg.solver.mode {
        SolveMode::Positivity => positivity_run(&sc, &u0)?,
        _ => mild_solve(&sc, &u0)?,
    };
    let mut out = Outputs::default();
    out.add("norms.csv", tr.norms_csv());
    out.add("trajectory.json", tr.metadata_json() + "\n");
    for (i, &t) in cfg.run.snapshot_times.iter().enumerate() {
        if let Some(f) = tr.field_at(t) {
            out.add(format!("snapshots/u_{i:03}.bin"), field_to_bytes(f));
        }
    }
    out.add("final.bin", field_to_bytes(tr.last()));
    let termination = match tr.termination {
        Termination::Completed => json!({ "kind": "completed" }),
        Termination::BlowupSuspected { t, sup } => json!({ "kind": "blowup_suspected", "t": t, "sup": sup }),
    };
    let summary = json!({
        "mode": cfg.solver.mode, "gamma": sc.gamma, "levels": tr.times.len(),
        "final_time": tr.last().time(), "final_linf": tr.last().linf(), "min_value": tr.min_value(),
        "termination": termination,
        "snapshots": cfg.run.snapshot_times.iter().map(|&t| tr.field_at(t).map(|f| f.time())).collect::<Vec<_>>(),
    });
    out.add("solve_summary.json", to_json(&summary)?);
    Ok(Run { status: Status::Pass, outputs: out })
}

fn experiment_spec(cfg: &RunConfig, kind: ExperimentKind, gamma: f64) -> ExperimentSpec {
    let e = &cfg.experiment;
    let mut spec = ExperimentSpec::new(kind, cfg.solver_config(gamma));
    spec.amplitudes = e.amplitudes.clone();
    spec.bump_width = cfg.data.width;
    spec.threshold_factor = cfg.solver.threshold_factor;
    spec.fit_window = e.fit_window;
    spec.small_amplitude = e.small_amplitude;
    spec.jobs = cfg.run.jobs;
    spec
}

fn fujita_sweep(cfg: &RunConfig) -> anyhow::Result<Run> {
    let gammas = &cfg.experiment.gammas;
    let template_gamma = match gammas.first() {
        Some(&g) => g,
        None => gamma_of(cfg)?,
    };
    let mut spec = experiment_spec(cfg, ExperimentKind::GammaSweep, template_gamma);
    spec.gammas = gammas.clone();
    let rep = run_gamma_sweep(&spec)?;
    let status = sweep_status(&rep);
    let mut out = Outputs::default();
    out.add("sweep_report.json", rep.to_json() + "\n");
    out.add("sweep_summary.csv", rep.summary_csv());
    for r in &rep.runs {
        out.add(format!("traces/gamma_{}_amp_{}.csv", r.gamma, r.amplitude), r.traces_csv());
    }
    Ok(Run { status, outputs: out })
}

/// Exit status of a sweep. Blow-up of small supercritical data or a verdict
/// that is not monotone in gamma contradicts the dichotomy; a sub-critical run
/// that reaches the horizon only shows the horizon was too short.
pub fn sweep_status(rep: &SweepReport) -> Status {
    if !rep.monotone_in_gamma || !rep.supercritical_small_persist {
        Status::Failed
    } else if rep.flagged || !rep.subcritical_all_blowup {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

fn decay(cfg: &RunConfig) -> anyhow::Result<Run> {
    let mut spec = experiment_spec(cfg, ExperimentKind::GlobalDecay, gamma_of(cfg)?);
    spec.amplitudes = vec![cfg.data.amplitude];
    let rep = run_global_decay(&spec, cfg.experiment.p, cfg.experiment.p_prime)?;
    let status = match rep.verdict {
        RunVerdict::DecayConfirmed { .. } => Status::Pass,
        RunVerdict::Inconclusive { .. } => Status::Inconclusive,
        _ => Status::Failed,
    };
    let mut out = Outputs::default();
    out.add("decay_report.json", rep.to_json() + "\n");
    out.add("decay_traces.csv", rep.traces_csv());
    Ok(Run { status, outputs: out })
}

/// Runs `command` on a validated configuration without writing anything.
pub fn dispatch(command: Command, cfg: &RunConfig) -> anyhow::Result<Run> {
    match command {
        Command::Kernels => kernels(cfg),
        Command::VerifyEstimates => verify_estimates(cfg),
        Command::Solve => solve(cfg),
        Command::FujitaSweep => fujita_sweep(cfg),
        Command::Decay => decay(cfg),
    }
}

/// JSON error report printed to stderr on exit code 1.
pub fn error_report(command: Option<Command>, err: &anyhow::Error) -> String {
    let schema = err.downcast_ref::<ConfigErrors>().map(|e| &e.0);
    let kind = if schema.is_some() { "config" } else { "runtime" };
    let report = json!({
        "status": "error",
        "exit_code": 1,
        "command": command.map(|c| c.name()),
        "kind": kind,
        "message": format!("{err:#}"),
        "errors": schema,
    });
    serde_json::to_string_pretty(&report).expect("error report serialization")
}

fn run_parsed(cli: &Cli) -> anyhow::Result<Status> {
    let path = cli.config.as_ref().ok_or_else(|| anyhow!("--config <path> is required"))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(anyhow!("--jobs must be at least 1"));
        }
        cfg.run.jobs = j;
    }
    if let Some(ts) = &cli.snapshot_times {
        if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || ts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(anyhow!("--snapshot-times must be increasing nonnegative numbers"));
        }
        cfg.run.snapshot_times = ts.clone();
    }
    let dir = match (&cli.out, &cfg.run.output) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => return Err(anyhow!("no output directory: pass --out or set run.output")),
    };
    let run = dispatch(cli.command, &cfg)?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    run.outputs.commit(&dir, cli.command, &cfg, run.status)?;
    Ok(run.status)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(&cli) {
        Ok(status) => {
            eprintln!("fdlab {}: {:?}", cli.command.name(), status);
            status.code()
        }
        Err(e) => {
            eprintln!("{}", error_report(Some(cli.command), &e));
            Status::Error.code()
        }
    }
}
