//! The estimate verification matrix run by `verify-estimates`.
//!
//! Each group builds one kernel table and runs its checks against it. Nominal
//! checks are expected to pass; negative controls (perturbed exponents, the
//! other kernel's shape) are expected to fail.

use crate::config::Matrix;
use fdlab_core::estimates::{
    estimate_table, gaussian_lower_bound, summary_csv, verify_increments, verify_shift_bound, verify_two_sided,
    verify_two_sided_with, EstimateOptions, EstimateReport, IncrementMode, ShapeSpec, Verdict, Which,
};
use fdlab_core::subkernels::geometric_ladder;
use fdlab_core::{Grid, KernelRoute, KernelTable, Result, SpectralMeasure, StableSymbol};
use rayon::prelude::*;
use serde::Serialize;

/// Factor applied to every exponent in the perturbed control.
pub const PERTURBATION: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseOutcome {
    pub group: String,
    pub check: String,
    pub expect: Expect,
    pub report: EstimateReport,
    /// The verdict matches the expectation.
    pub met: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub matrix: Matrix,
    pub cases: Vec<CaseOutcome>,
    pub met: usize,
    /// Nominal checks that came back inconclusive.
    pub inconclusive: usize,
    /// Checks whose verdict contradicts the expectation.
    pub failed: usize,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serialization")
    }

    /// Per-check table: the core summary columns plus group and expectation.
    pub fn summary_csv(&self) -> String {
        let reports: Vec<EstimateReport> = self.cases.iter().map(|c| c.report.clone()).collect();
        let base = summary_csv(&reports);
        let mut lines = base.lines();
        let mut out = format!("group,check,expect,met,{}\n", lines.next().unwrap_or_default());
        for (c, line) in self.cases.iter().zip(lines) {
            let expect = match c.expect {
                Expect::Pass => "pass",
                Expect::Fail => "fail",
            };
            out.push_str(&format!("\"{}\",\"{}\",{expect},{},{line}\n", c.group, c.check, c.met));
        }
        out
    }
}

/// One kernel table and the checks run on it.
#[derive(Debug, Clone)]
enum Group {
    /// Two-sided checks of both kernels with controls on the estimate layout.
    TwoSided { dim: usize, alpha: f64, beta: f64, n: usize, count: usize, which: Vec<Which> },
    /// Gaussian lower bounds with `alpha = beta / 2`.
    Gaussian { beta: f64 },
    /// Increment bounds on a ladder with adjacent ratio at most 1.19.
    Increments { alpha: f64, beta: f64, which: Which, mode: IncrementMode },
    /// `L1` shift bound of `Y` at several shifts.
    Shift { alpha: f64, beta: f64, shifts: Vec<usize> },
}

fn sym(dim: usize, beta: f64) -> Result<StableSymbol> {
    let m = if dim == 1 { SpectralMeasure::symmetric_atoms(1.0)? } else { SpectralMeasure::isotropic_2d() };
    StableSymbol::new(beta, m)
}

fn other(w: Which) -> Which {
    match w {
        Which::Z => Which::Y,
        Which::Y => Which::Z,
    }
}

fn groups(matrix: Matrix) -> Vec<Group> {
    let both = vec![Which::Z, Which::Y];
    match matrix {
        Matrix::Default => {
            // beta = 1.5, 1.0, 0.6 give the Z rows d < beta, d = beta, d > beta;
            // 1.0 (and 1.5), 0.5, 0.4 give the Y rows d < 2 beta, d = 2 beta, d > 2 beta.
            let mut g: Vec<Group> = [1.5, 1.0, 0.6, 0.5, 0.4]
                .iter()
                .map(|&beta| Group::TwoSided { dim: 1, alpha: 0.5, beta, n: 1 << 18, count: 24, which: both.clone() })
                .collect();
            g.push(Group::TwoSided { dim: 2, alpha: 0.4, beta: 1.0, n: 2048, count: 20, which: both.clone() });
            g.push(Group::Gaussian { beta: 0.8 });
            g.push(Group::Gaussian { beta: 1.0 });
            g.push(Group::Increments { alpha: 0.6, beta: 1.5, which: Which::Z, mode: IncrementMode::Time });
            g.push(Group::Increments { alpha: 0.6, beta: 1.5, which: Which::Y, mode: IncrementMode::Space });
            g.push(Group::Increments { alpha: 0.5, beta: 0.6, which: Which::Y, mode: IncrementMode::Space });
            g.push(Group::Shift { alpha: 0.6, beta: 1.5, shifts: vec![1, 8] });
            g
        }
        Matrix::Quick => vec![
            Group::TwoSided { dim: 1, alpha: 0.6, beta: 1.5, n: 1 << 16, count: 24, which: vec![Which::Z] },
            Group::Gaussian { beta: 1.0 },
            Group::Shift { alpha: 0.6, beta: 1.5, shifts: vec![1, 8] },
        ],
    }
}

fn fine_ladder_table(alpha: f64, beta: f64) -> Result<KernelTable> {
    let grid = Grid::new(1, 4096, 2048.0)?;
    let q = beta / alpha;
    let count = (64f64.powf(q).ln() / 1.19f64.ln()).ceil() as usize + 1;
    let times = geometric_ladder(4.0001f64.powf(q), 255.9f64.powf(q), count);
    KernelTable::build(&sym(1, beta)?, alpha, &grid, &times, KernelRoute::Fourier)
}

fn outcome(group: &str, check: String, expect: Expect, report: EstimateReport) -> CaseOutcome {
    let met = match expect {
        Expect::Pass => report.verdict == Verdict::Pass,
        Expect::Fail => report.verdict == Verdict::Fail,
    };
    CaseOutcome { group: group.to_string(), check, expect, report, met }
}

fn run_group(g: &Group) -> Result<Vec<CaseOutcome>> {
    let mut out = Vec::new();
    match g {
        Group::TwoSided { dim, alpha, beta, n, count, which } => {
            let (a, b, d) = (*alpha, *beta, *dim);
            let name = format!("two-sided d={d} alpha={a} beta={b} n={n}");
            let table = estimate_table(&sym(d, b)?, a, *n, *count)?;
            let opts = EstimateOptions::default();
            for &w in which {
                out.push(outcome(&name, format!("{} nominal", w.name()), Expect::Pass, verify_two_sided(&table, w)?));
                let perturbed = ShapeSpec::two_sided(w, a, b, d)?.perturbed(PERTURBATION);
                let r = verify_two_sided_with(&table, w, &perturbed, &opts)?;
                out.push(outcome(&name, format!("{} perturbed control", w.name()), Expect::Fail, r));
                let swapped = ShapeSpec::two_sided(other(w), a, b, d)?;
                let r = verify_two_sided_with(&table, w, &swapped, &opts)?;
                out.push(outcome(&name, format!("{} swapped control", w.name()), Expect::Fail, r));
            }
        }
        Group::Gaussian { beta } => {
            let name = format!("Gaussian lower bound beta={beta}");
            let grid = Grid::new(1, 1024, 64.0)?;
            let table =
                KernelTable::build(&sym(1, *beta)?, beta / 2.0, &grid, &[0.5, 1.0, 2.0, 4.0], KernelRoute::Fourier)?;
            for w in [Which::Z, Which::Y] {
                out.push(outcome(&name, w.name().to_string(), Expect::Pass, gaussian_lower_bound(&table, w)?));
            }
        }
        Group::Increments { alpha, beta, which, mode } => {
            let name = format!("increments alpha={alpha} beta={beta}");
            let table = fine_ladder_table(*alpha, *beta)?;
            let r = verify_increments(&table, *which, *mode)?;
            out.push(outcome(&name, format!("{} {mode:?}", which.name()), Expect::Pass, r));
        }
        Group::Shift { alpha, beta, shifts } => {
            let name = format!("Y shift bound alpha={alpha} beta={beta}");
            let grid = Grid::new(1, 256, 16.0)?;
            let table = KernelTable::build(&sym(1, *beta)?, *alpha, &grid, &[0.5, 1.0, 2.0], KernelRoute::Fourier)?;
            let o = grid.origin_index();
            for &s in shifts {
                out.push(outcome(&name, format!("shift {s}h"), Expect::Pass, verify_shift_bound(&table, o, o + s)?));
            }
        }
    }
    Ok(out)
}

/// Runs every group of the matrix on up to `jobs` threads. Results keep the
/// matrix order, so the report does not depend on `jobs`.
pub fn run_matrix(matrix: Matrix, jobs: usize) -> Result<SuiteReport> {
    let gs = groups(matrix);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| fdlab_core::Error::Io(e.to_string()))?;
    let results: Vec<Result<Vec<CaseOutcome>>> = pool.install(|| gs.par_iter().map(run_group).collect());
    let mut cases = Vec::new();
    for r in results {
        cases.extend(r?);
    }
    let met = cases.iter().filter(|c| c.met).count();
    let inconclusive = cases
        .iter()
        .filter(|c| !c.met && c.expect == Expect::Pass && c.report.verdict == Verdict::Inconclusive)
        .count();
    let failed = cases.len() - met - inconclusive;
    Ok(SuiteReport { matrix, cases, met, inconclusive, failed })
}
