//! Experiment driver: solves an example on a list of grids, evaluates majorants
//! and efficiency indices, and writes table, CSV and JSON-lines output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{assemble, FemMatrices};
use crate::error::{Error, Result};
use crate::fourier::mode_weight;
use crate::majorants::{
    cost_majorant_total, efficiency, majorant_full_norm, majorant_seminorm, majorant_seminorm_table, mode_cost_majorant, mode_majorant,
    mode_majorant_theorem, weighted_residuals,
    modal_residuals, reconstruct_mode_fluxes, ModeCostMajorant, ModeResiduals, StabilityConstants,
};
use crate::mesh::Mesh;
use crate::problems::{exact_mode_error, reference_mode_error, ExampleDefinition, ExampleId, ModeError};
use crate::solver::{mode_cost, solve_modes, ModeSolution, ProblemSpec, SolveOptions};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 12] =
    ["example", "k", "grid", "majorant_semi", "ieff_m", "j_oplus", "ieff_j", "remainder", "alpha", "beta", "iters", "seconds"];

/// Largest fine grid accepted for the reference path.
pub const MAX_REFERENCE_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// Gradient seminorm of the modal error pair.
    H1semi,
    /// Gradient seminorm plus the kω-weighted L² part.
    Weighted,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub example: u8,
    pub grids: Vec<usize>,
    pub modes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub overall: bool,
    pub denominator: Denominator,
    pub timings: bool,
    /// Highest mode of the exact solution used for overall errors and costs.
    pub tail_modes: usize,
    /// Refinement factor of the reference grid when no exact solution exists.
    pub reference_factor: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            example: 1,
            grids: vec![16],
            modes: 0,
            tol: 1e-10,
            max_iter: 1000,
            workers: 1,
            out: None,
            format: Format::Table,
            overall: false,
            denominator: Denominator::H1semi,
            timings: false,
            tail_modes: 128,
            reference_factor: 2,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ExampleId::from_number(self.example)?;
        if self.grids.is_empty() {
            return Err(Error::InvalidInput("no grids given".into()));
        }
        if let Some(n) = self.grids.iter().find(|n| **n < 2 || **n % 2 != 0) {
            return Err(Error::InvalidInput(format!("grid size {n} must be a positive multiple of 2")));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidInput(format!("tolerance {} outside (0, 1)", self.tol)));
        }
        if self.workers == 0 || self.max_iter == 0 {
            return Err(Error::InvalidInput("workers and max_iter must be positive".into()));
        }
        if self.reference_factor < 2 && self.example == 3 {
            return Err(Error::InvalidInput("reference factor must be at least 2".into()));
        }
        if self.tail_modes < self.modes {
            return Err(Error::InvalidInput("tail modes must not be below the truncation index".into()));
        }
        Ok(())
    }
}

/// One report line, either a single mode or the aggregate over modes 0..=N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub example: u8,
    pub scope: &'static str,
    /// None for the aggregate row.
    pub k: Option<usize>,
    pub grid: usize,
    /// Table majorant: √2-scaled sum of residual norms.
    pub majorant_semi: f64,
    pub ieff_m: Option<f64>,
    pub j_oplus: f64,
    pub ieff_j: Option<f64>,
    pub remainder: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iters: usize,
    pub seconds: Option<f64>,
    /// Majorant with the general stability constant 1/μ̃₁.
    pub majorant_theorem: f64,
    pub majorant_full: Option<f64>,
    pub error_h1semi: Option<f64>,
    pub error_weighted: Option<f64>,
    pub cost: f64,
    pub exact_cost: Option<f64>,
    pub residuals: [f64; 4],
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub generator: String,
    pub config: RunConfig,
    pub lambda: f64,
    pub period: f64,
    pub constants: StabilityConstants,
    /// Factor in front of the residual sum in the table majorant.
    pub table_factor: f64,
    /// Factor 1/μ̃₁ of the general bound; differs from `table_factor` unless λ = 1.
    pub theorem_factor: f64,
    pub denominator_source: &'static str,
    pub columns: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: Manifest,
    pub rows: Vec<ReportRow>,
    /// Modes that failed or did not converge, as readable messages.
    pub failures: Vec<String>,
}

impl Report {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn mode_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.k.is_some())
    }

    pub fn row(&self, grid: usize, k: Option<usize>) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.grid == grid && r.k == k)
    }
}

/// Six significant digits.
pub fn round6(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.5e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn fmt6(x: f64) -> String {
    format!("{x:.5e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Reference errors of one mode: either exact or from a finer grid.
struct Denominators {
    error: Option<ModeError>,
    exact_cost: Option<f64>,
}

struct Reference {
    mesh: Mesh,
    mats: FemMatrices,
    modes: Vec<Option<ModeSolution>>,
}

struct GridRun {
    rows: Vec<ReportRow>,
    failures: Vec<String>,
}

pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let def = ExampleDefinition::new(ExampleId::from_number(config.example)?);
    let spec = ProblemSpec::for_example(&def, config.modes)?;
    let consts = StabilityConstants::for_spec(&spec);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        generator: format!("mhfem {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        lambda: spec.lambda,
        period: spec.period,
        constants: consts,
        table_factor: 2f64.sqrt(),
        theorem_factor: 1.0 / consts.mu1_tilde,
        denominator_source: if def.profile.laplace_eigenvalue().is_some() { "exact" } else { "reference" },
        columns: CSV_HEADER.to_vec(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &config.grids {
        let g = run_grid(config, &def, &spec, &consts, n)?;
        rows.extend(g.rows);
        failures.extend(g.failures);
    }
    Ok(Report { manifest, rows, failures })
}

fn run_grid(config: &RunConfig, def: &ExampleDefinition, spec: &ProblemSpec, consts: &StabilityConstants, n: usize) -> Result<GridRun> {
    let start = Instant::now();
    let mesh = Mesh::uniform(n)?;
    let mats = assemble(&mesh, &spec.sigma, &spec.nu)?;
    let opts = SolveOptions { tol: config.tol, max_iter: config.max_iter, workers: config.workers };
    let modes: Vec<usize> = (0..=config.modes).collect();
    let results = solve_modes(spec, &mesh, &mats, &modes, &opts);
    let reference = if def.profile.laplace_eigenvalue().is_none() { Some(reference_solution(config, spec, n, &opts)?) } else { None };

    let omega = spec.omega;
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut residuals: Vec<ModeResiduals> = Vec::new();
    let mut costs: Vec<ModeCostMajorant> = Vec::new();
    let mut errors: Vec<Option<ModeError>> = Vec::new();
    let mut exact_costs: Vec<Option<f64>> = Vec::new();
    let mut cost_sum = 0.0;
    let mut max_iters = 0;
    for (k, res) in modes.iter().zip(results) {
        let sol = match res {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("example {} grid {n} mode {k}: {e}", def.id.number()));
                continue;
            }
        };
        if !sol.converged {
            failures.push(format!(
                "example {} grid {n} mode {k}: MINRES did not converge (relative residual {:.3e} after {} iterations)",
                def.id.number(),
                sol.relative_residual,
                sol.iterations
            ));
        }
        let mode_start = Instant::now();
        let (tau, rho) = reconstruct_mode_fluxes(&mesh, &mats, &sol.y, &sol.p);
        let r = modal_residuals(&mesh, spec, &mats, &sol.y, &sol.p, &tau, &rho)?;
        let cm = mode_cost_majorant(&mesh, spec, &mats, consts, &sol, &tau);
        let cost = mode_cost(spec, &mesh, &mats, &sol);
        let den = match &reference {
            None => exact_denominators(def, spec, &mesh, &sol)?,
            Some(rf) => reference_denominators(spec, &mesh, rf, &sol)?,
        };
        let table = mode_majorant(&r, consts.friedrichs);
        let theorem = mode_majorant_theorem(&r, consts);
        let reference_error = den.error.map(|e| match config.denominator {
            Denominator::H1semi => e.h1semi(),
            Denominator::Weighted => e.weighted(*k, omega),
        });
        rows.push(ReportRow {
            example: def.id.number(),
            scope: "mode",
            k: Some(*k),
            grid: n,
            majorant_semi: table,
            ieff_m: reference_error.and_then(|d| efficiency(table, d)),
            j_oplus: cm.value,
            ieff_j: den.exact_cost.and_then(|d| efficiency(cm.value, d)),
            remainder: spec.desired.remainder,
            alpha: finite(cm.young.alpha),
            beta: finite(cm.young.beta),
            iters: sol.iterations,
            seconds: Some(sol.seconds + mode_start.elapsed().as_secs_f64()),
            majorant_theorem: theorem,
            majorant_full: None,
            error_h1semi: den.error.map(|e| e.h1semi()),
            error_weighted: den.error.map(|e| e.weighted(*k, omega)),
            cost,
            exact_cost: den.exact_cost,
            residuals: r.norms(),
            converged: sol.converged,
        });
        max_iters = max_iters.max(sol.iterations);
        cost_sum += mode_weight(*k, spec.period) * cost;
        residuals.push(r);
        costs.push(cm);
        errors.push(den.error);
        exact_costs.push(den.exact_cost);
    }

    if config.overall && residuals.len() == modes.len() {
        let e_n = spec.desired.remainder;
        let table = majorant_seminorm_table(&residuals, consts.friedrichs, spec.period, e_n);
        let theorem = majorant_seminorm(&residuals, consts, spec.period, e_n);
        let full = majorant_full_norm(&residuals, consts, spec.period, e_n);
        let j_oplus = cost_majorant_total(&costs, spec.period, e_n);
        let overall_err = overall_errors(config, def, spec, &errors)?;
        let exact_cost = overall_exact_cost(config, def, spec, &exact_costs)?;
        let den = overall_err.map(|(h, w)| match config.denominator {
            Denominator::H1semi => h,
            Denominator::Weighted => w,
        });
        rows.push(ReportRow {
            example: def.id.number(),
            scope: "overall",
            k: None,
            grid: n,
            majorant_semi: table,
            ieff_m: den.and_then(|d| efficiency(table, d)),
            j_oplus,
            ieff_j: exact_cost.and_then(|d| efficiency(j_oplus, d)),
            remainder: e_n,
            alpha: None,
            beta: None,
            iters: max_iters,
            seconds: Some(start.elapsed().as_secs_f64()),
            majorant_theorem: theorem,
            majorant_full: Some(full),
            error_h1semi: overall_err.map(|e| e.0),
            error_weighted: overall_err.map(|e| e.1),
            cost: cost_sum + 0.5 * e_n,
            exact_cost,
            residuals: weighted_residuals(&residuals, spec.period, e_n),
            converged: rows.iter().all(|r| r.converged),
        });
    }
    Ok(GridRun { rows, failures })
}

fn exact_denominators(def: &ExampleDefinition, spec: &ProblemSpec, mesh: &Mesh, sol: &ModeSolution) -> Result<Denominators> {
    let yd = spec.desired.coeffs[sol.k];
    let exact = def.exact_mode(sol.k, yd)?;
    let error = exact_mode_error(mesh, def.profile, &sol.y, &sol.p, &exact)?;
    Ok(Denominators { error: Some(error), exact_cost: Some(def.exact_mode_cost(&exact, yd)) })
}

fn reference_solution(config: &RunConfig, spec: &ProblemSpec, n: usize, opts: &SolveOptions) -> Result<Reference> {
    let fine_n = n * config.reference_factor;
    if fine_n > MAX_REFERENCE_GRID {
        return Err(Error::Budget(format!(
            "reference grid {fine_n} exceeds {MAX_REFERENCE_GRID}; rerun with a smaller grid or reference factor"
        )));
    }
    let mesh = Mesh::uniform(fine_n)?;
    let mats = assemble(&mesh, &spec.sigma, &spec.nu)?;
    let modes: Vec<usize> = (0..=config.modes).collect();
    let sols = solve_modes(spec, &mesh, &mats, &modes, opts).into_iter().map(|r| r.ok().filter(|s| s.converged)).collect();
    Ok(Reference { mesh, mats, modes: sols })
}

fn reference_denominators(spec: &ProblemSpec, mesh: &Mesh, rf: &Reference, sol: &ModeSolution) -> Result<Denominators> {
    let Some(fine) = &rf.modes[sol.k] else {
        return Ok(Denominators { error: None, exact_cost: None });
    };
    let error = reference_mode_error(mesh, &rf.mesh, &rf.mats, &sol.y, &sol.p, &fine.y, &fine.p)?;
    Ok(Denominators { error: Some(error), exact_cost: Some(mode_cost(spec, &rf.mesh, &rf.mats, fine)) })
}

/// Overall (h1semi, weighted) error: discrete modes plus, when an exact solution is
/// available, the untruncated exact modes N < k ≤ K.
fn overall_errors(config: &RunConfig, def: &ExampleDefinition, spec: &ProblemSpec, errors: &[Option<ModeError>]) -> Result<Option<(f64, f64)>> {
    let (mut h, mut w) = (0.0, 0.0);
    for (k, e) in errors.iter().enumerate() {
        let Some(e) = e else { return Ok(None) };
        let wt = mode_weight(k, spec.period);
        h += wt * e.grad_sq;
        w += wt * (e.grad_sq + k as f64 * spec.omega * e.l2_sq);
    }
    if let Some(mu) = def.profile.laplace_eigenvalue() {
        let coeffs = def.desired_coefficients(config.tail_modes)?;
        let ns = def.profile.norm_sq();
        for (k, yd) in coeffs.iter().enumerate().skip(config.modes + 1) {
            let m = def.exact_mode(k, *yd)?;
            let amp = m.y.0.powi(2) + m.y.1.powi(2) + m.p.0.powi(2) + m.p.1.powi(2);
            let wt = mode_weight(k, spec.period);
            h += wt * mu * ns * amp;
            w += wt * (mu + k as f64 * spec.omega) * ns * amp;
        }
    }
    Ok(Some((h.sqrt(), w.sqrt())))
}

/// Exact optimal cost: modes up to K plus the uncontrolled tail ½E_K, or the
/// reference modal costs plus ½E_N.
fn overall_exact_cost(config: &RunConfig, def: &ExampleDefinition, spec: &ProblemSpec, exact_costs: &[Option<f64>]) -> Result<Option<f64>> {
    if def.profile.laplace_eigenvalue().is_some() {
        let coeffs = def.desired_coefficients(config.tail_modes)?;
        let mut j = 0.0;
        for (k, yd) in coeffs.iter().enumerate() {
            let m = def.exact_mode(k, *yd)?;
            j += mode_weight(k, spec.period) * def.exact_mode_cost(&m, *yd);
        }
        return Ok(Some(j + 0.5 * def.remainder(config.tail_modes)?));
    }
    let mut j = 0.0;
    for (k, c) in exact_costs.iter().enumerate() {
        let Some(c) = c else { return Ok(None) };
        j += mode_weight(k, spec.period) * c;
    }
    Ok(Some(j + 0.5 * spec.desired.remainder))
}

/// Rounds every float to six significant digits; drops timings unless requested.
pub fn normalized(row: &ReportRow, timings: bool) -> ReportRow {
    let o = |x: Option<f64>| x.map(round6);
    ReportRow {
        majorant_semi: round6(row.majorant_semi),
        ieff_m: o(row.ieff_m),
        j_oplus: round6(row.j_oplus),
        ieff_j: o(row.ieff_j),
        remainder: round6(row.remainder),
        alpha: o(row.alpha),
        beta: o(row.beta),
        seconds: if timings { o(row.seconds) } else { None },
        majorant_theorem: round6(row.majorant_theorem),
        majorant_full: o(row.majorant_full),
        error_h1semi: o(row.error_h1semi),
        error_weighted: o(row.error_weighted),
        cost: round6(row.cost),
        exact_cost: o(row.exact_cost),
        residuals: row.residuals.map(round6),
        ..row.clone()
    }
}

pub fn to_csv(rows: &[ReportRow], timings: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let r = normalized(r, timings);
        w.write_record([
            r.example.to_string(),
            r.k.map(|k| k.to_string()).unwrap_or_else(|| "overall".into()),
            r.grid.to_string(),
            fmt6(r.majorant_semi),
            fmt_opt(r.ieff_m),
            fmt6(r.j_oplus),
            fmt_opt(r.ieff_j),
            fmt6(r.remainder),
            fmt_opt(r.alpha),
            fmt_opt(r.beta),
            r.iters.to_string(),
            fmt_opt(r.seconds),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn to_jsonl(rows: &[ReportRow], timings: bool) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        let line = serde_json::to_string(&normalized(r, timings)).map_err(|e| Error::InvalidInput(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_table(rows: &[ReportRow], timings: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>8} {:>6} {:>10} {:>12} {:>8} {:>12} {:>8} {:>6}",
        "ex", "k", "grid", "seconds", "M+", "Ieff_M", "J+", "Ieff_J", "iters"
    );
    for r in rows {
        let r = normalized(r, timings);
        let opt = |x: Option<f64>, p: usize| x.map(|v| format!("{v:.p$}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>3} {:>8} {:>6} {:>10} {:>12.3e} {:>8} {:>12.3e} {:>8} {:>6}",
            r.example,
            r.k.map(|k| k.to_string()).unwrap_or_else(|| "overall".into()),
            format!("{0}x{0}", r.grid),
            opt(r.seconds, 2),
            r.majorant_semi,
            opt(r.ieff_m, 2),
            r.j_oplus,
            opt(r.ieff_j, 2),
            r.iters
        );
    }
    out
}

/// Renders the report in the requested format.
pub fn render(report: &Report, format: Format) -> Result<String> {
    let t = report.manifest.config.timings;
    match format {
        Format::Table => Ok(to_table(&report.rows, t)),
        Format::Csv => to_csv(&report.rows, t),
        Format::Jsonl => to_jsonl(&report.rows, t),
    }
}

/// Writes results.csv, results.jsonl and manifest.json into `dir`.
pub fn write_outputs(report: &Report, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let t = report.manifest.config.timings;
    fs::write(dir.join("results.csv"), to_csv(&report.rows, t)?).map_err(io)?;
    fs::write(dir.join("results.jsonl"), to_jsonl(&report.rows, t)?).map_err(io)?;
    let manifest = serde_json::to_string_pretty(&report.manifest).map_err(|e| Error::InvalidInput(e.to_string()))?;
    fs::write(dir.join("manifest.json"), manifest + "\n").map_err(io)?;
    Ok(())
}
