//! Command-line front end: configuration, the `solve`, `convergence`,
//! `fields` and `ellipses` pipelines, and their CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::collocation::{recover, RecoverySolution, SolveOptions};
use crate::convergence::{convergence_study, ConvergenceReport};
use crate::error::{Error, Result};
use crate::evaluate::{definiteness, ellipse_points, field_export, Definiteness, FieldSample};
use crate::grid::{fill_distance_estimate, make_grid, separation_distance, GridSpec};
use crate::kernel::wendland_c8;
use crate::operator::ComponentPair;
use crate::system::{SystemEntry, SystemRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// Shape parameter; the support radius is `1 / c`.
    pub c: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { c: 0.9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipseConfig {
    pub anchors: Vec<Vec<f64>>,
    /// Constant `v^T S(x) v` on each curve.
    pub level: f64,
    pub samples: usize,
}

impl Default for EllipseConfig {
    fn default() -> Self {
        Self {
            anchors: vec![
                vec![0.0, 0.0],
                vec![0.5, 0.5],
                vec![-0.5, 0.5],
                vec![0.5, -0.5],
                vec![-0.5, -0.5],
            ],
            level: 0.01,
            samples: 64,
        }
    }
}

/// Run configuration, read from TOML. Every field is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Name of a registered system.
    pub system: String,
    pub output_dir: PathBuf,
    pub regularize: bool,
    /// Probe spacing for the fill distance estimate.
    pub probe_spacing: f64,
    /// Grid spacings for `convergence`, strictly decreasing.
    pub alphas: Vec<f64>,
    /// Right-hand side matrix `C`; defaults to the system's own.
    pub rhs: Option<Vec<Vec<f64>>>,
    pub kernel: KernelConfig,
    /// Collocation grid for `solve`, `fields` and `ellipses`; its bounds are
    /// reused by `convergence`.
    pub grid: GridSpec,
    /// Error check grid for `convergence`, evaluation grid for `fields`.
    pub check_grid: GridSpec,
    pub ellipses: EllipseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let square = vec![[-1.0, 1.0], [-1.0, 1.0]];
        Self {
            system: "linear-example".into(),
            output_dir: PathBuf::from("output"),
            regularize: false,
            probe_spacing: 1.0 / 64.0,
            alphas: (1..=5).map(|k| 0.5f64.powi(k)).collect(),
            rhs: None,
            kernel: KernelConfig::default(),
            grid: GridSpec::nodes(square.clone(), 0.125),
            check_grid: GridSpec::cell_centres(square, 1.0 / 64.0),
            ellipses: EllipseConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn rhs_matrix(&self, entry: &SystemEntry) -> Result<DMatrix<f64>> {
        let n = entry.system.dim();
        let Some(rows) = &self.rhs else {
            return Ok(entry.rhs.clone());
        };
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("rhs must be a {n}x{n} matrix")));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

#[derive(Debug, Parser)]
#[command(name = "cmetric", version, about = "Contraction metrics by kernel collocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the collocation system and write coefficients and metadata.
    Solve(CommonArgs),
    /// Run the grid refinement study and write the error table.
    Convergence(CommonArgs),
    /// Sample S and F(S) on the check grid and count definiteness failures.
    Fields(CommonArgs),
    /// Sample level curves of S around anchor points.
    Ellipses(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Retry a failed factorization with a small diagonal shift.
    #[arg(long)]
    pub regularize: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (Command::Solve(common)
    | Command::Convergence(common)
    | Command::Fields(common)
    | Command::Ellipses(common)) = &cli.command;
    if let Some(t) = common.threads {
        // Fails harmlessly if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut config = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}\n");
            eprintln!("Usage: cmetric <solve|convergence|fields|ellipses> <CONFIG> [--output-dir DIR] [--regularize] [--threads N]");
            return EXIT_CONFIG;
        }
    };
    if let Some(dir) = &common.output_dir {
        config.output_dir = dir.clone();
    }
    config.regularize |= common.regularize;
    let registry = SystemRegistry::with_builtins();
    let outcome = match &cli.command {
        Command::Solve(_) => cmd_solve(&config, &registry).map(|_| EXIT_OK),
        Command::Convergence(_) => cmd_convergence(&config, &registry).map(|_| EXIT_OK),
        Command::Fields(_) => cmd_fields(&config, &registry).map(|_| EXIT_OK),
        Command::Ellipses(_) => cmd_ellipses(&config, &registry).map(|s| {
            if s.flagged == s.anchors && s.anchors > 0 {
                EXIT_NUMERICAL
            } else {
                EXIT_OK
            }
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_names(n: usize) -> Vec<String> {
    match n {
        2 => vec!["x".into(), "y".into()],
        _ => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

fn prepare_output(config: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&config.output_dir)?;
    Ok(&config.output_dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn options(config: &RunConfig) -> SolveOptions {
    SolveOptions {
        regularize: config.regularize,
    }
}

fn solve_configured(config: &RunConfig, entry: &SystemEntry) -> Result<(Vec<Vec<f64>>, RecoverySolution)> {
    if config.grid.dim() != entry.system.dim() {
        return Err(Error::Config(format!(
            "grid has dimension {}, system `{}` has {}",
            config.grid.dim(),
            config.system,
            entry.system.dim()
        )));
    }
    let kernel = wendland_c8(config.kernel.c)?;
    let points = make_grid(&config.grid)?;
    let rhs = config.rhs_matrix(entry)?;
    let sol = recover(&entry.system, &kernel, &points, &rhs, options(config))?;
    Ok((points, sol))
}

/// Scalar metadata written by `solve` to `solve.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub system: String,
    pub kernel_c: f64,
    pub sigma: f64,
    pub dimension: usize,
    pub points: usize,
    pub unknowns: usize,
    pub grid_spacing: f64,
    pub relative_residual: f64,
    pub failed_pivot: Option<usize>,
    pub regularization: Option<f64>,
    pub fill_distance: f64,
    pub separation_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Timing {
    solve_seconds: f64,
    total_seconds: f64,
}

/// Writes `solve.json`, `beta.csv`, and `timing.json` (kept apart so the
/// other two are reproducible byte for byte).
pub fn cmd_solve(config: &RunConfig, registry: &SystemRegistry) -> Result<SolveSummary> {
    let start = Instant::now();
    let entry = registry.get(&config.system)?;
    let out = prepare_output(config)?;
    let (points, sol) = solve_configured(config, &entry)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let n = entry.system.dim();
    let summary = SolveSummary {
        system: config.system.clone(),
        kernel_c: config.kernel.c,
        sigma: sol.kernel().sigma(),
        dimension: n,
        points: points.len(),
        unknowns: sol.diagnostics().unknowns,
        grid_spacing: config.grid.spacing,
        relative_residual: sol.diagnostics().relative_residual,
        failed_pivot: sol.diagnostics().failed_pivot,
        regularization: sol.diagnostics().regularization,
        fill_distance: fill_distance_estimate(&points, &config.grid.bounds, config.probe_spacing)?,
        separation_distance: separation_distance(&points).ok(),
    };
    write_json(&out.join("solve.json"), &summary)?;

    let mut w = csv::Writer::from_path(out.join("beta.csv"))?;
    let pairs = ComponentPair::all(n);
    let mut header = vec!["k".to_string()];
    header.extend(coord_names(n));
    header.extend(pairs.iter().map(|p| format!("beta_{}{}", p.i + 1, p.j + 1)));
    w.write_record(&header)?;
    for (k, (x, b)) in points.iter().zip(sol.beta()).enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(x.iter().copied().map(fmt_f64));
        rec.extend(pairs.iter().map(|p| fmt_f64(b[(p.i, p.j)])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_json(
        &out.join("timing.json"),
        &Timing {
            solve_seconds,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    log::info!(
        "solved {} points / {} unknowns in {solve_seconds:.2}s",
        summary.points,
        summary.unknowns
    );
    Ok(summary)
}

/// Writes `convergence.csv` (`alpha,e_s,ratio_s,e,ratio` plus a reference
/// row) and `convergence.json`.
pub fn cmd_convergence(config: &RunConfig, registry: &SystemRegistry) -> Result<ConvergenceReport> {
    let entry = registry.get(&config.system)?;
    let exact = entry
        .exact
        .clone()
        .ok_or_else(|| Error::NoExactMetric(config.system.clone()))?;
    let out = prepare_output(config)?;
    let kernel = wendland_c8(config.kernel.c)?;
    let rhs = config.rhs_matrix(&entry)?;
    let report = convergence_study(
        &entry.system,
        &exact,
        &rhs,
        &kernel,
        &config.alphas,
        &config.grid.bounds,
        &config.check_grid,
        options(config),
    )?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_path(out.join("convergence.csv"))?;
    w.write_record(["alpha", "e_s", "ratio_s", "e", "ratio"])?;
    for row in &report.rows {
        w.write_record([
            fmt_f64(row.alpha),
            fmt_f64(row.e_s),
            opt(row.ratio_s),
            fmt_f64(row.e),
            opt(row.ratio),
        ])?;
    }
    let r = fmt_f64(report.reference_ratio);
    w.write_record(["reference", "", &r, "", &r])?;
    w.flush()?;
    write_json(&out.join("convergence.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSummary {
    pub points: usize,
    /// Samples where `S` is not positive definite.
    pub s_not_positive_definite: usize,
    /// Samples where `F(S)` is not negative definite.
    pub fs_not_negative_definite: usize,
    /// Samples failing either test.
    pub failures: usize,
}

impl FieldSummary {
    pub fn from_samples(samples: &[FieldSample]) -> Self {
        let mut summary = Self {
            points: samples.len(),
            s_not_positive_definite: 0,
            fs_not_negative_definite: 0,
            failures: 0,
        };
        for s in samples {
            let s_bad = !matches!(definiteness(&s.s, 0.0), Ok(Definiteness::PositiveDefinite));
            let fs_bad = !matches!(definiteness(&s.fs, 0.0), Ok(Definiteness::NegativeDefinite));
            summary.s_not_positive_definite += s_bad as usize;
            summary.fs_not_negative_definite += fs_bad as usize;
            summary.failures += (s_bad || fs_bad) as usize;
        }
        summary
    }
}

/// Writes `fields.csv` on the check grid and `fields_summary.json`.
pub fn cmd_fields(config: &RunConfig, registry: &SystemRegistry) -> Result<FieldSummary> {
    let entry = registry.get(&config.system)?;
    let out = prepare_output(config)?;
    let (_, sol) = solve_configured(config, &entry)?;
    let grid = make_grid(&config.check_grid)?;
    let samples = field_export(&sol, &grid);
    let mut w = csv::Writer::from_path(out.join("fields.csv"))?;
    let mut header = coord_names(entry.system.dim());
    header.extend(
        ["trace_S", "det_S", "trace_FS", "neg_det_FS", "min_eig_S", "max_eig_FS"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for s in &samples {
        let mut rec: Vec<String> = s.x.iter().copied().map(fmt_f64).collect();
        rec.extend(
            [s.trace_s, s.det_s, s.trace_fs, s.neg_det_fs, s.min_eig_s, s.max_eig_fs]
                .into_iter()
                .map(fmt_f64),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    let summary = FieldSummary::from_samples(&samples);
    write_json(&out.join("fields_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipseSummary {
    pub anchors: usize,
    pub flagged: usize,
}

/// Writes `ellipses.csv` with columns `anchor_id,x,y,status`. Anchors where
/// `S` is not positive definite get a single row at the anchor with status
/// `not_positive_definite`.
pub fn cmd_ellipses(config: &RunConfig, registry: &SystemRegistry) -> Result<EllipseSummary> {
    let entry = registry.get(&config.system)?;
    if entry.system.dim() != 2 {
        return Err(Error::Config("ellipses are only defined for planar systems".into()));
    }
    let out = prepare_output(config)?;
    let (_, sol) = solve_configured(config, &entry)?;
    let ec = &config.ellipses;
    let mut w = csv::Writer::from_path(out.join("ellipses.csv"))?;
    w.write_record(["anchor_id", "x", "y", "status"])?;
    let mut flagged = 0;
    for (id, anchor) in ec.anchors.iter().enumerate() {
        if anchor.len() != 2 {
            return Err(Error::Config(format!("anchor {id} must have two coordinates")));
        }
        match ellipse_points(anchor, &sol.eval_s(anchor), ec.level, ec.samples) {
            Ok(pts) => {
                for p in pts {
                    w.write_record([id.to_string(), fmt_f64(p[0]), fmt_f64(p[1]), "ok".into()])?;
                }
            }
            Err(Error::NotPositiveDefiniteInput) => {
                flagged += 1;
                log::warn!("S is not positive definite at anchor {id} {anchor:?}");
                w.write_record([
                    id.to_string(),
                    fmt_f64(anchor[0]),
                    fmt_f64(anchor[1]),
                    "not_positive_definite".into(),
                ])?;
            }
            Err(e) => return Err(e),
        }
    }
    w.flush()?;
    Ok(EllipseSummary {
        anchors: ec.anchors.len(),
        flagged,
    })
}
