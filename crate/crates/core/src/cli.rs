//! Command-line front end.
//!
//! Flags override values from a JSON `--config` file; both fall back to the
//! defaults shown in `--help`. Every CSV starts with a `#` line holding the
//! resolved configuration, then a header row.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::canonical::SolverOptions;
use crate::empirics::{
    expected_esd_capped, ks_distance, levy_distance, normalized_comparison, normalized_grid,
    GridCdf,
};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, DEFAULT_DENSE_CAP};
use crate::percolation::PercolationModel;
use crate::stieltjes::{density_on_grid, Grid};

const DEFAULT_POINTS: usize = 2001;
const DEFAULT_EPS: f64 = 1e-3;
const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "lattice-spectra",
    version,
    about = "Spectra of bond-percolated lattice graphs"
)]
pub struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "LATTICE_SPECTRA_THREADS")]
    threads: Option<usize>,

    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues and multiplicities of the full lattice adjacency.
    Spectrum(ModelArgs),
    /// Deterministic-equivalent density and CDF on a grid.
    Solve(SolveArgs),
    /// Monte-Carlo expected ESD of the scaled adjacency on a grid.
    Sample(SampleArgs),
    /// KS and Lévy distances between two CDF files on the same grid.
    Compare(CompareArgs),
    /// Lévy distance between the row-normalised and scaled adjacency spectra.
    Normalized(NormalizedArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Lattice side lengths, e.g. `20,40`.
    #[arg(long)]
    dims: Option<String>,

    /// Output file [default: stdout].
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Link inclusion probability.
    #[arg(long)]
    p: Option<f64>,

    /// Abscissae as `min:max:count` [default: window around the spectrum].
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,

    /// Imaginary offset for density inversion [default: 1e-3].
    #[arg(long)]
    eps: Option<f64>,

    /// Point count for the default window [default: 2001].
    #[arg(long)]
    points: Option<usize>,

    /// JSON sidecar path [default: `<out>.json` when writing to a file].
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,

    /// Residual tolerance [default: 1e-12, scaled by 1/eps].
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap per grid point [default: 10000].
    #[arg(long)]
    max_iter: Option<usize>,

    /// Initial damping in (0, 1] [default: 1].
    #[arg(long)]
    damping: Option<f64>,

    /// Plain damped iteration without Newton steps.
    #[arg(long)]
    no_newton: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,

    /// Monte-Carlo trials [default: 100].
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,

    /// Largest node count for dense sampling [default: 20000].
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,

    /// Comma-separated subset of `ks,levy`.
    #[arg(long, default_value = "ks,levy")]
    metrics: String,

    /// Output file [default: stdout].
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NormalizedArgs {
    /// Lattice side lengths; repeat or separate with `;` for several lattices.
    #[arg(long)]
    dims: Vec<String>,

    #[arg(long)]
    p: Option<f64>,

    /// Trials per lattice [default: 100].
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,

    /// Grid points per lattice [default: 2001].
    #[arg(long)]
    points: Option<usize>,

    /// Output file [default: stdout].
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Values a `--config` file may supply.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Option<LatticeSpec>,
    pub dims_list: Option<Vec<LatticeSpec>>,
    pub p: Option<f64>,
    pub grid: Option<GridRange>,
    pub epsilon: Option<f64>,
    pub points: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub cap: Option<usize>,
    pub out: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub solver: Option<SolverOptions>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub fn parse_dims(s: &str) -> Result<LatticeSpec> {
    let dims = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension `{t}` in `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    LatticeSpec::new(dims)
}

pub fn parse_grid_range(s: &str) -> Result<GridRange> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("grid must be `min:max:count`, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(GridRange {
        x_min: parts[0].trim().parse().map_err(|_| bad())?,
        x_max: parts[1].trim().parse().map_err(|_| bad())?,
        n_points: parts[2].trim().parse().map_err(|_| bad())?,
    })
}

/// 17 significant digits: exact round trip for `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn provenance<T: Serialize>(command: &str, run: &T) -> String {
    let cfg = serde_json::to_string(run).expect("run records serialise");
    format!(
        "# lattice-spectra {} {command} {cfg}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn sidecar_path(explicit: Option<PathBuf>, out: Option<&Path>) -> Option<PathBuf> {
    explicit.or_else(|| {
        out.map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".json");
            PathBuf::from(s)
        })
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialise");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

struct Resolved {
    cfg: ExperimentConfig,
}

impl Resolved {
    fn dims(&self, flag: Option<&str>) -> Result<LatticeSpec> {
        match flag {
            Some(s) => parse_dims(s),
            None => self
                .cfg
                .dims
                .clone()
                .ok_or_else(|| Error::Domain("--dims is required".into())),
        }
    }

    fn p(&self, flag: Option<f64>) -> Result<f64> {
        flag.or(self.cfg.p)
            .ok_or_else(|| Error::Domain("--p is required".into()))
    }

    fn out(&self, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.cfg.out.clone())
    }

    fn grid(&self, args: &GridArgs, spec: &LatticeSpec, p: f64) -> Result<Grid> {
        let eps = args.eps.or(self.cfg.epsilon).unwrap_or(DEFAULT_EPS);
        let range = match &args.grid {
            Some(s) => Some(parse_grid_range(s)?),
            None => self.cfg.grid,
        };
        match range {
            Some(r) => Grid::new(r.x_min, r.x_max, r.n_points, eps),
            None => {
                let n = args.points.or(self.cfg.points).unwrap_or(DEFAULT_POINTS);
                Grid::default_window(spec, p, n, eps)
            }
        }
    }
}

#[derive(Serialize)]
struct SpectrumRun<'a> {
    dims: &'a LatticeSpec,
}

#[derive(Serialize)]
struct SolveRun<'a> {
    dims: &'a LatticeSpec,
    p: f64,
    grid: Grid,
    solver: SolverOptions,
}

#[derive(Serialize)]
struct SampleRun<'a> {
    dims: &'a LatticeSpec,
    p: f64,
    grid: Grid,
    trials: usize,
    seed: u64,
}

#[derive(Serialize)]
struct NormalizedRun<'a> {
    dims_list: &'a [LatticeSpec],
    p: f64,
    trials: usize,
    seed: u64,
    points: usize,
}

fn cmd_spectrum(r: &Resolved, args: ModelArgs) -> Result<()> {
    let spec = r.dims(args.dims.as_deref())?;
    let mut text = provenance("spectrum", &SpectrumRun { dims: &spec });
    text.push_str("j_index,eigenvalue,multiplicity\n");
    for atom in spec.deterministic_spectrum() {
        writeln!(
            text,
            "{},{},{}",
            atom.index_label(),
            atom.eigenvalue,
            atom.multiplicity
        )
        .unwrap();
    }
    emit(r.out(args.out).as_deref(), &text)
}

fn cmd_solve(r: &Resolved, args: SolveArgs) -> Result<()> {
    let spec = r.dims(args.model.dims.as_deref())?;
    let p = r.p(args.grid.p)?;
    let grid = r.grid(&args.grid, &spec, p)?;
    let mut solver = r.cfg.solver.unwrap_or_default();
    if let Some(t) = args.tol {
        solver.tolerance = t;
    }
    if let Some(m) = args.max_iter {
        solver.max_iterations = m;
    }
    if let Some(d) = args.damping {
        solver.damping = d;
    }
    if args.no_newton {
        solver.newton = false;
    }
    solver.validate()?;

    // Everything is computed before any file is touched, so a failure leaves
    // no partial output behind.
    let curve = density_on_grid(&spec, p, &grid, &solver)?;

    let mut text = provenance(
        "solve",
        &SolveRun {
            dims: &spec,
            p,
            grid,
            solver,
        },
    );
    text.push_str("x,f,F\n");
    for k in 0..curve.x.len() {
        writeln!(
            text,
            "{},{},{}",
            num(curve.x[k]),
            num(curve.f[k]),
            num(curve.cdf[k])
        )
        .unwrap();
    }
    let out = r.out(args.model.out);
    let d = curve.diagnostics;
    let side = sidecar_path(
        args.grid.sidecar.or_else(|| r.cfg.sidecar.clone()),
        out.as_deref(),
    );
    emit(out.as_deref(), &text)?;
    if let Some(path) = side {
        write_json(
            &path,
            &json!({
                "command": "solve",
                "dims": spec.dims(),
                "p": p,
                "epsilon": grid.epsilon,
                "points": d.points,
                "integration_points": d.integration_points,
                "max_iterations": d.max_iterations,
                "total_iterations": d.total_iterations,
                "max_residual": d.max_residual,
                "class_l": d.class_l,
                "clamped": d.clamped,
            }),
        )?;
    }
    Ok(())
}

fn cmd_sample(r: &Resolved, args: SampleArgs) -> Result<()> {
    let spec = r.dims(args.model.dims.as_deref())?;
    let p = r.p(args.grid.p)?;
    let grid = r.grid(&args.grid, &spec, p)?;
    let trials = args.trials.or(r.cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(r.cfg.seed).unwrap_or(0);
    let cap = args.cap.or(r.cfg.cap).unwrap_or(DEFAULT_DENSE_CAP);
    let model = PercolationModel::new(spec.clone(), p)?;
    let e = expected_esd_capped(&model, trials, seed, &grid, cap)?;

    let mut text = provenance(
        "sample",
        &SampleRun {
            dims: &spec,
            p,
            grid,
            trials,
            seed,
        },
    );
    text.push_str("x,F_expected\n");
    for (x, f) in e.cdf.x.iter().zip(&e.cdf.cdf) {
        writeln!(text, "{},{}", num(*x), num(*f)).unwrap();
    }
    let out = r.out(args.model.out);
    let side = sidecar_path(
        args.grid.sidecar.or_else(|| r.cfg.sidecar.clone()),
        out.as_deref(),
    );
    emit(out.as_deref(), &text)?;
    if let Some(path) = side {
        write_json(
            &path,
            &json!({
                "command": "sample",
                "dims": spec.dims(),
                "p": p,
                "nodes": spec.node_count(),
                "trials": trials,
                "seed": seed,
                "zero_degree_mean": e.mean_zero_degree(),
                "zero_degree_max": e.max_zero_degree(),
                "zero_degree_total": e.zero_degree_counts.iter().sum::<usize>(),
            }),
        )?;
    }
    Ok(())
}

/// A CDF column read back from a `solve` or `sample` CSV: the first column is
/// `x`, the last is the distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl GridCdf for TabulatedCdf {
    fn abscissae(&self) -> &[f64] {
        &self.x
    }

    fn values(&self) -> &[f64] {
        &self.cdf
    }
}

pub fn read_cdf_csv(path: &Path) -> Result<TabulatedCdf> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let bad = |n: usize, what: &str| Error::Parse(format!("{}:{}: {what}", path.display(), n + 1));
    let (hn, header) = lines.next().ok_or_else(|| bad(0, "no header row"))?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(bad(hn, "need at least two columns"));
    }
    let (mut x, mut cdf) = (Vec::new(), Vec::new());
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(bad(n, "wrong number of fields"));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(n, "bad number"));
        x.push(parse(fields[0])?);
        cdf.push(parse(fields[cols - 1])?);
    }
    if x.is_empty() {
        return Err(bad(hn, "no data rows"));
    }
    Ok(TabulatedCdf { x, cdf })
}

fn cmd_compare(r: &Resolved, args: CompareArgs) -> Result<()> {
    let a = read_cdf_csv(&args.a)?;
    let b = read_cdf_csv(&args.b)?;
    let mut report = serde_json::Map::new();
    for m in args.metrics.split(',').map(str::trim) {
        match m {
            "ks" => {
                report.insert("ks".into(), json!(ks_distance(&a, &b)?));
            }
            "levy" => {
                let d = levy_distance(&a, &b)?;
                report.insert("levy".into(), json!(d.value));
                report.insert("levy_resolution".into(), json!(d.resolution));
            }
            other => return Err(Error::Domain(format!("unknown metric `{other}`"))),
        }
    }
    let mut text = serde_json::to_string_pretty(&report).expect("json values serialise");
    text.push('\n');
    emit(r.out(args.out).as_deref(), &text)
}

fn cmd_normalized(r: &Resolved, args: NormalizedArgs) -> Result<()> {
    let dims_list: Vec<LatticeSpec> = if args.dims.is_empty() {
        match (&r.cfg.dims_list, &r.cfg.dims) {
            (Some(l), _) => l.clone(),
            (None, Some(d)) => vec![d.clone()],
            (None, None) => return Err(Error::Domain("--dims is required".into())),
        }
    } else {
        args.dims
            .iter()
            .flat_map(|s| s.split(';'))
            .filter(|s| !s.trim().is_empty())
            .map(parse_dims)
            .collect::<Result<_>>()?
    };
    let p = r.p(args.p)?;
    let trials = args.trials.or(r.cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(r.cfg.seed).unwrap_or(0);
    let points = args.points.or(r.cfg.points).unwrap_or(DEFAULT_POINTS);

    let mut text = provenance(
        "normalized",
        &NormalizedRun {
            dims_list: &dims_list,
            p,
            trials,
            seed,
            points,
        },
    );
    text.push_str("dims,mean_levy,std_levy,trials,levy_resolution,mean_zero_degree\n");
    for spec in &dims_list {
        let model = PercolationModel::new(spec.clone(), p)?;
        let grid = normalized_grid(&model, points)?;
        let c = normalized_comparison(&model, trials, seed, &grid)?;
        let zero = c.zero_degree_counts.iter().sum::<usize>() as f64 / trials as f64;
        writeln!(
            text,
            "{spec},{},{},{trials},{},{}",
            num(c.levy_mean),
            num(c.levy_std),
            num(c.resolution),
            num(zero)
        )
        .unwrap();
    }
    emit(r.out(args.out).as_deref(), &text)
}

fn execute(cli: Cli, cfg: ExperimentConfig) -> Result<()> {
    let r = Resolved { cfg };
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(&r, a),
        Command::Solve(a) => cmd_solve(&r, a),
        Command::Sample(a) => cmd_sample(&r, a),
        Command::Compare(a) => cmd_compare(&r, a),
        Command::Normalized(a) => cmd_normalized(&r, a),
    }
}

fn run_parsed(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match cli.threads.or(cfg.threads) {
        Some(0) => Err(Error::Domain("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            pool.install(|| execute(cli, cfg))
        }
        None => execute(cli, cfg),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_parsed(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
