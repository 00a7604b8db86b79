//! `qbg` subcommands. Exit status: 0 success, 1 config / I/O / parse error,
//! 2 invalid input state, 3 a generated state violated a bound.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use qbg_core::bounds::{self, BoundVerdict, Landmarks, BOUND_TOL};
use qbg_core::extremal::{self, ExtremalSpec, SaturationReport};
use qbg_core::imaginarity::{self, ImaginarityReport};
use qbg_core::io::{self as qio, CloudWriter, IoError, MatrixFile};
use qbg_core::sampling::{self, CoordinateRecord, Measure};
use qbg_core::state::{self, Coordinates, DensityMatrix, StateError, Tolerances};
use qbg_core::transform::{self, RotationStep, DEFAULT_DIAG_TOL};
use qbg_core::verify::{self, CheckResult, VerifyConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    InvalidState(String),
    Soundness(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::InvalidState(_) => 2,
            CliError::Soundness(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::InvalidState(m) => write!(f, "invalid state: {m}"),
            CliError::Soundness(m) => write!(f, "soundness violation: {m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        CliError::InvalidState(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(
    name = "qbg",
    version,
    about = "Diagonal / real / imaginary weights of qudit states"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Base seed for all random draws.
    #[arg(long, global = true, env = "QBG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Smallest eigenvalue accepted for an input state is `-psd_tol`.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub psd_tol: f64,
    /// Largest accepted `|ρ - ρ†|` entry of an input state.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub herm_tol: f64,
    /// Output path; standard output when omitted and the command allows it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sampling (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a state into D, X, I and evaluate the bounds.
    Decompose {
        /// Matrix JSON `{"dim", "re", "im"}`.
        input: PathBuf,
    },
    /// Tabulate the analytic upper boundary of S_I against S_R.
    Boundary {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Also write the sampled per-bin maximum of S_I here.
        #[arg(long)]
        empirical_out: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Push the empirical curve towards the boundary with family anchors and local walks.
        #[arg(long)]
        refine: bool,
    },
    /// Coordinates of random states, one row per state.
    Cloud {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "HS_MIXED")]
        measure: Measure,
        /// Append `robustness,full_imaginarity` columns.
        #[arg(long)]
        robustness: bool,
    },
    /// Run the invariant checks and print a pass/fail table.
    Verify {
        /// `2..7` (inclusive) or a comma list such as `2,3,5`.
        #[arg(long, default_value = "2..7", value_parser = parse_dims)]
        dims: Dims,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Build a boundary-family state and report how it saturates the bounds.
    Extremal {
        /// Family spec JSON.
        spec: PathBuf,
    },
    /// Rotate a state until its diagonal is uniform, logging each rotation.
    Sweep {
        /// Matrix JSON `{"dim", "re", "im"}`.
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIAG_TOL)]
        diag_tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

pub fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    let bad = |part: &str| format!("cannot read {part:?} as a dimension");
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad(lo))?;
        let hi: usize = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad(hi))?;
        if hi < lo {
            return Err(format!("empty range {s}"));
        }
        return Ok(Dims((lo..=hi).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad(p)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Dims)
}

impl GlobalOpts {
    fn tolerances(&self) -> Result<Tolerances> {
        for (name, v) in [("--psd-tol", self.psd_tol), ("--herm-tol", self.herm_tol)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be a finite non-negative number"
                )));
            }
        }
        Ok(Tolerances {
            herm_tol: self.herm_tol,
            psd_tol: self.psd_tol,
            ..Tolerances::default()
        })
    }

    fn required_out(&self, command: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("{command} needs --out <path>")))
    }

    fn format_or(&self, default: Format, allowed: &[Format], command: &str) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Config(format!(
                "{command} cannot write {f:?} output"
            )))
        }
    }
}

/// `report.json` next to `state.json`: swaps the final extension for `suffix`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_state(path: &Path, tol: Tolerances) -> Result<DensityMatrix> {
    let file: MatrixFile = qio::read_json(open(path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw = file.to_matrix()?;
    Ok(state::validate_density(raw, tol)?)
}

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Decompose { input } => cmd_decompose(g, input),
        Command::Boundary {
            dim,
            n,
            empirical_out,
            bins,
            samples,
            refine,
        } => cmd_boundary(
            g,
            *dim,
            *n,
            empirical_out.as_deref(),
            *bins,
            *samples,
            *refine,
        ),
        Command::Cloud {
            dim,
            n,
            measure,
            robustness,
        } => cmd_cloud(g, *dim, *n, *measure, *robustness),
        Command::Verify { dims, samples } => cmd_verify(g, &dims.0, *samples),
        Command::Extremal { spec } => cmd_extremal(g, spec),
        Command::Sweep { input, diag_tol } => cmd_sweep(g, input, *diag_tol),
    }
}

#[derive(Debug, Serialize)]
struct DecomposeReport {
    dim: usize,
    /// Diagonal of `D`.
    d: Vec<f64>,
    x: Vec<Vec<f64>>,
    /// Imaginary parts of the entries of `I`.
    i_im: Vec<Vec<f64>>,
    coordinates: Coordinates,
    purity: f64,
    verdict: BoundVerdict,
}

fn cmd_decompose(g: &GlobalOpts, input: &Path) -> Result<()> {
    g.format_or(Format::Json, &[Format::Json], "decompose")?;
    let rho = read_state(input, g.tolerances()?)?;
    let parts = state::decompose(&rho);
    let coordinates = state::coordinates(&parts);
    let report = DecomposeReport {
        dim: rho.dim(),
        d: parts.diag().to_vec(),
        x: parts.x_matrix().real_rows(),
        i_im: parts.i_matrix().imag_rows(),
        coordinates,
        purity: state::purity(&rho),
        verdict: bounds::evaluate_bounds(&coordinates),
    };
    qio::write_json(sink(g.out.as_deref())?, &report)?;
    Ok(())
}

fn cmd_boundary(
    g: &GlobalOpts,
    dim: usize,
    n: usize,
    empirical_out: Option<&Path>,
    bins: usize,
    samples: u64,
    refine: bool,
) -> Result<()> {
    let out = g.required_out("boundary")?;
    let format = g.format_or(
        Format::Csv,
        &[Format::Csv, Format::Json, Format::Svg],
        "boundary",
    )?;
    let curve = bounds::boundary_samples(dim, n).map_err(|e| CliError::Config(e.to_string()))?;
    let landmarks: Landmarks =
        bounds::landmarks(dim).map_err(|e| CliError::Config(e.to_string()))?;
    if empirical_out.is_some() && samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }

    let mut w = create(out)?;
    match format {
        Format::Csv => qio::write_boundary_csv(&mut w, &curve)?,
        Format::Json => qio::write_json(&mut w, &curve)?,
        Format::Svg => w.write_all(qio::boundary_svg(&curve).as_bytes())?,
    }
    w.flush()?;
    let mut side = create(&sidecar(out, "landmarks.json"))?;
    qio::write_json(&mut side, &landmarks)?;
    side.flush()?;

    if let Some(path) = empirical_out {
        let emp = sampling::empirical_boundary(dim, bins, samples, g.seed, refine)
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (s_r, s_i) in emp.bins.iter().filter_map(|b| b.best) {
            let cap = bounds::max_imaginary(s_r.min(((dim - 1) as f64).sqrt()), dim)
                .map_err(|e| CliError::Soundness(e.to_string()))?;
            if s_i > cap + BOUND_TOL {
                return Err(CliError::Soundness(format!(
                    "sampled S_I = {s_i} above the bound {cap} at S_R = {s_r}"
                )));
            }
        }
        let mut w = create(path)?;
        qio::write_empirical_csv(&mut w, &emp)?;
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CloudJsonRow<'a> {
    #[serde(flatten)]
    record: &'a CoordinateRecord,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    imaginarity: Option<&'a ImaginarityReport>,
}

/// Records are produced in parallel a chunk at a time and written in index order.
const CLOUD_CHUNK: u64 = 4096;

fn cmd_cloud(
    g: &GlobalOpts,
    dim: usize,
    n: u64,
    measure: Measure,
    with_robustness: bool,
) -> Result<()> {
    let format = g.format_or(Format::Csv, &[Format::Csv, Format::Json], "cloud")?;
    if dim < 2 {
        return Err(CliError::Config(format!(
            "--dim must be at least 2, got {dim}"
        )));
    }
    if n == 0 {
        return Err(CliError::Config("--n must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let seed = g.seed;

    let mut out = Some(sink(g.out.as_deref())?);
    let mut csv = match format {
        Format::Csv => Some(CloudWriter::new(
            out.take().expect("fresh sink"),
            with_robustness,
        )?),
        _ => None,
    };
    let mut json_rows = Vec::new();

    let mut lo = 0;
    while lo < n {
        let hi = (lo + CLOUD_CHUNK).min(n);
        let chunk: Vec<(CoordinateRecord, Option<ImaginarityReport>)> = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|i| {
                    let rho = sampling::sample_state(dim, measure, seed, i);
                    let imag = with_robustness.then(|| imaginarity::robustness(&rho));
                    (sampling::record_of(&rho, i), imag)
                })
                .collect()
        });
        for (rec, imag) in &chunk {
            let verdict = bounds::evaluate_bounds(&rec.coordinates());
            if !verdict.all_satisfied {
                return Err(CliError::Soundness(format!(
                    "record {} violates a bound (worst margin {:e})",
                    rec.idx,
                    verdict.worst_margin()
                )));
            }
            if let Some(w) = csv.as_mut() {
                w.write(rec, imag.as_ref())?;
            }
        }
        if csv.is_none() {
            json_rows.extend(chunk);
        }
        lo = hi;
    }

    let mut out = match csv {
        Some(w) => w.finish()?,
        None => {
            let mut out = out.expect("sink not handed to the CSV writer");
            let rows: Vec<CloudJsonRow> = json_rows
                .iter()
                .map(|(record, imag)| CloudJsonRow {
                    record,
                    imaginarity: imag.as_ref(),
                })
                .collect();
            qio::write_json(&mut out, &rows)?;
            out
        }
    };
    out.flush()?;
    Ok(())
}

fn cmd_verify(g: &GlobalOpts, dims: &[usize], samples: u64) -> Result<()> {
    let format = g.format_or(Format::Csv, &[Format::Csv, Format::Json], "verify")?;
    let cfg = VerifyConfig {
        samples,
        seed: g.seed,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results = pool
        .install(|| verify::run_checks(dims, cfg))
        .map_err(|e| CliError::Config(e.to_string()))?;

    print_table(&mut io::stdout().lock(), &results)?;
    if let Some(path) = g.out.as_deref() {
        let mut w = create(path)?;
        match format {
            Format::Json => qio::write_json(&mut w, &results)?,
            _ => {
                writeln!(w, "dim,check,passed,detail")?;
                for r in &results {
                    writeln!(w, "{},{},{},\"{}\"", r.dim, r.name, r.passed, r.detail)?;
                }
            }
        }
        w.flush()?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Soundness(format!(
            "{failed} of {} checks failed",
            results.len()
        )));
    }
    Ok(())
}

pub fn print_table(w: &mut impl Write, results: &[CheckResult]) -> io::Result<()> {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        writeln!(w, "{tag}  d={:<3} {:<width$}  {}", r.dim, r.name, r.detail)?;
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(w, "{passed}/{} checks passed", results.len())
}

fn cmd_extremal(g: &GlobalOpts, spec_path: &Path) -> Result<()> {
    let out = g.required_out("extremal")?;
    g.format_or(Format::Json, &[Format::Json], "extremal")?;
    let spec: ExtremalSpec = qio::read_json(open(spec_path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let rho = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
    let report: SaturationReport = extremal::saturation_report(&rho);
    let mut w = create(out)?;
    qio::write_json(&mut w, &MatrixFile::from_matrix(rho.matrix()))?;
    w.flush()?;
    let mut w = create(&sidecar(out, "report.json"))?;
    qio::write_json(&mut w, &report)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepReport {
    steps: usize,
    before: Coordinates,
    after: Coordinates,
    max_diagonal_deviation: f64,
}

fn cmd_sweep(g: &GlobalOpts, input: &Path, diag_tol: f64) -> Result<()> {
    let out = g.required_out("sweep")?;
    g.format_or(Format::Json, &[Format::Json], "sweep")?;
    if diag_tol.is_nan() || diag_tol <= 0.0 {
        return Err(CliError::Config("--diag-tol must be positive".into()));
    }
    let rho = read_state(input, g.tolerances()?)?;
    let (swept, steps): (DensityMatrix, Vec<RotationStep>) =
        transform::sweep_uniform_diagonal(&rho, diag_tol)
            .map_err(|e| CliError::Soundness(e.to_string()))?;
    let d = swept.dim() as f64;
    let report = SweepReport {
        steps: steps.len(),
        before: state::state_coordinates(&rho),
        after: state::state_coordinates(&swept),
        max_diagonal_deviation: swept
            .matrix()
            .diagonal()
            .iter()
            .map(|z| (z.re - 1.0 / d).abs())
            .fold(0.0, f64::max),
    };

    let mut w = create(out)?;
    qio::write_json(&mut w, &MatrixFile::from_matrix(swept.matrix()))?;
    w.flush()?;
    let mut w = create(&sidecar(out, "steps.jsonl"))?;
    qio::write_step_log(&mut w, &steps)?;
    w.flush()?;
    let mut w = create(&sidecar(out, "report.json"))?;
    qio::write_json(&mut w, &report)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2..7").unwrap(), Dims(vec![2, 3, 4, 5, 6, 7]));
        assert_eq!(parse_dims("2..=4").unwrap(), Dims(vec![2, 3, 4]));
        assert_eq!(parse_dims("3, 5,1").unwrap(), Dims(vec![3, 5, 1]));
        assert!(parse_dims("5..2").is_err());
        assert!(parse_dims("a").is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar(Path::new("x/b.csv"), "landmarks.json"),
            PathBuf::from("x/b.landmarks.json")
        );
        assert_eq!(
            sidecar(Path::new("s"), "report.json"),
            PathBuf::from("s.report.json")
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 1);
        assert_eq!(CliError::Io(String::new()).exit_code(), 1);
        assert_eq!(CliError::InvalidState(String::new()).exit_code(), 2);
        assert_eq!(CliError::Soundness(String::new()).exit_code(), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
