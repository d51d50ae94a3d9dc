//! Command-line harness: parse flags, solve each instance sequentially, and
//! append one CSV row per instance.
//!
//! The CSV has a fixed column order with the header written exactly once
//! per file (append-safe), dot-decimal numbers, and an empty field where a
//! value does not exist (no incumbent, or no best-known value to gap
//! against). Status and progress notes go to stderr so the CSV stays
//! machine-readable.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, ValueEnum};

use crate::bpc::{solve, SolveResult, SolveStatus, SolverConfig};
use crate::cuts::SeparationMode;
use crate::instance::{parse_instance, scale_demands};

pub const CSV_HEADER: &str =
    "instance,lower_bound,upper_bound,n_cc,n_ngcc,n_scc,seconds,nodes,gap_pct";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutsArg {
    /// Arc-projected capacity cuts only.
    Robust,
    /// ng-capacity cuts evaluated against pricing memory.
    ResourceRobust,
    /// Subset-row-style capacity cuts tracked as label resources.
    NonRobust,
}

impl From<CutsArg> for SeparationMode {
    fn from(value: CutsArg) -> Self {
        match value {
            CutsArg::Robust => SeparationMode::RobustOnly,
            CutsArg::ResourceRobust => SeparationMode::ResourceRobust,
            CutsArg::NonRobust => SeparationMode::NonRobust,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cvrp-bpc",
    about = "Branch-price-and-cut solver for the capacitated vehicle routing problem"
)]
pub struct Cli {
    /// Capacity-cut family used during separation.
    #[arg(long, value_enum, default_value_t = CutsArg::ResourceRobust)]
    pub cuts: CutsArg,

    /// Neighborhood size for ng-route pricing.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub ng_size: u64,

    /// Demand scale factor; 2 turns class "B" instances into "B2".
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Wall-clock limit per instance, in seconds.
    #[arg(long, default_value_t = 3600, value_parser = clap::value_parser!(u64).range(1..))]
    pub time_limit: u64,

    /// Stop after the root node: report its bound without branching.
    #[arg(long)]
    pub root_only: bool,

    /// CSV output path (created or appended). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Best-known value for the gap column: either a number applied to
    /// every instance, or a path to a "name,value" lookup file.
    #[arg(long)]
    pub bks: Option<String>,

    /// Reserved for randomized heuristics; the solver is deterministic and
    /// ignores it today.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Instance files in TSPLIB CVRP format.
    #[arg(required = true, value_name = "FILE")]
    pub instances: Vec<PathBuf>,
}

/// Runs the CLI against an argument list and returns the process exit code:
/// 0 on success (including time-limited runs), 2 for malformed flags, 1 for
/// unreadable or unparseable inputs.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<(), String> {
    let bks = Bks::load(cli.bks.as_deref())?;
    let mut writer = CsvWriter::open(cli.out.as_deref())?;
    for path in &cli.instances {
        let text =
            fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let parsed =
            parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let inst = scale_demands(&parsed, cli.alpha).map_err(|e| e.to_string())?;
        let cfg = SolverConfig {
            mode: cli.cuts.into(),
            ng_size: cli.ng_size as usize,
            time_limit: Duration::from_secs(cli.time_limit),
            root_only: cli.root_only,
        };
        let result = solve(&inst, &cfg);
        eprintln!(
            "{}: {} lb={:.4} ub={} nodes={} cuts={}+{}+{} in {:.2}s",
            inst.name,
            status_word(result.status),
            result.lower_bound,
            result
                .upper_bound
                .map_or_else(|| "-".to_string(), |u| u.to_string()),
            result.nodes,
            result.n_cc,
            result.n_ngcc,
            result.n_scc,
            result.seconds,
        );
        writer.write_row(&csv_row(&inst.name, &result, bks.lookup(&inst.name)))?;
    }
    Ok(())
}

fn status_word(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::TimeLimit => "time-limit",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::RootOnly => "root-only",
        SolveStatus::NumericalFailure => "numerical-failure",
    }
}

/// Percentage gap of the proven lower bound to a best-known value.
pub fn gap_pct(bks: f64, lower_bound: f64) -> f64 {
    100.0 * (bks - lower_bound) / bks
}

fn csv_row(name: &str, result: &SolveResult, bks: Option<f64>) -> String {
    let mut row = String::new();
    let _ = write!(row, "{name},{:.6},", result.lower_bound);
    if let Some(ub) = result.upper_bound {
        let _ = write!(row, "{ub}");
    }
    let _ = write!(
        row,
        ",{},{},{},{:.3},{},",
        result.n_cc, result.n_ngcc, result.n_scc, result.seconds, result.nodes
    );
    if let Some(b) = bks {
        if b > 0.0 {
            let _ = write!(row, "{:.4}", gap_pct(b, result.lower_bound));
        }
    }
    row
}

/// Best-known values for the gap column.
enum Bks {
    None,
    /// One value applied to every instance in the run.
    Fixed(f64),
    /// Per-instance lookup keyed by (scaled) instance name.
    Table(BTreeMap<String, f64>),
}

impl Bks {
    fn load(arg: Option<&str>) -> Result<Self, String> {
        let Some(arg) = arg else {
            return Ok(Bks::None);
        };
        if let Ok(v) = arg.parse::<f64>() {
            return Ok(Bks::Fixed(v));
        }
        let text = fs::read_to_string(arg).map_err(|e| format!("--bks {arg}: {e}"))?;
        let mut table = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once(',')
                .ok_or_else(|| format!("--bks {arg}: line {} lacks 'name,value'", idx + 1))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("--bks {arg}: line {} has a bad value", idx + 1))?;
            table.insert(name.trim().to_string(), value);
        }
        Ok(Bks::Table(table))
    }

    fn lookup(&self, name: &str) -> Option<f64> {
        match self {
            Bks::None => None,
            Bks::Fixed(v) => Some(*v),
            Bks::Table(t) => t.get(name).copied(),
        }
    }
}

/// Appends rows to a file or stdout, emitting the header exactly once: for
/// files, only when the file is empty or new, so re-runs stay parseable.
struct CsvWriter {
    sink: Option<PathBuf>,
    header_needed: bool,
}

impl CsvWriter {
    fn open(path: Option<&Path>) -> Result<Self, String> {
        let header_needed = match path {
            Some(p) => fs::metadata(p).map_or(true, |m| m.len() == 0),
            None => true,
        };
        Ok(CsvWriter {
            sink: path.map(Path::to_path_buf),
            header_needed,
        })
    }

    fn write_row(&mut self, row: &str) -> Result<(), String> {
        let mut chunk = String::new();
        if self.header_needed {
            chunk.push_str(CSV_HEADER);
            chunk.push('\n');
            self.header_needed = false;
        }
        chunk.push_str(row);
        chunk.push('\n');
        match &self.sink {
            Some(path) => {
                let mut file = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                file.write_all(chunk.as_bytes())
                    .map_err(|e| format!("{}: {e}", path.display()))
            }
            None => {
                print!("{chunk}");
                Ok(())
            }
        }
    }
}
