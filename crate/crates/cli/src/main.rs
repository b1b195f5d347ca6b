use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sccalc::io::{benchmark, generate_radial_grid, load_network, save_network, BenchError, RadialGridSpec, ResultFile};
use sccalc::{calc_sc, BusId, Case, FaultBuses, FaultStudyOptions, ScError, SolverStrategy};

/// Initial symmetrical short-circuit currents at every bus of a grid.
#[derive(Debug, Parser)]
#[command(name = "sccalc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a fault study and write one row per fault bus.
    Calc(CalcArgs),
    /// Check a grid file and list every violation.
    Validate {
        grid: PathBuf,
    },
    /// Write a synthetic radial MV grid.
    Generate(GenerateArgs),
    /// Time the all-bus study against one study per bus.
    Bench(BenchArgs),
}

#[derive(Debug, clap::Args)]
struct CalcArgs {
    grid: PathBuf,
    #[arg(long, value_enum, default_value_t = CaseArg::Max)]
    case: CaseArg,
    /// Voltage tolerance of low-voltage grids, 6 or 10 %.
    #[arg(long, default_value_t = 10)]
    lv_tolerance: u8,
    /// `all` or a comma-separated list of bus ids.
    #[arg(long, default_value = "all")]
    fault_buses: String,
    /// Ignore converter sources.
    #[arg(long)]
    no_dg: bool,
    #[arg(long, default_value_t = 1.0)]
    s_base: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    solver: SolverArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, else csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    feeders: usize,
    #[arg(long)]
    buses_per_feeder: usize,
    /// Converter on every n-th feeder bus; none when absent.
    #[arg(long)]
    dg_every: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// Bus counts, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [102, 500, 2000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CaseArg {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
        }
    }
}

impl From<ScError> for Failure {
    fn from(e: ScError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Input(format!("cannot write {}: {e}", path.display()))
}

fn parse_fault_buses(s: &str) -> Result<FaultBuses, Failure> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(FaultBuses::All);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map(BusId)
                .map_err(|_| Failure::Input(format!("invalid bus id `{}` in --fault-buses", t.trim())))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(FaultBuses::Explicit)
}

fn calc(args: CalcArgs) -> Result<(), Failure> {
    let network = load_network(&args.grid).map_err(|e| Failure::Input(e.to_string()))?;
    let options = FaultStudyOptions {
        case: match args.case {
            CaseArg::Max => Case::Max,
            CaseArg::Min => Case::Min,
        },
        lv_tolerance_percent: args.lv_tolerance,
        fault_buses: parse_fault_buses(&args.fault_buses)?,
        consider_converters: !args.no_dg,
        s_base_mva: args.s_base,
        solver: match args.solver {
            SolverArg::Auto => SolverStrategy::Auto,
            SolverArg::Dense => SolverStrategy::Dense,
            SolverArg::Sparse => SolverStrategy::Sparse,
        },
    };
    let result = calc_sc(&network, &options)?;
    let file = ResultFile::from_result(&result);

    let format = args.format.unwrap_or_else(|| match &args.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => Format::Json,
        _ => Format::Csv,
    });
    let write = |w: &mut dyn Write| match format {
        Format::Csv => file.write_csv(w),
        Format::Json => file.write_json(w),
    };
    match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| io_failure(path, e))?;
            let mut w = BufWriter::new(f);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(path, e))?;
            let skipped = file.rows.iter().filter(|r| r.ikss_ka.is_none()).count();
            eprintln!("{} rows written to {} ({skipped} without a current)", file.rows.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Failure::Input(e.to_string()))?;
        }
    }
    Ok(())
}

fn validate(grid: &Path) -> Result<(), Failure> {
    let network = load_network(grid).map_err(|e| Failure::Input(e.to_string()))?;
    println!(
        "{}: valid ({} buses, {} lines, {} two-winding and {} three-winding transformers, {} external grids, {} converters, {} switches)",
        grid.display(),
        network.buses.len(),
        network.lines.len(),
        network.transformers2w.len(),
        network.transformers3w.len(),
        network.external_grids.len(),
        network.converter_sources.len(),
        network.switches.len(),
    );
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    if args.feeders == 0 || args.buses_per_feeder == 0 || args.dg_every == Some(0) {
        return Err(Failure::Input("--feeders, --buses-per-feeder and --dg-every must be at least 1".into()));
    }
    let network = generate_radial_grid(RadialGridSpec {
        feeders: args.feeders,
        buses_per_feeder: args.buses_per_feeder,
        dg_every: args.dg_every,
        seed: args.seed,
    });
    save_network(&network, &args.out).map_err(|e| io_failure(&args.out, e))?;
    eprintln!(
        "{} buses, {} converters written to {}",
        network.buses.len(),
        network.converter_sources.len(),
        args.out.display()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let report = benchmark(&args.sizes, args.seed).map_err(|e| match e {
        BenchError::TooSmall(_) => Failure::Input(e.to_string()),
        BenchError::Study(e) => e.into(),
        BenchError::EquivalenceFailed { .. } => Failure::Solver(e.to_string()),
    })?;
    if args.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Solver(e.to_string()))?;
        println!("{text}");
    } else {
        println!("{:>8} {:>14} {:>14} {:>10} {:>12}", "buses", "all-bus [s]", "per-bus [s]", "speedup", "max rel diff");
        for e in &report.entries {
            println!(
                "{:>8} {:>14.6} {:>14.6} {:>10.1} {:>12.1e}",
                e.buses, e.vectorized_s, e.looped_s, e.speedup, e.max_rel_diff
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Calc(args) => calc(args),
        Command::Validate { grid } => validate(&grid),
        Command::Generate(args) => generate(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Input(m) | Failure::Solver(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
