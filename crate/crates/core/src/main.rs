//! Command-line entry point: one subcommand per experiment scenario.
//!
//! Exit codes: 0 all assertions passed, 1 assertion failure, 2 usage
//! error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use landau_lab::error::Error;
use landau_lab::experiments::{run_scenario, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "landau-lab",
    about = "Entropy dissipation laboratory for the Landau-Coulomb collision operator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dissipation, Fisher/error decomposition and coercivity constants
    /// over the test density family.
    CoercivitySweep(RunArgs),
    /// Radial and tangential eigenvalues of the convolved kernel along a
    /// speed sweep.
    EigenvalueAnisotropy(RunArgs),
    /// Per-shell coercivity estimate on the annuli A_N.
    ShellEstimate(RunArgs),
    /// Construction and audit of the annulus coverings by anisotropic
    /// ellipsoids.
    CoveringAudit(RunArgs),
    /// The three interaction integrals of the max(f, g) family along a
    /// (B, N) schedule, with slope fits.
    CounterexampleScaling(RunArgs),
    /// Optimality ratios (D_upper + 1)/‖h‖ along the forbidden-norm
    /// schedules.
    OptimalityRatio(RunArgs),
}

impl Command {
    fn scenario(&self) -> Scenario {
        match self {
            Command::CoercivitySweep(_) => Scenario::CoercivitySweep,
            Command::EigenvalueAnisotropy(_) => Scenario::EigenvalueAnisotropy,
            Command::ShellEstimate(_) => Scenario::ShellEstimate,
            Command::CoveringAudit(_) => Scenario::CoveringAudit,
            Command::CounterexampleScaling(_) => Scenario::CounterexampleScaling,
            Command::OptimalityRatio(_) => Scenario::OptimalityRatio,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::CoercivitySweep(a)
            | Command::EigenvalueAnisotropy(a)
            | Command::ShellEstimate(a)
            | Command::CoveringAudit(a)
            | Command::CounterexampleScaling(a)
            | Command::OptimalityRatio(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (key = value sections); defaults are built in.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON/plot files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Quadrature level: scales the grid by 2^(L-1) relative to the
    /// scenario default (L = 1).
    #[arg(long, value_name = "L", default_value_t = 1)]
    quad_level: u32,

    /// Emit only the JSON report (default: both JSON and CSV).
    #[arg(long)]
    json: bool,

    /// Emit only the CSV tables (default: both JSON and CSV).
    #[arg(long)]
    csv: bool,
}

fn build_config(scenario: Scenario, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let cfg = ExperimentConfig::parse(&text)?;
            if cfg.scenario != scenario {
                return Err(Error::Config(format!(
                    "config is for scenario '{}', requested '{}'",
                    cfg.scenario.name(),
                    scenario.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig::default_for(scenario),
    };
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        config.threads = Some(threads);
    }
    if args.quad_level != 1 {
        let factor = 1usize << (args.quad_level.saturating_sub(1));
        let base = config.quadrature.nodes_per_axis;
        config.quadrature.nodes_per_axis =
            if args.quad_level == 0 { (base / 2).max(4) } else { base * factor };
        config.quadrature.validate()?;
    }
    if args.json != args.csv {
        config.emit_json = args.json;
        config.emit_csv = args.csv;
    }
    Ok(config)
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    let scenario = cli.command.scenario();
    let args = cli.command.args();
    let config = build_config(scenario, args)?;

    if let Some(threads) = config.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let report = pool.install(|| run_scenario(&config))?;
        print_summary(&report);
        Ok(report.passed())
    } else {
        let report = run_scenario(&config)?;
        print_summary(&report);
        Ok(report.passed())
    }
}

fn print_summary(report: &landau_lab::experiments::Report) {
    println!("scenario: {}", report.scenario);
    for a in &report.assertions {
        println!("  [{}] {} — {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    let failures = report.failures().len();
    if failures == 0 {
        println!("all {} assertions passed", report.assertions.len());
    } else {
        println!("{failures} of {} assertions FAILED", report.assertions.len());
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
