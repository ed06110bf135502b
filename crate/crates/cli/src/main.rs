//! Experiment runner and figure-data generator.
//!
//! Subcommands mirror the library surface: `coupling`, `zeros`, `rates`,
//! `evolve`, `trajectories`, and `figure` presets that regenerate the data
//! behind the standard plots (coherent rate dips, relative-variance traces,
//! population snapshots, and the trapping-condition table). All outputs are
//! CSV (plus a JSON run report for ensembles); identical configs and seeds
//! produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sideband::config::ExperimentConfig;
use sideband::engine::NumberDistribution;
use sideband::error::Error;
use sideband::io as sbio;
use sideband::montecarlo::tv_distance;
use sideband::specfun::tabulate_coupling;
use sideband::trapping::{eta_zeros_for_n, trapping_numbers_for_eta};

mod figures;

#[derive(Parser)]
#[command(
    name = "sideband",
    about = "Trapped-ion trapping-state simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the coupling nonlinearity f(n; eta) as CSV `n,f`.
    Coupling {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve trapping conditions: coupling zeros of a level (`--n0`), or the
    /// discrete trapping numbers of a Lamb-Dicke parameter (`--eta`).
    Zeros(ZerosArgs),
    /// Per-cycle transition rates of a configured experiment as `n,up,stay`.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Deterministic evolution: snapshot and moment CSVs.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Monte Carlo trajectory ensemble plus engine-comparison report.
    Trajectories {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Regenerate the data behind a standard figure.
    Figure {
        #[arg(value_enum)]
        which: FigurePreset,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ZerosTarget {
    /// Level whose coupling zeros in eta are requested.
    #[arg(long)]
    n0: Option<usize>,
    /// Lamb-Dicke parameter whose trapping numbers are requested.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct ZerosArgs {
    #[command(flatten)]
    target: ZerosTarget,
    /// Number of roots (with --n0).
    #[arg(long)]
    count: Option<usize>,
    /// Largest level to scan (with --eta).
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum FigurePreset {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 = configuration problem, 3 = numerical problem (leak/truncation/domain),
/// 1 = anything else (I/O).
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Domain(_)
        | Error::DegenerateCoupling { .. }
        | Error::NoZeros
        | Error::NonConvergent(_)
        | Error::DimensionMismatch(_)
        | Error::LeakExceeded { .. }
        | Error::EmptyDistribution
        | Error::TruncationHit { .. } => 3,
        Error::Io(_) => 1,
    }
}

fn create(path: &Path) -> sideband::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> sideband::Result<()> {
    match cli.command {
        Command::Coupling { eta, n_max, out } => {
            let profile = tabulate_coupling(eta, n_max);
            let mut w = create(&out)?;
            sbio::write_coupling_csv(&mut w, &profile)?;
            w.flush()?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Zeros(args) => cmd_zeros(args),
        Command::Rates { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rates = cfg.transition_rates();
            let mut w = create(&out)?;
            sbio::write_rates_csv(&mut w, &rates)?;
            w.flush()?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Evolve { config, out_dir } => cmd_evolve(&config, &out_dir),
        Command::Trajectories { config, out_dir } => cmd_trajectories(&config, &out_dir),
        Command::Figure { which, out_dir } => match which {
            FigurePreset::Fig2a => figures::fig2a(&out_dir),
            FigurePreset::Fig2b => figures::fig2b(&out_dir),
            FigurePreset::Fig3 => figures::fig3(&out_dir),
            FigurePreset::Fig4 => figures::fig4(&out_dir),
            FigurePreset::Fig5 => figures::fig5(&out_dir),
        },
    }
}

fn cmd_zeros(args: ZerosArgs) -> sideband::Result<()> {
    match (args.target.n0, args.target.eta) {
        (Some(n0), None) => {
            let count = args.count.unwrap_or(1);
            let roots = eta_zeros_for_n(n0, count)?;
            let table: Vec<_> = roots
                .iter()
                .enumerate()
                .map(|(root_index, &eta)| sideband::trapping::CouplingZeroEntry {
                    n0,
                    eta,
                    root_index,
                })
                .collect();
            let mut w = create(&args.out)?;
            sbio::write_fig5_csv(&mut w, &table)?;
            w.flush()?;
        }
        (None, Some(eta)) => {
            let n_max = args
                .n_max
                .ok_or_else(|| Error::Config("zeros --eta needs --n-max".into()))?;
            let numbers = trapping_numbers_for_eta(eta, n_max);
            let mut w = create(&args.out)?;
            sbio::write_trapping_numbers_csv(&mut w, &numbers)?;
            w.flush()?;
        }
        _ => unreachable!("clap enforces exactly one of --n0/--eta"),
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_evolve(config: &Path, out_dir: &Path) -> sideband::Result<()> {
    let cfg = ExperimentConfig::from_file(config)?;
    let (snapshots, series) = cfg.run_evolution()?;
    std::fs::create_dir_all(out_dir)?;

    let snap_path = out_dir.join("snapshots.csv");
    let mut w = create(&snap_path)?;
    sbio::write_snapshots_csv(&mut w, &snapshots)?;
    w.flush()?;

    let mom_path = out_dir.join("moments.csv");
    let mut w = create(&mom_path)?;
    sbio::write_moments_csv(&mut w, &series)?;
    w.flush()?;

    println!("wrote {}", snap_path.display());
    println!("wrote {}", mom_path.display());
    Ok(())
}

fn cmd_trajectories(config: &Path, out_dir: &Path) -> sideband::Result<()> {
    let cfg = ExperimentConfig::from_file(config)?;
    let ensemble = cfg.run_trajectories()?;
    let (engine_snapshots, _) = cfg.run_evolution()?;
    std::fs::create_dir_all(out_dir)?;

    let snap_path = out_dir.join("mc_snapshots.csv");
    let mut w = create(&snap_path)?;
    sbio::write_snapshots_csv(&mut w, &ensemble.checkpoints)?;
    w.flush()?;

    let mom_path = out_dir.join("mc_moments.csv");
    let mut w = create(&mom_path)?;
    sbio::write_moments_csv(&mut w, &ensemble.moments)?;
    w.flush()?;

    // Engine comparison: total-variation distance per checkpoint.
    let engine_by_cycle: Vec<(usize, &NumberDistribution)> =
        engine_snapshots.iter().map(|(c, d)| (*c, d)).collect();
    let mut rows = Vec::new();
    for (cycle, empirical) in &ensemble.checkpoints {
        let engine_dist = engine_by_cycle
            .iter()
            .find(|(c, _)| c == cycle)
            .map(|(_, d)| *d)
            .expect("engine run shares the checkpoint list");
        rows.push((*cycle, tv_distance(empirical, engine_dist)?));
    }
    let cmp_path = out_dir.join("comparison.csv");
    let mut w = create(&cmp_path)?;
    sbio::write_comparison_csv(&mut w, &rows)?;
    w.flush()?;

    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, ensemble.report.to_json())?;

    println!("wrote {}", snap_path.display());
    println!("wrote {}", mom_path.display());
    println!("wrote {}", cmp_path.display());
    println!("wrote {}", report_path.display());
    Ok(())
}
