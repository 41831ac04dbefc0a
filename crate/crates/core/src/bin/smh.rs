use clap::{Args, Parser, Subcommand};
use smh::commands::{cmd_augment, cmd_evaluate, cmd_relevance_plot, cmd_stats, experiment_table, DEFAULT_PLOT_POINTS};
use smh::config::{ConfigError, Overrides, RunConfig};
use smh::spectral_map::SpectralMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "smh",
    version,
    about = "Spectral graph augmentation for imbalanced molecular regression"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV with a header row.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    smiles_col: Option<String>,
    #[arg(long, global = true)]
    target_col: Option<String>,
    /// Spectral embedding length.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// eigenvalues or gft.
    #[arg(long, global = true)]
    spectral_mode: Option<SpectralMode>,
    /// Target kernel width of the conditional manifold.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Synthetic samples as a fraction of the training set.
    #[arg(long, global = true)]
    fraction: Option<f64>,
    /// Edge probability threshold for reconstruction.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving run_<name>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic graphs for the whole dataset.
    Augment,
    /// Cross-validated baseline vs augmented comparison.
    Evaluate,
    /// Compare structural statistics of two graph files (CSV or JSONL).
    Stats { original: PathBuf, synthetic: PathBuf },
    /// Tabulate relevance, density and sampling weight over the target range.
    RelevancePlot {
        #[arg(long, default_value_t = DEFAULT_PLOT_POINTS)]
        points: usize,
    },
}

fn resolve(args: CommonArgs) -> Result<RunConfig, ConfigError> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    base.resolve(Overrides {
        dataset: args.dataset,
        smiles_col: args.smiles_col,
        target_col: args.target_col,
        k: args.k,
        spectral_mode: args.spectral_mode,
        gamma: args.gamma,
        fraction: args.fraction,
        cutoff: args.cutoff,
        folds: args.folds,
        seed: args.seed,
        out: args.out,
        threads: args.threads,
    })
}

fn run(command: Command, config: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Augment => {
            let (dir, report) = cmd_augment(config)?;
            println!(
                "{}: {} of {} requested synthetic graphs written to {}",
                report.dataset,
                report.generated,
                report.requested,
                dir.display()
            );
            if let Some(stats) = &report.dataset_vs_synthetic {
                print!("{}", stats.table());
            }
        }
        Command::Evaluate => {
            let (dir, report) = cmd_evaluate(config)?;
            print!("{}", experiment_table(&report));
            println!("report written to {}", dir.join("report.json").display());
        }
        Command::Stats { original, synthetic } => {
            print!("{}", cmd_stats(&original, &synthetic, config)?.table());
        }
        Command::RelevancePlot { points } => {
            let path = cmd_relevance_plot(config, points)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match resolve(cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_usage() { 2 } else { 1 });
        }
    };
    if let Some(n) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
