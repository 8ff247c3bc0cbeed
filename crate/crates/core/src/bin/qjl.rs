use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use qjl::cli;
use qjl::config::Overrides;

#[derive(Parser)]
#[command(name = "qjl", about = "Quantum JL transform experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chi-square tail frequencies against the sharp bound.
    ChiTails(RunArgs),
    /// Haar block-projection tails and second moment.
    HaarTails(RunArgs),
    /// Local random circuits against Haar at matched parameters.
    DesignTails(RunArgs),
    /// Empirical moments of the projection against the moment bounds.
    Moments(RunArgs),
    /// TPE λ, monomial errors and iteration squaring for small designs.
    DesignQuality(RunArgs),
    /// Design parameter table (no sampling).
    Params(RunArgs),
    /// Pairwise norm and inner-product preservation.
    JlDemo(RunArgs),
    /// Block-name distribution against uniform.
    BlockDist(RunArgs),
    /// PIR correctness and privacy sweep.
    Pir(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG_ERROR } else { cli::EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (name, args) = match cli.command {
        Command::ChiTails(a) => ("chi-tails", a),
        Command::HaarTails(a) => ("haar-tails", a),
        Command::DesignTails(a) => ("design-tails", a),
        Command::Moments(a) => ("moments", a),
        Command::DesignQuality(a) => ("design-quality", a),
        Command::Params(a) => ("params", a),
        Command::JlDemo(a) => ("jl-demo", a),
        Command::BlockDist(a) => ("block-dist", a),
        Command::Pir(a) => ("pir", a),
    };
    let overrides = Overrides { seed: args.seed, trials: args.trials, workers: args.workers, out: args.out };
    std::process::exit(cli::run(name, &args.config, &overrides));
}
