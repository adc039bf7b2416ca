//! Command-line surface for the pipeline.
//!
//! Subcommands: gen-velocity, simulate, make-dataset, train, evaluate,
//! predict, stitch, gradcheck. Settings come from CLI flags, which override
//! key=value config-file entries (`--config`), which override defaults.
//! Exit codes: 0 success, 1 usage, 2 data/format error, 3 numeric error.

mod commands;
mod ctx;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sesdi_core::error::Error;

#[derive(Parser)]
#[command(name = "sesdi", version, about = "Seismic survey simulation and set-embedding velocity inversion")]
struct Cli {
    /// Plain-text key=value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Worker thread cap (also honored from SESDI_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic layered velocity models with salt bodies (VEL1).
    GenVelocity(commands::gen_velocity::Args),
    /// Run the acoustic forward solver over a model (VEL1 -> SDI1).
    Simulate(commands::simulate::Args),
    /// Pair surveys with label models into a training manifest.
    MakeDataset(commands::make_dataset::Args),
    /// Train the set-embedding network from a manifest.
    Train(commands::train::Args),
    /// Score prediction files against label files (CSV report).
    Evaluate(commands::evaluate::Args),
    /// Predict a single velocity block from a survey context.
    Predict(commands::predict::Args),
    /// Stitch block predictions from a model bank into a full model.
    Stitch(commands::stitch::Args),
    /// Verify analytic gradients against finite differences.
    Gradcheck(commands::gradcheck::Args),
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Param(_) => 1,
        Error::Shape(_) | Error::Format { .. } | Error::Io(_) | Error::EmptyContext(_) => 2,
        Error::Numeric(_) | Error::Cfl { .. } => 3,
    }
}

fn init_threads(cap: Option<usize>) {
    let cap = cap.or_else(|| {
        std::env::var("SESDI_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = cap {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_threads(cli.threads);
    let cfg = match ctx::load_config(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    };
    let result = match cli.command {
        Command::GenVelocity(args) => commands::gen_velocity::run(args, &cfg),
        Command::Simulate(args) => commands::simulate::run(args, &cfg),
        Command::MakeDataset(args) => commands::make_dataset::run(args, &cfg),
        Command::Train(args) => commands::train::run(args, &cfg),
        Command::Evaluate(args) => commands::evaluate::run(args, &cfg),
        Command::Predict(args) => commands::predict::run(args, &cfg),
        Command::Stitch(args) => commands::stitch::run(args, &cfg),
        Command::Gradcheck(args) => commands::gradcheck::run(args, &cfg),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
