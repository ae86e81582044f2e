use std::process::ExitCode;

use clap::Parser;
use tubelink_cli::args::{Cli, Command};
use tubelink_cli::commands;

fn configure_threads() {
    if let Some(n) = std::env::var("TUBELINK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("TUBELINK_THREADS ignored: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(a) => commands::build::run(a).map(drop),
        Command::Eval(a) => commands::eval::run(a).map(drop),
        Command::Bench(a) => commands::bench::run(a).map(drop),
        Command::Simulate(a) => commands::simulate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(tubelink_cli::exit_code(&e))
        }
    }
}
