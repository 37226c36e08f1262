use std::process::ExitCode;

use clap::Parser;
use lpchat_service::cli::{load_service_config, run_bootstrap, run_eval, Cli, Command};

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { config } => load_service_config(&config).and_then(|cfg| {
            tokio::runtime::Runtime::new()
                .expect("tokio runtime")
                .block_on(lpchat_service::serve(cfg))
        }),
        Command::Eval(args) => run_eval(&args).map(|(_, table)| print!("{table}")),
        Command::Bootstrap(args) => run_bootstrap(&args).map(|(n, valid)| {
            println!("wrote {n} candidates ({valid} valid) to {}", args.out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
