use std::process::ExitCode;

use clap::Parser;
use varlp_cli::commands::{run, Cli};
use varlp_cli::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(w);
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| run(cli.command)),
        Err(e) => Err(CliError::Config(e.to_string())),
    };
    match result {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
