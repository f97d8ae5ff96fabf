mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Err(e) = run::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    match run::run(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(run::EXIT_VALIDATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
