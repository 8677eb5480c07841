use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ergotransport_cli::{run, summarize, Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args).map(|report| {
            println!("wrote {}", report.results.display());
            for p in [&report.overlay, &report.histogram].into_iter().flatten() {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", report.metadata.display());
            if !report.output.derived.is_null() {
                println!("{}", serde_json::to_string_pretty(&report.output.derived).expect("json values serialize"));
            }
        }),
        Command::Summarize(args) => summarize(&args.results).map(|s| println!("{s}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
