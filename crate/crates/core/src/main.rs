use std::process::ExitCode;

use clap::Parser;

use popt::cli::{error_json, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for n in &report.notices {
                eprintln!("{n}");
            }
            if cli.global.json {
                println!("{}", report.json);
            } else {
                for line in &report.lines {
                    println!("{line}");
                }
            }
            ExitCode::from(report.exit as u8)
        }
        Err(e) => {
            if cli.global.json {
                println!("{}", error_json(&e));
            } else {
                eprintln!("error: {e}");
                if let Some(w) = error_json(&e).get("witness") {
                    eprintln!("witness: {w}");
                }
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
