use std::process::ExitCode;

use clap::Parser;
use mirror_integrality::cli::{error_report, run, Cli};

fn fail(err: anyhow::Error) -> ExitCode {
    let report = error_report(&err);
    eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| format!("{err:#}")));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail(anyhow::anyhow!(e.to_string().trim().to_string()).context("usage")),
    };
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.output),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.output.as_bytes())
        }
    };
    if let Err(e) = written {
        return fail(e.into());
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
