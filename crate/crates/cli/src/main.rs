use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use progmeter::multimeter::BUILTINS;
use progmeter_cli::{emit_report, exit_status, run_scenario, Format, LoadOptions, ScenarioError};

/// Run a multimeter scenario and report the verification results.
#[derive(Debug, Parser)]
#[command(name = "progmeter", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(required_unless_present = "list_builtins")]
    path: Option<PathBuf>,

    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Pass tolerance for every run, overriding the scenario.
    #[arg(long)]
    tol: Option<f64>,

    /// Seed for all randomness, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,

    /// Print the named multimeter constructions and exit.
    #[arg(long)]
    list_builtins: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_builtins {
        for (name, description) in BUILTINS {
            println!("{name:<10} {description}");
        }
        return ExitCode::SUCCESS;
    }
    let path = args.path.expect("clap enforces the path");
    let outcome = std::fs::read_to_string(&path)
        .map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
        .and_then(|text| run_scenario(&text, LoadOptions { seed: args.seed, tol: args.tol }));
    let reports = match outcome {
        Ok(reports) => reports,
        Err(err) => {
            eprintln!("progmeter: {}: {err}", path.display());
            return ExitCode::from(err.exit_code());
        }
    };
    let bytes = emit_report(&reports, args.format);
    let written = match &args.report {
        Some(out) => std::fs::write(out, &bytes),
        None => std::io::Write::write_all(&mut std::io::stdout(), &bytes),
    };
    if let Err(err) = written {
        eprintln!("progmeter: cannot write report: {err}");
        return ExitCode::from(2);
    }
    ExitCode::from(exit_status(&reports))
}
