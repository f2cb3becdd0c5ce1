use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tworay_cli::{list_commands, load_scenario, run_scenario, Command};

/// Runs a two-ray operator scenario and writes report.json plus CSV tables.
#[derive(Debug, Parser)]
#[command(name = "tworay", version)]
struct Args {
    /// One of the commands printed by `tworay list`, or `list`.
    command: String,
    /// Scenario document (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the document's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the document's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.command == "list" {
        print!("{}", list_commands());
        return ExitCode::SUCCESS;
    }
    let Some(command) = Command::parse(&args.command) else {
        eprintln!("unknown command {:?}; run `tworay list`", args.command);
        return ExitCode::from(2);
    };
    let Some(config) = args.config else {
        eprintln!("{command} needs --config <path>");
        return ExitCode::from(2);
    };
    let result = load_scenario(&config, command, args.out, args.seed).and_then(|s| {
        let report = run_scenario(&s)?;
        Ok((s, report))
    });
    match result {
        Ok((scenario, report)) => {
            for a in &report.assertions {
                println!("{} {}: {:e} (threshold {:e})", if a.passed { "PASS" } else { "FAIL" }, a.name, a.value, a.threshold);
            }
            println!(
                "{}: {} ({})",
                report.scenario,
                if report.passed { "all assertions passed" } else { "assertion failure" },
                scenario.output_dir.join("report.json").display()
            );
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
