use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dirnet_core::scenario::Scenario;
use dirnet_core::simnet;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Kv,
}

/// Run a DIR net scenario on the deterministic simulator.
#[derive(Debug, Parser)]
#[command(name = "dirnet", version)]
struct Cli {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Write the event trace here (`-` for stdout).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the report here (`-` for stdout, the default).
    #[arg(long, default_value = "-")]
    report: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report_format: ReportFormat,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the run length in ticks.
    #[arg(long)]
    ticks: Option<u64>,
}

fn emit(path: &PathBuf, text: &str) -> io::Result<()> {
    if path.as_os_str() == "-" {
        io::stdout().lock().write_all(text.as_bytes())
    } else {
        fs::write(path, text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let path = &cli.scenario;
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("dirnet: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut scenario = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("dirnet: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        scenario.config.seed = seed;
    }
    if let Some(ticks) = cli.ticks {
        scenario.config.run_length = ticks;
    }

    let (trace, report) = match simnet::run(&scenario.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("dirnet: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &report.warnings {
        eprintln!("dirnet: warning: {w}");
    }

    if let Some(path) = &cli.trace {
        if let Err(e) = emit(path, &trace.to_text()) {
            eprintln!("dirnet: cannot write trace: {e}");
            return ExitCode::from(2);
        }
    }
    let body = match cli.report_format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Kv => report.to_kv(),
    };
    if let Err(e) = emit(&cli.report, &body) {
        eprintln!("dirnet: cannot write report: {e}");
        return ExitCode::from(2);
    }

    let failed = scenario.failed_asserts(&report);
    for (a, got) in &failed {
        eprintln!("dirnet: assertion failed: {a} (got {got})");
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
