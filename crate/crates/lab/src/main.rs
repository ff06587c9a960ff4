use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use speclab::commands::run_command;
use speclab::config::RunConfig;
use speclab::suite::{Suite, SuiteOptions};
use speclab::sweep::sweep;
use speclab::{LabError, Report};

/// Spectral comparison laboratory: runs one config or the acceptance suite
/// and writes CSV reports.
#[derive(Parser, Debug)]
#[command(name = "speclab", version)]
struct Cli {
    /// Run config (flat `key = value` TOML).
    #[arg(long, value_name = "PATH", required_unless_present = "suite")]
    config: Option<PathBuf>,
    /// Run the full acceptance battery.
    #[arg(long, conflicts_with = "config")]
    suite: bool,
    /// Output directory; overrides `out` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Check tolerance; overrides `tol` in the config.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Seed; overrides `seed` in the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for sweeps and the suite.
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
}

fn run_config(cli: &Cli, path: &std::path::Path) -> Result<bool, LabError> {
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LabError::Invalid("--tol must be positive".into()));
        }
        cfg.tol = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let report: Report = match &cfg.sweep {
        Some((param, values)) => sweep(&cfg, *param, values, cli.threads)?,
        None => run_command(&cfg)?,
    };
    let dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("speclab-out"));
    for p in report.write_to(&dir)? {
        println!("wrote {}", p.display());
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    let failed: Vec<_> = report.rows.iter().filter(|r| r.pass == Some(false)).collect();
    for r in &failed {
        println!("check failed: {} {} = {:.6e}", r.case, r.quantity, r.value);
    }
    Ok(report.passed())
}

fn run_suite(cli: &Cli) -> Result<bool, LabError> {
    let opts = SuiteOptions { seed: cli.seed.unwrap_or(speclab::config::DEFAULT_SEED), threads: cli.threads };
    let suite = Suite::run(&opts, |c| {
        println!("{}", c.line());
        for n in &c.notes {
            println!("    {n}");
        }
        let _ = std::io::stdout().flush();
    });
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("speclab-out"));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("suite.csv");
    std::fs::write(&path, suite.report().rows_csv())?;
    println!("wrote {}", path.display());
    let passed = suite.criteria.iter().filter(|c| c.pass()).count();
    println!("{passed}/{} criteria passed", suite.criteria.len());
    Ok(suite.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = if cli.suite {
        run_suite(&cli)
    } else {
        run_config(&cli, cli.config.as_deref().expect("clap requires --config without --suite"))
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
