use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lipconc_cli::commands::{run, Options, Subcommand};

/// Exact Lipschitz-polytope LP bounds and martingale concentration for
/// measures on finite product spaces.
///
/// Exit codes: 0 success, 1 invalid input, 2 internal certificate failure,
/// 3 a verification reported a violation.
#[derive(Debug, Parser)]
#[command(name = "lipconc", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON problem file (optional for `selftest`).
    file: Option<PathBuf>,
    /// Random instances per check (`selftest`).
    #[arg(long)]
    instances: Option<usize>,
    /// Seed for `selftest`; overrides the file's simulation seed for `simulate`.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest dense table (m^n entries) accepted; `10^6` notation allowed.
    #[arg(long, default_value = "10^6", value_parser = parse_count)]
    max_table: usize,
}

fn parse_count(s: &str) -> Result<usize, String> {
    let bad = || format!("{s:?} is not a count (use e.g. 1000000, 10^6 or 1e6)");
    if let Some((base, exp)) = s.split_once('^') {
        let base: usize = base.trim().parse().map_err(|_| bad())?;
        let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
        return base.checked_pow(exp).ok_or_else(bad);
    }
    if let Some((mant, exp)) = s.split_once(['e', 'E']) {
        let mant: usize = mant.trim().parse().map_err(|_| bad())?;
        let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
        return 10usize.checked_pow(exp).and_then(|p| p.checked_mul(mant)).ok_or_else(bad);
    }
    s.trim().parse().map_err(|_| bad())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let bytes = match &cli.file {
        Some(path) => match std::fs::read(path) {
            Ok(b) => Some(b),
            Err(e) => {
                eprintln!("invalid input: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => None,
    };
    let options = Options { instances: cli.instances, seed: cli.seed, max_table: cli.max_table };

    match run(cli.command, bytes.as_deref(), &options) {
        Ok(outcome) => {
            let json = serde_json::to_string_pretty(&outcome.report).expect("JSON value");
            let _ = writeln!(std::io::stdout().lock(), "{json}");
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
