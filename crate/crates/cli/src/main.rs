use std::fs::File;
use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ssi_core::config::SsiConfig;
use ssi_core::interp::BranchPolicy;
use ssi_core::repl::Repl;

/// Run a system-specific interpreter described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "ssi", version)]
struct Args {
    /// SSI config file
    config: PathBuf,
    /// Read commands from FILE instead of the terminal (batch mode)
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,
    /// ask, assume-true, assume-false or fail; overrides the config
    #[arg(long, value_name = "MODE")]
    branch_policy: Option<BranchPolicy>,
    /// Statement budget per command
    #[arg(long, value_name = "N")]
    max_steps: Option<u64>,
    /// List the registered models and exit
    #[arg(long)]
    list_models: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ssi: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let cfg = SsiConfig::load(&args.config)?;
    let mut s = cfg.instantiate(&ssi_pinctrl::register_profile)?;
    let unresolved = cfg.unresolved_entries(&mut s);
    if !unresolved.is_empty() {
        return Err(format!("commands with no entry function: {}", unresolved.join(", ")).into());
    }
    let batch = args.script.is_some();
    let policy = match args.branch_policy {
        Some(p) => p,
        None => cfg.policy()?.unwrap_or(if batch { BranchPolicy::Fail } else { BranchPolicy::Ask }),
    };
    s.policy = policy;
    if let Some(n) = args.max_steps {
        s.max_steps = n;
    }
    if args.list_models {
        for name in s.hook_names() {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let input: Box<dyn io::BufRead> = match &args.script {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(io::stdin().lock()),
    };
    let mut repl = Repl::new(input, Box::new(io::stdout().lock()), Box::new(io::stderr()), batch);
    let outcome = repl.run(&mut s)?;
    Ok(if outcome.success() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
