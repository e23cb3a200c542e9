use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};

use lplab::harness::{self, Experiment, Subcommand};

#[derive(Parser)]
#[command(name = "lab", version, about = "L_p-contractivity laboratory for elliptic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output root in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Certify contractivity for each configured exponent.
    Certify(Common),
    /// Report the admissible exponent interval and the Sobolev comparison.
    Interval(Common),
    /// Project a field onto the unit L_p ball.
    Project(Common),
    /// Evolve an initial field and record L_p norm ratios.
    Evolve(Common),
    /// Search for fields with negative dissipativity gap.
    Search(Common),
    /// Run the finite-difference calculus checks.
    VerifyCalculus(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, common) = match cli.command {
        Command::Certify(c) => (Subcommand::Certify, c),
        Command::Interval(c) => (Subcommand::Interval, c),
        Command::Project(c) => (Subcommand::Project, c),
        Command::Evolve(c) => (Subcommand::Evolve, c),
        Command::Search(c) => (Subcommand::Search, c),
        Command::VerifyCalculus(c) => (Subcommand::VerifyCalculus, c),
    };
    match execute(sub, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let report = serde_json::json!({ "error": e.to_string(), "subcommand": sub.name() });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}

fn execute(sub: Subcommand, common: Common) -> lplab::Result<bool> {
    let mut exp = Experiment::load(&common.config)?;
    if let Some(seed) = common.seed {
        exp.config.seed = seed;
    }
    if let Some(out) = common.out {
        let cwd = std::env::current_dir()?;
        exp.config.out = Some(cwd.join(out));
    }
    let pool = harness::thread_pool()?;
    let record = pool.install(|| harness::run(&exp, sub))?;
    println!("{}", record.run_dir.display());
    for a in &record.artifacts {
        println!("  {a}");
    }
    println!("{}", if record.passed { "PASS" } else { "FAIL" });
    Ok(record.passed)
}
