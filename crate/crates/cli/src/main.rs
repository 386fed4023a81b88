use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nearhom_cli::commands::{self, EXIT_CONFIG, EXIT_DIVERGED};
use nearhom_cli::config::{GroupName, ScenarioConfig};
use nearhom_cli::output::OutDir;
use nearhom_core::liegroup::{So3, SoN, Su2, U1};

#[derive(Parser)]
#[command(name = "nearhom", version, about = "Averaging near-homomorphisms on proper groupoids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record wall-clock times (otherwise written as 0 so outputs are reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Iterate the averaging step and linearize (if enabled).
    Run,
    /// Check the groupoid axioms of the configured chart.
    CheckAxioms,
    /// Compare direct and lemma-constructed Haar systems.
    HaarTest,
    /// Run the iteration for each epsilon in `epsilons`.
    ConvergenceStudy,
    /// Iterate, then build the induced action and its Bochner linearization.
    Linearize,
}

macro_rules! dispatch {
    ($cmd:expr, $cfg:expr, $out:expr, $($group:expr),+) => {{
        let (cfg, out) = ($cfg, $out);
        match $cmd {
            Command::Run => commands::run($($group)+, cfg, out),
            Command::CheckAxioms => commands::check_axioms_cmd($($group)+, cfg, out),
            Command::HaarTest => commands::haar_test($($group)+, cfg, out),
            Command::ConvergenceStudy => commands::convergence_study($($group)+, cfg, out),
            Command::Linearize => commands::linearize_cmd($($group)+, cfg, out),
        }
    }};
}

fn execute(command: Command, cfg: &ScenarioConfig, out: &OutDir) -> anyhow::Result<i32> {
    match cfg.group {
        GroupName::U1 => dispatch!(command, cfg, out, Arc::new(U1::new())),
        GroupName::Su2 => dispatch!(command, cfg, out, Arc::new(Su2::new())),
        GroupName::So3 => dispatch!(command, cfg, out, Arc::new(So3::new())),
        GroupName::So(n) => dispatch!(command, cfg, out, Arc::new(SoN::new(n)?)),
    }
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let Some(path) = &cli.config else {
        return config_error("--config <path> is required");
    };
    let mut cfg = match ScenarioConfig::load(path) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            return config_error("--workers must be >= 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return config_error(e);
        }
    }
    let root = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output));
    let out = match OutDir::create(&root, cli.timings) {
        Ok(o) => o,
        Err(e) => return config_error(format!("{e:#}")),
    };
    match execute(cli.command, &cfg, &out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let _ = out.write_json("error.json", &serde_json::json!({ "config": cfg, "cause": format!("{e:#}") }));
            ExitCode::from(EXIT_DIVERGED as u8)
        }
    }
}
