use clap::{Parser, ValueEnum};
use lowmach::cli_io::{emit_plotdata, exit_code, run, RunConfig, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

/// Threads used by the parallel kernels; unset means all cores.
const THREADS_ENV: &str = "LOWMACH_THREADS";

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Filtered,
    Resonance,
    Prandtl,
    Assemble,
    Sweep,
    Verify,
    /// Derive tidy plotting tables from the reports in `--out`.
    Plotdata,
}

#[derive(Parser)]
#[command(version, about = "Low-Mach slab construction: filtered dynamics, layers, residual sweeps")]
struct Cli {
    scenario: Command,
    /// Sectioned `key = value` config; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn scenario(c: Command) -> Option<Scenario> {
    Some(match c {
        Command::Filtered => Scenario::Filtered,
        Command::Resonance => Scenario::Resonance,
        Command::Prandtl => Scenario::Prandtl,
        Command::Assemble => Scenario::Assemble,
        Command::Sweep => Scenario::Sweep,
        Command::Verify => Scenario::Verify,
        Command::Plotdata => return None,
    })
}

fn execute(cli: Cli) -> lowmach::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(Scenario::default()),
    };
    if let Some(o) = cli.out {
        cfg.output = o;
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    let Some(sc) = scenario(cli.scenario) else {
        for n in emit_plotdata(&cfg.output)? {
            println!("{n}");
        }
        return Ok(());
    };
    cfg.scenario = sc;
    for f in &run(&cfg)?.files {
        println!("{}  {}", f.sha256, f.path);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
