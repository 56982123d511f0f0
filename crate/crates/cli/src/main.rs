mod config;
mod exec;

use clap::{Parser, Subcommand};
use config::{Experiment, RunConfig};
use exec::Failure;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Default worker count when neither `--threads` nor the config sets one.
const THREADS_ENV: &str = "HERALDED_THREADS";

#[derive(Parser)]
#[command(name = "heralded", version, about = "Heralded photonic state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write <experiment>.csv and <experiment>.json.
    Run {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Allow full-resolution grids for the expensive experiments.
        #[arg(long)]
        long: bool,
    },
    /// List experiments and builtin circuits.
    List,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the brute-force oracles.
    Oracle,
    /// Print the config JSON schema.
    Schema,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn threads(flag: Option<usize>, cfg: Option<usize>) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag.or(cfg) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!("{THREADS_ENV}: {s:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::List => {
            println!("experiments:");
            for e in Experiment::ALL {
                println!("  {:<15} {}", e.id(), e.summary());
            }
            println!("circuits:");
            for name in heralded::circuits::builtin_names() {
                let c = heralded::circuits::builtin(name)?;
                let k = c.heralds.len();
                println!("  {:<15} {} modes, {} photons, {k} herald pattern{}", name, c.modes, c.n_photons(), if k == 1 { "" } else { "s" });
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            cfg.validate(&base_dir(&config))?;
            println!("ok {} config_hash={}", cfg.experiment.id(), cfg.hash());
            Ok(())
        }
        Command::Schema => {
            print!("{}", config::schema_json());
            Ok(())
        }
        Command::Oracle => {
            let checks = heralded::oracle::run_all();
            println!("{:<38} {:>6} {:>12} {:>10}  result", "oracle", "cases", "max_error", "tolerance");
            let mut ok = true;
            for c in &checks {
                ok &= c.passed();
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                println!("{:<38} {:>6} {:>12.3e} {:>10.1e}  {verdict}", c.name, c.cases, c.max_error, c.tolerance);
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Core(heralded::Error::Numerical("oracle mismatch".into())))
            }
        }
        Command::Run { experiment, config, out, threads: flag, long } => {
            let cfg = RunConfig::load(&config)?;
            let Some(exp) = Experiment::parse(&experiment) else {
                return Err(Failure::Config(format!("unknown experiment {experiment:?}; see `heralded list`")));
            };
            if exp != cfg.experiment {
                return Err(Failure::Config(format!(
                    "experiment: config is for {}, not {}",
                    cfg.experiment.id(),
                    exp.id()
                )));
            }
            if let Some(n) = threads(flag, cfg.threads)? {
                if n == 0 {
                    return Err(Failure::Config("threads: must be at least 1".into()));
                }
                // only fails if a pool already exists, which cannot happen here
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let table = exec::execute(&cfg, &base_dir(&config), long)?;
            let (csv, json) = exec::write_outputs(&cfg, &table, &out)?;
            println!("wrote {} and {} ({} rows)", csv.display(), json.display(), table.rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
