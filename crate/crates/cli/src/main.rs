use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sagin_core::runner::{run_figure, run_metric, run_validation, Figure, Metric, ResultTable, Suite};
use sagin_core::scenario::Scenario;
use sagin_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sagin", version, about = "Multi-QoS metrics for satellite/UAV/ground networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV file (eval, sweep, validate) or directory (figures).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long, global = true, env = "SAGIN_SEED")]
    seed: Option<u64>,
    /// Overrides run.trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Overrides run.tol.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SAGIN_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one metric at the scenario (or along its configured sweep).
    Eval {
        #[arg(long)]
        metric: Metric,
        /// Add Monte Carlo counterparts and standard errors.
        #[arg(long)]
        oracle: bool,
    },
    /// Evaluate one metric along a parameter sweep.
    Sweep {
        #[arg(long)]
        metric: Metric,
        /// Dotted scenario key, e.g. uav.density.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        oracle: bool,
    },
    /// Run validation suites; exits with status 1 if any check fails.
    Validate {
        /// Suite id, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Write the canned figure datasets.
    Figures {
        /// Figure id (fig2 … fig9), or `all`.
        #[arg(long, default_value = "all")]
        figure: String,
    },
}

enum Failure {
    Usage(String),
    Validation,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load_scenario(c: &Common) -> Result<Scenario, Failure> {
    let mut sc = match &c.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(s) = c.seed {
        sc.run_seed = s;
    }
    if let Some(t) = c.trials {
        sc.run_trials = t;
    }
    if let Some(t) = c.tol {
        sc.run_tol = t;
    }
    sc.validate()?;
    Ok(sc)
}

fn emit(table: &ResultTable, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => table.write_csv(p)?,
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn pick<T: Copy + std::str::FromStr<Err = Error>>(id: &str, all: &[T]) -> Result<Vec<T>, Failure> {
    if id == "all" {
        Ok(all.to_vec())
    } else {
        Ok(vec![id.parse::<T>()?])
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let mut sc = load_scenario(&cli.common)?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Eval { metric, oracle } => emit(&run_metric(&sc, metric, oracle)?, out),
        Command::Sweep {
            metric,
            param,
            values,
            oracle,
        } => {
            sc.set_sweep(&param, values)?;
            emit(&run_metric(&sc, metric, oracle)?, out)
        }
        Command::Validate { suite } => {
            let mut combined: Option<ResultTable> = None;
            let mut passed = true;
            for s in pick(&suite, Suite::ALL)? {
                log::info!("running suite {s}");
                let r = run_validation(&sc, s)?;
                passed &= r.passed;
                match combined.as_mut() {
                    None => {
                        let mut t = r.table;
                        t.metadata.retain(|(k, _)| k != "suite");
                        combined = Some(t);
                    }
                    Some(t) => t.rows.extend(r.table.rows),
                }
            }
            if let Some(t) = combined {
                emit(&t, out)?;
            }
            if passed {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::Figures { figure } => {
            let figs = pick(&figure, Figure::ALL)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            }
            for f in figs {
                log::info!("building {f}");
                let t = run_figure(&sc, f)?;
                match out {
                    Some(dir) => t.write_csv(&dir.join(format!("{f}.csv")))?,
                    None => print!("{}", t.to_csv()),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
