use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use blackstock_lab::experiments::{self, RunOptions, Scenario, ScenarioConfig};
use blackstock_lab::Error;

/// Runs one experiment scenario and writes `<scenario>.csv`,
/// `<scenario>.verdicts.csv` and `<scenario>.gp`.
///
/// Exit status: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "blackstock-lab", version)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,

    /// TOML scenario configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (default: `[output] dir` from the config, else `.`).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Tolerance on fitted exponents.
    #[arg(long)]
    tol_alpha: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let config = ScenarioConfig::load(&cli.config)?;
    let base_dir = cli.config.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    let out_dir = match (&cli.out_dir, &config.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base_dir.join(d),
        (None, None) => PathBuf::from("."),
    };
    let opts = RunOptions {
        tol_alpha: cli.tol_alpha,
        base_dir,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| experiments::run(cli.scenario, &config, &opts))?;
    let paths = report.write(&out_dir)?;

    for c in &report.checks {
        let n = c.n.map(|n| format!(" n={n}")).unwrap_or_default();
        println!("{:<6} {}{}", c.verdict, c.check, n);
    }
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("{} of {} checks failed", report.failures().count(), report.checks.len());
        Ok(1)
    }
}
