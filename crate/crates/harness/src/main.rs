use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wnequiv_harness::config::rule_m;
use wnequiv_harness::error::Origin;
use wnequiv_harness::{tables, ConfigError, HarnessError, Result, StudyConfig};

#[derive(Parser, Debug)]
#[command(name = "wnequiv", version, about = "Rate studies, verification suites and kernel demos")]
struct Cli {
    /// Configuration file; the built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound terms over the (n, m) grid with fitted log-log slopes.
    RateStudy,
    /// Run the verification suite; exit status 1 when any check fails.
    Verify,
    /// Kernel KS, Y* moment table and cell-probability diagnostics.
    KernelDemo,
    /// Dump the quantile partition and hat weights.
    Partition {
        #[arg(long, default_value_t = 8)]
        m: usize,
    },
    /// One-shot bound report per battery member and for the battery.
    Bounds {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        m: Option<usize>,
    },
}

fn load(cli: &Cli) -> Result<StudyConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::new(Origin::Flag("config".into()), "config", format!("cannot read {}: {e}", path.display()))
            })?;
            StudyConfig::parse(&text)?
        }
        None => StudyConfig::from_env()?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let config = load(cli)?;
    let dir = config.output_dir.clone();
    match &cli.command {
        Command::RateStudy => {
            let (_, paths) = wnequiv_harness::write_rate_study(&config, &dir)?;
            announce(&paths);
            Ok(0)
        }
        Command::Verify => {
            let (report, path) = wnequiv_harness::write_verification(&config, &dir)?;
            eprint!("{}", report.summary());
            announce(&[path]);
            Ok(report.exit_code() as u8)
        }
        Command::KernelDemo => {
            let (demo, paths) = wnequiv_harness::write_kernel_demo(&config, &dir)?;
            eprintln!(
                "kernel KS {:.4e} (critical {:.4e}); max Y* z-score {:.3}",
                demo.ks.statistic,
                demo.ks.critical,
                demo.moments.iter().map(|r| r.z()).fold(0.0, f64::max)
            );
            announce(&paths);
            Ok(if demo.passed() { 0 } else { 1 })
        }
        Command::Partition { m } => {
            if *m == 0 {
                return Err(ConfigError::new(Origin::Flag("m".into()), "m", "must be positive").into());
            }
            let rows = tables::partition_table(&config.measure, *m)?;
            emit(cli, &dir, "partition.csv", |w| tables::write_partition_csv(&rows, w))?;
            Ok(0)
        }
        Command::Bounds { n, m } => {
            let n = n.unwrap_or(config.n_grid[0]);
            let m = m.unwrap_or_else(|| match config.m_rho {
                Some(rho) => rule_m(n, rho),
                None => config.m_list[0],
            });
            if n == 0 || m < 2 {
                return Err(ConfigError::new(Origin::Flag("m".into()), "m", "need n >= 1 and m >= 2").into());
            }
            let reports = tables::bound_reports(&config, n, m)?;
            emit(cli, &dir, "bounds.csv", |w| tables::write_bounds_csv(&reports, w))?;
            Ok(0)
        }
    }
}

/// Tables go to stdout unless `--out` was given.
fn emit(
    cli: &Cli,
    dir: &std::path::Path,
    name: &str,
    write: impl FnOnce(&mut dyn std::io::Write) -> Result<()>,
) -> Result<()> {
    if cli.out.is_some() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display(), e))?;
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(|e| HarnessError::io(path.display(), e))?;
        write(&mut f)?;
        announce(&[path]);
        Ok(())
    } else {
        write(&mut std::io::stdout().lock())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    match wnequiv_harness::with_workers(workers, || run(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
