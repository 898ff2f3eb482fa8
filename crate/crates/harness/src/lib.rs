//! Batch front-end for the `wnequiv` library: configuration, rate studies,
//! the verification suite, kernel demos and table dumps.

pub mod checks;
pub mod config;
pub mod demo;
pub mod error;
pub mod report;
pub mod study;
pub mod tables;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use config::StudyConfig;
pub use error::{ConfigError, HarnessError, Result};
pub use report::{CheckOutcome, Status, SuiteReport};

pub const RATE_STUDY_CSV: &str = "rate_study.csv";
pub const RATE_SLOPES_CSV: &str = "rate_slopes.csv";
pub const RATE_STUDY_DAT: &str = "rate_study.dat";
pub const VERIFY_CSV: &str = "verify.csv";
pub const KERNEL_KS_CSV: &str = "kernel_ks.csv";
pub const YSTAR_MOMENTS_CSV: &str = "ystar_moments.csv";
pub const KERNEL_DIAGNOSTICS_CSV: &str = "kernel_diagnostics.csv";

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display(), e))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path.display(), e))
}

/// Runs the rate study and writes its tables into `dir`; returns the written paths.
pub fn write_rate_study(config: &StudyConfig, dir: &Path) -> Result<(study::RateStudy, Vec<PathBuf>)> {
    let s = study::run_rate_study(config)?;
    s.write_rows_csv(create(dir, RATE_STUDY_CSV)?)?;
    s.write_slopes_csv(create(dir, RATE_SLOPES_CSV)?)?;
    let mut paths = vec![dir.join(RATE_STUDY_CSV), dir.join(RATE_SLOPES_CSV)];
    if config.gnuplot {
        s.write_gnuplot(create(dir, RATE_STUDY_DAT)?)?;
        paths.push(dir.join(RATE_STUDY_DAT));
    }
    Ok((s, paths))
}

pub fn write_verification(config: &StudyConfig, dir: &Path) -> Result<(SuiteReport, PathBuf)> {
    let r = checks::run_verification_suite(config)?;
    r.write_csv(create(dir, VERIFY_CSV)?)?;
    Ok((r, dir.join(VERIFY_CSV)))
}

pub fn write_kernel_demo(config: &StudyConfig, dir: &Path) -> Result<(demo::KernelDemo, Vec<PathBuf>)> {
    let d = demo::run_kernel_demo(config)?;
    d.write_ks_csv(create(dir, KERNEL_KS_CSV)?)?;
    d.write_moments_csv(create(dir, YSTAR_MOMENTS_CSV)?)?;
    d.write_diagnostics_csv(create(dir, KERNEL_DIAGNOSTICS_CSV)?)?;
    let paths = [KERNEL_KS_CSV, YSTAR_MOMENTS_CSV, KERNEL_DIAGNOSTICS_CSV]
        .iter()
        .map(|n| dir.join(n))
        .collect();
    Ok((d, paths))
}

/// Runs `f` on a dedicated pool with `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    match b.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
