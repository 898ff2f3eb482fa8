//! End-to-end kernel demo: counts to kernel draws, increments to `Y*`, and the
//! cell-probability diagnostics of the interpolant.

use std::io::Write;

use wnequiv::approximation::build_hat_basis;
use wnequiv::kernels::{cell_probability_discrepancy, y_star_theoretical_moments, KernelDiagnostics};
use wnequiv::partition::build_partition;
use wnequiv::rng::derive_seed;
use wnequiv::stats::KS_CRITICAL_001;

use crate::checks::{kernel_ks_statistic, sample_cross, simulate_y_star, MOMENT_SE_LIMIT};
use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};

pub const KS_HEADER: [&str; 7] = ["member", "m", "n", "draws", "ks_statistic", "critical_value", "status"];
pub const MOMENT_HEADER: [&str; 8] = ["kind", "s", "t", "mc", "standard_error", "exact", "nu0_over_4n", "z"];
pub const DIAGNOSTIC_HEADER: [&str; 5] = ["j", "w_j", "normalization_defect", "cell_gap", "cell_probability_discrepancy"];

#[derive(Clone, Debug, PartialEq)]
pub struct KsRow {
    pub member: String,
    pub m: usize,
    pub n: u64,
    pub draws: usize,
    pub statistic: f64,
    pub critical: f64,
}

impl KsRow {
    pub fn passed(&self) -> bool {
        self.statistic < self.critical
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    /// `mean`, `variance` or `covariance`.
    pub kind: &'static str,
    pub s: f64,
    pub t: f64,
    pub mc: f64,
    pub standard_error: f64,
    /// Exact value for the construction.
    pub exact: f64,
    /// `nu0(I ∩ (-inf, s]) / (4n)`; empty for means.
    pub nu0_over_4n: Option<f64>,
}

impl MomentRow {
    pub fn z(&self) -> f64 {
        (self.mc - self.exact).abs() / self.standard_error
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelDemo {
    pub ks: KsRow,
    pub moments: Vec<MomentRow>,
    pub diagnostics: KernelDiagnostics,
}

impl KernelDemo {
    pub fn passed(&self) -> bool {
        self.ks.passed() && self.moments.iter().all(|r| r.z() < MOMENT_SE_LIMIT)
    }

    pub fn write_ks_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = &self.ks;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(KS_HEADER)?;
        w.write_record([
            k.member.clone(),
            k.m.to_string(),
            k.n.to_string(),
            k.draws.to_string(),
            k.statistic.to_string(),
            k.critical.to_string(),
            if k.passed() { "pass" } else { "fail" }.to_string(),
        ])?;
        w.flush().map_err(|e| HarnessError::io("kernel KS table", e))
    }

    pub fn write_moments_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(MOMENT_HEADER)?;
        for r in &self.moments {
            w.write_record([
                r.kind.to_string(),
                r.s.to_string(),
                r.t.to_string(),
                r.mc.to_string(),
                r.standard_error.to_string(),
                r.exact.to_string(),
                r.nu0_over_4n.map(|v| v.to_string()).unwrap_or_default(),
                r.z().to_string(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::io("moment table", e))
    }

    pub fn write_diagnostics_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = &self.diagnostics;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(DIAGNOSTIC_HEADER)?;
        for (j, (wj, gap)) in d.weights.iter().zip(&d.cell_gaps).enumerate() {
            w.write_record([
                (j + 1).to_string(),
                wj.to_string(),
                (wj - 1.0).abs().to_string(),
                gap.to_string(),
                d.cell_probability_discrepancy.to_string(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::io("diagnostics table", e))
    }
}

pub fn run_kernel_demo(config: &StudyConfig) -> Result<KernelDemo> {
    let d = &config.demo;
    let idx = d.member - 1;
    let f = &config.battery[idx];
    let measure = &config.measure;

    let statistic = kernel_ks_statistic(f, measure, d.m, d.n, d.draws, derive_seed(config.seed, 101))?;
    let ks = KsRow {
        member: config.member_label(idx),
        m: d.m,
        n: d.n,
        draws: d.draws,
        statistic,
        critical: KS_CRITICAL_001 / (d.draws as f64).sqrt(),
    };

    let iv = measure.interval();
    let times: Vec<f64> = d
        .times
        .iter()
        .copied()
        .filter(|t| iv.lower() <= *t && *t <= iv.upper())
        .collect();
    let mut moments = Vec::new();
    if !times.is_empty() {
        let (builder, paths) = simulate_y_star(f, measure, d.m, d.n, &times, d.paths, derive_seed(config.seed, 102))?;
        let basis = build_hat_basis(&build_partition(measure, d.m)?, measure)?;
        let np = paths.len() as f64;
        for (k, &t) in times.iter().enumerate() {
            let mean = paths.iter().map(|p| p[k]).sum::<f64>() / np;
            let (var, _) = sample_cross(&paths, k, k);
            let (theory_mean, _) = y_star_theoretical_moments(f, &basis, d.n, t)?;
            moments.push(MomentRow {
                kind: "mean",
                s: t,
                t,
                mc: mean,
                standard_error: (var / np).sqrt(),
                exact: theory_mean,
                nu0_over_4n: None,
            });
        }
        for a in 0..times.len() {
            for b in a..times.len() {
                let (mc, standard_error) = sample_cross(&paths, a, b);
                moments.push(MomentRow {
                    kind: if a == b { "variance" } else { "covariance" },
                    s: times[a],
                    t: times[b],
                    mc,
                    standard_error,
                    exact: builder.covariance(d.n, a, b),
                    nu0_over_4n: Some(measure.cdf(times[a])? / (4.0 * d.n as f64)),
                });
            }
        }
    }

    let diagnostics = cell_probability_discrepancy(f, measure, &build_partition(measure, d.m)?)?;
    Ok(KernelDemo {
        ks,
        moments,
        diagnostics,
    })
}
