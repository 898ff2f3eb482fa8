//! Partition dumps and one-shot bound reports.

use std::io::Write;

use wnequiv::approximation::build_hat_basis;
use wnequiv::bounds::{theorem1_total, BoundReport};
use wnequiv::measure::BaseMeasure;
use wnequiv::partition::build_partition;

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};
use crate::study::SUP_LABEL;

pub const PARTITION_HEADER: [&str; 6] = ["j", "lower", "upper", "mass", "barycenter", "w_j"];

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionRow {
    /// 1-based cell index.
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub barycenter: f64,
    /// `int u_j dnu0`; absent when `m = 1` (no hat basis).
    pub w_j: Option<f64>,
}

pub fn partition_table(measure: &BaseMeasure, m: usize) -> Result<Vec<PartitionRow>> {
    let p = build_partition(measure, m)?;
    let weights = if m >= 2 {
        Some(build_hat_basis(&p, measure)?.weights().to_vec())
    } else {
        None
    };
    Ok((0..m)
        .map(|j| {
            let (lower, upper) = p.cell_bounds(j);
            PartitionRow {
                j: j + 1,
                lower,
                upper,
                mass: p.computed_masses()[j],
                barycenter: p.barycenters()[j],
                w_j: weights.as_ref().map(|w| w[j]),
            }
        })
        .collect())
}

pub fn write_partition_csv<W: Write>(rows: &[PartitionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PARTITION_HEADER)?;
    for r in rows {
        w.write_record([
            r.j.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.mass.to_string(),
            r.barycenter.to_string(),
            r.w_j.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("partition table", e))
}

/// Per-member reports followed by the battery-wide one labelled `sup`.
pub fn bound_reports(config: &StudyConfig, n: u64, m: usize) -> Result<Vec<(String, BoundReport)>> {
    let p = build_partition(&config.measure, m)?;
    let mut out = Vec::new();
    for (i, f) in config.battery.iter().enumerate() {
        let r = theorem1_total(std::slice::from_ref(f), &config.measure, &p, n, config.c_r)?;
        out.push((config.member_label(i), r));
    }
    out.push((
        SUP_LABEL.to_string(),
        theorem1_total(&config.battery, &config.measure, &p, n, config.c_r)?,
    ));
    Ok(out)
}

pub fn write_bounds_csv<W: Write>(reports: &[(String, BoundReport)], out: W) -> Result<()> {
    BoundReport::write_csv(reports, out)?;
    Ok(())
}
