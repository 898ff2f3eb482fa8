//! Rate studies: bound terms over an `(n, m)` grid and their fitted log-log slopes.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use wnequiv::approximation::{error_functionals, ApproxErrors};
use wnequiv::bounds::{carter_bound, theorem1_total};
use wnequiv::partition::build_partition;
use wnequiv::stats::log_log_slope;

use crate::checks::DEGENERATE_LEVEL;
use crate::config::{rule_m, StudyConfig};
use crate::error::{HarnessError, Result};

pub const RATE_HEADER: [&str; 10] = ["n", "m", "member", "h", "a", "b", "step1", "step4", "carter", "total"];
pub const SLOPE_HEADER: [&str; 8] = ["member", "column", "axis", "fixed", "slope", "r_squared", "points", "status"];
pub const SUP_LABEL: &str = "sup";

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub n: u64,
    pub m: usize,
    pub member: String,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub step1: f64,
    pub step4: f64,
    pub carter: f64,
    pub total: f64,
}

impl RateRow {
    fn from_errors(n: u64, m: usize, member: String, e: ApproxErrors, c_r: f64) -> wnequiv::Result<Self> {
        let rn = (n as f64).sqrt();
        let carter = carter_bound(m, n, c_r)?;
        Ok(Self {
            n,
            m,
            member,
            h: e.h,
            a: e.a,
            b: e.b,
            step1: rn * e.h,
            step4: 2.0 * rn * (e.a + e.b),
            carter,
            total: rn * e.sum() + carter,
        })
    }

    const COLUMNS: [&'static str; 7] = ["h", "a", "b", "step1", "step4", "carter", "total"];

    fn column(&self, name: &str) -> f64 {
        match name {
            "h" => self.h,
            "a" => self.a,
            "b" => self.b,
            "step1" => self.step1,
            "step4" => self.step4,
            "carter" => self.carter,
            _ => self.total,
        }
    }

    fn record(&self) -> [String; 10] {
        [
            self.n.to_string(),
            self.m.to_string(),
            self.member.clone(),
            self.h.to_string(),
            self.a.to_string(),
            self.b.to_string(),
            self.step1.to_string(),
            self.step4.to_string(),
            self.carter.to_string(),
            self.total.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRow {
    pub member: String,
    pub column: String,
    /// `m` (fixed `n`) or `n` (along the rule schedule).
    pub axis: &'static str,
    pub fixed: String,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: usize,
}

impl SlopeRow {
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }

    fn record(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.member.clone(),
            self.column.clone(),
            self.axis.to_string(),
            self.fixed.clone(),
            opt(self.slope),
            opt(self.r_squared),
            self.points.to_string(),
            if self.is_degenerate() { "degenerate" } else { "ok" }.to_string(),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    pub slopes: Vec<SlopeRow>,
}

impl RateStudy {
    pub fn slope(&self, member: &str, column: &str, axis: &str, fixed: &str) -> Option<&SlopeRow> {
        self.slopes
            .iter()
            .find(|s| s.member == member && s.column == column && s.axis == axis && s.fixed == fixed)
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RATE_HEADER)?;
        for r in &self.rows {
            w.write_record(r.record())?;
        }
        w.flush().map_err(|e| HarnessError::io("rate study table", e))
    }

    pub fn write_slopes_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SLOPE_HEADER)?;
        for s in &self.slopes {
            w.write_record(s.record())?;
        }
        w.flush().map_err(|e| HarnessError::io("slope table", e))
    }

    /// Whitespace-separated blocks, one per member, separated by two blank lines
    /// so that gnuplot's `index` selects a member.
    pub fn write_gnuplot<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| HarnessError::io("gnuplot data", e);
        let mut blocks: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !blocks.contains(&r.member.as_str()) {
                blocks.push(&r.member);
            }
        }
        for (i, member) in blocks.iter().enumerate() {
            if i > 0 {
                writeln!(out, "\n").map_err(io)?;
            }
            writeln!(out, "# member {member}").map_err(io)?;
            writeln!(out, "# {}", RATE_HEADER.iter().filter(|c| **c != "member").cloned().collect::<Vec<_>>().join(" ")).map_err(io)?;
            for r in self.rows.iter().filter(|r| r.member == *member) {
                writeln!(
                    out,
                    "{} {} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
                    r.n, r.m, r.h, r.a, r.b, r.step1, r.step4, r.carter, r.total
                )
                .map_err(io)?;
            }
        }
        Ok(())
    }
}

fn fit(points: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    if points.len() < 2 || points.iter().any(|(_, y)| *y < DEGENERATE_LEVEL) {
        return (None, None);
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    match log_log_slope(&x, &y) {
        Some(f) => (Some(f.slope), Some(f.r_squared)),
        None => (None, None),
    }
}

/// One row per `(n, m, member)` plus a battery-wide `sup` row, and fitted slopes of
/// every column against `m` at each fixed `n` and against `n` along `m = ceil(n^rho)`.
pub fn run_rate_study(config: &StudyConfig) -> Result<RateStudy> {
    let mut all_m: Vec<usize> = config.n_grid.iter().flat_map(|&n| config.m_values(n)).collect();
    all_m.sort_unstable();
    all_m.dedup();

    let partitions = all_m
        .par_iter()
        .map(|&m| build_partition(&config.measure, m).map(|p| (m, p)))
        .collect::<wnequiv::Result<BTreeMap<_, _>>>()?;
    let jobs: Vec<(usize, usize)> = all_m
        .iter()
        .flat_map(|&m| (0..config.battery.len()).map(move |i| (m, i)))
        .collect();
    let errors = jobs
        .par_iter()
        .map(|&(m, i)| error_functionals(&config.battery[i], &config.measure, &partitions[&m]).map(|e| ((m, i), e)))
        .collect::<wnequiv::Result<BTreeMap<_, _>>>()?;

    let labels: Vec<String> = (0..config.battery.len()).map(|i| config.member_label(i)).collect();
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        for m in config.m_values(n) {
            for (i, label) in labels.iter().enumerate() {
                rows.push(RateRow::from_errors(n, m, label.clone(), errors[&(m, i)], config.c_r)?);
            }
            let sup = theorem1_total(&config.battery, &config.measure, &partitions[&m], n, config.c_r)?;
            rows.push(RateRow {
                n,
                m,
                member: SUP_LABEL.to_string(),
                h: sup.sup_h,
                a: sup.sup_a,
                b: sup.sup_b,
                step1: sup.term_step1,
                step4: sup.term_step4,
                carter: sup.term_carter,
                total: sup.total,
            });
        }
    }

    let mut members = labels.clone();
    members.push(SUP_LABEL.to_string());
    let mut slopes = Vec::new();
    for member in &members {
        for &n in &config.n_grid {
            let subset: Vec<&RateRow> = rows.iter().filter(|r| r.n == n && &r.member == member).collect();
            for col in RateRow::COLUMNS {
                let pts: Vec<(f64, f64)> = subset.iter().map(|r| (r.m as f64, r.column(col))).collect();
                let (slope, r_squared) = fit(&pts);
                slopes.push(SlopeRow {
                    member: member.clone(),
                    column: col.to_string(),
                    axis: "m",
                    fixed: format!("n={n}"),
                    slope,
                    r_squared,
                    points: pts.len(),
                });
            }
        }
        if let Some(rho) = config.m_rho {
            let subset: Vec<&RateRow> = rows
                .iter()
                .filter(|r| &r.member == member && r.m == rule_m(r.n, rho))
                .collect();
            for col in RateRow::COLUMNS {
                let pts: Vec<(f64, f64)> = subset.iter().map(|r| (r.n as f64, r.column(col))).collect();
                let (slope, r_squared) = fit(&pts);
                slopes.push(SlopeRow {
                    member: member.clone(),
                    column: col.to_string(),
                    axis: "n",
                    fixed: format!("m=ceil(n^{rho})"),
                    slope,
                    r_squared,
                    points: pts.len(),
                });
            }
        }
    }
    Ok(RateStudy { rows, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn config(battery: &str, extra: &str) -> StudyConfig {
        let text = format!(
            "schema_version = 1\n[measure]\nfamily = uniform\n[battery]\n{battery}\n[study]\nn_grid = 1000, 100000\nm_list = 8, 16, 32\n{extra}\n"
        );
        StudyConfig::parse_with_env(&text, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn constant_member_is_degenerate() {
        let s = run_rate_study(&config("member = constant", "m_rho = 0.4")).unwrap();
        let row = &s.rows[0];
        assert!(row.h < DEGENERATE_LEVEL && row.a < DEGENERATE_LEVEL && row.b < DEGENERATE_LEVEL);
        let h = s.slope("1:constant", "h", "m", "n=1000").unwrap();
        assert!(h.is_degenerate());
        assert!(s.slope("1:constant", "carter", "m", "n=1000").unwrap().slope.unwrap() > 1.0);
    }

    #[test]
    fn row_layout_and_schedule() {
        let s = run_rate_study(&config("member = sinusoidal amplitude=0.3", "m_rho = 0.4")).unwrap();
        // n = 1000 pairs with 8, 16, 32 (16 is the rule value); n = 1e5 adds m = 100
        assert_eq!(s.rows.len(), 3 * 2 + 4 * 2);
        assert!(s.rows.iter().filter(|r| r.member == SUP_LABEL).all(|r| r.total > 0.0));
        let slope = s.slope("1:sinusoidal(a=0.3,k=1,phase=0)", "h", "m", "n=1000").unwrap();
        assert!((-1.7..=-1.3).contains(&slope.slope.unwrap()));
        let along = s.slope(SUP_LABEL, "total", "n", "m=ceil(n^0.4)").unwrap();
        assert!(along.slope.unwrap() < 0.0);
    }

    #[test]
    fn csv_headers() {
        let s = run_rate_study(&config("member = constant", "")).unwrap();
        let mut buf = Vec::new();
        s.write_rows_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,m,member,h,a,b,step1,step4,carter,total\n"));
        let mut buf = Vec::new();
        s.write_slopes_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("member,column,axis,fixed,slope,r_squared,points,status\n"));
        assert!(text.contains(",degenerate\n"));
    }
}
