//! Assembled upper bounds: the Hellinger step, the multinomial-to-normal
//! term, the Gaussian step, and their totals per battery or per class.

use std::io::Write;

use rayon::prelude::*;

use crate::approximation::{error_functionals, lemma_l2_bound, ApproxErrors};
use crate::error::{Error, Result};
use crate::experiments::{cell_probabilities, csv_error};
use crate::measure::{BaseMeasure, DensityParameter};
use crate::partition::QuantilePartition;

/// `sqrt(n) H_m(f)`.
pub fn step1_bound(f: &DensityParameter, measure: &BaseMeasure, partition: &QuantilePartition, n: u64) -> Result<f64> {
    Ok((n as f64).sqrt() * error_functionals(f, measure, partition)?.h)
}

/// `C_R m ln(m) / sqrt(n)`.
pub fn carter_bound(m: usize, n: u64, c_r: f64) -> Result<f64> {
    if m < 2 || n == 0 || !(c_r > 0.0) {
        return Err(Error::domain(format!("need m >= 2, n >= 1, C_R > 0; got {m}, {n}, {c_r}")));
    }
    let mf = m as f64;
    Ok(c_r * mf * mf.ln() / (n as f64).sqrt())
}

/// `max gamma / min gamma <= r`.
pub fn ratio_condition(gammas: &[f64], r: f64) -> bool {
    let hi = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = gammas.iter().copied().fold(f64::INFINITY, f64::min);
    lo > 0.0 && hi / lo <= r * (1.0 + 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step4 {
    /// `2 sqrt(n) A_m`
    pub a_part: f64,
    /// `2 sqrt(n) B_m`
    pub b_part: f64,
}

impl Step4 {
    pub fn total(&self) -> f64 {
        self.a_part + self.b_part
    }
}

fn step4_from(e: &ApproxErrors, n: u64) -> Step4 {
    let c = 2.0 * (n as f64).sqrt();
    Step4 {
        a_part: c * e.a,
        b_part: c * e.b,
    }
}

/// `2 sqrt(n) (A_m(f) + B_m(f))`, split into its two parts.
pub fn step4_bound(f: &DensityParameter, measure: &BaseMeasure, partition: &QuantilePartition, n: u64) -> Result<Step4> {
    Ok(step4_from(&error_functionals(f, measure, partition)?, n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: u64,
    pub m: usize,
    pub c_r: f64,
    /// `R = M / kappa` used for the ratio check.
    pub ratio_limit: f64,
    /// Largest `H`, `A`, `B` over the battery, or the class bounds.
    pub sup_h: f64,
    pub sup_a: f64,
    pub sup_b: f64,
    pub term_discretization: f64,
    pub term_carter: f64,
    pub term_step1: f64,
    pub term_step4: f64,
    pub total: f64,
    /// Whether every cell-probability vector met `max/min <= R`.
    pub ratio_ok: bool,
}

pub const BOUND_REPORT_HEADER: [&str; 14] = [
    "n",
    "m",
    "c_r",
    "ratio_limit",
    "sup_h",
    "sup_a",
    "sup_b",
    "term_discretization",
    "term_carter",
    "term_step1",
    "term_step4",
    "total",
    "ratio_ok",
    "label",
];

impl BoundReport {
    pub fn csv_row(&self, label: &str) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.m.to_string(),
            self.c_r.to_string(),
            self.ratio_limit.to_string(),
            self.sup_h.to_string(),
            self.sup_a.to_string(),
            self.sup_b.to_string(),
            self.term_discretization.to_string(),
            self.term_carter.to_string(),
            self.term_step1.to_string(),
            self.term_step4.to_string(),
            self.total.to_string(),
            self.ratio_ok.to_string(),
            label.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(reports: &[(String, BoundReport)], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BOUND_REPORT_HEADER).map_err(csv_error)?;
        for (label, r) in reports {
            w.write_record(r.csv_row(label)).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

fn assemble(
    n: u64,
    m: usize,
    c_r: f64,
    ratio_limit: f64,
    (h, a, b): (f64, f64, f64),
    ratio_ok: bool,
) -> Result<BoundReport> {
    let rn = (n as f64).sqrt();
    let term_carter = if m >= 2 { carter_bound(m, n, c_r)? } else { 0.0 };
    let term_discretization = rn * (h + a + b);
    Ok(BoundReport {
        n,
        m,
        c_r,
        ratio_limit,
        sup_h: h,
        sup_a: a,
        sup_b: b,
        term_discretization,
        term_carter,
        term_step1: rn * h,
        term_step4: 2.0 * rn * (a + b),
        total: term_discretization + term_carter,
        ratio_ok,
    })
}

/// Theorem-1 shape `sqrt(n) max_f (A + B + H) + C_R m ln m / sqrt(n)`, the
/// max taken over `battery` as an inner approximation of the class.
pub fn theorem1_total(
    battery: &[DensityParameter],
    measure: &BaseMeasure,
    partition: &QuantilePartition,
    n: u64,
    c_r: f64,
) -> Result<BoundReport> {
    if battery.is_empty() {
        return Err(Error::domain("empty battery"));
    }
    let rows = battery
        .par_iter()
        .map(|f| {
            let e = error_functionals(f, measure, partition)?;
            let r = f.upper() / f.kappa();
            let ok = ratio_condition(&cell_probabilities(f, measure, partition)?, r);
            Ok((e, r, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .map(|(e, _, _)| *e)
        .fold(None, |acc: Option<ApproxErrors>, e| match acc {
            Some(b) if b.sum() >= e.sum() => Some(b),
            _ => Some(e),
        })
        .expect("nonempty");
    let ratio_limit = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let ratio_ok = rows.iter().all(|r| r.2);
    assemble(n, partition.m(), c_r, ratio_limit, (best.h, best.a, best.b), ratio_ok)
}

/// Class-uniform bound from the explicit L2 constant.
///
/// `H <= sqrt(L(gamma, K, M) / (4 kappa))`; the `sqrt(f)` interpolation error
/// uses the same constant with `(gamma, K / sqrt(kappa), sqrt(M))`, and the
/// root-mass defect is charged the same amount.
#[allow(clippy::too_many_arguments)]
pub fn corollary1_total(
    gamma: f64,
    k: f64,
    kappa: f64,
    big_m: f64,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
    n: u64,
    c_r: f64,
) -> Result<BoundReport> {
    if !measure.interval().is_compact() {
        return Err(Error::Unsupported("class bound needs a compact interval".into()));
    }
    if !(kappa > 0.0 && big_m >= kappa) {
        return Err(Error::domain(format!("need 0 < kappa <= M, got {kappa}, {big_m}")));
    }
    if measure.total_mass() > 1.0 / kappa * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "nu0(I) = {} exceeds 1 / kappa = {}: no density in the class",
            measure.total_mass(),
            1.0 / kappa
        )));
    }
    let h = (lemma_l2_bound(gamma, k, big_m, partition)? / (4.0 * kappa)).sqrt();
    let a = lemma_l2_bound(gamma, k / kappa.sqrt(), big_m.sqrt(), partition)?.sqrt();
    assemble(n, partition.m(), c_r, big_m / kappa, (h, a, a), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_partition;

    fn setup(m: usize) -> (BaseMeasure, DensityParameter, QuantilePartition) {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let p = build_partition(&u, m).unwrap();
        (u, f, p)
    }

    #[test]
    fn step1_examples() {
        let (u, f, p) = setup(16);
        let c = DensityParameter::constant(&u).unwrap();
        assert!(step1_bound(&c, &u, &p, 100).unwrap() < 1e-7);
        let v = step1_bound(&f, &u, &p, 100).unwrap();
        assert!((v / (10.0 * 4.716_556_177_960e-3) - 1.0).abs() < 1e-8);
        let v4 = step1_bound(&f, &u, &p, 400).unwrap();
        assert!((v4 / v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn carter_examples() {
        assert!((carter_bound(10, 10_000, 1.0).unwrap() - 0.230_258_509_3).abs() < 1e-9);
        assert!((carter_bound(2, 4, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let mut prev = 0.0;
        for m in 3..50 {
            let v = carter_bound(m, 100, 1.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(carter_bound(1, 100, 1.0).is_err());
        assert!(ratio_condition(&[0.3, 0.4], 13.0 / 7.0));
        assert!(!ratio_condition(&[0.1, 0.9], 2.0));
    }

    #[test]
    fn step4_examples() {
        let (u, f, p) = setup(16);
        let c = DensityParameter::constant(&u).unwrap();
        assert!(step4_bound(&c, &u, &p, 100).unwrap().total() < 1e-7);
        let s = step4_bound(&f, &u, &p, 100).unwrap();
        assert!((s.a_part / (20.0 * 4.703_845_194_771e-3) - 1.0).abs() < 1e-8);
        assert!((s.b_part / (20.0 * 9.211_469_527_994e-5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn theorem1_examples() {
        let (u, f, _) = setup(2);
        let c = DensityParameter::constant(&u).unwrap();
        let p = build_partition(&u, 40).unwrap();
        let r = theorem1_total(&[c.clone()], &u, &p, 10_000, 1.0).unwrap();
        assert!(r.term_discretization < 1e-6);
        assert!((r.total - r.term_carter).abs() < 1e-6);
        let r = theorem1_total(&[c, f], &u, &p, 10_000, 1.0).unwrap();
        assert!((r.total - 1.702_698_0).abs() < 1e-6, "{}", r.total);
        assert!(r.ratio_ok);
        assert!(theorem1_total(&[], &u, &p, 10, 1.0).is_err());
    }

    #[test]
    fn theorem1_decreasing_along_schedule() {
        let (u, f, _) = setup(2);
        let totals: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&n| {
                let m = ((n as f64).powf(0.4) - 1e-9).ceil() as usize;
                let p = build_partition(&u, m).unwrap();
                theorem1_total(&[f.clone()], &u, &p, n, 1.0).unwrap().total
            })
            .collect();
        assert!(totals.windows(2).all(|w| w[1] < w[0]), "{totals:?}");
    }

    #[test]
    fn corollary_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, 10).unwrap();
        let r = corollary1_total(1.0, 1.0, 0.7, 1.3, &u, &p, 10_000, 1.0).unwrap();
        let l = 2.0 * 0.1 * (0.03f64 + 0.13).powi(2) + 18.0 * 1e-4;
        let h = (l / 2.8).sqrt();
        let k2 = 1.0 / 0.7f64.sqrt();
        let la = 2.0 * 0.1 * (3.0 * k2 * 0.01 + 1.3f64.sqrt() * 0.1).powi(2) + 18.0 * k2 * k2 * 1e-4;
        let expect = 100.0 * (h + 2.0 * la.sqrt()) + 10.0 * 10.0f64.ln() / 100.0;
        assert!((r.total - expect).abs() < 1e-12);

        let wide = BaseMeasure::uniform(0.0, 2.0).unwrap();
        let pw = build_partition(&wide, 10).unwrap();
        assert!(corollary1_total(1.0, 1.0, 0.7, 1.3, &wide, &pw, 100, 1.0).is_err());
        let e = BaseMeasure::exponential(1.0).unwrap();
        let pe = build_partition(&e, 4).unwrap();
        assert!(matches!(
            corollary1_total(1.0, 1.0, 0.7, 1.3, &e, &pe, 100, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn class_bound_dominates_members() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let members = [
            DensityParameter::sinusoidal(&u, 0.2, 1.0, 0.0).unwrap(),
            DensityParameter::quadratic(&u, 0.3, 0.5).unwrap(),
            DensityParameter::exponential_tilt(&u, 0.5).unwrap(),
        ];
        for m in [8, 16, 32] {
            let p = build_partition(&u, m).unwrap();
            for f in &members {
                let hs = f.holder().unwrap();
                let class = corollary1_total(hs.gamma, hs.constant, f.kappa(), f.upper(), &u, &p, 100, 1.0).unwrap();
                let e = error_functionals(f, &u, &p).unwrap();
                assert!(e.h <= class.sup_h, "{} m={m}", f.label());
                assert!(e.a <= class.sup_a, "{} m={m}", f.label());
                assert!(e.b <= class.sup_b, "{} m={m}", f.label());
            }
        }
    }

    #[test]
    fn csv_row_matches_header() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, 4).unwrap();
        let r = corollary1_total(1.0, 0.0, 1.0, 1.0, &u, &p, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        BoundReport::write_csv(&[("c".into(), r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[0].starts_with("n,m,c_r"));
    }
}
