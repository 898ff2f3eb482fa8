//! Equal-mass quantile partition of the interval under `nu0`.

use crate::error::{Error, Result};
use crate::measure::BaseMeasure;

/// Relative tolerance on the equal-mass property checked at construction.
pub const CELL_MASS_RTOL: f64 = 1e-9;

/// Smallest cell mass, in units of the quadrature tolerance, that we accept.
const MIN_CELL_MASS_IN_TOLS: f64 = 1e3;

/// Cells `J_1 = I ∩ (-inf, v_1]`, `J_j = (v_{j-1}, v_j]`, `J_m = I ∩ (v_{m-1}, inf)`.
///
/// A breakpoint belongs to the cell on its left.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantilePartition {
    m: usize,
    /// `v_0 = inf I, v_1, ..., v_{m-1}, v_m = sup I`
    edges: Vec<f64>,
    /// Cell masses as computed (telescoping CDF differences).
    masses: Vec<f64>,
    cell_mass: f64,
    barycenters: Vec<f64>,
    finite_mesh: Option<f64>,
}

impl QuantilePartition {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Interior breakpoints `v_1 .. v_{m-1}`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.edges[1..self.m]
    }

    /// All `m + 1` edges including the (possibly infinite) interval endpoints.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// `(v_{j-1}, v_j)` for the 0-based cell index `j`.
    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        (self.edges[j], self.edges[j + 1])
    }

    /// `mu_n = nu0(I) / m`.
    pub fn cell_mass(&self) -> f64 {
        self.cell_mass
    }

    /// Masses `nu0(J_j)` as computed from the CDF.
    pub fn computed_masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn barycenters(&self) -> &[f64] {
        &self.barycenters
    }

    /// `l_m`, the largest width among cells with two finite edges; `None`
    /// when every cell touches an infinite endpoint.
    pub fn finite_mesh(&self) -> Option<f64> {
        self.finite_mesh
    }

    pub fn is_compact(&self) -> bool {
        self.edges[0].is_finite() && self.edges[self.m].is_finite()
    }

    /// 1-based cell index holding `x`; `v_j` itself falls in cell `j`.
    pub fn locate_cell(&self, x: f64, measure: &BaseMeasure) -> Result<usize> {
        if x.is_nan() || !measure.interval().contains(x) {
            return Err(Error::domain(format!(
                "{x} lies outside {}",
                measure.interval()
            )));
        }
        Ok(self.cell_of(x) + 1)
    }

    /// 0-based cell index, no domain check.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        self.breakpoints().partition_point(|&v| v < x)
    }
}

pub fn build_partition(measure: &BaseMeasure, m: usize) -> Result<QuantilePartition> {
    if m == 0 {
        return Err(Error::domain("partition needs m >= 1"));
    }
    let total = measure.total_mass();
    let cell_mass = total / m as f64;
    let floor = MIN_CELL_MASS_IN_TOLS * measure.quadrature().abs_tol;
    if cell_mass < floor {
        return Err(Error::PartitionTooFine {
            m,
            suggested_max: (total / floor).floor() as usize,
        });
    }

    let iv = measure.interval();
    let mut edges = Vec::with_capacity(m + 1);
    edges.push(iv.lower());
    for j in 1..m {
        edges.push(measure.quantile(j as f64 / m as f64)?);
    }
    edges.push(iv.upper());
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::PartitionTooFine {
            m,
            suggested_max: m / 2,
        });
    }

    let cdfs: Vec<f64> = edges
        .iter()
        .map(|&v| measure.cdf(v))
        .collect::<Result<_>>()?;
    let masses: Vec<f64> = cdfs.windows(2).map(|w| w[1] - w[0]).collect();
    for (j, &mass) in masses.iter().enumerate() {
        if ((mass - cell_mass) / cell_mass).abs() > CELL_MASS_RTOL {
            return Err(Error::PartitionTooFine {
                m,
                suggested_max: (j.max(1) * m / (j + 1)).max(1),
            });
        }
    }

    let barycenters = edges
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let first = measure.integrate(w[0], w[1], |x| x).map_err(|e| e.in_cell(j + 1))?;
            let c = first / cell_mass;
            if !c.is_finite() {
                return Err(Error::NonFinite(format!(
                    "barycenter of cell {} (is x g(x) integrable?)",
                    j + 1
                )));
            }
            Ok(c.clamp(w[0], w[1]))
        })
        .collect::<Result<Vec<f64>>>()?;
    if barycenters.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::NonFinite("barycenters are not strictly increasing".into()));
    }

    let finite_mesh = edges
        .windows(2)
        .filter(|w| w[0].is_finite() && w[1].is_finite())
        .map(|w| w[1] - w[0])
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));

    Ok(QuantilePartition {
        m,
        edges,
        masses,
        cell_mass,
        barycenters,
        finite_mesh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::IntervalSpec;
    use crate::quadrature::QuadratureConfig;
    use std::sync::Arc;

    #[test]
    fn uniform_four_cells() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, 4).unwrap();
        let expect_v = [0.25, 0.5, 0.75];
        let expect_x = [0.125, 0.375, 0.625, 0.875];
        for (v, e) in p.breakpoints().iter().zip(expect_v) {
            assert!((v - e).abs() < 1e-12);
        }
        for (x, e) in p.barycenters().iter().zip(expect_x) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!((p.cell_mass() - 0.25).abs() < 1e-15);
        assert!((p.finite_mesh().unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_x_two_cells() {
        let m = BaseMeasure::from_fn(
            "2x",
            IntervalSpec::closed(0.0, 1.0).unwrap(),
            Arc::new(|x| 2.0 * x),
            QuadratureConfig::default(),
        )
        .unwrap();
        let p = build_partition(&m, 2).unwrap();
        assert!((p.breakpoints()[0] - 0.5f64.sqrt()).abs() < 1e-11);
        let x1 = (2.0 / 3.0) * 0.5f64.powf(1.5) / 0.5;
        assert!((p.barycenters()[0] - x1).abs() < 1e-10);
    }

    #[test]
    fn exponential_two_cells() {
        let e = BaseMeasure::exponential(1.0).unwrap();
        let p = build_partition(&e, 2).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((p.breakpoints()[0] - ln2).abs() < 1e-11);
        assert!((p.barycenters()[0] - (1.0 - ln2)).abs() < 1e-9);
        assert!((p.barycenters()[1] - (1.0 + ln2)).abs() < 1e-9);
        assert!((p.finite_mesh().unwrap() - ln2).abs() < 1e-11);
        assert!(!p.is_compact());
    }

    #[test]
    fn locate_cell_boundary_convention() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, 4).unwrap();
        assert_eq!(p.locate_cell(0.5, &u).unwrap(), 2);
        assert_eq!(p.locate_cell(0.51, &u).unwrap(), 3);
        assert_eq!(p.locate_cell(0.0, &u).unwrap(), 1);
        assert_eq!(p.locate_cell(1.0, &u).unwrap(), 4);
        assert!(p.locate_cell(1.5, &u).is_err());
        let e = BaseMeasure::exponential(1.0).unwrap();
        let pe = build_partition(&e, 2).unwrap();
        assert_eq!(pe.locate_cell(10.0, &e).unwrap(), 2);
    }

    #[test]
    fn m_zero_and_too_fine() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        assert!(build_partition(&u, 0).is_err());
        match build_partition(&u, 100_000_000) {
            Err(Error::PartitionTooFine { suggested_max, .. }) => assert_eq!(suggested_max, 10_000_000),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn masses_telescope_to_total() {
        let e = BaseMeasure::exponential(0.5).unwrap();
        let p = build_partition(&e, 16).unwrap();
        let s: f64 = p.computed_masses().iter().sum();
        assert!((s - e.total_mass()).abs() < 1e-14 * e.total_mass());
    }

    #[test]
    fn refinement_interleaves() {
        let m = BaseMeasure::power_law(2.0, 1.0).unwrap();
        let coarse = build_partition(&m, 8).unwrap();
        let fine = build_partition(&m, 16).unwrap();
        for (j, v) in coarse.breakpoints().iter().enumerate() {
            assert!((fine.breakpoints()[2 * j + 1] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn mesh_shrinks_along_doubling() {
        for measure in [
            BaseMeasure::uniform(0.0, 2.0).unwrap(),
            BaseMeasure::power_law(2.0, 1.0).unwrap(),
            BaseMeasure::power_law(3.0, 2.0).unwrap(),
        ] {
            let l: Vec<f64> = [4, 8, 16, 32]
                .iter()
                .map(|&m| build_partition(&measure, m).unwrap().finite_mesh().unwrap())
                .collect();
            assert!(l.windows(2).all(|w| w[1] <= w[0]), "{}: {l:?}", measure.name());
        }
    }
}
