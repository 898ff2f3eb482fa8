//! Hat basis on the barycenters, piecewise-linear approximants of `f` and
//! `sqrt(f)`, and the discretization error functionals `H_m`, `A_m`, `B_m`.

use crate::error::{Error, Result};
use crate::measure::{BaseMeasure, DensityParameter};
use crate::partition::QuantilePartition;

/// Triangular (interior) and trapezoidal (boundary) functions `u_j` with
/// peak `1 / mu_n` at the barycenter `x_j*`.
///
/// `u_1` is flat at its peak from `inf I` to `x_1*`, `u_m` from `x_m*` to
/// `sup I`. `mu_n * sum_j u_j = 1` on `I`, but `w_j = int u_j dnu0` is only
/// `1` for special measures; it is computed here and exposed.
#[derive(Clone, Debug)]
pub struct HatBasis {
    partition: QuantilePartition,
    measure: BaseMeasure,
    weights: Vec<f64>,
}

impl HatBasis {
    pub fn m(&self) -> usize {
        self.partition.m()
    }

    pub fn partition(&self) -> &QuantilePartition {
        &self.partition
    }

    pub fn measure(&self) -> &BaseMeasure {
        &self.measure
    }

    pub fn peak(&self) -> f64 {
        1.0 / self.partition.cell_mass()
    }

    /// `w_j = int_I u_j dnu0` (0-based `j`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_normalization_defect(&self) -> f64 {
        self.weights.iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Closed support `[lo, hi]` of `u_j`; may have infinite ends.
    pub fn support(&self, j: usize) -> (f64, f64) {
        let xs = self.partition.barycenters();
        let iv = self.measure.interval();
        let lo = if j == 0 { iv.lower() } else { xs[j - 1] };
        let hi = if j + 1 == xs.len() { iv.upper() } else { xs[j + 1] };
        (lo, hi)
    }

    /// `u_j(x)`, zero off its support and outside `I`.
    pub fn eval(&self, j: usize, x: f64) -> f64 {
        let xs = self.partition.barycenters();
        let (lo, hi) = self.support(j);
        if !(x >= lo && x <= hi) || !self.measure.interval().contains(x) {
            return 0.0;
        }
        let peak = self.peak();
        let m = xs.len();
        if x <= xs[j] {
            if j == 0 {
                peak
            } else {
                peak * (x - xs[j - 1]) / (xs[j] - xs[j - 1])
            }
        } else if j + 1 == m {
            peak
        } else {
            peak * (xs[j + 1] - x) / (xs[j + 1] - xs[j])
        }
    }

    /// `F_j(t) = int_{I ∩ (-inf, t]} u_j dnu0`.
    pub fn cumulative(&self, j: usize, t: f64) -> Result<f64> {
        let (lo, hi) = self.support(j);
        if t <= lo {
            return Ok(0.0);
        }
        if t >= hi {
            return Ok(self.weights[j]);
        }
        let mid = self.partition.barycenters()[j];
        let u = |x: f64| self.eval(j, x);
        let mut acc = self.measure.integrate(lo, mid.min(t), u)?;
        if t > mid {
            acc += self.measure.integrate(mid, t, u)?;
        }
        Ok(acc.clamp(0.0, self.weights[j]))
    }

    /// `F_j(t) / w_j`, the element CDF in `[0, 1]`.
    pub fn normalized_cumulative(&self, j: usize, t: f64) -> Result<f64> {
        Ok((self.cumulative(j, t)? / self.weights[j]).clamp(0.0, 1.0))
    }

    /// `mu_n * sum_j u_j(y)`; identically 1 on `I`.
    pub fn unity_sum(&self, y: f64) -> f64 {
        let mu = self.partition.cell_mass();
        (0..self.m()).map(|j| mu * self.eval(j, y)).sum()
    }
}

pub fn build_hat_basis(partition: &QuantilePartition, measure: &BaseMeasure) -> Result<HatBasis> {
    if partition.m() < 2 {
        return Err(Error::Unsupported("hat basis needs m >= 2".into()));
    }
    let mut basis = HatBasis {
        partition: partition.clone(),
        measure: measure.clone(),
        weights: Vec::new(),
    };
    let xs = partition.barycenters().to_vec();
    let weights = (0..partition.m())
        .map(|j| {
            let (lo, hi) = basis.support(j);
            let u = |x: f64| basis.eval(j, x);
            Ok(measure.integrate(lo, xs[j], u)? + measure.integrate(xs[j], hi, u)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    basis.weights = weights;
    Ok(basis)
}

/// Continuous, nonnegative, linear between consecutive knots, flat beyond
/// the first and last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearDensity {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearDensity {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::domain(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("knots must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("knot values must be finite and >= 0"));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let v = &self.values;
        if x <= k[0] {
            return v[0];
        }
        let last = k.len() - 1;
        if x > k[last] {
            return v[last];
        }
        // x in (k[j], k[j+1]]
        let j = k.partition_point(|&t| t < x) - 1;
        let span = k[j + 1] - k[j];
        (v[j + 1] * (x - k[j]) + v[j] * (k[j + 1] - x)) / span
    }

    pub fn sqrt(&self, x: f64) -> f64 {
        self.eval(x).sqrt()
    }

    /// `int_a^b approx dnu0`, split at the knots.
    pub fn mass_between(&self, measure: &BaseMeasure, a: f64, b: f64) -> Result<f64> {
        let pts = split_points(a, b, &self.knots);
        measure.integrate_pieces(&pts, |x| self.eval(x))
    }

    pub fn total_mass(&self, measure: &BaseMeasure) -> Result<f64> {
        let iv = measure.interval();
        self.mass_between(measure, iv.lower(), iv.upper())
    }
}

/// `[a, interior knots..., b]`.
pub(crate) fn split_points(a: f64, b: f64, knots: &[f64]) -> Vec<f64> {
    let mut pts = Vec::with_capacity(knots.len() + 2);
    pts.push(a);
    pts.extend(knots.iter().copied().filter(|&k| k > a && k < b));
    pts.push(b);
    pts
}

/// `f_hat_m`: knot value `nu(J_j) / mu_n` at each barycenter.
pub fn hat_density(cell_masses: &[f64], partition: &QuantilePartition) -> Result<PiecewiseLinearDensity> {
    if cell_masses.len() != partition.m() {
        return Err(Error::domain(format!(
            "expected {} cell masses, got {}",
            partition.m(),
            cell_masses.len()
        )));
    }
    let mu = partition.cell_mass();
    PiecewiseLinearDensity::new(
        partition.barycenters().to_vec(),
        cell_masses.iter().map(|c| c / mu).collect(),
    )
}

/// `nu(J_j) = int_{J_j} f dnu0`.
pub fn cell_masses(f: &DensityParameter, measure: &BaseMeasure, partition: &QuantilePartition) -> Result<Vec<f64>> {
    cell_integrals(measure, partition, |x| f.eval(x))
}

/// `int_{J_j} sqrt(f) dnu0`.
pub fn root_masses(f: &DensityParameter, measure: &BaseMeasure, partition: &QuantilePartition) -> Result<Vec<f64>> {
    cell_integrals(measure, partition, |x| f.sqrt(x))
}

pub(crate) fn cell_integrals<F: Fn(f64) -> f64>(
    measure: &BaseMeasure,
    partition: &QuantilePartition,
    h: F,
) -> Result<Vec<f64>> {
    (0..partition.m())
        .map(|j| {
            let (a, b) = partition.cell_bounds(j);
            measure.integrate(a, b, &h).map_err(|e| e.in_cell(j + 1))
        })
        .collect()
}

/// Interpolant of `sqrt(f)`: knot values `int_{J_j} sqrt(f) dnu0 / mu_n`.
pub fn sqrt_hat(f: &DensityParameter, measure: &BaseMeasure, partition: &QuantilePartition) -> Result<PiecewiseLinearDensity> {
    hat_density(&root_masses(f, measure, partition)?, partition)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxErrors {
    /// `H_m(f)`
    pub h: f64,
    /// `A_m(f)`
    pub a: f64,
    /// `B_m(f)`
    pub b: f64,
}

impl ApproxErrors {
    pub fn sum(&self) -> f64 {
        self.h + self.a + self.b
    }
}

/// Edges and barycenters merged and sorted: the kinks of every integrand here.
pub(crate) fn aligned_points(partition: &QuantilePartition) -> Vec<f64> {
    let mut pts: Vec<f64> = partition
        .edges()
        .iter()
        .chain(partition.barycenters())
        .copied()
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Square roots of the `H_m^2`, `A_m^2`, `B_m^2` functionals.
pub fn error_functionals(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
) -> Result<ApproxErrors> {
    let masses = cell_masses(f, measure, partition)?;
    let roots = root_masses(f, measure, partition)?;
    let f_hat = hat_density(&masses, partition)?;
    let s_hat = hat_density(&roots, partition)?;
    let pts = aligned_points(partition);

    let h2 = measure.integrate_pieces(&pts, |x| (f.sqrt(x) - f_hat.sqrt(x)).powi(2))?;
    let a2 = measure.integrate_pieces(&pts, |x| (s_hat.eval(x) - f.sqrt(x)).powi(2))?;
    let b2 = root_mass_defect_sq(&roots, &masses, partition.cell_mass());

    Ok(ApproxErrors {
        h: h2.max(0.0).sqrt(),
        a: a2.max(0.0).sqrt(),
        b: b2.sqrt(),
    })
}

/// `sum_j (s_j / sqrt(mu) - sqrt(nu_j))^2`.
pub(crate) fn root_mass_defect_sq(roots: &[f64], masses: &[f64], mu: f64) -> f64 {
    let r = mu.sqrt();
    roots
        .iter()
        .zip(masses)
        .map(|(s, nu)| (s / r - nu.max(0.0).sqrt()).powi(2))
        .sum()
}

/// Explicit upper bound on `||f - f_hat_m||^2_{L2(nu0)}` over the Hölder class:
/// `2 mu (3 K l^(1+g) + M l)^2 + 18 K^2 l^(2+2g)`.
pub fn lemma_l2_bound(gamma: f64, k: f64, big_m: f64, partition: &QuantilePartition) -> Result<f64> {
    if !partition.is_compact() {
        return Err(Error::Unsupported(
            "the L2 approximation bound needs a compact interval (finite l_m)".into(),
        ));
    }
    if !(gamma > 0.0 && gamma <= 1.0 && k >= 0.0 && big_m > 0.0) {
        return Err(Error::domain(format!(
            "need gamma in (0,1], K >= 0, M > 0; got {gamma}, {k}, {big_m}"
        )));
    }
    let l = partition
        .finite_mesh()
        .ok_or_else(|| Error::Unsupported("no finite cells".into()))?;
    let mu = partition.cell_mass();
    let lin = 3.0 * k * l.powf(1.0 + gamma) + big_m * l;
    Ok(2.0 * mu * lin * lin + 18.0 * k * k * l.powf(2.0 + 2.0 * gamma))
}

/// `int (f - approx)^2 dnu0`, split at the approximant's knots.
pub fn l2_distance_sq<F: Fn(f64) -> f64>(
    f: F,
    approx: &PiecewiseLinearDensity,
    measure: &BaseMeasure,
) -> Result<f64> {
    let iv = measure.interval();
    let pts = split_points(iv.lower(), iv.upper(), approx.knots());
    measure.integrate_pieces(&pts, |x| (f(x) - approx.eval(x)).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_partition;
    use std::sync::Arc;

    fn uniform(m: usize) -> (BaseMeasure, QuantilePartition) {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, m).unwrap();
        (u, p)
    }

    #[test]
    fn uniform_triangle() {
        let (u, p) = uniform(4);
        let basis = build_hat_basis(&p, &u).unwrap();
        assert_eq!(basis.eval(1, 0.375), 4.0);
        assert_eq!(basis.eval(1, 0.125), 0.0);
        assert_eq!(basis.eval(1, 0.625), 0.0);
        assert!((basis.eval(1, 0.25) - 2.0).abs() < 1e-14);
        assert!((basis.weights()[1] - 1.0).abs() < 1e-12);
        assert!(basis.max_normalization_defect() < 1e-12);
        // partition of unity at y = 0.2 involves u_1 and u_2
        let mu = p.cell_mass();
        assert!((mu * (basis.eval(0, 0.2) + basis.eval(1, 0.2)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn m_one_unsupported() {
        let (u, p) = uniform(1);
        assert!(matches!(build_hat_basis(&p, &u), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nonuniform_weights_differ_from_one() {
        let m = BaseMeasure::power_law(2.0, 1.0).unwrap();
        let p = build_partition(&m, 2).unwrap();
        let basis = build_hat_basis(&p, &m).unwrap();
        assert!(basis.max_normalization_defect() > 1e-3);
        // weights agree with an independent composite-rule integration
        for j in 0..2 {
            let n = 200_000;
            let h = 1.0 / n as f64;
            let s: f64 = (0..n)
                .map(|i| {
                    let x = (i as f64 + 0.5) * h;
                    basis.eval(j, x) * x
                })
                .sum::<f64>()
                * h;
            assert!((s - basis.weights()[j]).abs() < 1e-8, "j={j}: {s} vs {}", basis.weights()[j]);
        }
    }

    #[test]
    fn cumulative_is_monotone_and_ends_at_weight() {
        let e = BaseMeasure::exponential(1.0).unwrap();
        let p = build_partition(&e, 8).unwrap();
        let basis = build_hat_basis(&p, &e).unwrap();
        for j in 0..8 {
            let mut prev = 0.0;
            for k in 0..=200 {
                let t = 12.0 * k as f64 / 200.0;
                let v = basis.cumulative(j, t).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
            assert_eq!(basis.cumulative(j, f64::INFINITY).unwrap(), basis.weights()[j]);
        }
    }

    #[test]
    fn hat_density_examples() {
        let (u, p) = uniform(2);
        let fh = hat_density(&[0.4, 0.6], &p).unwrap();
        assert!((fh.eval(0.25) - 0.8).abs() < 1e-15);
        assert!((fh.eval(0.75) - 1.2).abs() < 1e-15);
        assert!((fh.eval(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(fh.eval(0.1), 0.8);
        assert_eq!(fh.eval(0.9), 1.2);
        assert!((fh.total_mass(&u).unwrap() - 1.0).abs() < 1e-13);
        assert!(hat_density(&[1.0], &p).is_err());

        let (_, p4) = uniform(4);
        let flat = hat_density(&[0.25; 4], &p4).unwrap();
        for k in 0..=10 {
            assert!((flat.eval(k as f64 / 10.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_masses_sinusoid() {
        let (u, p) = uniform(2);
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let c = cell_masses(&f, &u, &p).unwrap();
        let pi = std::f64::consts::PI;
        assert!((c[0] - (0.5 + 0.3 / pi)).abs() < 1e-12);
        assert!((c[1] - (0.5 - 0.3 / pi)).abs() < 1e-12);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_density_has_zero_errors() {
        for measure in [
            BaseMeasure::uniform(0.0, 1.0).unwrap(),
            BaseMeasure::exponential(1.0).unwrap(),
            BaseMeasure::power_law(3.0, 1.0).unwrap(),
        ] {
            let p = build_partition(&measure, 8).unwrap();
            let f = DensityParameter::constant(&measure).unwrap();
            let e = error_functionals(&f, &measure, &p).unwrap();
            assert!(e.h < 1e-7 && e.a < 1e-7 && e.b < 1e-7, "{}: {e:?}", measure.name());
        }
    }

    #[test]
    fn b_for_single_cell() {
        let u = BaseMeasure::uniform(0.0, 2.0).unwrap();
        let p = build_partition(&u, 1).unwrap();
        let f = DensityParameter::quadratic(&u, 0.2, 0.1).unwrap();
        let masses = cell_masses(&f, &u, &p).unwrap();
        let roots = root_masses(&f, &u, &p).unwrap();
        let b2 = root_mass_defect_sq(&roots, &masses, p.cell_mass());
        let expect = (roots[0] / 2.0f64.sqrt() - 1.0).powi(2);
        assert!((b2 - expect).abs() < 1e-14);
    }

    #[test]
    fn lemma_bound_examples() {
        let (_, p10) = uniform(10);
        let v = lemma_l2_bound(1.0, 1.0, 1.0, &p10).unwrap();
        let expect = 2.0 * 0.1 * (0.03f64 + 0.1).powi(2) + 18.0 * 1e-4;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.005_18).abs() < 1e-15);
        let v0 = lemma_l2_bound(1.0, 0.0, 1.0, &p10).unwrap();
        assert!((v0 - 2.0 * 0.1 * 0.01).abs() < 1e-15);
        let e = BaseMeasure::exponential(1.0).unwrap();
        let pe = build_partition(&e, 4).unwrap();
        assert!(matches!(lemma_l2_bound(1.0, 1.0, 1.0, &pe), Err(Error::Unsupported(_))));
    }

    #[test]
    fn l2_distance_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let one = PiecewiseLinearDensity::constant(1.0).unwrap();
        let more = PiecewiseLinearDensity::constant(1.1).unwrap();
        assert_eq!(l2_distance_sq(|_| 1.0, &one, &u).unwrap(), 0.0);
        assert!((l2_distance_sq(|_| 1.0, &more, &u).unwrap() - 0.01).abs() < 1e-15);
        let f = Arc::new(|x: f64| x);
        assert!(l2_distance_sq(&*f, &one, &u).unwrap() > 0.0);
    }

    fn sinusoid() -> (BaseMeasure, DensityParameter) {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        (u, f)
    }

    // Independent adaptive-quadrature oracle (scipy, tolerances 1e-14).
    const GOLDEN: [(usize, f64, f64, f64, f64); 5] = [
        (8, 1.407831665319e-02, 1.402343155927e-02, 3.602430629580e-04, 7.718992673910e-04),
        (16, 4.716556177960e-03, 4.703845194771e-03, 9.211469527994e-05, 8.760340952033e-05),
        (32, 1.594728783567e-03, 1.592161325045e-03, 2.315371512240e-05, 1.008702332433e-05),
        (64, 5.484623735946e-04, 5.479778239816e-04, 5.796276795953e-06, 1.197958386852e-06),
        (128, 1.909691345954e-04, 1.908806618036e-04, 1.449560216487e-06, 1.455492129509e-07),
    ];

    #[test]
    fn golden_error_functionals() {
        let (u, f) = sinusoid();
        for (m, h, a, b, l2) in GOLDEN {
            let p = build_partition(&u, m).unwrap();
            let e = error_functionals(&f, &u, &p).unwrap();
            assert!((e.h - h).abs() < 1e-8 * h, "m={m} H {} vs {h}", e.h);
            assert!((e.a - a).abs() < 1e-8 * a, "m={m} A {} vs {a}", e.a);
            assert!((e.b - b).abs() < 1e-6 * b, "m={m} B {} vs {b}", e.b);
            let fh = hat_density(&cell_masses(&f, &u, &p).unwrap(), &p).unwrap();
            let d = l2_distance_sq(|x| f.eval(x), &fh, &u).unwrap();
            assert!((d - l2).abs() < 1e-8 * l2, "m={m} L2 {d} vs {l2}");
        }
    }

    #[test]
    fn lemma_bound_dominates_numerical_l2() {
        let (u, f) = sinusoid();
        let hs = f.holder().unwrap();
        for m in [8, 16, 32] {
            let p = build_partition(&u, m).unwrap();
            let fh = hat_density(&cell_masses(&f, &u, &p).unwrap(), &p).unwrap();
            let d = l2_distance_sq(|x| f.eval(x), &fh, &u).unwrap();
            let bound = lemma_l2_bound(hs.gamma, hs.constant, f.upper(), &p).unwrap();
            assert!(d <= bound, "m={m}: {d} > {bound}");
        }
    }

    #[test]
    fn two_x_weights_reported() {
        let m = BaseMeasure::from_fn(
            "2x",
            crate::measure::IntervalSpec::closed(0.0, 1.0).unwrap(),
            Arc::new(|x| 2.0 * x),
            crate::quadrature::QuadratureConfig::default(),
        )
        .unwrap();
        let p = build_partition(&m, 2).unwrap();
        let basis = build_hat_basis(&p, &m).unwrap();
        assert!(basis.max_normalization_defect() > 1e-3);
        assert!((basis.weights().iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_on_grid() {
        for measure in [
            BaseMeasure::uniform(0.0, 1.0).unwrap(),
            BaseMeasure::power_law(2.5, 1.0).unwrap(),
            BaseMeasure::exponential(2.0).unwrap(),
        ] {
            let p = build_partition(&measure, 12).unwrap();
            let basis = build_hat_basis(&p, &measure).unwrap();
            let worst = measure
                .grid(10_000)
                .into_iter()
                .map(|y| (basis.unity_sum(y) - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-9, "{}: {worst}", measure.name());
        }
    }

    #[test]
    fn interpolant_matches_hat_expansion() {
        use rand::Rng;
        let measure = BaseMeasure::power_law(2.0, 1.0).unwrap();
        let f = DensityParameter::exponential_tilt(&measure, 0.7).unwrap();
        let p = build_partition(&measure, 9).unwrap();
        let basis = build_hat_basis(&p, &measure).unwrap();
        let masses = cell_masses(&f, &measure, &p).unwrap();
        let roots = root_masses(&f, &measure, &p).unwrap();
        let fh = hat_density(&masses, &p).unwrap();
        let sh = sqrt_hat(&f, &measure, &p).unwrap();
        let mut rng = crate::rng::stream(7, 0);
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.0..1.0);
            let expand = |c: &[f64]| (0..9).map(|j| c[j] * basis.eval(j, x)).sum::<f64>();
            assert!((fh.eval(x) - expand(&masses)).abs() < 1e-12);
            assert!((sh.eval(x) - expand(&roots)).abs() < 1e-10);
        }
    }
}
