//! L1, total variation and Hellinger distances: quadrature, Gaussian closed
//! forms and Monte Carlo estimates for product measures.
//!
//! Hellinger distance here is `H^2 = int (sqrt p - sqrt q)^2`, without a
//! factor 1/2, so `H` ranges over `[0, sqrt 2]` and `TV <= H`.

use rayon::prelude::*;

use crate::approximation::PiecewiseLinearDensity;
use crate::error::{Error, Result};
use crate::measure::{draw_from_density, BaseMeasure, DensityParameter};
use crate::normal;
use crate::quadrature::{self, QuadratureConfig};
use crate::rng::{self, StreamRng};

/// Bracketing points used to find sign changes of `p - q`.
const SIGN_SCAN_POINTS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    ClosedForm,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceResult {
    pub value: f64,
    pub method: Method,
    pub standard_error: Option<f64>,
    /// Requested absolute quadrature tolerance, when quadrature was used.
    pub tolerance: Option<f64>,
}

/// Root of `h` in `[a, b]` given a sign change, by bisection.
fn bisect<F: Fn(f64) -> f64>(h: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = h(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = h(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// `(L1, H)` of two densities with respect to `measure`.
///
/// `breaks` are known kinks of either density (knots, cell edges).
pub fn l1_and_hellinger<P, Q>(p: P, q: Q, measure: &BaseMeasure, breaks: &[f64]) -> Result<(f64, f64)>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let iv = measure.interval();
    let diff = |x: f64| p(x) - q(x);
    let mut pts: Vec<f64> = (1..SIGN_SCAN_POINTS)
        .map(|k| iv.from_unit(k as f64 / SIGN_SCAN_POINTS as f64))
        .filter(|x| x.is_finite())
        .collect();
    pts.extend(breaks.iter().copied().filter(|&x| x > iv.lower() && x < iv.upper()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (da, db) = (diff(w[0]), diff(w[1]));
        if da != 0.0 && db != 0.0 && (da > 0.0) != (db > 0.0) {
            roots.push(bisect(&diff, w[0], w[1]));
        }
    }
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .chain(roots)
        .filter(|&x| x > iv.lower() && x < iv.upper())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut all = vec![iv.lower()];
    all.extend(cuts);
    all.push(iv.upper());

    let l1 = measure.integrate_pieces(&all, |x| diff(x).abs())?;
    let h2 = measure.integrate_pieces(&all, |x| {
        (p(x).max(0.0).sqrt() - q(x).max(0.0).sqrt()).powi(2)
    })?;
    Ok((l1, h2.max(0.0).sqrt()))
}

/// `sqrt(sum_i H^2_i)`, an upper bound on the Hellinger distance of the products.
pub fn hellinger_product_bound(per_factor_h2: &[f64]) -> Result<f64> {
    if let Some(h) = per_factor_h2.iter().find(|h| !(**h >= 0.0)) {
        return Err(Error::domain(format!("negative squared Hellinger distance {h}")));
    }
    Ok(per_factor_h2.iter().sum::<f64>().sqrt())
}

fn check_sigmas(s1: f64, s2: f64) -> Result<()> {
    if !(s1 > 0.0 && s2 > 0.0) || !s1.is_finite() || !s2.is_finite() {
        return Err(Error::domain(format!("standard deviations must be positive, got {s1}, {s2}")));
    }
    Ok(())
}

/// Exact `TV(N(mu1, s1^2), N(mu2, s2^2))` from the density crossing points.
pub fn gaussian_tv_exact(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Result<f64> {
    check_sigmas(s1, s2)?;
    if mu1 == mu2 && s1 == s2 {
        return Ok(0.0);
    }
    // P1((lo, hi)) - P2((lo, hi))
    let mass_gap = |lo: f64, hi: f64| {
        let p1 = interval_mass((lo - mu1) / s1, (hi - mu1) / s1);
        let p2 = interval_mass((lo - mu2) / s2, (hi - mu2) / s2);
        p1 - p2
    };
    let tv = if s1 == s2 {
        let x0 = 0.5 * (mu1 + mu2);
        mass_gap(f64::NEG_INFINITY, x0).abs()
    } else {
        // a x^2 + b x + c = 0 where the log densities agree
        let (v1, v2) = (s1 * s1, s2 * s2);
        let a = 0.5 / v2 - 0.5 / v1;
        let b = mu1 / v1 - mu2 / v2;
        let c = 0.5 * mu2 * mu2 / v2 - 0.5 * mu1 * mu1 / v1 + (s2 / s1).ln();
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let qq = -0.5 * (b + b.signum() * disc.sqrt());
        let (r1, r2) = if qq == 0.0 {
            let r = (-c / a).max(0.0).sqrt();
            (-r, r)
        } else {
            let (x, y) = (qq / a, c / qq);
            (x.min(y), x.max(y))
        };
        mass_gap(r1, r2).abs()
    };
    Ok(tv.clamp(0.0, 1.0))
}

/// `Phi(b) - Phi(a)` computed on the side with less cancellation.
fn interval_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        normal::sf(a) - normal::sf(b)
    } else {
        normal::cdf(b) - normal::cdf(a)
    }
}

/// `sqrt(2 (1 - s1^2 / s2^2)^2 + (mu1 - mu2)^2 / (2 s2^2))`, as stated; not symmetric.
pub fn gaussian_tv_bound(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Result<f64> {
    check_sigmas(s1, s2)?;
    let r = 1.0 - (s1 * s1) / (s2 * s2);
    let d = mu1 - mu2;
    Ok((2.0 * r * r + d * d / (2.0 * s2 * s2)).sqrt())
}

/// Bhattacharyya coefficient of two normals.
fn gaussian_affinity(mu1: f64, s1: f64, mu2: f64, s2: f64) -> f64 {
    let v = s1 * s1 + s2 * s2;
    (2.0 * s1 * s2 / v).sqrt() * (-(mu1 - mu2).powi(2) / (4.0 * v)).exp()
}

/// `H^2 = 2 - 2 BC` for two normals.
pub fn gaussian_hellinger_sq(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Result<f64> {
    check_sigmas(s1, s2)?;
    Ok((2.0 - 2.0 * gaussian_affinity(mu1, s1, mu2, s2)).max(0.0))
}

/// Closed-form `H^2` between products of unit-variance normals.
pub fn unit_normal_product_hellinger_sq(means1: &[f64], means2: &[f64]) -> Result<f64> {
    if means1.len() != means2.len() {
        return Err(Error::domain("mean vectors differ in length"));
    }
    let d2: f64 = means1.iter().zip(means2).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((2.0 - 2.0 * (-d2 / 8.0).exp()).max(0.0))
}

/// Exact TV between `N(means1, I)` and `N(means2, I)`: `2 Phi(|d| / 2) - 1`.
pub fn unit_normal_product_tv(means1: &[f64], means2: &[f64]) -> Result<f64> {
    if means1.len() != means2.len() {
        return Err(Error::domain("mean vectors differ in length"));
    }
    let d = means1.iter().zip(means2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(1.0 - 2.0 * normal::sf(0.5 * d))
}

/// `sqrt(int_a^b (h1 - h2)^2 / sigma^2 ds)`, an L1 bound between Gaussian
/// processes with drifts `h1`, `h2` and diffusion `sigma`.
pub fn gp_l1_bound<H1, H2, S>(
    h1: H1,
    h2: H2,
    sigma: S,
    window: (f64, f64),
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    H1: Fn(f64) -> f64,
    H2: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let (a, b) = window;
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let v = quadrature::integrate_pieces(
        |s| {
            let sg = sigma(s);
            let d = h1(s) - h2(s);
            if d == 0.0 {
                0.0
            } else {
                d * d / (sg * sg)
            }
        },
        &pts,
        cfg,
    )?
    .value;
    if !v.is_finite() {
        return Err(Error::NonFinite("drift gap over sigma is not integrable".into()));
    }
    Ok(v.max(0.0).sqrt())
}

/// A factor of a product measure with an evaluable log density.
pub trait Factor: Sync {
    fn log_density(&self, x: f64) -> f64;
}

/// A factor that can also be sampled.
pub trait SamplableFactor: Factor {
    fn sample(&self, rng: &mut StreamRng) -> Result<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct GaussianFactor {
    pub mean: f64,
    pub sd: f64,
}

impl Factor for GaussianFactor {
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln()
    }
}

impl SamplableFactor for GaussianFactor {
    fn sample(&self, rng: &mut StreamRng) -> Result<f64> {
        Ok(self.mean + self.sd * rng::standard_normal(rng))
    }
}

/// Density `f` with respect to `nu0`; the base density cancels in ratios.
#[derive(Clone, Debug)]
pub struct DensityFactor {
    pub measure: BaseMeasure,
    pub f: DensityParameter,
}

impl Factor for DensityFactor {
    fn log_density(&self, x: f64) -> f64 {
        self.f.eval(x).ln()
    }
}

impl SamplableFactor for DensityFactor {
    fn sample(&self, rng: &mut StreamRng) -> Result<f64> {
        draw_from_density(&self.measure, &self.f, rng)
    }
}

/// Piecewise-linear density with respect to `nu0`, divided by `normalizer`.
#[derive(Clone, Debug)]
pub struct PiecewiseFactor {
    pub density: PiecewiseLinearDensity,
    pub normalizer: f64,
}

impl Factor for PiecewiseFactor {
    fn log_density(&self, x: f64) -> f64 {
        (self.density.eval(x) / self.normalizer).ln()
    }
}

/// Monte Carlo `TV(prod p_i, prod q_i) = E_P[(1 - prod q_i / prod p_i)^+]`.
pub fn tv_monte_carlo_product(
    p_factors: &[&dyn SamplableFactor],
    q_factors: &[&dyn Factor],
    reps: usize,
    seed: u64,
) -> Result<DivergenceResult> {
    if p_factors.len() != q_factors.len() || p_factors.is_empty() {
        return Err(Error::domain("need equally many p and q factors, at least one"));
    }
    if reps < 2 {
        return Err(Error::domain("need at least 2 replicates"));
    }
    let terms: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let mut llr = 0.0;
            for (p, q) in p_factors.iter().zip(q_factors) {
                let x = p.sample(&mut rng)?;
                llr += q.log_density(x) - p.log_density(x);
            }
            if llr.is_nan() {
                return Err(Error::NonFinite("log likelihood ratio".into()));
            }
            Ok(if llr >= 0.0 { 0.0 } else { -llr.exp_m1() })
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = reps as f64;
    let mean = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(DivergenceResult {
        value: mean.clamp(0.0, 1.0),
        method: Method::MonteCarlo,
        standard_error: Some((var / n).sqrt()),
        tolerance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximation::{cell_masses, error_functionals, hat_density, sqrt_hat};
    use crate::partition::build_partition;

    #[test]
    fn l1_hellinger_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let (l1, h) = l1_and_hellinger(|_| 1.0, |_| 1.0, &u, &[]).unwrap();
        assert_eq!((l1, h), (0.0, 0.0));
        let step = |x: f64| if x <= 0.5 { 0.8 } else { 1.2 };
        let (l1, h) = l1_and_hellinger(|_| 1.0, step, &u, &[0.5]).unwrap();
        let h2 = 0.5 * (1.0 - 0.8f64.sqrt()).powi(2) + 0.5 * (1.2f64.sqrt() - 1.0).powi(2);
        assert!((l1 - 0.2).abs() < 1e-12);
        assert!((h - h2.sqrt()).abs() < 1e-12);
        assert!(0.5 * l1 <= h);
    }

    #[test]
    fn l1_finds_sign_changes() {
        // p - q = 0.6 cos(2 pi x) crosses zero at 1/4 and 3/4
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let pi2 = 2.0 * std::f64::consts::PI;
        let (l1, _) = l1_and_hellinger(
            |x| 1.0 + 0.3 * (pi2 * x).cos(),
            |x| 1.0 - 0.3 * (pi2 * x).cos(),
            &u,
            &[],
        )
        .unwrap();
        assert!((l1 - 0.6 * 2.0 / std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn product_bound_examples() {
        assert_eq!(hellinger_product_bound(&[0.0; 5]).unwrap(), 0.0);
        assert!((hellinger_product_bound(&[1e-4; 100]).unwrap() - 0.1).abs() < 1e-15);
        assert!(hellinger_product_bound(&[-1.0]).is_err());
    }

    #[test]
    fn product_bound_dominates_closed_form() {
        use rand::Rng;
        let mut r = rng::stream(3, 0);
        for _ in 0..100 {
            let len = r.random_range(1..=5);
            let a: Vec<f64> = (0..len).map(|_| r.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..len).map(|_| r.random_range(-2.0..2.0)).collect();
            let exact = unit_normal_product_hellinger_sq(&a, &b).unwrap();
            let per: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| gaussian_hellinger_sq(*x, 1.0, *y, 1.0).unwrap())
                .collect();
            assert!(exact <= per.iter().sum::<f64>() + 1e-15);
            // tensorization: 1 - H^2/2 multiplies
            let prod: f64 = per.iter().map(|h| 1.0 - h / 2.0).product();
            assert!((exact - (2.0 - 2.0 * prod)).abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_tv_examples() {
        assert_eq!(gaussian_tv_exact(0.3, 1.2, 0.3, 1.2).unwrap(), 0.0);
        let e = gaussian_tv_exact(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((e - (2.0 * normal::cdf(0.5) - 1.0)).abs() < 1e-15);
        assert!((e - 0.382_92).abs() < 1e-5);
        let a = gaussian_tv_exact(0.4, 0.8, -1.0, 1.3).unwrap();
        let b = gaussian_tv_exact(-1.0, 1.3, 0.4, 0.8).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(gaussian_tv_exact(0.0, 0.0, 1.0, 1.0).is_err());

        assert_eq!(gaussian_tv_bound(1.0, 2.0, 1.0, 2.0).unwrap(), 0.0);
        assert!((gaussian_tv_bound(0.0, 1.0, 1.0, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let bv = gaussian_tv_bound(0.0, 1.5f64.sqrt(), 0.0, 1.0).unwrap();
        assert!((bv - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(gaussian_tv_exact(0.0, 1.5f64.sqrt(), 0.0, 1.0).unwrap() <= bv);
    }

    #[test]
    fn gaussian_tv_matches_numerical_integration() {
        for &(m1, s1, m2, s2) in &[(0.0, 1.0, 1.0, 1.0), (0.5, 0.7, -0.3, 1.0), (-2.0, 1.4, 2.0, 0.9), (0.0, 1.0, 0.0, 2.0)] {
            let num = quadrature::integrate(
                |x| (normal::pdf((x - m1) / s1) / s1 - normal::pdf((x - m2) / s2) / s2).abs(),
                f64::NEG_INFINITY,
                f64::INFINITY,
                &QuadratureConfig::default(),
            )
            .unwrap()
            .value
                * 0.5;
            let exact = gaussian_tv_exact(m1, s1, m2, s2).unwrap();
            assert!((num - exact).abs() < 1e-6, "{num} vs {exact}");
        }
    }

    #[test]
    fn gaussian_hellinger_matches_quadrature() {
        let (m1, s1, m2, s2) = (0.2, 0.9, -0.4, 1.3);
        let num = quadrature::integrate(
            |x| ((normal::pdf((x - m1) / s1) / s1).sqrt() - (normal::pdf((x - m2) / s2) / s2).sqrt()).powi(2),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &QuadratureConfig::default(),
        )
        .unwrap()
        .value;
        assert!((num - gaussian_hellinger_sq(m1, s1, m2, s2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn unit_product_tv_single_factor() {
        let t = unit_normal_product_tv(&[0.0], &[1.0]).unwrap();
        assert!((t - gaussian_tv_exact(0.0, 1.0, 1.0, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn gp_bound_examples() {
        let cfg = QuadratureConfig::default();
        assert_eq!(gp_l1_bound(|x| x, |x| x, |_| 1.0, (0.0, 1.0), &[], &cfg).unwrap(), 0.0);
        let v = gp_l1_bound(|_| 1.3, |_| 1.0, |_| 0.5, (0.0, 1.0), &[], &cfg).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn gp_bound_step4_instantiation() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let p = build_partition(&u, 16).unwrap();
        let sh = sqrt_hat(&f, &u, &p).unwrap();
        let n = 100.0f64;
        let breaks: Vec<f64> = p.barycenters().to_vec();
        let v = gp_l1_bound(
            |x| sh.eval(x) * u.density(x),
            |x| f.sqrt(x) * u.density(x),
            |x| u.density(x).sqrt() / (2.0 * n.sqrt()),
            (0.0, 1.0),
            &breaks,
            u.quadrature(),
        )
        .unwrap();
        let a = error_functionals(&f, &u, &p).unwrap().a;
        assert!((v / (20.0 * a) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mc_tv_identical_and_gaussian() {
        let g0 = GaussianFactor { mean: 0.0, sd: 1.0 };
        let g1 = GaussianFactor { mean: 1.0, sd: 1.0 };
        let same = tv_monte_carlo_product(&[&g0, &g0], &[&g0, &g0], 1000, 1).unwrap();
        assert!(same.value <= 3.0 * same.standard_error.unwrap() + 1e-15);
        let r = tv_monte_carlo_product(&[&g0], &[&g1], 100_000, 2).unwrap();
        let exact = gaussian_tv_exact(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((r.value - exact).abs() < 3.0 * r.standard_error.unwrap());
        assert_eq!(r.method, Method::MonteCarlo);
    }

    #[test]
    fn mc_tv_respects_step1_bound() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let p = build_partition(&u, 8).unwrap();
        let fh = hat_density(&cell_masses(&f, &u, &p).unwrap(), &p).unwrap();
        let total = fh.total_mass(&u).unwrap();
        let pf = DensityFactor {
            measure: u.clone(),
            f: f.clone(),
        };
        let qf = PiecewiseFactor {
            density: fh,
            normalizer: total,
        };
        let ps: Vec<&dyn SamplableFactor> = vec![&pf; 10];
        let qs: Vec<&dyn Factor> = vec![&qf; 10];
        let r = tv_monte_carlo_product(&ps, &qs, 4000, 5).unwrap();
        let h = error_functionals(&f, &u, &p).unwrap().h;
        assert!(r.value <= (10.0 * h * h).sqrt() + 3.0 * r.standard_error.unwrap());
    }
}
