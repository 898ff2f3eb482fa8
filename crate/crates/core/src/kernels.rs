//! The grouping statistic, the hat-basis randomization kernel and the
//! `Y*` reconstruction from cell increments plus bridge noise.

use rand::RngCore;
use rayon::prelude::*;

use crate::approximation::{build_hat_basis, cell_integrals, cell_masses, hat_density, HatBasis};
use crate::error::{Error, Result};
use crate::experiments::{multinomial_with, GridSpec, Trajectory};
use crate::measure::{BaseMeasure, DensityParameter};
use crate::partition::QuantilePartition;
use crate::rng::{self, open_uniform, standard_normal};

/// Counts of samples per cell.
pub fn grouping_statistic(samples: &[f64], partition: &QuantilePartition, measure: &BaseMeasure) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; partition.m()];
    for &x in samples {
        counts[partition.locate_cell(x, measure)? - 1] += 1;
    }
    Ok(counts)
}

/// Draws from the normalized hat elements `u_j dnu0 / w_j`.
///
/// Proposes from `nu0` restricted to the support of `u_j` by inversion and
/// accepts with probability `mu_n u_j(x) <= 1`.
#[derive(Clone, Debug)]
pub struct ElementSampler {
    basis: HatBasis,
    /// Normalized `(cdf(lo), cdf(hi))` of each support
    support_cdf: Vec<(f64, f64)>,
}

const MAX_ELEMENT_ATTEMPTS: usize = 10_000;

impl ElementSampler {
    pub fn new(basis: &HatBasis) -> Result<Self> {
        let measure = basis.measure();
        let total = measure.total_mass();
        let support_cdf = (0..basis.m())
            .map(|j| {
                let (lo, hi) = basis.support(j);
                Ok((measure.cdf(lo)? / total, measure.cdf(hi)? / total))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            basis: basis.clone(),
            support_cdf,
        })
    }

    pub fn basis(&self) -> &HatBasis {
        &self.basis
    }

    pub fn draw<R: RngCore + ?Sized>(&self, j: usize, rng: &mut R) -> Result<f64> {
        let (a, b) = self.support_cdf[j];
        let mu = self.basis.partition().cell_mass();
        let measure = self.basis.measure();
        for _ in 0..MAX_ELEMENT_ATTEMPTS {
            let x = measure.quantile(a + open_uniform(rng) * (b - a))?;
            if open_uniform(rng) < mu * self.basis.eval(j, x) {
                return Ok(x);
            }
        }
        Err(Error::AcceptanceTooLow {
            rate: 0.0,
            floor: 1.0 / MAX_ELEMENT_ATTEMPTS as f64,
            envelope_ratio: (b - a) * measure.total_mass() / mu,
        })
    }
}

/// Element index `j` with probability `counts[j] / sum(counts)`.
fn pick_cell<R: RngCore + ?Sized>(counts: &[u64], total: u64, rng: &mut R) -> usize {
    let mut r = rng.next_u64() % total;
    for (j, &k) in counts.iter().enumerate() {
        if r < k {
            return j;
        }
        r -= k;
    }
    counts.len() - 1
}

/// `draws` i.i.d. outputs of the kernel `K(counts, .) = sum_j (k_j / n) u_j dnu0 / w_j`.
pub fn randomization_kernel_draw(counts: &[u64], basis: &HatBasis, draws: usize, seed: u64) -> Result<Vec<f64>> {
    if counts.len() != basis.m() {
        return Err(Error::domain(format!("{} counts for {} cells", counts.len(), basis.m())));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::domain("all counts are zero"));
    }
    let sampler = ElementSampler::new(basis)?;
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            sampler.draw(pick_cell(counts, total, &mut r), &mut r)
        })
        .collect()
}

/// Each output uses fresh counts `Multinomial(n; p)` then one kernel draw.
pub fn compound_kernel_draws(p: &[f64], n: u64, basis: &HatBasis, draws: usize, seed: u64) -> Result<Vec<f64>> {
    if p.len() != basis.m() || n == 0 {
        return Err(Error::domain("need one probability per cell and n >= 1"));
    }
    let s: f64 = p.iter().sum();
    if p.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > 1e-8 {
        return Err(Error::domain(format!("invalid cell probabilities (sum {s})")));
    }
    let sampler = ElementSampler::new(basis)?;
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let counts = multinomial_with(p, n, &mut r);
            sampler.draw(pick_cell(&counts, n, &mut r), &mut r)
        })
        .collect()
}

/// CDF of `sum_j p_j u_j dnu0 / w_j`.
pub fn kernel_marginal_cdf(p: &[f64], basis: &HatBasis, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (j, pj) in p.iter().enumerate() {
        if *pj > 0.0 {
            acc += pj * basis.normalized_cumulative(j, t)?;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelDiagnostics {
    /// `w_j = int u_j dnu0`
    pub weights: Vec<f64>,
    pub max_normalization_defect: f64,
    /// `|int_{J_j} f dnu0 - int_{J_j} f_hat_m dnu0|` per cell
    pub cell_gaps: Vec<f64>,
    pub cell_probability_discrepancy: f64,
}

/// Compares the cell masses of `f` and of its interpolant `f_hat_m`.
pub fn cell_probability_discrepancy(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
) -> Result<KernelDiagnostics> {
    let basis = build_hat_basis(partition, measure)?;
    let masses = cell_masses(f, measure, partition)?;
    let hat_masses = hat_cell_probabilities(f, measure, partition)?;
    let cell_gaps: Vec<f64> = masses.iter().zip(&hat_masses).map(|(a, b)| (a - b).abs()).collect();
    Ok(KernelDiagnostics {
        weights: basis.weights().to_vec(),
        max_normalization_defect: basis.max_normalization_defect(),
        cell_probability_discrepancy: cell_gaps.iter().copied().fold(0.0, f64::max),
        cell_gaps,
    })
}

/// `int_{J_j} f_hat_m dnu0`: the cell probabilities of the interpolant.
pub fn hat_cell_probabilities(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
) -> Result<Vec<f64>> {
    let fh = hat_density(&cell_masses(f, measure, partition)?, partition)?;
    let knots = fh.knots().to_vec();
    (0..partition.m())
        .map(|j| {
            let (a, b) = partition.cell_bounds(j);
            let mut pts = vec![a];
            pts.extend(knots.iter().copied().filter(|&k| k > a && k < b));
            pts.push(b);
            measure.integrate_pieces(&pts, |x| fh.eval(x)).map_err(|e| e.in_cell(j + 1))
        })
        .collect()
}

/// Independent bridges `B_j`, each a standard Brownian bridge run on the
/// clock `Fbar_j = F_j / w_j`, so `Cov(B_j(s), B_j(t)) = Fbar_j(s) (1 - Fbar_j(t))`
/// for `s <= t`.
#[derive(Clone, Debug)]
pub struct BridgeNoise {
    /// `clock[j][k] = Fbar_j(t_k)`
    clock: Vec<Vec<f64>>,
}

impl BridgeNoise {
    pub fn new(basis: &HatBasis, times: &[f64]) -> Result<Self> {
        let clock = (0..basis.m())
            .map(|j| times.iter().map(|&t| basis.normalized_cumulative(j, t)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { clock })
    }

    pub fn clock(&self, j: usize) -> &[f64] {
        &self.clock[j]
    }

    /// `Var(B_j(t_k)) = Fbar (1 - Fbar)`.
    pub fn variance(&self, j: usize, k: usize) -> f64 {
        let c = self.clock[j][k];
        c * (1.0 - c)
    }

    /// Adds `scale * B_j(t_k)` into `out[k]`, using `W(tau) - tau W(1)`.
    pub fn accumulate<R: RngCore + ?Sized>(&self, j: usize, scale: f64, rng: &mut R, out: &mut [f64]) {
        let clock = &self.clock[j];
        let first = clock.partition_point(|&c| c <= 0.0);
        let last = clock.partition_point(|&c| c < 1.0);
        if first >= last {
            return;
        }
        let mut tau = 0.0;
        let mut w = 0.0;
        for k in first..last {
            let c = clock[k];
            w += (c - tau).max(0.0).sqrt() * standard_normal(rng);
            tau = c;
            out[k] += scale * w;
        }
        let w1 = w + (1.0 - tau).max(0.0).sqrt() * standard_normal(rng);
        for k in first..last {
            out[k] -= scale * clock[k] * w1;
        }
    }
}

/// Precomputed `F_j` on a grid for repeated `Y*` paths.
#[derive(Clone, Debug)]
pub struct YStarBuilder {
    basis: HatBasis,
    times: Vec<f64>,
    /// `cum[j][k] = F_j(t_k)`
    cum: Vec<Vec<f64>>,
    bridges: BridgeNoise,
}

impl YStarBuilder {
    pub fn new(basis: &HatBasis, grid: &GridSpec) -> Result<Self> {
        let iv = basis.measure().interval();
        if let Some(t) = grid.times().iter().find(|&&t| t < iv.lower() || t > iv.upper()) {
            return Err(Error::domain(format!("grid time {t} lies outside {iv}")));
        }
        let times = grid.times().to_vec();
        let cum = (0..basis.m())
            .map(|j| times.iter().map(|&t| basis.cumulative(j, t)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            basis: basis.clone(),
            bridges: BridgeNoise::new(basis, &times)?,
            times,
            cum,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn bridges(&self) -> &BridgeNoise {
        &self.bridges
    }

    /// `Y*_t = sum_j Ybar_j F_j(t) + (1 / (2 sqrt n)) sum_j sqrt(mu_n) B_j(t)`.
    pub fn path(&self, increments: &[f64], n: u64, seed: u64) -> Result<Trajectory> {
        let m = self.basis.m();
        if increments.len() != m {
            return Err(Error::domain(format!("{} increments for {m} cells", increments.len())));
        }
        let mut values = vec![0.0; self.times.len()];
        for (j, y) in increments.iter().enumerate() {
            for (v, f) in values.iter_mut().zip(&self.cum[j]) {
                *v += y * f;
            }
        }
        let scale = self.basis.partition().cell_mass().sqrt() / (2.0 * (n as f64).sqrt());
        for j in 0..m {
            let mut r = rng::stream(seed, j as u64);
            self.bridges.accumulate(j, scale, &mut r, &mut values);
        }
        Ok(Trajectory {
            times: self.times.clone(),
            values,
        })
    }

    /// Exact `Cov(Y*_s, Y*_t)` of the construction for grid indices `a <= b`,
    /// when the increments have variance `mu_n / (4n)`.
    pub fn covariance(&self, n: u64, a: usize, b: usize) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let mu = self.basis.partition().cell_mass();
        let s: f64 = (0..self.basis.m())
            .map(|j| {
                let c = self.bridges.clock(j);
                self.cum[j][a] * self.cum[j][b] + c[a] * (1.0 - c[b])
            })
            .sum();
        mu * s / (4.0 * n as f64)
    }
}

pub fn build_y_star_path(increments: &[f64], basis: &HatBasis, n: u64, grid: &GridSpec, seed: u64) -> Result<Trajectory> {
    YStarBuilder::new(basis, grid)?.path(increments, n, seed)
}

/// `(sum_j (int_{J_j} sqrt(f) dnu0) F_j(t), nu0(I ∩ (-inf, t]) / (4n))`.
pub fn y_star_theoretical_moments(f: &DensityParameter, basis: &HatBasis, n: u64, t: f64) -> Result<(f64, f64)> {
    let measure = basis.measure();
    if !measure.interval().contains(t) && !(t == measure.interval().lower() || t == measure.interval().upper()) {
        return Err(Error::domain(format!("{t} lies outside {}", measure.interval())));
    }
    let roots = cell_integrals(measure, basis.partition(), |x| f.sqrt(x))?;
    let mut mean = 0.0;
    for (j, s) in roots.iter().enumerate() {
        mean += s * basis.cumulative(j, t)?;
    }
    Ok((mean, measure.cdf(t)? / (4.0 * n as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximation::build_hat_basis;
    use crate::experiments::increments_from_means;
    use crate::measure::IntervalSpec;
    use crate::partition::build_partition;
    use crate::quadrature::QuadratureConfig;
    use std::sync::Arc;

    fn uniform_basis(m: usize) -> (BaseMeasure, HatBasis) {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, m).unwrap();
        let b = build_hat_basis(&p, &u).unwrap();
        (u, b)
    }

    #[test]
    fn grouping_examples() {
        let (u, b) = uniform_basis(2);
        let p = b.partition();
        assert_eq!(grouping_statistic(&[0.1, 0.3, 0.9], p, &u).unwrap(), vec![2, 1]);
        assert_eq!(grouping_statistic(&[0.5], p, &u).unwrap(), vec![1, 0]);
        let (_, b4) = uniform_basis(4);
        assert_eq!(grouping_statistic(&[0.6], b4.partition(), &u).unwrap(), vec![0, 0, 1, 0]);
        match grouping_statistic(&[1.5], p, &u) {
            Err(Error::Domain(msg)) => assert!(msg.contains("1.5")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_counts_stay_in_first_support() {
        let (_, b) = uniform_basis(4);
        let x2 = b.partition().barycenters()[1];
        let xs = randomization_kernel_draw(&[10, 0, 0, 0], &b, 2000, 3).unwrap();
        assert!(xs.iter().all(|&x| (0.0..=x2).contains(&x)));
        assert!(randomization_kernel_draw(&[0, 0, 0, 0], &b, 1, 3).is_err());
    }

    #[test]
    fn equal_counts_give_flat_marginal() {
        let (_, b) = uniform_basis(4);
        let xs = randomization_kernel_draw(&[5, 5, 5, 5], &b, 40_000, 9).unwrap();
        let mut bins = [0usize; 10];
        for x in &xs {
            bins[((x * 10.0) as usize).min(9)] += 1;
        }
        for k in bins {
            let p = k as f64 / 40_000.0;
            assert!((p - 0.1).abs() < 4.0 * (0.09f64 / 40_000.0).sqrt(), "{p}");
        }
    }

    #[test]
    fn kernel_draws_are_deterministic() {
        let (_, b) = uniform_basis(4);
        let a = randomization_kernel_draw(&[1, 2, 3, 4], &b, 100, 1).unwrap();
        assert_eq!(a, randomization_kernel_draw(&[1, 2, 3, 4], &b, 100, 1).unwrap());
    }

    #[test]
    fn compound_marginal_ks() {
        let (u, b) = uniform_basis(8);
        let f = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let p = hat_cell_probabilities(&f, &u, b.partition()).unwrap();
        let s: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / s).collect();
        let mut xs = compound_kernel_draws(&p, 200, &b, 20_000, 4).unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = kernel_marginal_cdf(&p, &b, x).unwrap();
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "KS {d}");
    }

    #[test]
    fn discrepancy_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let p = build_partition(&u, 8).unwrap();
        let c = DensityParameter::constant(&u).unwrap();
        assert!(cell_probability_discrepancy(&c, &u, &p).unwrap().cell_probability_discrepancy < 1e-13);
        let affine = DensityParameter::quadratic(&u, 0.4, 0.0).unwrap();
        let d = cell_probability_discrepancy(&affine, &u, &p).unwrap();
        for g in &d.cell_gaps[1..7] {
            assert!(*g < 1e-13);
        }
        let s = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let d = cell_probability_discrepancy(&s, &u, &p).unwrap();
        // independent scipy oracle
        assert!((d.cell_probability_discrepancy - 2.472_155_098_026_8e-3).abs() < 1e-11);
        assert!(d.max_normalization_defect < 1e-12);
    }

    #[test]
    fn bridge_pins_and_variance() {
        let (_, b) = uniform_basis(4);
        let grid = GridSpec::uniform(0.0, 1.0, 8).unwrap();
        let noise = BridgeNoise::new(&b, grid.times()).unwrap();
        for j in 0..4 {
            let (lo, hi) = b.support(j);
            for (k, t) in grid.times().iter().enumerate() {
                let v = noise.variance(j, k);
                assert!(v >= 0.0);
                if *t <= lo || *t >= hi {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn y_star_endpoint_is_sum_of_increments() {
        let (_, b) = uniform_basis(8);
        let grid = GridSpec::uniform(0.0, 1.0, 4).unwrap();
        let inc: Vec<f64> = (0..8).map(|j| 0.1 + 0.01 * j as f64).collect();
        let path = build_y_star_path(&inc, &b, 100, &grid, 1).unwrap();
        assert!((path.values[4] - inc.iter().sum::<f64>()).abs() < 1e-12);
        assert_eq!(path.values[0], 0.0);
        assert!(build_y_star_path(&inc, &b, 100, &GridSpec::new(vec![0.5, 1.5]).unwrap(), 1).is_err());
    }

    #[test]
    fn construction_covariance_matches_target_for_uniform() {
        let (u, b) = uniform_basis(8);
        let grid = GridSpec::uniform(0.0, 1.0, 20).unwrap();
        let ys = YStarBuilder::new(&b, &grid).unwrap();
        for a in 0..=20 {
            for c in a..=20 {
                let target = u.cdf(grid.times()[a]).unwrap() / 400.0;
                assert!((ys.covariance(100, a, c) - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn y_star_mc_moments() {
        let (u, b) = uniform_basis(8);
        let f = DensityParameter::constant(&u).unwrap();
        let grid = GridSpec::new(vec![0.25, 0.5, 0.75]).unwrap();
        let ys = YStarBuilder::new(&b, &grid).unwrap();
        let means = cell_integrals(&u, b.partition(), |x| f.sqrt(x)).unwrap();
        let reps = 40_000u64;
        let mut s = [0.0; 3];
        let mut s2 = [0.0; 3];
        for r in 0..reps {
            let inc = increments_from_means(&means, 0.125, 100, rng::derive_seed(r, 0));
            let path = ys.path(&inc, 100, rng::derive_seed(r, 1)).unwrap();
            for k in 0..3 {
                s[k] += path.values[k];
                s2[k] += path.values[k] * path.values[k];
            }
        }
        for k in 0..3 {
            let t = grid.times()[k];
            let (mean, var) = y_star_theoretical_moments(&f, &b, 100, t).unwrap();
            assert!((mean - t).abs() < 1e-12);
            let m = s[k] / reps as f64;
            let v = s2[k] / reps as f64 - m * m;
            assert!((m - mean).abs() < 4.0 * (var / reps as f64).sqrt());
            assert!((v - var).abs() < 4.0 * var * (2.0 / reps as f64).sqrt());
        }
    }

    #[test]
    fn theoretical_moments_examples() {
        let (u, b) = uniform_basis(4);
        let c = DensityParameter::constant(&u).unwrap();
        let (m, v) = y_star_theoretical_moments(&c, &b, 25, 1.0).unwrap();
        assert!((m - 1.0).abs() < 1e-12 && (v - 0.01).abs() < 1e-15);
        assert_eq!(y_star_theoretical_moments(&c, &b, 25, 0.0).unwrap(), (0.0, 0.0));

        let g = BaseMeasure::from_fn(
            "2x",
            IntervalSpec::closed(0.0, 1.0).unwrap(),
            Arc::new(|x| 2.0 * x),
            QuadratureConfig::default(),
        )
        .unwrap();
        let p = build_partition(&g, 4).unwrap();
        let bg = build_hat_basis(&p, &g).unwrap();
        let c = DensityParameter::constant(&g).unwrap();
        let (_, v) = y_star_theoretical_moments(&c, &bg, 100, 0.5).unwrap();
        assert!((v - 0.000_625).abs() < 1e-15);
    }
}
