//! Forward samplers for the density, multinomial, Gaussian-vector and
//! white-noise experiments.

use std::io::Write;

use rand_distr::{Binomial, Distribution};

use crate::approximation::{cell_integrals, cell_masses, hat_density, root_masses};
use crate::error::{Error, Result};
use crate::measure::{sample_from_density, BaseMeasure, DensityParameter};
use crate::partition::QuantilePartition;
use crate::quadrature;
use crate::rng::{self, standard_normal};

/// Tolerance on `sum(gamma) = 1` accepted by the samplers.
const PROBABILITY_SUM_TOL: f64 = 1e-8;

/// `gamma_i = int_{J_i} f dnu0`.
pub fn cell_probabilities(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
) -> Result<Vec<f64>> {
    cell_masses(f, measure, partition)
}

fn validate_probabilities(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::domain("empty probability vector"));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
        return Err(Error::domain(format!("invalid probability {g}")));
    }
    let s: f64 = gammas.iter().sum();
    if (s - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::domain(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// One draw from `Multinomial(n; gammas)` by conditional binomials.
pub fn sample_multinomial(gammas: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    validate_probabilities(gammas)?;
    Ok(multinomial_with(gammas, n, &mut rng::stream(seed, 0)))
}

pub(crate) fn multinomial_with<R: rand::Rng + ?Sized>(gammas: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; gammas.len()];
    let mut left = n;
    let mut rest: f64 = gammas.iter().sum();
    for (i, &g) in gammas.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == gammas.len() {
            counts[i] = left;
            break;
        }
        let p = if rest > 0.0 { (g / rest).clamp(0.0, 1.0) } else { 0.0 };
        let k = if p >= 1.0 {
            left
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(left, p).expect("valid binomial").sample(rng)
        };
        counts[i] = k;
        left -= k;
        rest -= g;
    }
    counts
}

/// Independent `N(sqrt(n gamma_i), 1/4)` coordinates.
pub fn sample_gaussian_vector(gammas: &[f64], n: u64, seed: u64) -> Result<Vec<f64>> {
    validate_probabilities(gammas)?;
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let mut r = rng::stream(seed, 0);
    let nf = n as f64;
    Ok(gammas
        .iter()
        .map(|g| (nf * g).sqrt() + 0.5 * standard_normal(&mut r))
        .collect())
}

/// Cell increments `Ybar_j ~ N(int_{J_j} sqrt(f) dnu0, mu_n / (4n))`.
pub fn sample_increments(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
    n: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let means = root_masses(f, measure, partition)?;
    Ok(increments_from_means(&means, partition.cell_mass(), n, seed))
}

/// Same law as [`sample_increments`] with the means already computed.
pub fn increments_from_means(means: &[f64], cell_mass: f64, n: u64, seed: u64) -> Vec<f64> {
    let sd = (cell_mass / (4.0 * n as f64)).sqrt();
    let mut r = rng::stream(seed, 0);
    means.iter().map(|m| m + sd * standard_normal(&mut r)).collect()
}

fn rescale_factor(partition: &QuantilePartition, n: u64) -> f64 {
    2.0 * (n as f64).sqrt() / partition.cell_mass().sqrt()
}

/// `(2 sqrt(n) / sqrt(mu_n)) Ybar_j`: unit-variance coordinates.
pub fn rescale_increments(increments: &[f64], partition: &QuantilePartition, n: u64) -> Vec<f64> {
    let c = rescale_factor(partition, n);
    increments.iter().map(|y| c * y).collect()
}

/// Inverse of [`rescale_increments`].
pub fn unscale_increments(rescaled: &[f64], partition: &QuantilePartition, n: u64) -> Vec<f64> {
    let c = rescale_factor(partition, n);
    rescaled.iter().map(|y| y / c).collect()
}

/// Strictly increasing, finite observation times.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    times: Vec<f64>,
}

impl GridSpec {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::domain("empty grid"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("grid times must be finite"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("grid times must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `count + 1` equally spaced points from `a` to `b`.
    pub fn uniform(a: f64, b: f64, count: usize) -> Result<Self> {
        if count == 0 || !(a < b) {
            return Err(Error::domain(format!("bad uniform grid [{a}, {b}] x {count}")));
        }
        let h = (b - a) / count as f64;
        let mut times: Vec<f64> = (0..count).map(|k| a + k as f64 * h).collect();
        times.push(b);
        Self::new(times)
    }

    /// Adds the finite partition edges that fall inside the current window.
    pub fn with_breakpoints(&self, partition: &QuantilePartition) -> Self {
        let mut times = self.times.clone();
        times.extend(partition.edges().iter().filter(|v| v.is_finite()));
        times.sort_by(f64::total_cmp);
        times.dedup();
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains_breakpoints(&self, partition: &QuantilePartition) -> bool {
        partition
            .breakpoints()
            .iter()
            .all(|v| self.times.binary_search_by(|t| t.total_cmp(v)).is_ok())
    }
}

/// Cumulative path values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.times
            .binary_search_by(|s| s.total_cmp(&t))
            .ok()
            .map(|k| self.values[k])
    }

    /// `Y(v_j) - Y(v_{j-1})` per cell; all edges must be finite grid points.
    pub fn cell_increments(&self, partition: &QuantilePartition) -> Result<Vec<f64>> {
        partition
            .edges()
            .iter()
            .map(|&v| {
                self.value_at(v)
                    .ok_or_else(|| Error::domain(format!("edge {v} is not a grid point")))
            })
            .collect::<Result<Vec<f64>>>()
            .map(|ys| ys.windows(2).map(|w| w[1] - w[0]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "Y_t"]).map_err(csv_error)?;
        for (t, y) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), y.to_string()]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `cell_index,count` with 1-based indices.
pub fn write_counts_csv<W: Write>(counts: &[u64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_index", "count"]).map_err(csv_error)?;
    for (j, k) in counts.iter().enumerate() {
        w.write_record([(j + 1).to_string(), k.to_string()]).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Time scale of the white-noise observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parametrization {
    /// `dY = sqrt(f g) dt + dW / (2 sqrt(n))`
    LebesgueTime,
    /// `dy = sqrt(f) g dt + sqrt(g) dW / (2 sqrt(n))`; increments have
    /// variance `nu0(step) / (4n)`.
    Nu0Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathOptions {
    pub parametrization: Parametrization,
    pub suppress_noise: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            parametrization: Parametrization::LebesgueTime,
            suppress_noise: false,
        }
    }
}

/// White-noise trajectory on `grid`, anchored at `Y_0 = 0`.
///
/// Times left of 0 use an independent Brownian half run backwards from 0.
pub fn simulate_white_noise_path(
    f: &DensityParameter,
    measure: &BaseMeasure,
    n: u64,
    grid: &GridSpec,
    seed: u64,
    options: PathOptions,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let iv = measure.interval();
    let scale = 1.0 / (4.0 * n as f64);
    // (mean, variance) of the increment over [a, b], a < b
    let step = |a: f64, b: f64| -> Result<(f64, f64)> {
        let lo = a.max(iv.lower());
        let hi = b.min(iv.upper());
        match options.parametrization {
            Parametrization::LebesgueTime => {
                let drift = if lo < hi {
                    quadrature::integrate(
                        |t| (f.eval(t) * measure.density(t)).max(0.0).sqrt(),
                        lo,
                        hi,
                        measure.quadrature(),
                    )?
                    .value
                } else {
                    0.0
                };
                Ok((drift, (b - a) * scale))
            }
            Parametrization::Nu0Time => {
                if lo < hi {
                    let drift = measure.integrate(lo, hi, |x| f.sqrt(x))?;
                    let mass = measure.cdf(hi)? - measure.cdf(lo)?;
                    Ok((drift, mass.max(0.0) * scale))
                } else {
                    Ok((0.0, 0.0))
                }
            }
        }
    };

    let times = grid.times();
    let split = times.partition_point(|&t| t < 0.0);
    let mut values = vec![0.0; times.len()];
    let mut forward = rng::stream(seed, 0);
    let mut backward = rng::stream(seed, 1);
    let noise = |r: &mut rng::StreamRng, var: f64| {
        if options.suppress_noise {
            0.0
        } else {
            var.sqrt() * standard_normal(r)
        }
    };

    let (mut t_prev, mut y_prev) = (0.0, 0.0);
    for k in split..times.len() {
        let t = times[k];
        let (mean, var) = if t > t_prev { step(t_prev, t)? } else { (0.0, 0.0) };
        y_prev += mean + noise(&mut forward, var);
        values[k] = y_prev;
        t_prev = t;
    }
    let (mut t_prev, mut y_prev) = (0.0, 0.0);
    for k in (0..split).rev() {
        let t = times[k];
        let (mean, var) = step(t, t_prev)?;
        y_prev -= mean + noise(&mut backward, var);
        values[k] = y_prev;
        t_prev = t;
    }
    Ok(Trajectory {
        times: times.to_vec(),
        values,
    })
}

/// Which experiment a draw came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelTag {
    /// `n` i.i.d. observations with density `f g`.
    Density,
    /// `n` i.i.d. observations with density `f_hat_m g`.
    HatDensity,
    /// Cell counts `Multinomial(n; gamma)`.
    Multinomial,
    /// `N(sqrt(n gamma_j), 1/4)` coordinates.
    GaussianVector,
    /// Cell increments of the white-noise path.
    Increments,
    /// Increments rescaled to unit variance.
    RescaledIncrements,
    WhiteNoise,
}

impl ModelTag {
    pub fn name(&self) -> &'static str {
        match self {
            ModelTag::Density => "density",
            ModelTag::HatDensity => "hat_density",
            ModelTag::Multinomial => "multinomial",
            ModelTag::GaussianVector => "gaussian_vector",
            ModelTag::Increments => "increments",
            ModelTag::RescaledIncrements => "rescaled_increments",
            ModelTag::WhiteNoise => "white_noise",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Observations(Vec<f64>),
    Counts(Vec<u64>),
    Coordinates(Vec<f64>),
    Path(Trajectory),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub n: u64,
    pub m: usize,
    pub seed: u64,
    pub parameter: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentDraw {
    pub tag: ModelTag,
    pub payload: Payload,
    pub provenance: Provenance,
}

/// Parameter, base measure, partition and sample size shared by all models.
#[derive(Clone, Debug)]
pub struct ExperimentSetup {
    pub f: DensityParameter,
    pub measure: BaseMeasure,
    pub partition: QuantilePartition,
    pub n: u64,
}

impl ExperimentSetup {
    /// `grid` is only used for [`ModelTag::WhiteNoise`]; defaults to the partition edges.
    pub fn draw(&self, tag: ModelTag, seed: u64, grid: Option<&GridSpec>) -> Result<ExperimentDraw> {
        let (f, measure, partition, n) = (&self.f, &self.measure, &self.partition, self.n);
        let payload = match tag {
            ModelTag::Density => Payload::Observations(sample_from_density(measure, f, n as usize, seed)?),
            ModelTag::HatDensity => {
                let fh = hat_density(&cell_masses(f, measure, partition)?, partition)?;
                let total = fh.total_mass(measure)?;
                let upper = fh.values().iter().copied().fold(0.0, f64::max);
                let kappa = fh.values().iter().copied().fold(f64::INFINITY, f64::min);
                let hat = DensityParameter::new(
                    format!("hat({})", f.label()),
                    std::sync::Arc::new(move |x| fh.eval(x) / total),
                    kappa / total,
                    upper / total,
                )?;
                Payload::Observations(sample_from_density(measure, &hat, n as usize, seed)?)
            }
            ModelTag::Multinomial => {
                let g = cell_probabilities(f, measure, partition)?;
                Payload::Counts(sample_multinomial(&normalized(g), n, seed)?)
            }
            ModelTag::GaussianVector => {
                let g = cell_probabilities(f, measure, partition)?;
                Payload::Coordinates(sample_gaussian_vector(&normalized(g), n, seed)?)
            }
            ModelTag::Increments => Payload::Coordinates(sample_increments(f, measure, partition, n, seed)?),
            ModelTag::RescaledIncrements => {
                let y = sample_increments(f, measure, partition, n, seed)?;
                Payload::Coordinates(rescale_increments(&y, partition, n))
            }
            ModelTag::WhiteNoise => {
                let default_grid;
                let grid = match grid {
                    Some(g) => g,
                    None => {
                        default_grid = GridSpec::new(
                            partition.edges().iter().copied().filter(|v| v.is_finite()).collect(),
                        )?;
                        &default_grid
                    }
                };
                Payload::Path(simulate_white_noise_path(f, measure, n, grid, seed, PathOptions::default())?)
            }
        };
        Ok(ExperimentDraw {
            tag,
            payload,
            provenance: Provenance {
                n,
                m: partition.m(),
                seed,
                parameter: f.label().to_string(),
            },
        })
    }
}

fn normalized(mut g: Vec<f64>) -> Vec<f64> {
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= s);
    g
}

/// `sum_j (2 sqrt(n gamma_j) - (2 sqrt(n) / sqrt(mu_n)) int_{J_j} sqrt(f) dnu0)^2`.
pub fn gaussian_leg_gap_sq(
    f: &DensityParameter,
    measure: &BaseMeasure,
    partition: &QuantilePartition,
    n: u64,
) -> Result<f64> {
    let gammas = cell_integrals(measure, partition, |x| f.eval(x))?;
    let roots = cell_integrals(measure, partition, |x| f.sqrt(x))?;
    let nf = n as f64;
    let c = rescale_factor(partition, n);
    Ok(gammas
        .iter()
        .zip(&roots)
        .map(|(g, s)| (2.0 * (nf * g).sqrt() - c * s).powi(2))
        .sum())
}
