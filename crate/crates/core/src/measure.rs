//! Base measure `nu0` on an interval, the density parameter `f`, and the
//! numerical primitives built on them: CDF, quantile and sampling from `f * g`.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};
use crate::rng::{self, open_uniform};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of cells in the cached CDF table used to seed quantile searches.
const TABLE_CELLS: usize = 1024;

/// Lowest acceptance probability tolerated by the rejection sampler.
pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 1e-3;

const QUANTILE_WIDTH: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSpec {
    lower: f64,
    upper: f64,
    lower_closed: bool,
    upper_closed: bool,
}

impl IntervalSpec {
    /// Infinite endpoints are always open; asking for a closed one is an error.
    pub fn new(lower: f64, upper: f64, lower_closed: bool, upper_closed: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::InvalidMeasure(format!(
                "interval needs lower < upper, got ({lower}, {upper})"
            )));
        }
        if (lower_closed && lower.is_infinite()) || (upper_closed && upper.is_infinite()) {
            return Err(Error::InvalidMeasure("infinite endpoints must be open".into()));
        }
        Ok(Self {
            lower,
            upper,
            lower_closed,
            upper_closed,
        })
    }

    pub fn closed(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, true, true)
    }

    /// `[lower, +inf)`
    pub fn half_line(lower: f64) -> Result<Self> {
        Self::new(lower, f64::INFINITY, true, false)
    }

    pub fn real_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_compact(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_closed {
            x >= self.lower
        } else {
            x > self.lower
        };
        let below = if self.upper_closed {
            x <= self.upper
        } else {
            x < self.upper
        };
        above && below
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    /// Monotone bijection from `[0, 1]` onto the closure of the interval.
    pub fn from_unit(&self, u: f64) -> f64 {
        let (a, b) = (self.lower, self.upper);
        match (a.is_finite(), b.is_finite()) {
            (true, true) => {
                if u >= 1.0 {
                    b
                } else {
                    a + u * (b - a)
                }
            }
            (true, false) => {
                if u >= 1.0 {
                    f64::INFINITY
                } else {
                    a + u / (1.0 - u)
                }
            }
            (false, true) => {
                if u <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    b - (1.0 - u) / u
                }
            }
            (false, false) => {
                let s = 2.0 * u - 1.0;
                if s <= -1.0 {
                    f64::NEG_INFINITY
                } else if s >= 1.0 {
                    f64::INFINITY
                } else {
                    s / (1.0 - s.abs())
                }
            }
        }
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lower_closed { '[' } else { '(' };
        let r = if self.upper_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lower, self.upper)
    }
}

struct CdfTable {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

/// A finite measure `nu0` on an interval, given by its Lebesgue density `g`.
#[derive(Clone)]
pub struct BaseMeasure {
    name: String,
    interval: IntervalSpec,
    density: RealFn,
    total_mass: f64,
    quad: QuadratureConfig,
    table: Arc<CdfTable>,
}

impl fmt::Debug for BaseMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseMeasure")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

impl BaseMeasure {
    pub fn from_fn(
        name: impl Into<String>,
        interval: IntervalSpec,
        density: RealFn,
        quad: QuadratureConfig,
    ) -> Result<Self> {
        let name = name.into();
        let xs: Vec<f64> = (0..=TABLE_CELLS)
            .map(|k| interval.from_unit(k as f64 / TABLE_CELLS as f64))
            .collect();
        let mut cum = Vec::with_capacity(xs.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for w in xs.windows(2) {
            let e = quadrature::integrate(&*density, w[0], w[1], &quad)?;
            if e.value < -quad.abs_tol {
                return Err(Error::InvalidMeasure(format!(
                    "{name}: density integrates negative on [{}, {}]",
                    w[0], w[1]
                )));
            }
            acc += e.value.max(0.0);
            cum.push(acc);
        }
        for &x in xs.iter().filter(|x| x.is_finite()) {
            let gx = density(x);
            if gx < 0.0 || gx.is_nan() {
                return Err(Error::InvalidMeasure(format!("{name}: g({x}) = {gx} is not >= 0")));
            }
        }
        if !(acc.is_finite() && acc > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "{name}: total mass {acc} must be finite and positive"
            )));
        }
        Ok(Self {
            name,
            interval,
            density,
            total_mass: acc,
            quad,
            table: Arc::new(CdfTable { xs, cum }),
        })
    }

    /// Lebesgue measure on `[a, b]` (`g = 1`).
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::from_fn(
            format!("uniform[{a},{b}]"),
            IntervalSpec::closed(a, b)?,
            Arc::new(|_| 1.0),
            QuadratureConfig::default(),
        )
    }

    /// `g(x) = x^(a-1)` on `[0, length]`, total mass `length^a / a`.
    pub fn power_law(a: f64, length: f64) -> Result<Self> {
        if !(a > 0.0 && length > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "power law needs a > 0 and length > 0, got a={a}, length={length}"
            )));
        }
        Self::from_fn(
            format!("power_law(a={a},L={length})"),
            IntervalSpec::closed(0.0, length)?,
            Arc::new(move |x: f64| x.powf(a - 1.0)),
            QuadratureConfig::default(),
        )
    }

    /// `g(x) = exp(-rate * x)` on `[0, inf)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidMeasure(format!("exponential rate must be > 0, got {rate}")));
        }
        Self::from_fn(
            format!("exponential(rate={rate})"),
            IntervalSpec::half_line(0.0)?,
            Arc::new(move |x: f64| (-rate * x).exp()),
            QuadratureConfig::default(),
        )
    }

    /// Piecewise-linear `g` through `(x, g)` points on `[x_first, x_last]`.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMeasure("tabulated density needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidMeasure("tabulated abscissae must increase".into()));
        }
        if points.iter().any(|p| !(p.1 >= 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidMeasure("tabulated values must be finite and >= 0".into()));
        }
        let pts: Arc<Vec<(f64, f64)>> = Arc::new(points.to_vec());
        let interval = IntervalSpec::closed(points[0].0, points[points.len() - 1].0)?;
        let table = Arc::clone(&pts);
        Self::from_fn(
            format!("tabulated({} points)", points.len()),
            interval,
            Arc::new(move |x: f64| {
                let p = &table;
                if x <= p[0].0 {
                    return p[0].1;
                }
                let k = p.partition_point(|q| q.0 < x);
                if k >= p.len() {
                    return p[p.len() - 1].1;
                }
                let (x0, y0) = p[k - 1];
                let (x1, y1) = p[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }),
            QuadratureConfig::default(),
        )
    }

    pub fn with_quadrature(self, quad: QuadratureConfig) -> Result<Self> {
        Self::from_fn(self.name, self.interval, self.density, quad)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interval(&self) -> &IntervalSpec {
        &self.interval
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    /// `g(x)`, zero outside the interval.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.interval.lower || x > self.interval.upper {
            0.0
        } else {
            (self.density)(x)
        }
    }

    pub fn density_fn(&self) -> RealFn {
        Arc::clone(&self.density)
    }

    /// `int_a^b h(x) g(x) dx` with the bounds clipped to the interval.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, h: F) -> Result<f64> {
        let a = self.interval.clamp(a);
        let b = self.interval.clamp(b);
        if a >= b {
            return Ok(0.0);
        }
        let g = &self.density;
        quadrature::integrate(|x| h(x) * g(x), a, b, &self.quad).map(|e| e.value)
    }

    /// Same as [`Self::integrate`], split at the sorted `points`.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, points: &[f64], h: F) -> Result<f64> {
        let mut total = 0.0;
        for w in points.windows(2) {
            total += self.integrate(w[0], w[1], &h)?;
        }
        Ok(total)
    }

    /// `nu0(I ∩ (-inf, t])`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::domain("cdf evaluated at NaN"));
        }
        if t <= self.interval.lower {
            return Ok(0.0);
        }
        if t >= self.interval.upper {
            return Ok(self.total_mass);
        }
        let xs = &self.table.xs;
        let k = xs.partition_point(|&x| x <= t).saturating_sub(1);
        let v = self.table.cum[k] + self.integrate(xs[k], t, |_| 1.0)?;
        Ok(v.clamp(0.0, self.total_mass))
    }

    /// Smallest `t` with `cdf(t) = p * total_mass`, to `1e-12` in `t`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("quantile level {p} outside [0, 1]")));
        }
        if p == 0.0 {
            return Ok(self.interval.lower);
        }
        if p == 1.0 {
            return Ok(self.interval.upper);
        }
        let target = p * self.total_mass;
        let cum = &self.table.cum;
        let xs = &self.table.xs;
        let k = cum.partition_point(|&c| c < target).clamp(1, cum.len() - 1);
        let (mut a, mut fa) = (xs[k - 1], cum[k - 1]);
        let (mut b, mut fb) = (xs[k], cum[k]);
        if a.is_infinite() {
            let mut step = 1.0;
            loop {
                a = b - step;
                fa = self.cdf(a)?;
                if fa <= target {
                    break;
                }
                step *= 2.0;
            }
        }
        if b.is_infinite() {
            let mut step = 1.0;
            loop {
                b = a + step;
                fb = self.cdf(b)?;
                if fb >= target {
                    break;
                }
                step *= 2.0;
            }
        }
        self.solve_cdf(target, a, fa, b, fb)
    }

    /// Bracketed Newton on `anchor + int_a^x g = target`; falls back to
    /// bisection whenever the Newton step leaves the bracket.
    fn solve_cdf(&self, target: f64, a0: f64, fa0: f64, b0: f64, fb0: f64) -> Result<f64> {
        let (anchor_x, anchor_v) = (a0, fa0);
        let (mut a, mut b) = (a0, b0);
        let mut x = if fb0 > fa0 {
            a + (b - a) * ((target - fa0) / (fb0 - fa0)).clamp(0.0, 1.0)
        } else {
            0.5 * (a + b)
        };
        for _ in 0..300 {
            // absolute width, shrunk near 0 so tiny quantiles keep relative accuracy
            let tol = (QUANTILE_WIDTH * x.abs().min(1.0))
                .max(4.0 * f64::EPSILON * x.abs())
                .max(f64::MIN_POSITIVE);
            let fx = anchor_v + self.integrate(anchor_x, x, |_| 1.0)? - target;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            if b - a <= tol {
                return Ok(0.5 * (a + b));
            }
            let gx = self.density(x);
            let newton = x - fx / gx;
            if gx > 0.0 && newton > a && newton < b {
                if (newton - x).abs() <= tol {
                    return Ok(newton);
                }
                x = newton;
            } else {
                x = 0.5 * (a + b);
            }
        }
        Ok(0.5 * (a + b))
    }

    /// `size` finite evaluation points covering the interval.
    pub fn grid(&self, size: usize) -> Vec<f64> {
        let size = size.max(2);
        if self.interval.is_compact() {
            let (a, b) = (self.interval.lower, self.interval.upper);
            (0..size)
                .map(|k| {
                    if k + 1 == size {
                        b
                    } else {
                        a + (b - a) * k as f64 / (size - 1) as f64
                    }
                })
                .collect()
        } else {
            (0..size)
                .map(|k| self.interval.from_unit((k + 1) as f64 / (size + 1) as f64))
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderSpec {
    /// Exponent in `(0, 1]`.
    pub gamma: f64,
    /// Hölder constant of `f'`.
    pub constant: f64,
}

/// The unknown density `f` (with respect to `nu0`) together with its class constants.
#[derive(Clone)]
pub struct DensityParameter {
    label: String,
    f: RealFn,
    kappa: f64,
    upper: f64,
    holder: Option<HolderSpec>,
}

impl fmt::Debug for DensityParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityParameter")
            .field("label", &self.label)
            .field("kappa", &self.kappa)
            .field("upper", &self.upper)
            .field("holder", &self.holder)
            .finish()
    }
}

impl DensityParameter {
    pub fn new(label: impl Into<String>, f: RealFn, kappa: f64, upper: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= upper && upper.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "need 0 < kappa <= M < inf, got kappa={kappa}, M={upper}"
            )));
        }
        Ok(Self {
            label: label.into(),
            f,
            kappa,
            upper,
            holder: None,
        })
    }

    pub fn with_holder(mut self, gamma: f64, constant: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0 && constant >= 0.0 && constant.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "Hölder exponent must lie in (0, 1] and K >= 0, got gamma={gamma}, K={constant}"
            )));
        }
        self.holder = Some(HolderSpec { gamma, constant });
        Ok(self)
    }

    /// Replace the declared bounds (keeps `f`); used to probe class violations.
    pub fn with_bounds(mut self, kappa: f64, upper: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= upper && upper.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "need 0 < kappa <= M < inf, got kappa={kappa}, M={upper}"
            )));
        }
        self.kappa = kappa;
        self.upper = upper;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn sqrt(&self, x: f64) -> f64 {
        (self.f)(x).sqrt()
    }

    pub fn function(&self) -> RealFn {
        Arc::clone(&self.f)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn holder(&self) -> Option<HolderSpec> {
        self.holder
    }

    /// `f = 1 / nu0(I)`, the flat member of every class.
    pub fn constant(measure: &BaseMeasure) -> Result<Self> {
        let c = 1.0 / measure.total_mass();
        Self::new("constant", Arc::new(move |_| c), c, c)?.with_holder(1.0, 0.0)
    }

    /// `f ∝ 1 + amplitude * sin(2 pi frequency x + phase)`, normalized against `nu0`.
    pub fn sinusoidal(measure: &BaseMeasure, amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidDensity(format!(
                "sinusoidal amplitude must satisfy |a| < 1, got {amplitude}"
            )));
        }
        let w = 2.0 * std::f64::consts::PI * frequency;
        let raw = move |x: f64| 1.0 + amplitude * (w * x + phase).sin();
        let c = 1.0 / measure.integrate(f64::NEG_INFINITY, f64::INFINITY, raw)?;
        let a = amplitude.abs();
        Self::new(
            format!("sinusoidal(a={amplitude},k={frequency},phase={phase})"),
            Arc::new(move |x| c * raw(x)),
            c * (1.0 - a),
            c * (1.0 + a),
        )?
        .with_holder(1.0, c * a * w * w)
    }

    /// `f ∝ 1 + slope (x - mid) + curvature (x - mid)^2` on a compact interval.
    pub fn quadratic(measure: &BaseMeasure, slope: f64, curvature: f64) -> Result<Self> {
        let iv = measure.interval();
        if !iv.is_compact() {
            return Err(Error::Unsupported("quadratic family needs a compact interval".into()));
        }
        let mid = 0.5 * (iv.lower() + iv.upper());
        let raw = move |x: f64| {
            let d = x - mid;
            1.0 + slope * d + curvature * d * d
        };
        let mut candidates = vec![raw(iv.lower()), raw(iv.upper())];
        if curvature != 0.0 {
            let vertex = mid - slope / (2.0 * curvature);
            if vertex > iv.lower() && vertex < iv.upper() {
                candidates.push(raw(vertex));
            }
        }
        let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) {
            return Err(Error::InvalidDensity(format!(
                "quadratic(slope={slope}, curvature={curvature}) is not bounded away from 0"
            )));
        }
        let c = 1.0 / measure.integrate(iv.lower(), iv.upper(), raw)?;
        Self::new(
            format!("quadratic(b={slope},c={curvature})"),
            Arc::new(move |x| c * raw(x)),
            c * lo,
            c * hi,
        )?
        .with_holder(1.0, 2.0 * curvature.abs() * c)
    }

    /// `f ∝ exp(-theta x)` on a compact interval. With `g = x^(a-1)` on `[0, L]`
    /// this is the truncated-Gamma parameter.
    pub fn exponential_tilt(measure: &BaseMeasure, theta: f64) -> Result<Self> {
        let iv = measure.interval();
        if !iv.is_compact() {
            return Err(Error::Unsupported(
                "exponential tilt needs a compact interval to stay bounded away from 0".into(),
            ));
        }
        let raw = move |x: f64| (-theta * x).exp();
        let c = 1.0 / measure.integrate(iv.lower(), iv.upper(), raw)?;
        let (ra, rb) = (raw(iv.lower()), raw(iv.upper()));
        Self::new(
            format!("exponential_tilt(theta={theta})"),
            Arc::new(move |x| c * raw(x)),
            c * ra.min(rb),
            c * ra.max(rb),
        )?
        .with_holder(1.0, c * theta * theta * ra.max(rb))
    }
}

/// Draw one observation with Lebesgue density `f g` by rejection from `nu0 / nu0(I)`.
pub fn draw_from_density<R: RngCore + ?Sized>(
    measure: &BaseMeasure,
    f: &DensityParameter,
    rng: &mut R,
) -> Result<f64> {
    let envelope = f.upper();
    // the expected acceptance is 1 / (M nu0(I)); cap attempts far beyond that
    let max_attempts = (1e4 * envelope * measure.total_mass()).max(1e4) as u64;
    for _ in 0..max_attempts {
        let x = measure.quantile(open_uniform(rng))?;
        if open_uniform(rng) * envelope < f.eval(x) {
            return Ok(x);
        }
    }
    Err(Error::AcceptanceTooLow {
        rate: 0.0,
        floor: DEFAULT_ACCEPTANCE_FLOOR,
        envelope_ratio: envelope * measure.total_mass(),
    })
}

pub fn sample_from_density(
    measure: &BaseMeasure,
    f: &DensityParameter,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_from_density_with_floor(measure, f, count, seed, DEFAULT_ACCEPTANCE_FLOOR)
}

/// `count` i.i.d. draws from `f g`; draw `i` uses the stream `(seed, i)`.
pub fn sample_from_density_with_floor(
    measure: &BaseMeasure,
    f: &DensityParameter,
    count: usize,
    seed: u64,
    acceptance_floor: f64,
) -> Result<Vec<f64>> {
    let ratio = f.upper() * measure.total_mass();
    let rate = 1.0 / ratio;
    if rate < acceptance_floor {
        return Err(Error::AcceptanceTooLow {
            rate,
            floor: acceptance_floor,
            envelope_ratio: ratio,
        });
    }
    (0..count)
        .into_par_iter()
        .map(|i| draw_from_density(measure, f, &mut rng::stream(seed, i as u64)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    pub min: f64,
    pub max: f64,
    pub normalization_defect: f64,
    pub holder_quotient_max: Option<f64>,
    pub h1_pass: bool,
    pub normalization_pass: bool,
    pub holder_pass: Option<bool>,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.h1_pass && self.normalization_pass && self.holder_pass.unwrap_or(true)
    }
}

const NORMALIZATION_TOL: f64 = 1e-8;
const BOUND_RTOL: f64 = 1e-12;
const HOLDER_GRID_MAX: usize = 400;

/// Grid scan of the class constraints: bounds, normalization and, when
/// declared, the Hölder condition on `f'` (central finite differences).
pub fn check_class_membership(
    f: &DensityParameter,
    measure: &BaseMeasure,
    grid_size: usize,
) -> MembershipReport {
    let grid = measure.grid(grid_size);
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // declared bounds are computed from the same closed form, so allow rounding
    let h1_pass = min >= f.kappa() * (1.0 - BOUND_RTOL) && max <= f.upper() * (1.0 + BOUND_RTOL);

    let normalization_defect = match measure.integrate(f64::NEG_INFINITY, f64::INFINITY, |x| f.eval(x)) {
        Ok(v) => (v - 1.0).abs(),
        Err(_) => f64::NAN,
    };
    let normalization_pass = normalization_defect <= NORMALIZATION_TOL;

    let (holder_quotient_max, holder_pass) = match f.holder() {
        None => (None, None),
        Some(h) => {
            let q = holder_quotient(f, measure, h.gamma, grid_size.min(HOLDER_GRID_MAX));
            (Some(q), Some(q <= h.constant * (1.0 + 1e-4) + 1e-6))
        }
    };

    MembershipReport {
        min,
        max,
        normalization_defect,
        holder_quotient_max,
        h1_pass,
        normalization_pass,
        holder_pass,
    }
}

fn holder_quotient(f: &DensityParameter, measure: &BaseMeasure, gamma: f64, size: usize) -> f64 {
    let iv = measure.interval();
    let grid = measure.grid(size.max(3));
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .filter(|&&x| iv.contains(x))
        .map(|&x| {
            let h = 1e-5 * x.abs().max(1.0);
            // one-sided differences at the edges of a closed interval
            let lo = (x - h).max(iv.lower());
            let hi = (x + h).min(iv.upper());
            (x, (f.eval(hi) - f.eval(lo)) / (hi - lo))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dx = (pts[j].0 - pts[i].0).abs();
            if dx > 0.0 {
                worst = worst.max((pts[j].1 - pts[i].1).abs() / dx.powf(gamma));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_x() -> BaseMeasure {
        BaseMeasure::from_fn(
            "2x",
            IntervalSpec::closed(0.0, 1.0).unwrap(),
            Arc::new(|x| 2.0 * x),
            QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn interval_validation() {
        assert!(IntervalSpec::closed(1.0, 1.0).is_err());
        assert!(IntervalSpec::new(0.0, f64::INFINITY, true, true).is_err());
        let iv = IntervalSpec::new(0.0, 1.0, false, true).unwrap();
        assert!(!iv.contains(0.0));
        assert!(iv.contains(1.0));
        assert_eq!(iv.to_string(), "(0, 1]");
    }

    #[test]
    fn cdf_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        assert!((u.cdf(0.25).unwrap() - 0.25).abs() < 1e-14);
        let e = BaseMeasure::exponential(1.0).unwrap();
        assert!((e.cdf(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-10);
        assert!((two_x().cdf(1.0).unwrap() - 1.0).abs() < 1e-12);
        // clamped outside the interval
        assert_eq!(u.cdf(-3.0).unwrap(), 0.0);
        assert_eq!(u.cdf(7.0).unwrap(), u.total_mass());
    }

    #[test]
    fn quantile_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        assert!((u.quantile(0.75).unwrap() - 0.75).abs() < 1e-12);
        assert!((two_x().quantile(0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-11);
        let e = BaseMeasure::exponential(1.0).unwrap();
        assert!((e.quantile(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-11);
        assert!(matches!(u.quantile(1.5), Err(Error::Domain(_))));
        assert_eq!(e.quantile(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn quantile_inverts_cdf_for_builtins() {
        let families = [
            BaseMeasure::uniform(-1.0, 3.0).unwrap(),
            BaseMeasure::power_law(2.5, 2.0).unwrap(),
            BaseMeasure::power_law(0.5, 1.0).unwrap(),
            BaseMeasure::exponential(0.7).unwrap(),
            two_x(),
        ];
        for m in &families {
            for k in 1..=100 {
                let p = k as f64 / 101.0;
                let t = m.quantile(p).unwrap();
                let back = m.cdf(t).unwrap() / m.total_mass();
                assert!((back - p).abs() < 1e-10, "{}: p={p} back={back}", m.name());
            }
        }
    }

    #[test]
    fn power_law_total_mass_closed_form() {
        for &(a, l) in &[(0.5, 1.0), (2.0, 1.0), (3.0, 2.0), (1.5, 4.0)] {
            let m = BaseMeasure::power_law(a, l).unwrap();
            let exact = l.powf(a) / a;
            assert!((m.total_mass() - exact).abs() < 1e-9 * exact.max(1.0), "a={a}");
        }
    }

    #[test]
    fn tabulated_matches_two_x() {
        let m = BaseMeasure::tabulated(&[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-13);
        assert!((m.quantile(0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-11);
        assert!(BaseMeasure::tabulated(&[(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(BaseMeasure::tabulated(&[(0.0, -1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn negative_density_rejected() {
        let r = BaseMeasure::from_fn(
            "bad",
            IntervalSpec::closed(0.0, 1.0).unwrap(),
            Arc::new(|x| x - 0.5),
            QuadratureConfig::default(),
        );
        assert!(matches!(r, Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn membership_examples() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let one = DensityParameter::constant(&u).unwrap();
        let r = check_class_membership(&one, &u, 101);
        assert_eq!((r.min, r.max), (1.0, 1.0));
        assert!(r.normalization_defect < 1e-14);
        assert!(r.passed());

        let s = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0).unwrap();
        let r = check_class_membership(&s, &u, 1001);
        assert!((r.min - 0.7).abs() < 1e-12 && (r.max - 1.3).abs() < 1e-12);
        assert!(r.normalization_defect < 1e-8);
        assert!((s.kappa() - 0.7).abs() < 1e-12 && (s.upper() - 1.3).abs() < 1e-12);
        assert!(r.passed(), "{r:?}");

        let half = DensityParameter::new("half", Arc::new(|_| 0.5), 0.7, 1.0).unwrap();
        let r = check_class_membership(&half, &u, 11);
        assert!(!r.h1_pass);
        assert!(!r.passed());
    }

    #[test]
    fn holder_violation_detected() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let s = DensityParameter::sinusoidal(&u, 0.3, 1.0, 0.0)
            .unwrap()
            .with_holder(1.0, 1.0)
            .unwrap();
        let r = check_class_membership(&s, &u, 201);
        assert_eq!(r.holder_pass, Some(false));
        let q = r.holder_quotient_max.unwrap();
        let k = 0.3 * (2.0 * std::f64::consts::PI).powi(2);
        assert!(q <= k * 1.0001 && q > 0.95 * k, "q={q}, K={k}");
    }

    #[test]
    fn acceptance_floor_error() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::new("spiky", Arc::new(|_| 1.0), 0.5, 5000.0).unwrap();
        match sample_from_density(&u, &f, 3, 1) {
            Err(Error::AcceptanceTooLow { envelope_ratio, .. }) => assert_eq!(envelope_ratio, 5000.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let f = DensityParameter::constant(&u).unwrap();
        let a = sample_from_density(&u, &f, 3, 42).unwrap();
        let b = sample_from_density(&u, &f, 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
