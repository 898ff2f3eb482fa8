//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Infinite endpoints are mapped onto a finite range with
//! `x = c + u / (1 - u)`, `u in [0, 1)`, so that every integral over an
//! interval of the real line, bounded or not, goes through the same rule.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = h(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = h(center - dx);
        let f2 = h(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = abs_sum * half.abs();
    let resasc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

fn adaptive<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let first = gk15(h, a, b);
    if !first.value.is_finite() {
        return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    let mut segments = vec![first];
    let mut total = first.value;
    let mut total_err = first.error;
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            return Ok(Estimate {
                value: total,
                error: total_err,
            });
        }
        if segments.len() >= cfg.max_subdivisions {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            break;
        }
        let left = gk15(h, seg.a, mid);
        let right = gk15(h, mid, seg.b);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::NonFinite(format!("integrand on [{}, {}]", seg.a, seg.b)));
        }
        segments[worst] = left;
        segments.push(right);
        // re-sum rather than update incrementally to avoid drift
        total = segments.iter().map(|s| s.value).sum();
        total_err = segments.iter().map(|s| s.error).sum();
    }
    Err(Error::Quadrature {
        lower: a,
        upper: b,
        achieved: total_err,
        requested: cfg.abs_tol.max(cfg.rel_tol * total.abs()),
    })
}

/// Integral of `h` over `[a, b]`; either endpoint may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(h: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::domain("NaN integration bound"));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if a > b {
        let e = integrate(h, b, a, cfg)?;
        return Ok(Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    ordered(&h, a, b, cfg)
}

fn ordered<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(h, a, b, cfg),
        (true, false) => {
            let g = |u: f64| {
                let w = 1.0 - u;
                h(a + u / w) / (w * w)
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        (false, true) => {
            let g = |u: f64| {
                let w = 1.0 - u;
                h(b - u / w) / (w * w)
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        (false, false) => {
            let left = ordered(h, f64::NEG_INFINITY, 0.0, cfg)?;
            let right = ordered(h, 0.0, f64::INFINITY, cfg)?;
            Ok(Estimate {
                value: left.value + right.value,
                error: left.error + right.error,
            })
        }
    }
}

/// Integral over consecutive pieces `[p_0, p_1], [p_1, p_2], ...`, summed in order.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    h: F,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        let e = integrate(&h, w[0], w[1], cfg)?;
        value += e.value;
        error += e.error;
    }
    Ok(Estimate { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &cfg()).unwrap();
        assert!((e.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn half_line_exponential() {
        let e = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        let e = integrate(|x| x * (-x).exp(), 0.0, f64::INFINITY, &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn whole_line_gaussian() {
        let e = integrate(crate::normal::pdf, f64::NEG_INFINITY, f64::INFINITY, &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        let e = integrate(crate::normal::pdf, f64::NEG_INFINITY, 1.0, &cfg()).unwrap();
        assert!((e.value - crate::normal::cdf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn endpoint_singularity() {
        let e = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let e = integrate(|x| x, 1.0, 0.0, &cfg()).unwrap();
        assert!((e.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_exhaustion_reports_achieved_error() {
        let tight = QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_subdivisions: 3,
        };
        match integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &tight) {
            Err(Error::Quadrature { achieved, requested, .. }) => {
                assert!(achieved > requested);
            }
            other => panic!("expected quadrature error, got {other:?}"),
        }
    }
}
