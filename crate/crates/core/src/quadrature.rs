//! Globally adaptive 15-point Gauss-Kronrod quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets the requested tolerance. Error estimates follow the QUADPACK
//! `qk15` heuristic.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 7-point Gauss weights, at the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of subintervals before giving up.
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.abs() * WGK[7];
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = (f(center - dx)?, f(center + dx)?);
        f1[j] = lo;
        f2[j] = hi;
        res_k += WGK[j] * (lo + hi);
        res_abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (lo + hi);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        abs_value: res_abs,
    })
}

/// Integrates a fallible integrand over `[a, b]`, starting from the given
/// interior breakpoints (ignored when outside `(a, b)`).
pub fn try_integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if a > b {
        let r = try_integrate(f, b, a, breakpoints, opts)?;
        return Ok(Integral {
            value: -r.value,
            ..r
        });
    }

    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut segments = Vec::with_capacity(64);
    for w in edges.windows(2) {
        segments.push(kronrod15(&mut f, w[0], w[1])?);
    }

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let abs_value: f64 = segments.iter().map(|s| s.abs_value).sum();
        let tol = opts
            .abs_tol
            .max(opts.rel_tol * value.abs())
            .max(100.0 * f64::EPSILON * abs_value);
        if error <= tol {
            return Ok(Integral {
                value,
                error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::NonConvergence(format!(
                "quadrature on [{a}, {b}] reached {} subintervals with error {error:.3e} > {tol:.3e}",
                segments.len()
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::NonConvergence(format!(
                "quadrature subinterval around {mid} cannot be split further"
            )));
        }
        segments.push(kronrod15(&mut f, s.a, mid)?);
        segments.push(kronrod15(&mut f, mid, s.b)?);
    }
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadratureOptions) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, &[], opts)
}

/// `int_a^{cutoff} f(x) e^{-x} dx`; the tail beyond `cutoff` is dropped.
pub fn try_integrate_exp_weighted<F>(
    mut f: F,
    a: f64,
    cutoff: f64,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a >= 0.0) {
        return Err(Error::invalid(format!(
            "lower limit must be nonnegative, got {a}"
        )));
    }
    if a >= cutoff {
        return Ok(0.0);
    }
    // Most of the exponential mass sits within a few units of `a`.
    let breaks = [a + 0.5, a + 2.0, a + 6.0, a + 15.0];
    let r = try_integrate(
        |x| Ok(f(x)? * (-x).exp()),
        a,
        cutoff,
        &breaks,
        opts,
    )?;
    Ok(r.value)
}
