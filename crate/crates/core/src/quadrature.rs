//! Adaptive Gauss-Kronrod quadrature for integrals of `exp(h(t))` whose
//! values over- or underflow in linear space.
//!
//! The integrand is rescaled by its maximum before summation, which is a
//! log-sum-exp over all panel contributions with a single shared shift.
//! The routine locates the mode first and places a panel boundary there,
//! then truncates both tails where `h` has fallen [`TAIL_DROP`] below its
//! peak.

use crate::error::{Error, Result};

/// Tails are cut where the integrand is `exp(-TAIL_DROP)` times its peak.
pub const TAIL_DROP: f64 = 60.0;
const MAX_PANELS: usize = 4000;
const T_LIMIT: f64 = 700.0;
/// Width of the final golden-section bracket around the mode.
const MODE_WIDTH: f64 = 5e-2;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
/// 10-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Result of integrating `exp(h)`.
#[derive(Clone, Copy, Debug)]
pub struct LogIntegral {
    /// `ln` of the integral.
    pub log_value: f64,
    /// Estimated absolute error of `log_value`.
    pub log_abs_err: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { a, b, value, err }
}

fn golden_max<F: Fn(f64) -> f64>(h: &F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    while hi - lo > MODE_WIDTH {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = h(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = h(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Finds an approximate maximizer of `h` on `[lower, T_LIMIT]`, assuming a single peak.
fn locate_mode<F: Fn(f64) -> f64>(h: &F, lower: Option<f64>, guess: f64) -> Result<f64> {
    let floor = lower.unwrap_or(-T_LIMIT);
    let start = if lower.is_some() {
        guess.max(floor + 1e-9 * floor.abs().max(1.0))
    } else {
        guess.clamp(-T_LIMIT, T_LIMIT)
    };
    let (mut a, fa) = (start, h(start));
    let (mut b, mut fb) = ((start + 1.0).min(T_LIMIT), h((start + 1.0).min(T_LIMIT)));
    if fb < fa {
        std::mem::swap(&mut a, &mut b);
        fb = fa;
    }
    let dir = (b - a).signum();
    let mut step = (b - a).abs();
    loop {
        step *= 2.0;
        let c = (b + dir * step).clamp(floor, T_LIMIT);
        let fc = h(c);
        if fc < fb {
            return Ok(golden_max(h, a.min(c), a.max(c)));
        }
        if dir < 0.0 && c <= floor {
            return Ok(floor);
        }
        if c >= T_LIMIT {
            return Err(Error::Divergent { at: c });
        }
        a = b;
        b = c;
        fb = fc;
    }
}

fn find_cut<F: Fn(f64) -> f64>(h: &F, from: f64, dir: f64, threshold: f64, floor: f64) -> Result<f64> {
    let mut step = 0.5;
    let mut t = from;
    loop {
        t = (t + dir * step).max(floor);
        if h(t) < threshold {
            return Ok(t);
        }
        if dir < 0.0 && t <= floor {
            return Ok(floor);
        }
        if t.abs() >= T_LIMIT {
            return Err(Error::Divergent { at: t });
        }
        step = (step * 2.0).min(16.0);
    }
}

/// Trapezoid rule under `t = mode + sigma * sinh(x)` on the whole line.
/// `f` is the rescaled integrand with `f(mode) = 1`.
fn sinh_trapezoid<F: Fn(f64) -> f64>(
    f: &F,
    mode: f64,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
) -> Option<(f64, f64)> {
    const DELTA: f64 = 1e-2;
    // `f(mode) = 1`, so its log is zero in the central differences.
    let (up, down) = (f(mode + DELTA).ln(), f(mode - DELTA).ln());
    let curvature = -(up + down) / (DELTA * DELTA);
    let (sigma, mode) = if curvature.is_finite() && curvature > 0.0 {
        // One Newton step re-centres the map on the peak.
        let shift = ((up - down) / (2.0 * DELTA) / curvature).clamp(-MODE_WIDTH, MODE_WIDTH);
        (curvature.sqrt().recip().clamp(1e-3, 10.0), mode + shift)
    } else {
        (1.0, mode)
    };
    let x_lo = -((mode - t_lo) / sigma).asinh();
    let x_hi = ((t_hi - mode) / sigma).asinh();
    let term = |x: f64| {
        let e = x.exp();
        let r = e.recip();
        f(mode + sigma * 0.5 * (e - r)) * sigma * 0.5 * (e + r)
    };
    trapezoid_levels(&term, x_lo, x_hi, tol)
}

/// Trapezoid rule under `t = floor + scale * exp(sinh(x))` on `(floor, ∞)`,
/// which flattens a jump at the support boundary.
fn exp_sinh_trapezoid<F: Fn(f64) -> f64>(
    f: &F,
    floor: f64,
    mode: f64,
    t_hi: f64,
    tol: f64,
) -> Option<(f64, f64)> {
    let scale = (mode - floor).max(0.5);
    // Below this the mapped interval is shorter than e^{-40} * scale.
    let x_lo = -(40f64).asinh();
    let x_hi = ((t_hi - floor) / scale).ln().max(0.5).asinh();
    let term = |x: f64| {
        let e = x.exp();
        let r = e.recip();
        let w = scale * (0.5 * (e - r)).exp();
        f(floor + w) * w * 0.5 * (e + r)
    };
    trapezoid_levels(&term, x_lo, x_hi, tol)
}

/// Halves the step of a trapezoid sum over `[x_lo, x_hi]` until the
/// estimated relative error falls below `tol`. Returns `None` when the levels
/// fail to settle.
fn trapezoid_levels<G: Fn(f64) -> f64>(
    term: &G,
    x_lo: f64,
    x_hi: f64,
    tol: f64,
) -> Option<(f64, f64)> {
    const MAX_LEVEL: u32 = 6;
    let mut step = 1.0;
    let k_lo = (x_lo / step).ceil() as i64;
    let k_hi = (x_hi / step).floor() as i64;
    let mut sum: f64 = (k_lo..=k_hi).map(|k| term(k as f64 * step)).sum();
    let mut estimate = sum * step;
    let mut prev_rel: Option<f64> = None;
    for _ in 0..MAX_LEVEL {
        step *= 0.5;
        let k_lo = (x_lo / step).ceil() as i64;
        let k_hi = (x_hi / step).floor() as i64;
        let odd_lo = k_lo + (1 - k_lo.rem_euclid(2));
        sum += (odd_lo..=k_hi)
            .step_by(2)
            .map(|k| term(k as f64 * step))
            .sum::<f64>();
        let next = sum * step;
        if !(next > 0.0) || !next.is_finite() {
            return None;
        }
        let rel = (next - estimate).abs() / next;
        estimate = next;
        // Convergence is faster than geometric, so extrapolating the last
        // ratio of successive changes overstates the remaining error.
        let err = match prev_rel {
            Some(prev) => rel * (rel / prev).min(1.0),
            None => rel,
        };
        prev_rel = Some(rel);
        if err <= tol {
            return Some((estimate, err.max(f64::EPSILON) * estimate));
        }
    }
    None
}

/// `ln ∫_{lower}^{∞} exp(h(t)) dt`, to absolute log-scale tolerance `tol`.
///
/// `lower = None` integrates over the whole real line. `guess` is a starting
/// point for the mode search.
///
/// Uses a trapezoid rule after a double-exponential change of variables,
/// falling back to adaptive Gauss-Kronrod when its levels do not settle.
pub fn integrate_exp<F: Fn(f64) -> f64>(
    h: F,
    lower: Option<f64>,
    guess: f64,
    tol: f64,
) -> Result<LogIntegral> {
    integrate(h, lower, guess, tol, true)
}

/// As [`integrate_exp`], always using adaptive Gauss-Kronrod bisection.
pub fn integrate_exp_adaptive<F: Fn(f64) -> f64>(
    h: F,
    lower: Option<f64>,
    guess: f64,
    tol: f64,
) -> Result<LogIntegral> {
    integrate(h, lower, guess, tol, false)
}

fn integrate<F: Fn(f64) -> f64>(
    h: F,
    lower: Option<f64>,
    guess: f64,
    tol: f64,
    trapezoid: bool,
) -> Result<LogIntegral> {
    let evals = std::cell::Cell::new(0usize);
    let h = |t: f64| {
        evals.set(evals.get() + 1);
        h(t)
    };
    let mode = locate_mode(&h, lower, guess)?;
    let hmax = h(mode);
    if !hmax.is_finite() {
        return Err(Error::InvalidInput(format!(
            "integrand is not finite at its mode (log value {hmax})"
        )));
    }
    let floor = lower.unwrap_or(-T_LIMIT);
    let threshold = hmax - TAIL_DROP;
    let t_hi = find_cut(&h, mode, 1.0, threshold, floor)?;
    let t_lo = if mode <= floor {
        floor
    } else {
        find_cut(&h, mode, -1.0, threshold, floor)?
    };

    let f = |t: f64| {
        let v = h(t) - hmax;
        if v == f64::NEG_INFINITY || v.is_nan() {
            0.0
        } else {
            v.exp()
        }
    };
    let mut panels: Vec<Panel> = Vec::with_capacity(32);
    // Truncated tails, bounded by a slab of width 4 at the cut height.
    let lo_cut = if lower.is_some() && t_lo <= floor { 0.0 } else { f(t_lo) };
    let tail = (lo_cut + f(t_hi)) * 4.0;

    if trapezoid {
        let mapped = match lower {
            None => sinh_trapezoid(&f, mode, t_lo, t_hi, tol),
            Some(_) => exp_sinh_trapezoid(&f, floor, mode, t_hi, tol),
        };
        if let Some((total, err)) = mapped {
            return Ok(LogIntegral {
                log_value: hmax + total.ln(),
                log_abs_err: (err + tail) / total,
                evaluations: evals.get(),
            });
        }
    }

    for (a, b) in [(t_lo, mode), (mode, t_hi)] {
        if b > a {
            let mid = 0.5 * (a + b);
            panels.push(gauss_kronrod(&f, a, mid));
            panels.push(gauss_kronrod(&f, mid, b));
        }
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if total > 0.0 && err <= tol * total {
            return Ok(LogIntegral {
                log_value: hmax + total.ln(),
                log_abs_err: (err + tail) / total,
                evaluations: evals.get(),
            });
        }
        if panels.len() >= MAX_PANELS || !total.is_finite() {
            return Err(Error::QuadratureFailure {
                partial_log: hmax + total.ln(),
                abs_err: err / total,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
            .expect("at least one panel");
        let worst = panels.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        panels.push(gauss_kronrod(&f, worst.a, mid));
        panels.push(gauss_kronrod(&f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn both(
        h: impl Fn(f64) -> f64 + Copy,
        lower: Option<f64>,
        guess: f64,
        tol: f64,
    ) -> [LogIntegral; 2] {
        [
            integrate_exp(h, lower, guess, tol).unwrap(),
            integrate_exp_adaptive(h, lower, guess, tol).unwrap(),
        ]
    }

    #[test]
    fn gaussian_integral() {
        // ∫ exp(-t^2/2 + 500) dt = sqrt(2 pi) e^500
        for r in both(|t| -0.5 * t * t + 500.0, None, 3.0, 1e-12) {
            assert!((r.log_value - (500.0 + (2.0 * PI).sqrt().ln())).abs() < 1e-12);
            assert!(r.log_abs_err <= 1e-11);
        }
    }

    #[test]
    fn narrow_off_center_peak() {
        let s = 0.01;
        let exact = (s * (2.0 * PI).sqrt()).ln();
        for r in both(|t| -0.5 * ((t - 37.0) / s).powi(2), None, 0.0, 1e-10) {
            assert!((r.log_value - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn lower_bound_with_jump() {
        // ∫_1^∞ e^{-t} dt = e^{-1}
        for r in both(|t| -t, Some(1.0), 5.0, 1e-12) {
            assert!((r.log_value + 1.0).abs() < 1e-12);
        }
        // ∫_0^∞ exp(-(t-3)^2/2) dt, interior peak with a cut-off left tail
        let exact = (2.0 * PI).sqrt().ln() + (0.5 * statrs::function::erf::erfc(-3.0 / 2f64.sqrt())).ln();
        for r in both(|t| -0.5 * (t - 3.0) * (t - 3.0), Some(0.0), 1.0, 1e-12) {
            assert!((r.log_value - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn slowly_decaying_tail() {
        // ∫ exp(t/2) / (1+e^t)^{3/2} dt over R = B(1/2, 1) = 2
        for r in both(|t| 0.5 * t - 1.5 * crate::special::softplus(t), None, 0.0, 1e-11) {
            assert!((r.log_value - 2f64.ln()).abs() < 1e-11);
        }
    }

    #[test]
    fn skewed_integrands() {
        // ∫ exp(t - e^t) dt = Gamma(1) = 1
        for r in both(|t| t - t.exp(), None, 4.0, 1e-12) {
            assert!(r.log_value.abs() < 1e-12, "{r:?}");
        }
        // ∫ exp(-a t - b e^{-t}) dt = Gamma(a) b^{-a}
        let (a, b) = (7.5, 2500.0);
        let exact = crate::special::ln_gamma(a) - a * f64::ln(b);
        for r in both(move |t| -a * t - b * (-t).exp(), None, 0.0, 1e-12) {
            assert!((r.log_value - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn divergent_integrand_detected() {
        assert!(matches!(
            integrate_exp(|t| 0.1 * t, None, 0.0, 1e-10),
            Err(Error::Divergent { .. })
        ));
    }
}
