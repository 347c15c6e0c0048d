//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The error estimate follows QUADPACK's `qk15`. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `x = a + t / (1 - t)`; the Kronrod nodes never
//! touch `t = 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

#[cfg(test)]
impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: 0.0,
            max_segments: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadResult {
    pub value: f64,
    #[allow(dead_code)]
    pub abs_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum QuadFailure {
    /// Segment budget exhausted; carries the best estimate so far.
    Budget { value: f64, abs_err: f64, requested: f64 },
    /// The integrand returned NaN or an infinity.
    NonFinite { at: f64 },
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64), QuadFailure> {
    let centr = 0.5 * (lo + hi);
    let hlgth = 0.5 * (hi - lo);
    let eval = |x: f64| -> Result<f64, QuadFailure> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadFailure::NonFinite { at: x })
        }
    };

    let fc = eval(centr)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = hlgth * XGK[jtw];
        let f1 = eval(centr - dx)?;
        let f2 = eval(centr + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = hlgth * XGK[jtwm1];
        let f1 = eval(centr - dx)?;
        let f2 = eval(centr + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= hlgth.abs();
    resasc *= hlgth.abs();
    let mut abserr = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = abserr.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((result, abserr))
}

/// Integrates `f` over `[lo, hi]`, with optional interior breakpoints that seed
/// the initial subdivision.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult, QuadFailure> {
    let mut cuts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(lo);
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let (value, err) = gk15(&f, w[0], w[1])?;
        total += value;
        total_err += err;
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            err,
        });
    }

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return Ok(QuadResult {
                value: total,
                abs_err: total_err,
            });
        }
        if heap.len() >= opts.max_segments {
            return Err(QuadFailure::Budget {
                value: total,
                abs_err: total_err,
                requested: target,
            });
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Cannot split further in floating point.
            return Err(QuadFailure::Budget {
                value: total,
                abs_err: total_err,
                requested: target,
            });
        }
        let (v1, e1) = gk15(&f, worst.lo, mid)?;
        let (v2, e2) = gk15(&f, mid, worst.hi)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: v2,
            err: e2,
        });
        // Re-sum occasionally to stop drift from the running updates.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// Integrates `f` over `[lo, inf)`. Breakpoints are given in `x` and are
/// mapped to the compactified variable.
pub(crate) fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult, QuadFailure> {
    let to_t = |x: f64| {
        let d = x - lo;
        d / (1.0 + d)
    };
    let t_cuts: Vec<f64> = breakpoints.iter().map(|&x| to_t(x)).collect();
    let g = |t: f64| {
        let one_minus = 1.0 - t;
        let x = lo + t / one_minus;
        let jac = 1.0 / (one_minus * one_minus);
        let v = f(x);
        // The integrand decays in every use here; guard the 0 * inf corner.
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    };
    integrate(g, 0.0, 1.0, &t_cuts, opts)
}

/// Geometric breakpoints `scale * 10^k` below `limit`, used to resolve a
/// feature of width `scale` near the origin.
pub(crate) fn decade_breakpoints(scale: f64, limit: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    if !(scale > 0.0) || !scale.is_finite() {
        return cuts;
    }
    let mut b = scale;
    while b < limit && cuts.len() < 40 {
        cuts.push(b);
        b *= 10.0;
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - x, 0.0, 2.0, &[], QuadOptions::relative(1e-13)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(|x| x.powi(5), -1.0, 3.0, &[], QuadOptions::relative(1e-13)).unwrap();
        assert!((r.value - (729.0 - 1.0) / 6.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, &[], QuadOptions::relative(1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_to_infinity(|x| (-x).exp(), 2.0, &[], QuadOptions::relative(1e-12)).unwrap();
        assert!((r.value - (-2f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn sharp_feature_near_origin() {
        // int_0^inf e^{-x} / (1 + x/eps) dx with a feature of width eps.
        let eps = 1e-6;
        let r = integrate_to_infinity(
            |x| (-x).exp() / (1.0 + x / eps),
            0.0,
            &decade_breakpoints(eps, 1.0),
            QuadOptions::relative(1e-12),
        )
        .unwrap();
        // eps * e^eps * E1(eps)
        let e1 = -0.577_215_664_901_532_9 - eps.ln() + eps - eps * eps / 4.0;
        let expected = eps * eps.exp() * e1;
        assert!(
            ((r.value - expected) / expected).abs() < 1e-10,
            "{} vs {}",
            r.value,
            expected
        );
    }

    #[test]
    fn nonfinite_integrand_is_reported() {
        let err = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, &[0.5], QuadOptions::relative(1e-10));
        // Breakpoint at the pole: nodes never hit it, so the failure is a budget one.
        assert!(err.is_err());
        let err = integrate(|_| f64::NAN, 0.0, 1.0, &[], QuadOptions::relative(1e-10)).unwrap_err();
        assert!(matches!(err, QuadFailure::NonFinite { .. }));
    }
}
