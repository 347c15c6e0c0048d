//! Real-valued special functions used by the closed-form ECs: the confluent
//! hypergeometric function of the second kind `U(a, b, z)`, the upper
//! incomplete Gamma function `Γ(a, x)` for any real `a`, and `E1`.
//!
//! Everything here is a pure function of its arguments.

use crate::quad::{self, QuadFailure, QuadOptions};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const FPMIN: f64 = 1e-300;

/// Accuracy knobs shared by every routine in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnAccuracy {
    /// Target relative error.
    pub rel_tol: f64,
    /// Cap on series terms, continued-fraction steps and quadrature segments.
    pub max_terms: usize,
}

impl Default for SpecialFnAccuracy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_terms: 10_000,
        }
    }
}

impl SpecialFnAccuracy {
    pub fn validate(&self) -> Result<(), SpecialFnError> {
        if !(self.rel_tol > 0.0) || self.max_terms == 0 {
            return Err(SpecialFnError::InvalidAccuracy {
                rel_tol: self.rel_tol,
                max_terms: self.max_terms,
            });
        }
        Ok(())
    }

    // Series and continued fractions run to machine precision; the
    // tolerance only matters for quadrature.
    fn series_eps(&self) -> f64 {
        (self.rel_tol * 1e-3).max(f64::EPSILON)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecialFnError {
    #[error("{function}: argument outside the domain ({detail})")]
    Domain { function: &'static str, detail: String },
    #[error("{function}: no convergence after {terms} terms (partial value {partial})")]
    NoConvergence {
        function: &'static str,
        partial: f64,
        terms: usize,
    },
    #[error("invalid accuracy settings: rel_tol={rel_tol}, max_terms={max_terms}")]
    InvalidAccuracy { rel_tol: f64, max_terms: usize },
}

fn domain(function: &'static str, detail: String) -> SpecialFnError {
    SpecialFnError::Domain { function, detail }
}

fn quad_error(function: &'static str, failure: QuadFailure, max_terms: usize) -> SpecialFnError {
    match failure {
        QuadFailure::Budget { value, .. } => SpecialFnError::NoConvergence {
            function,
            partial: value,
            terms: max_terms,
        },
        QuadFailure::NonFinite { at } => domain(function, format!("integrand not finite at {at}")),
    }
}

/// `U(a, b, z)` with default accuracy. See [`hyp_u_with`].
pub fn hyp_u(a: f64, b: f64, z: f64) -> Result<f64, SpecialFnError> {
    hyp_u_with(a, b, z, &SpecialFnAccuracy::default())
}

/// Confluent hypergeometric function of the second kind for `a > 0`, `z > 0`,
/// evaluated from its Laplace-type integral
///
/// `U(a, b, z) = 1/Γ(a) ∫₀^∞ e^{-z t} t^{a-1} (1+t)^{b-a-1} dt`.
///
/// After `s = z t` the integral becomes `z^{-a} ∫ e^{-s} s^{a-1} (1+s/z)^{b-a-1} ds`,
/// whose only feature is a knee at `s ≈ z`. For `a < 1` the endpoint
/// singularity is removed with `u = s^a`.
pub fn hyp_u_with(a: f64, b: f64, z: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    const NAME: &str = "hyp_u";
    acc.validate()?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(NAME, format!("a = {a} must be positive")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain(NAME, format!("z = {z} must be positive")));
    }
    if !b.is_finite() {
        return Err(domain(NAME, format!("b = {b} must be finite")));
    }
    let c = b - a - 1.0;
    let opts = QuadOptions {
        rel_tol: acc.rel_tol * 0.1,
        abs_tol: 0.0,
        max_segments: acc.max_terms,
    };
    let mut cuts = quad::decade_breakpoints(z, 1.0);
    cuts.extend([1.0, 10.0, 40.0]);

    let integral = if a >= 1.0 {
        let f = |s: f64| {
            if s == 0.0 {
                return if a == 1.0 { 1.0 } else { 0.0 };
            }
            ((a - 1.0) * s.ln() - s + c * (s / z).ln_1p()).exp()
        };
        quad::integrate_to_infinity(f, 0.0, &cuts, opts)
    } else {
        let inv_a = 1.0 / a;
        let f = |u: f64| {
            let s = u.powf(inv_a);
            (-s + c * (s / z).ln_1p()).exp() * inv_a
        };
        let u_cuts: Vec<f64> = cuts.iter().map(|s| s.powf(a)).collect();
        quad::integrate_to_infinity(f, 0.0, &u_cuts, opts)
    }
    .map_err(|e| quad_error(NAME, e, acc.max_terms))?;

    let gamma_a = if a == 1.0 { 1.0 } else { libm::tgamma(a) };
    Ok(z.powf(-a) * integral.value / gamma_a)
}

/// `Γ(a, x)` with default accuracy. See [`upper_gamma_with`].
pub fn upper_gamma(a: f64, x: f64) -> Result<f64, SpecialFnError> {
    upper_gamma_with(a, x, &SpecialFnAccuracy::default())
}

/// Upper incomplete Gamma function `Γ(a, x) = ∫ₓ^∞ t^{a-1} e^{-t} dt` for any
/// real `a` and `x > 0` (`x = 0` is accepted when `a > 0`).
pub fn upper_gamma_with(a: f64, x: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    let scaled = upper_gamma_scaled(a, x, acc)?;
    if x == 0.0 {
        return Ok(scaled);
    }
    Ok(scaled * (-x).exp())
}

/// Exponential integral `E1(x) = Γ(0, x)`.
pub fn exp_integral_e1(x: f64) -> Result<f64, SpecialFnError> {
    if !(x > 0.0) {
        return Err(domain("exp_integral_e1", format!("x = {x} must be positive")));
    }
    upper_gamma(0.0, x)
}

/// `e^x Γ(a, x)`, finite for large `x` where `Γ(a, x)` itself underflows.
///
/// * `x` past the continued-fraction threshold: Legendre continued fraction,
///   valid for every real `a`.
/// * `a > 0`, small `x`: `Γ(a) - γ(a, x)` with the power series for `γ`.
/// * `a <= 0`, small `x`: downward recurrence `Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a`,
///   started from `a' = a + ⌈-a⌉ + 1 ∈ (1, 2]`, or from `E1` when `a` is an integer
///   (the recurrence cannot step through `a = 0`).
pub fn upper_gamma_scaled(a: f64, x: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    const NAME: &str = "upper_gamma";
    acc.validate()?;
    if !a.is_finite() || x.is_nan() {
        return Err(domain(NAME, format!("a = {a}, x = {x}")));
    }
    if x < 0.0 {
        return Err(domain(NAME, format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        if a > 0.0 {
            return Ok(libm::tgamma(a));
        }
        return Err(domain(NAME, format!("Γ({a}, 0) diverges")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }

    if use_continued_fraction(a, x) {
        return continued_fraction(a, x, acc);
    }
    if a > 0.0 {
        return Ok(libm::tgamma(a) * x.exp() - lower_series_scaled(a, x, acc)?);
    }

    let (start, mut g) = if a == a.round() {
        (0.0, e1_scaled(x, acc)?)
    } else {
        let s = a + (-a).ceil() + 1.0;
        (s, libm::tgamma(s) * x.exp() - lower_series_scaled(s, x, acc)?)
    };
    let steps = (start - a).round() as usize;
    let mut cur = start;
    for _ in 0..steps {
        let next = cur - 1.0;
        g = (g - x.powf(next)) / next;
        cur = next;
    }
    Ok(g)
}

fn use_continued_fraction(a: f64, x: f64) -> bool {
    if a > 0.0 {
        x >= a + 1.0
    } else {
        x >= 1.0
    }
}

/// `e^x γ(a, x) = x^a Σ x^n / (a (a+1) ... (a+n))`, for `a > 0`.
fn lower_series_scaled(a: f64, x: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    let eps = acc.series_eps();
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..acc.max_terms {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * eps {
            return Ok(sum * x.powf(a));
        }
    }
    Err(SpecialFnError::NoConvergence {
        function: "upper_gamma (series)",
        partial: sum * x.powf(a),
        terms: acc.max_terms,
    })
}

/// Modified Lentz evaluation of the Legendre continued fraction; returns
/// `e^x Γ(a, x)`.
fn continued_fraction(a: f64, x: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    let eps = acc.series_eps();
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=acc.max_terms {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < eps {
            return Ok(x.powf(a) * h);
        }
    }
    Err(SpecialFnError::NoConvergence {
        function: "upper_gamma (continued fraction)",
        partial: x.powf(a) * h * (-x).exp(),
        terms: acc.max_terms,
    })
}

/// `e^x E1(x)`.
fn e1_scaled(x: f64, acc: &SpecialFnAccuracy) -> Result<f64, SpecialFnError> {
    if x >= 1.0 {
        return continued_fraction(0.0, x, acc);
    }
    let eps = acc.series_eps();
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..=acc.max_terms {
        let fk = k as f64;
        term *= -x / fk;
        let add = term / fk;
        sum += add;
        if add.abs() < eps * sum.abs().max(1e-300) {
            return Ok((-EULER_GAMMA - x.ln() - sum) * x.exp());
        }
    }
    Err(SpecialFnError::NoConvergence {
        function: "exp_integral_e1",
        partial: -EULER_GAMMA - x.ln() - sum,
        terms: acc.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn u_oracle(a: f64, b: f64, z: f64) -> f64 {
        let c = b - a - 1.0;
        oracle::integrate_to_infinity(|t| (-z * t).exp() * t.powf(a - 1.0) * (1.0 + t).powf(c), 0.0) / libm::tgamma(a)
    }

    fn gamma_oracle(a: f64, x: f64) -> f64 {
        oracle::integrate_to_infinity(|t| t.powf(a - 1.0) * (-t).exp(), x)
    }

    #[test]
    fn u_reduces_to_power_when_b_is_a_plus_one() {
        assert!(rel(hyp_u(1.0, 2.0, 2.0).unwrap(), 0.5) < 1e-10);
        for a in [0.5, 1.0, 2.0] {
            for z in [0.1, 1.0, 10.0] {
                let got = hyp_u(a, a + 1.0, z).unwrap();
                assert!(rel(got, z.powf(-a)) < 1e-10, "a={a} z={z}: {got}");
            }
        }
    }

    #[test]
    fn u_matches_quadrature_oracle() {
        // U(1,1,1) = e E1(1)
        let oracle_value = u_oracle(1.0, 1.0, 1.0);
        assert!(rel(oracle_value, 0.596_347_362_3) < 1e-9);
        assert!(rel(hyp_u(1.0, 1.0, 1.0).unwrap(), oracle_value) < 1e-10);

        let oracle_value = u_oracle(1.0, 0.0, 1.0);
        assert!(rel(hyp_u(1.0, 0.0, 1.0).unwrap(), oracle_value) < 1e-10);
    }

    #[test]
    fn u_grid_against_oracle() {
        let mut n = 0;
        for &a in &[0.5, 1.0, 2.5] {
            for &b in &[-1.0, 0.5, 1.5, 3.0] {
                for &z in &[0.05, 1.0, 7.0] {
                    let got = hyp_u(a, b, z).unwrap();
                    let want = u_oracle(a, b, z);
                    assert!(rel(got, want) < 1e-8, "U({a},{b},{z}) = {got} vs {want}");
                    n += 1;
                }
            }
        }
        assert!(n >= 20);
    }

    #[test]
    fn u_rejects_bad_arguments() {
        assert!(matches!(hyp_u(1.0, 1.0, 0.0), Err(SpecialFnError::Domain { .. })));
        assert!(matches!(hyp_u(1.0, 1.0, -1.0), Err(SpecialFnError::Domain { .. })));
        assert!(matches!(hyp_u(0.0, 1.0, 1.0), Err(SpecialFnError::Domain { .. })));
    }

    #[test]
    fn u_reports_non_convergence() {
        let acc = SpecialFnAccuracy {
            rel_tol: 1e-15,
            max_terms: 3,
        };
        let err = hyp_u_with(1.0, 0.3, 1e-4, &acc).unwrap_err();
        match err {
            SpecialFnError::NoConvergence { partial, terms, .. } => {
                assert!(partial.is_finite());
                assert_eq!(terms, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(upper_gamma(1.0, 2.0).unwrap(), (-2f64).exp()) < 1e-13);
        assert!(rel(upper_gamma(0.0, 1.0).unwrap(), 0.219_383_934_4) < 1e-9);
        let want = gamma_oracle(2.5, 0.5);
        assert!(rel(upper_gamma(2.5, 0.5).unwrap(), want) < 1e-10);
    }

    #[test]
    fn gamma_grid_against_oracle() {
        for &a in &[-3.0, -2.0, -1.5, -1.0, -0.5, 0.0, 0.3, 1.0, 2.5, 6.0] {
            for &x in &[0.01, 0.5, 1.7, 8.0] {
                let got = upper_gamma(a, x).unwrap();
                let want = gamma_oracle(a, x);
                assert!(rel(got, want) < 1e-8, "Γ({a},{x}) = {got} vs {want}");
            }
        }
    }

    #[test]
    fn gamma_recurrence() {
        for &a in &[-1.5, -0.5, 0.5, 1.5] {
            for &x in &[0.5, 2.0] {
                let lhs = upper_gamma(a + 1.0, x).unwrap();
                let rhs = a * upper_gamma(a, x).unwrap() + x.powf(a) * (-x).exp();
                assert!(rel(lhs, rhs) < 1e-10, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn gamma_decreasing_in_x() {
        for &a in &[-2.0, -0.5, 0.0, 1.0, 3.5] {
            let mut prev = f64::INFINITY;
            for k in 1..40 {
                let x = 0.05 * 1.25f64.powi(k);
                let g = upper_gamma(a, x).unwrap();
                assert!(g < prev, "a={a} x={x}");
                prev = g;
            }
            assert!(upper_gamma(a, 800.0).unwrap() == 0.0);
        }
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(upper_gamma(-1.0, 0.0).is_err());
        assert!(upper_gamma(0.0, 0.0).is_err());
        assert!(upper_gamma(1.0, -1.0).is_err());
        assert!(rel(upper_gamma(2.0, 0.0).unwrap(), 1.0) < 1e-14);
    }

    #[test]
    fn whittaker_identity_matches_quadrature() {
        // W_{u-1/2,u}(z) = e^{z/2} z^{1/2-u} Γ(2u, z); for β₂ = -1, u = 0 and z = 1.
        let beta2: f64 = -1.0;
        let u = (1.0 + beta2) / 2.0;
        let z: f64 = 1.0;
        let w = (z / 2.0).exp() * z.powf(0.5 - u) * upper_gamma(2.0 * u, z).unwrap();
        assert!(w.is_finite());
        let inner = oracle::integrate_to_infinity(|t| t.powf(2.0 * u - 1.0) * (-t).exp(), z);
        let back = w * (-z / 2.0).exp() * z.powf(u - 0.5);
        assert!(rel(back, inner) < 1e-9);
    }

    #[test]
    fn e1_bounds_and_alias() {
        assert!(rel(exp_integral_e1(1.0).unwrap(), 0.219_383_934_4) < 1e-9);
        for x in [0.1, 1.0, 10.0] {
            assert_eq!(exp_integral_e1(x).unwrap(), upper_gamma(0.0, x).unwrap());
        }
        let x: f64 = 5.0;
        let v = x * x.exp() * exp_integral_e1(x).unwrap();
        assert!(v > x / (x + 1.0) && v < 1.0);
        assert!(exp_integral_e1(0.0).is_err());
    }

    #[test]
    fn accuracy_validation() {
        let bad = SpecialFnAccuracy {
            rel_tol: 0.0,
            max_terms: 10,
        };
        assert!(bad.validate().is_err());
        assert!(upper_gamma_with(1.0, 1.0, &bad).is_err());
    }
}
