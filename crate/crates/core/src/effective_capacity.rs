//! Rates and effective capacities.
//!
//! Uplink NOMA decodes the strongest user first, so user `i` (1-based rank,
//! weakest first) sees interference only from the weaker users `l < i`:
//!
//! `R_i = log2(1 + ρ P_i x_i / (1 + ρ Σ_{l<i} P_l x_l))`.
//!
//! OMA is TDMA with equal slots and doubled per-slot power. The EC of a rate
//! process with normalized exponent `β < 0` is `(1/β) log2 E[2^{β R}]`, in
//! b/s/Hz. The block length times bandwidth `T_f B` is fixed to 1, so `β`
//! carries the whole delay requirement.

use std::f64::consts::LN_2;

use crate::channel_model::OrderedGains;
use crate::monte_carlo::{estimate_terms, McSettings, Term, TermEstimates};
use crate::pairing_search::Partition;
use crate::quad::{self, QuadFailure, QuadOptions};
use crate::special_fn::{hyp_u_with, upper_gamma_scaled, SpecialFnAccuracy};
use crate::{Error, Result};

/// Tolerance on the per-group power constraint `Σ P_i = 1`.
pub const POWER_SUM_TOL: f64 = 1e-12;

/// Block duration times bandwidth.
pub const TF_B: f64 = 1.0;

/// Above this value of `|P₂ - P₁| / (ρP₂)` the series is not attempted.
pub const EC2_SERIES_MAX_EXPONENT: f64 = 20.0;

/// Number of Taylor terms after which the two-user strong-user series gives up.
pub const EC2_SERIES_MAX_TERMS: usize = 500;

/// Relative size of the last Taylor term at which the series stops.
pub const EC2_SERIES_REL_TOL: f64 = 1e-12;

/// The series result is discarded in favour of quadrature once cancellation
/// (sum of |terms| over |sum|) exceeds this factor.
pub const EC2_SERIES_MAX_CANCELLATION: f64 = 1e4;

/// Users, power coefficients, transmit SNR and QoS exponents of one NOMA
/// resource block. All users share the block, so the powers sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    powers: Vec<f64>,
    rho: f64,
    betas: Vec<f64>,
}

impl NetworkConfig {
    pub fn new(powers: Vec<f64>, rho: f64, betas: Vec<f64>) -> Result<Self> {
        validate_powers(&powers)?;
        if betas.len() != powers.len() {
            return Err(Error::domain(format!(
                "{} power coefficients but {} QoS exponents",
                powers.len(),
                betas.len()
            )));
        }
        validate_rho(rho)?;
        for &b in &betas {
            validate_beta(b)?;
        }
        Ok(Self { powers, rho, betas })
    }

    pub fn two_user(p1: f64, p2: f64, rho: f64, beta1: f64, beta2: f64) -> Result<Self> {
        Self::new(vec![p1, p2], rho, vec![beta1, beta2])
    }

    pub fn m(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Power of user `i` (1-based).
    pub fn power(&self, i: usize) -> f64 {
        self.powers[i - 1]
    }

    /// QoS exponent of user `i` (1-based).
    pub fn beta(&self, i: usize) -> f64 {
        self.betas[i - 1]
    }

    /// Statistical delay exponent `θ_i = -β_i ln2 / (T_f B)`.
    pub fn theta(&self, i: usize) -> f64 {
        -self.beta(i) * LN_2 / TF_B
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        validate_rho(rho)?;
        Ok(Self { rho, ..self.clone() })
    }

    pub fn with_betas(&self, betas: Vec<f64>) -> Result<Self> {
        Self::new(self.powers.clone(), self.rho, betas)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.m() {
            return Err(Error::domain(format!("user index {i} outside 1..={}", self.m())));
        }
        Ok(())
    }

    fn require_two_users(&self, what: &str) -> Result<()> {
        if self.m() != 2 {
            return Err(Error::domain(format!(
                "{what} needs a two-user configuration, got M = {}",
                self.m()
            )));
        }
        Ok(())
    }
}

pub(crate) fn validate_powers(powers: &[f64]) -> Result<()> {
    if powers.is_empty() {
        return Err(Error::domain("need at least one user"));
    }
    if powers.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::domain(format!(
            "power coefficients must be positive: {powers:?}"
        )));
    }
    let sum: f64 = powers.iter().sum();
    if (sum - 1.0).abs() > POWER_SUM_TOL {
        return Err(Error::domain(format!("power coefficients sum to {sum}, expected 1")));
    }
    Ok(())
}

pub(crate) fn validate_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!(
            "transmit SNR {rho} must be finite and non-negative"
        )));
    }
    Ok(())
}

pub(crate) fn validate_beta(beta: f64) -> Result<()> {
    if !(beta < 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("QoS exponent beta = {beta} must be negative")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EcMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl EcMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EcMethod::ClosedForm => "closed_form",
            EcMethod::Quadrature => "quadrature",
            EcMethod::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for EcMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An EC value (b/s/Hz) and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcEstimate {
    pub value: f64,
    pub method: EcMethod,
    /// Zero for deterministic methods.
    pub n_samples: usize,
    /// `Some(0.0)` for deterministic methods; `None` when too few samples
    /// were drawn to estimate a variance.
    pub std_error: Option<f64>,
}

impl EcEstimate {
    pub fn exact(value: f64, method: EcMethod) -> Self {
        Self {
            value,
            method,
            n_samples: 0,
            std_error: Some(0.0),
        }
    }

    /// Standard error, with an unset value read as infinite.
    pub fn se(&self) -> f64 {
        self.std_error.unwrap_or(f64::INFINITY)
    }

    /// Sum of two independent estimates.
    pub fn plus(&self, other: &EcEstimate) -> EcEstimate {
        self.combine(other, 1.0)
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &EcEstimate) -> EcEstimate {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &EcEstimate, sign: f64) -> EcEstimate {
        let std_error = match (self.std_error, other.std_error) {
            (Some(a), Some(b)) => Some(a.hypot(b)),
            _ => None,
        };
        EcEstimate {
            value: self.value + sign * other.value,
            method: self.method.max(other.method),
            n_samples: self.n_samples.max(other.n_samples),
            std_error,
        }
    }
}

/// NOMA uplink rate of user `i` (1-based) in one realization.
pub fn rate_noma_uplink(i: usize, gains: &OrderedGains, cfg: &NetworkConfig) -> Result<f64> {
    cfg.check_index(i)?;
    if gains.len() != cfg.m() {
        return Err(Error::domain(format!("{} gains for {} users", gains.len(), cfg.m())));
    }
    Ok(sic_rate(i - 1, gains.as_slice(), cfg.powers(), cfg.rho()))
}

/// In-group SIC rate of member `k` (0-based): interference from members `< k`.
#[inline]
pub(crate) fn sic_rate(k: usize, gains: &[f64], powers: &[f64], rho: f64) -> f64 {
    let interference: f64 = gains[..k].iter().zip(&powers[..k]).map(|(x, p)| p * x).sum();
    (rho * powers[k] * gains[k] / (1.0 + rho * interference)).ln_1p() / LN_2
}

/// TDMA rate of user `i` with time share `share`: `share · log2(1 + 2 ρ P_i x_i)`.
/// The per-slot power is twice the NOMA power coefficient.
pub fn rate_oma(i: usize, gains: &OrderedGains, cfg: &NetworkConfig, share: f64) -> Result<f64> {
    cfg.check_index(i)?;
    if gains.len() != cfg.m() {
        return Err(Error::domain(format!("{} gains for {} users", gains.len(), cfg.m())));
    }
    if !(share > 0.0 && share <= 1.0) {
        return Err(Error::domain(format!("time share {share} outside (0, 1]")));
    }
    Ok(oma_rate(gains.as_slice()[i - 1], cfg.power(i), cfg.rho(), share))
}

#[inline]
pub(crate) fn oma_rate(gain: f64, power: f64, rho: f64, share: f64) -> f64 {
    share * (2.0 * rho * power * gain).ln_1p() / LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRole {
    Weak,
    Strong,
}

/// Rate of a member of a NOMA group that holds a `group_size / m_total` share
/// of the frame; in-group decoding follows the SIC order above.
pub fn rate_group(member: usize, group_gains: &[f64], group_powers: &[f64], rho: f64, m_total: usize) -> Result<f64> {
    let g = group_gains.len();
    if g == 0 || group_powers.len() != g || member >= g {
        return Err(Error::domain("group gains, powers and member index disagree"));
    }
    if m_total == 0 || !m_total.is_multiple_of(g) {
        return Err(Error::domain(format!("group size {g} does not divide M = {m_total}")));
    }
    if group_gains.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("group gains must be ordered weak to strong"));
    }
    validate_rho(rho)?;
    Ok(g as f64 / m_total as f64 * sic_rate(member, group_gains, group_powers, rho))
}

/// Pair (or triple) member rate. For a triple, `Weak` is the first member and
/// `Strong` the last.
pub fn rate_pair(
    role: PairRole,
    group_gains: &[f64],
    group_powers: &[f64],
    rho: f64,
    m_total: usize,
    group_size: usize,
) -> Result<f64> {
    if !(group_size == 2 || group_size == 3) || group_gains.len() != group_size {
        return Err(Error::domain(format!("group size {group_size} not supported")));
    }
    let member = match role {
        PairRole::Weak => 0,
        PairRole::Strong => group_size - 1,
    };
    rate_group(member, group_gains, group_powers, rho, m_total)
}

/// Monte Carlo EC of an arbitrary rate function of the ordered gains of `m` users.
pub fn ec_monte_carlo<F>(rate_fn: F, beta: f64, m: usize, settings: McSettings) -> Result<EcEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    validate_beta(beta)?;
    let est = estimate_terms(m, &[Term::ec(beta, rate_fn)], settings)?;
    Ok(est.estimate(0))
}

/// Monte Carlo mean rate (ergodic capacity).
pub fn ergodic_monte_carlo<F>(rate_fn: F, m: usize, settings: McSettings) -> Result<EcEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let est = estimate_terms(m, &[Term::mean(rate_fn)], settings)?;
    Ok(est.estimate(0))
}

fn log2_over_beta(inner: f64, beta: f64) -> Result<f64> {
    if !(inner > 0.0) || !inner.is_finite() {
        return Err(Error::domain(format!("EC expectation {inner} is not positive")));
    }
    Ok(inner.log2() / beta)
}

/// Weak-user NOMA EC of the two-user system:
/// `(1/β₁) log2( (2/(ρP₁)) U(1, 2+β₁, 2/(ρP₁)) )`.
pub fn ec1_closed_form(cfg: &NetworkConfig) -> Result<EcEstimate> {
    ec1_closed_form_with(cfg, &SpecialFnAccuracy::default())
}

pub fn ec1_closed_form_with(cfg: &NetworkConfig, acc: &SpecialFnAccuracy) -> Result<EcEstimate> {
    cfg.require_two_users("ec1_closed_form")?;
    if cfg.rho() == 0.0 {
        return Ok(EcEstimate::exact(0.0, EcMethod::ClosedForm));
    }
    let beta = cfg.beta(1);
    let z = 2.0 / (cfg.rho() * cfg.power(1));
    let inner = z * hyp_u_with(1.0, 2.0 + beta, z, acc)?;
    Ok(EcEstimate::exact(log2_over_beta(inner, beta)?, EcMethod::ClosedForm))
}

/// Options for the strong-user two-user EC.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ec2Options {
    /// Expand `(1 + ρP₁y)^{-β₂}` with `⌊β₂⌋` in place of a non-integer `β₂`
    /// instead of switching to quadrature.
    pub paper_faithful_floor: bool,
    pub accuracy: SpecialFnAccuracy,
}

/// Strong-user NOMA EC of the two-user system from the binomial / Taylor
/// double series with incomplete Gamma terms. Non-integer `β₂` and
/// ill-conditioned series (low SNR, where the alternating Taylor sum
/// cancels) are evaluated by [`ec2_quadrature`] instead; the returned method
/// tag says which route was taken.
pub fn ec2_closed_form(cfg: &NetworkConfig) -> Result<EcEstimate> {
    ec2_closed_form_with(cfg, &Ec2Options::default())
}

pub fn ec2_closed_form_with(cfg: &NetworkConfig, opts: &Ec2Options) -> Result<EcEstimate> {
    cfg.require_two_users("ec2_closed_form")?;
    if cfg.rho() == 0.0 {
        return Ok(EcEstimate::exact(0.0, EcMethod::ClosedForm));
    }
    let beta = cfg.beta(2);
    let integer_beta = beta == beta.round();
    if !integer_beta && !opts.paper_faithful_floor {
        return ec2_quadrature_with(cfg, &opts.accuracy);
    }
    match ec2_series(cfg, &opts.accuracy)? {
        Some(value) => Ok(EcEstimate::exact(value, EcMethod::ClosedForm)),
        None if integer_beta => ec2_quadrature_with(cfg, &opts.accuracy),
        None => Err(Error::SeriesDivergence {
            what: "floor-approximated strong-user series",
            partial: f64::NAN,
            terms: EC2_SERIES_MAX_TERMS,
        }),
    }
}

/// Evaluates the double series; `Ok(None)` when cancellation makes it unreliable.
fn ec2_series(cfg: &NetworkConfig, acc: &SpecialFnAccuracy) -> Result<Option<f64>> {
    let (p1, p2) = (cfg.power(1), cfg.power(2));
    let rho = cfg.rho();
    let beta = cfg.beta(2);
    let n_binom = (-beta.floor()) as usize;
    let y0 = 1.0 / (rho * p2);
    let dp = p2 - p1;
    // Terms grow like e^{y0 |dp|} before cancelling down to the result.
    if y0 * dp.abs() > EC2_SERIES_MAX_EXPONENT {
        return Ok(None);
    }

    // Every Γ(·, y0) is carried as e^{y0} Γ(·, y0); the e^{-y0} folds into the
    // prefactor e^{1/(ρP₂)} e^{-(P₁-P₂)/(ρP₂)}, leaving e^{y0 (P₂-P₁)}.
    let g_low = upper_gamma_scaled(1.0 + beta, y0, acc)?;
    let ln_y0 = y0.ln();

    let mut total = 0.0;
    let mut total_abs = 0.0;
    let mut binom = 1.0;
    let mut rho_p1_pow = 1.0;
    for j in 0..=n_binom {
        if j > 0 {
            binom *= (n_binom - j + 1) as f64 / j as f64;
            rho_p1_pow *= rho * p1;
        }
        // s_k = G(2+β+j+k, y0) / k!,   q_k = y0^{1+j+k} / k!,   d_k = (-dp)^k
        let mut a_k = 2.0 + beta + j as f64;
        let mut s_k = upper_gamma_scaled(a_k, y0, acc)?;
        let mut q_k = ((1.0 + j as f64) * ln_y0).exp();
        let mut d_k = 1.0;
        let mut inner = 0.0;
        let mut inner_abs = 0.0;
        let mut converged = false;
        let mut small_run = 0;
        for k in 0..=EC2_SERIES_MAX_TERMS {
            let term = d_k * (s_k - q_k * g_low) / (1.0 + (j + k) as f64);
            inner += term;
            inner_abs += term.abs();
            if term.abs() <= EC2_SERIES_REL_TOL * inner.abs() {
                small_run += 1;
                if small_run >= 2 {
                    converged = true;
                    break;
                }
            } else {
                small_run = 0;
            }
            let kf = k as f64;
            let y_pow_over_fact = (a_k * ln_y0 - libm::lgamma(kf + 1.0)).exp();
            s_k = (a_k * s_k + y_pow_over_fact) / (kf + 1.0);
            q_k *= y0 / (kf + 1.0);
            d_k *= -dp;
            a_k += 1.0;
        }
        if !inner.is_finite() || !inner_abs.is_finite() {
            return Ok(None);
        }
        if !converged {
            return Err(Error::SeriesDivergence {
                what: "strong-user Taylor series",
                partial: inner,
                terms: EC2_SERIES_MAX_TERMS,
            });
        }
        total += binom * rho_p1_pow * inner;
        total_abs += binom * rho_p1_pow * inner_abs;
    }

    if !(total > 0.0) || total_abs / total > EC2_SERIES_MAX_CANCELLATION {
        return Ok(None);
    }
    let ln_prefactor = 2f64.ln() + (1.0 - beta) * p2.ln() + beta * (rho * p2).ln() + y0 * dp;
    let ln_inner = ln_prefactor + total.ln();
    Ok(Some(ln_inner / LN_2 / beta))
}

/// Strong-user NOMA EC by adaptive quadrature over the weak gain:
///
/// `E[(1 + x₂/A)^{β₂}] = ∫₀^∞ 2e^{-2x} A^{-β₂} e^{A+x} Γ(1+β₂, A+x) dx`,
/// `A(x) = (1 + ρP₁x)/(ρP₂)`, using that `x₂ - x₁` is unit exponential given `x₁`.
pub fn ec2_quadrature(cfg: &NetworkConfig) -> Result<EcEstimate> {
    ec2_quadrature_with(cfg, &SpecialFnAccuracy::default())
}

pub fn ec2_quadrature_with(cfg: &NetworkConfig, acc: &SpecialFnAccuracy) -> Result<EcEstimate> {
    cfg.require_two_users("ec2_quadrature")?;
    if cfg.rho() == 0.0 {
        return Ok(EcEstimate::exact(0.0, EcMethod::Quadrature));
    }
    let (p1, p2) = (cfg.power(1), cfg.power(2));
    let rho = cfg.rho();
    let beta = cfg.beta(2);
    // Inner Γ evaluations run well below the outer tolerance.
    let inner_acc = SpecialFnAccuracy {
        rel_tol: acc.rel_tol * 1e-2,
        ..*acc
    };
    let failure = std::cell::Cell::new(None);
    let integrand = |x: f64| {
        let a = (1.0 + rho * p1 * x) / (rho * p2);
        match upper_gamma_scaled(1.0 + beta, a + x, &inner_acc) {
            Ok(g) => 2.0 * (-2.0 * x - beta * a.ln()).exp() * g,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let mut cuts = quad::decade_breakpoints(0.1 / (rho * p1), 1.0);
    cuts.extend([1.0, 4.0, 16.0]);
    let opts = QuadOptions {
        rel_tol: acc.rel_tol * 1e-2,
        abs_tol: 0.0,
        max_segments: acc.max_terms,
    };
    let result = quad::integrate_to_infinity(integrand, 0.0, &cuts, opts);
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    let inner = match result {
        Ok(r) => r.value,
        Err(QuadFailure::Budget { abs_err, requested, .. }) => {
            return Err(Error::Quadrature {
                achieved: abs_err,
                requested,
            })
        }
        Err(QuadFailure::NonFinite { at }) => {
            return Err(Error::domain(format!("strong-user integrand not finite at x = {at}")))
        }
    };
    Ok(EcEstimate::exact(log2_over_beta(inner, beta)?, EcMethod::Quadrature))
}

/// Two-user TDMA ECs.
///
/// * user 1: `(1/β₁) log2( (1/(ρP₁)) U(1, 2+β₁/2, 1/(ρP₁)) )`
/// * user 2: `(1/β₂) log2( (1/(ρP₂)) Σ_{k=0}^{1} (-1)^k U(1, 2+β₂/2, (1+k)/(2ρP₂)) )`
pub fn ec_oma_closed_form(i: usize, cfg: &NetworkConfig) -> Result<EcEstimate> {
    ec_oma_closed_form_with(i, cfg, &SpecialFnAccuracy::default())
}

pub fn ec_oma_closed_form_with(i: usize, cfg: &NetworkConfig, acc: &SpecialFnAccuracy) -> Result<EcEstimate> {
    cfg.require_two_users("ec_oma_closed_form")?;
    cfg.check_index(i)?;
    if cfg.rho() == 0.0 {
        return Ok(EcEstimate::exact(0.0, EcMethod::ClosedForm));
    }
    let beta = cfg.beta(i);
    let rp = cfg.rho() * cfg.power(i);
    let b = 2.0 + beta / 2.0;
    let inner = match i {
        1 => hyp_u_with(1.0, b, 1.0 / rp, acc)? / rp,
        _ => (hyp_u_with(1.0, b, 1.0 / (2.0 * rp), acc)? - hyp_u_with(1.0, b, 1.0 / rp, acc)?) / rp,
    };
    Ok(EcEstimate::exact(log2_over_beta(inner, beta)?, EcMethod::ClosedForm))
}

/// The four two-user ECs at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoUserEcs {
    pub ec1: EcEstimate,
    pub ec2: EcEstimate,
    pub ec1_oma: EcEstimate,
    pub ec2_oma: EcEstimate,
}

impl TwoUserEcs {
    pub fn v_n(&self) -> f64 {
        self.ec1.value + self.ec2.value
    }

    pub fn v_o(&self) -> f64 {
        self.ec1_oma.value + self.ec2_oma.value
    }

    pub fn gap1(&self) -> f64 {
        self.ec1.value - self.ec1_oma.value
    }

    pub fn gap2(&self) -> f64 {
        self.ec2.value - self.ec2_oma.value
    }
}

pub fn two_user_ecs(cfg: &NetworkConfig, opts: &Ec2Options) -> Result<TwoUserEcs> {
    Ok(TwoUserEcs {
        ec1: ec1_closed_form_with(cfg, &opts.accuracy)?,
        ec2: ec2_closed_form_with(cfg, opts)?,
        ec1_oma: ec_oma_closed_form_with(1, cfg, &opts.accuracy)?,
        ec2_oma: ec_oma_closed_form_with(2, cfg, &opts.accuracy)?,
    })
}

/// NOMA and OMA totals with their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    /// `V_N` (two users) or `E_c^tot` (groups).
    pub noma: EcEstimate,
    /// `V_O` (two users) or `Ẽ_c^tot` (groups).
    pub oma: EcEstimate,
    /// `noma - oma`, with a standard error that accounts for common samples.
    pub gap: EcEstimate,
}

/// `V_N = E_c¹ + E_c²` and `V_O = Ẽ_c¹ + Ẽ_c²` for a two-user configuration.
pub fn totals(cfg: &NetworkConfig) -> Result<Totals> {
    let ecs = two_user_ecs(cfg, &Ec2Options::default())?;
    let noma = ecs.ec1.plus(&ecs.ec2);
    let oma = ecs.ec1_oma.plus(&ecs.ec2_oma);
    Ok(Totals {
        noma,
        oma,
        gap: noma.minus(&oma),
    })
}

/// What a Monte Carlo term measures, in terms of global user ranks (0-based).
#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    /// SIC rate of the last of `members` inside a NOMA group whose weaker
    /// members are the preceding entries; `share` is the group's frame share.
    Noma {
        members: Vec<usize>,
        powers: Vec<f64>,
        share: f64,
        rho: f64,
    },
    /// TDMA rate of one user.
    Oma {
        user: usize,
        power: f64,
        share: f64,
        rho: f64,
    },
    /// `share · log2(coef · x_user)`; the high-SNR form of a rate without
    /// interference.
    Log { user: usize, coef: f64, share: f64 },
    /// `share · log2(1 + p_strong x_strong / (p_weak x_weak))`; the high-SNR
    /// form of the strong rate in a pair.
    Ratio {
        weak: usize,
        strong: usize,
        p_weak: f64,
        p_strong: f64,
        share: f64,
    },
}

impl RateSpec {
    #[inline]
    pub fn rate(&self, gains: &[f64]) -> f64 {
        match self {
            RateSpec::Noma {
                members,
                powers,
                share,
                rho,
            } => {
                let k = members.len() - 1;
                let interference: f64 = members[..k].iter().zip(powers).map(|(&u, p)| p * gains[u]).sum();
                share * (rho * powers[k] * gains[members[k]] / (1.0 + rho * interference)).ln_1p() / LN_2
            }
            RateSpec::Oma {
                user,
                power,
                share,
                rho,
            } => oma_rate(gains[*user], *power, *rho, *share),
            RateSpec::Log { user, coef, share } => share * (coef * gains[*user]).log2(),
            RateSpec::Ratio {
                weak,
                strong,
                p_weak,
                p_strong,
                share,
            } => share * (p_strong * gains[*strong] / (p_weak * gains[*weak])).ln_1p() / LN_2,
        }
    }
}

/// Deduplicating collection of EC terms evaluated on common samples.
#[derive(Debug, Default, Clone)]
pub struct TermRegistry {
    entries: Vec<(RateSpec, f64)>,
}

impl TermRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of the EC term `(spec, beta)`, adding it if new.
    pub fn ec(&mut self, spec: RateSpec, beta: f64) -> usize {
        if let Some(k) = self.entries.iter().position(|(s, b)| *s == spec && *b == beta) {
            return k;
        }
        self.entries.push((spec, beta));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn estimate(&self, m: usize, settings: McSettings) -> Result<TermEstimates> {
        let terms: Vec<Term<'_>> = self
            .entries
            .iter()
            .map(|(spec, beta)| Term::ec(*beta, move |g: &[f64]| spec.rate(g)))
            .collect();
        estimate_terms(m, &terms, settings)
    }
}

/// Term indices of the NOMA ECs of every user under `partition`, in canonical
/// group order.
pub fn register_partition_noma(reg: &mut TermRegistry, partition: &Partition, rho: f64, betas: &[f64]) -> Vec<usize> {
    let m = partition.m();
    let mut idx = Vec::with_capacity(m);
    for (group, powers) in partition.canonical_groups() {
        let share = group.len() as f64 / m as f64;
        for k in 0..group.len() {
            let members: Vec<usize> = group[..=k].iter().map(|u| u - 1).collect();
            let spec = RateSpec::Noma {
                members,
                powers: powers[..=k].to_vec(),
                share,
                rho,
            };
            idx.push(reg.ec(spec, betas[group[k] - 1]));
        }
    }
    idx
}

/// Term indices of the TDMA ECs of every user, with each user's TDMA power
/// taken from its position in `partition`.
pub fn register_partition_oma(reg: &mut TermRegistry, partition: &Partition, rho: f64, betas: &[f64]) -> Vec<usize> {
    let m = partition.m();
    let mut idx = Vec::with_capacity(m);
    for (group, powers) in partition.canonical_groups() {
        for (k, &u) in group.iter().enumerate() {
            let spec = RateSpec::Oma {
                user: u - 1,
                power: powers[k],
                share: 1.0 / m as f64,
                rho,
            };
            idx.push(reg.ec(spec, betas[u - 1]));
        }
    }
    idx
}

/// Term indices of the per-user ECs of full NOMA (all users in one block).
pub fn register_full_noma(reg: &mut TermRegistry, cfg: &NetworkConfig) -> Vec<usize> {
    (0..cfg.m())
        .map(|k| {
            let spec = RateSpec::Noma {
                members: (0..=k).collect(),
                powers: cfg.powers()[..=k].to_vec(),
                share: 1.0,
                rho: cfg.rho(),
            };
            reg.ec(spec, cfg.betas()[k])
        })
        .collect()
}

fn unit_weights(idx: &[usize]) -> Vec<(usize, f64)> {
    idx.iter().map(|&k| (k, 1.0)).collect()
}

/// `E_c^tot` (NOMA inside groups, TDMA across groups) and `Ẽ_c^tot` (TDMA for
/// every user) by Monte Carlo over the global order statistics.
pub fn totals_partitioned(partition: &Partition, rho: f64, betas: &[f64], settings: McSettings) -> Result<Totals> {
    validate_rho(rho)?;
    if betas.len() != partition.m() {
        return Err(Error::domain(format!(
            "partition covers {} users but {} QoS exponents were given",
            partition.m(),
            betas.len()
        )));
    }
    for &b in betas {
        validate_beta(b)?;
    }
    if rho == 0.0 {
        let zero = EcEstimate::exact(0.0, EcMethod::MonteCarlo);
        return Ok(Totals {
            noma: zero,
            oma: zero,
            gap: zero,
        });
    }
    let mut reg = TermRegistry::new();
    let noma = register_partition_noma(&mut reg, partition, rho, betas);
    let oma = register_partition_oma(&mut reg, partition, rho, betas);
    let est = reg.estimate(partition.m(), settings)?;
    let mut gap_w = unit_weights(&noma);
    gap_w.extend(oma.iter().map(|&k| (k, -1.0)));
    Ok(Totals {
        noma: est.combination(&unit_weights(&noma), 0.0),
        oma: est.combination(&unit_weights(&oma), 0.0),
        gap: est.combination(&gap_w, 0.0),
    })
}

/// Total EC of full NOMA: all `M` users share one block, rates per the SIC rule.
pub fn full_noma_total(cfg: &NetworkConfig, settings: McSettings) -> Result<EcEstimate> {
    if cfg.rho() == 0.0 {
        return Ok(EcEstimate::exact(0.0, EcMethod::MonteCarlo));
    }
    let mut reg = TermRegistry::new();
    let idx = register_full_noma(&mut reg, cfg);
    let est = reg.estimate(cfg.m(), settings)?;
    Ok(est.combination(&unit_weights(&idx), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn cfg(rho: f64, b1: f64, b2: f64) -> NetworkConfig {
        NetworkConfig::two_user(0.2, 0.8, rho, b1, b2).unwrap()
    }

    fn gains(v: &[f64]) -> OrderedGains {
        OrderedGains::new(v.to_vec()).unwrap()
    }

    /// `(1/β) log2 ∫∫_{x1<=x2} (1 + ρP₂x₂/(1+ρP₁x₁))^β 2e^{-x1}e^{-x2}` by nested
    /// double-exponential quadrature.
    fn ec2_oracle(c: &NetworkConfig) -> f64 {
        let (p1, p2, rho, beta) = (c.power(1), c.power(2), c.rho(), c.beta(2));
        let inner = oracle::integrate_to_infinity(
            |x1| {
                let d = 1.0 + rho * p1 * x1;
                2.0 * (-2.0 * x1).exp()
                    * oracle::integrate_to_infinity(|t| (1.0 + rho * p2 * (x1 + t) / d).powf(beta) * (-t).exp(), 0.0)
            },
            0.0,
        );
        inner.log2() / beta
    }

    #[test]
    fn noma_rates_by_hand() {
        let c = cfg(1.0, -1.0, -1.0);
        let g = gains(&[1.0, 1.0]);
        assert!((rate_noma_uplink(1, &g, &c).unwrap() - 1.2f64.log2()).abs() < 1e-15);
        assert!((rate_noma_uplink(2, &g, &c).unwrap() - (5.0f64 / 3.0).log2()).abs() < 1e-15);
        let c0 = cfg(0.0, -1.0, -1.0);
        assert_eq!(rate_noma_uplink(1, &g, &c0).unwrap(), 0.0);
        assert_eq!(rate_noma_uplink(2, &g, &c0).unwrap(), 0.0);
        assert!(rate_noma_uplink(3, &g, &c).is_err());
        assert!(rate_noma_uplink(0, &g, &c).is_err());
    }

    #[test]
    fn oma_rates_by_hand() {
        let c = cfg(1.0, -1.0, -1.0);
        let g = gains(&[1.0, 1.0]);
        assert!((rate_oma(2, &g, &c, 0.5).unwrap() - 0.5 * 2.6f64.log2()).abs() < 1e-15);
        assert!((rate_oma(2, &g, &c, 1.0).unwrap() - 2.6f64.log2()).abs() < 1e-15);
        assert_eq!(rate_oma(1, &g, &cfg(0.0, -1.0, -1.0), 0.5).unwrap(), 0.0);
        assert!(rate_oma(1, &g, &c, 0.0).is_err());
        assert!(rate_oma(1, &g, &c, 1.5).is_err());
    }

    #[test]
    fn pair_rates_by_hand() {
        let w = rate_pair(PairRole::Weak, &[1.0, 3.0], &[0.2, 0.8], 1.0, 4, 2).unwrap();
        assert!((w - 0.5 * 1.2f64.log2()).abs() < 1e-15);
        let s = rate_pair(PairRole::Strong, &[1.0, 1.0], &[0.2, 0.8], 1.0, 6, 2).unwrap();
        assert!((s - (5.0f64 / 3.0).log2() / 3.0).abs() < 1e-15);
        assert_eq!(
            rate_pair(PairRole::Strong, &[1.0, 2.0], &[0.2, 0.8], 0.0, 4, 2).unwrap(),
            0.0
        );
        assert!(rate_pair(PairRole::Weak, &[1.0, 2.0], &[0.2, 0.8], 1.0, 5, 2).is_err());
        assert!(rate_pair(PairRole::Weak, &[1.0, 2.0], &[0.2, 0.8], 1.0, 4, 4).is_err());
    }

    #[test]
    fn sic_rates_telescope() {
        let c = cfg(3.7, -1.0, -1.0);
        for g in crate::channel_model::sample_ordered_gains(2, crate::RngSpec::new(3, 0), 200).unwrap() {
            let sum = rate_noma_uplink(1, &g, &c).unwrap() + rate_noma_uplink(2, &g, &c).unwrap();
            let x = g.as_slice();
            let want = (1.0 + 3.7 * 0.2 * x[0] + 3.7 * 0.8 * x[1]).log2();
            assert!((sum - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ec1_reference_point() {
        // 2/(ρP₁) = 1  =>  EC = -log2(e E1(1))
        let ec = ec1_closed_form(&cfg(10.0, -1.0, -1.0)).unwrap();
        let want = -(std::f64::consts::E * 0.219_383_934_395_520_3f64).log2();
        assert!((ec.value - want).abs() < 1e-9, "{}", ec.value);
        assert!((ec.value - 0.745_77).abs() < 1e-4);
        assert_eq!(ec.method, EcMethod::ClosedForm);
        assert_eq!(ec1_closed_form(&cfg(0.0, -1.0, -1.0)).unwrap().value, 0.0);
    }

    #[test]
    fn ec1_grows_by_a_settling_decade_increment() {
        let at = |rho: f64| ec1_closed_form(&cfg(rho, -1.0, -1.0)).unwrap().value;
        let d1 = at(1e4) - at(1e3);
        let d2 = at(1e5) - at(1e4);
        let d3 = at(1e6) - at(1e5);
        assert!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0);
        // The increment tends to log2(10) from below.
        assert!((d3 - d2).abs() < (d2 - d1).abs());
        assert!(d3 < 10f64.log2());
    }

    #[test]
    fn ec2_series_matches_quadrature_and_oracle() {
        for &rho in &[1.0, 10.0, 100.0, 1e4] {
            for &b in &[-1.0, -2.0, -3.0] {
                let c = cfg(rho, -1.0, b);
                let series = ec2_closed_form(&c).unwrap();
                let quad = ec2_quadrature(&c).unwrap();
                assert_eq!(series.method, EcMethod::ClosedForm, "rho={rho} beta={b}");
                assert!(
                    ((series.value - quad.value) / quad.value).abs() < 1e-8,
                    "rho={rho} beta={b}: {} vs {}",
                    series.value,
                    quad.value
                );
            }
        }
        let c = cfg(10.0, -1.0, -1.0);
        let want = ec2_oracle(&c);
        assert!((ec2_quadrature(&c).unwrap().value - want).abs() < 1e-9);
        let c = cfg(10.0, -1.0, -0.5);
        let want = ec2_oracle(&c);
        assert!((ec2_quadrature(&c).unwrap().value - want).abs() < 1e-9);
    }

    #[test]
    fn ec2_routes_non_integer_beta_to_quadrature() {
        let c = cfg(10.0, -1.0, -0.5);
        let ec = ec2_closed_form(&c).unwrap();
        assert_eq!(ec.method, EcMethod::Quadrature);
        let floor = ec2_closed_form_with(
            &c,
            &Ec2Options {
                paper_faithful_floor: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(floor.method, EcMethod::ClosedForm);
        assert!(floor.value.is_finite());
        assert!((floor.value - ec.value).abs() > 1e-6);
    }

    #[test]
    fn ec2_low_snr_falls_back_and_vanishes() {
        let c = cfg(1e-2, -1.0, -1.0);
        let ec = ec2_closed_form(&c).unwrap();
        assert_eq!(ec.method, EcMethod::Quadrature);
        assert!(ec.value > 0.0 && ec.value < 0.05);
        assert_eq!(ec2_closed_form(&cfg(0.0, -1.0, -1.0)).unwrap().value, 0.0);
        assert_eq!(ec2_quadrature(&cfg(0.0, -1.0, -1.0)).unwrap().value, 0.0);
    }

    #[test]
    fn oma_closed_forms_match_direct_quadrature() {
        for &rho in &[0.3, 10.0, 1e3] {
            for &b in &[-1.0, -4.0] {
                let c = cfg(rho, b, b);
                let d1 = oracle::integrate_to_infinity(
                    |x| (1.0 + 2.0 * rho * 0.2 * x).powf(b / 2.0) * 2.0 * (-2.0 * x).exp(),
                    0.0,
                );
                let d2 = oracle::integrate_to_infinity(
                    |x| (1.0 + 2.0 * rho * 0.8 * x).powf(b / 2.0) * 2.0 * ((-x).exp() - (-2.0 * x).exp()),
                    0.0,
                );
                let e1 = ec_oma_closed_form(1, &c).unwrap().value;
                let e2 = ec_oma_closed_form(2, &c).unwrap().value;
                assert!((e1 - d1.log2() / b).abs() < 1e-8 * e1.abs().max(1.0), "rho={rho} b={b}");
                assert!((e2 - d2.log2() / b).abs() < 1e-7 * e2.abs().max(1.0), "rho={rho} b={b}");
            }
        }
        assert_eq!(ec_oma_closed_form(1, &cfg(0.0, -1.0, -1.0)).unwrap().value, 0.0);
        assert!(ec_oma_closed_form(3, &cfg(1.0, -1.0, -1.0)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::two_user(0.3, 0.8, 1.0, -1.0, -1.0).is_err());
        assert!(NetworkConfig::two_user(0.2, 0.8, -1.0, -1.0, -1.0).is_err());
        assert!(NetworkConfig::two_user(0.2, 0.8, 1.0, 0.0, -1.0).is_err());
        assert!(NetworkConfig::new(vec![0.2, 0.8], 1.0, vec![-1.0]).is_err());
        let c = cfg(1.0, -2.0, -1.0);
        assert!((c.theta(1) - 2.0 * LN_2).abs() < 1e-15);
        let three = NetworkConfig::new(vec![0.1, 0.3, 0.6], 1.0, vec![-1.0; 3]).unwrap();
        assert!(ec1_closed_form(&three).is_err());
    }

    #[test]
    fn totals_are_definitional_sums() {
        let c = cfg(10.0, -1.0, -1.0);
        let t = totals(&c).unwrap();
        let want = ec1_closed_form(&c).unwrap().value + ec2_closed_form(&c).unwrap().value;
        assert_eq!(t.noma.value, want);
        let t0 = totals(&cfg(0.0, -1.0, -1.0)).unwrap();
        assert_eq!((t0.noma.value, t0.oma.value), (0.0, 0.0));
    }

    #[test]
    fn registry_deduplicates() {
        let mut reg = TermRegistry::new();
        let spec = RateSpec::Oma {
            user: 0,
            power: 0.2,
            share: 0.25,
            rho: 10.0,
        };
        let a = reg.ec(spec.clone(), -1.0);
        let b = reg.ec(spec.clone(), -1.0);
        let c = reg.ec(spec, -2.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(reg.len(), 2);
    }
}
