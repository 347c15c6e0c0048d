//! Measured limits and derivative laws of the two-user and paired systems.
//!
//! Every check returns a [`LimitReport`] holding the predicted value, the
//! measured value and the tolerance it is judged against. Derivatives are
//! central finite differences with a relative step `h·ρ`; delay-tolerant
//! limits use `β = DELAY_TOLERANT_BETA` since the EC is singular at `β = 0`.

use std::f64::consts::LN_2;
use std::fmt;

use crate::channel_model::ordered_mean;
use crate::effective_capacity::{
    ec1_closed_form, ec2_closed_form, ec_oma_closed_form, oma_rate, register_partition_noma, register_partition_oma,
    sic_rate, validate_beta, validate_rho, EcEstimate, NetworkConfig, RateSpec, TermRegistry,
};
use crate::monte_carlo::{estimate_terms, McSettings, Term, TermEstimates};
use crate::pairing_search::Partition;
use crate::{Error, Result};

/// Stand-in for `β → 0⁻`.
pub const DELAY_TOLERANT_BETA: f64 = -1e-6;

/// Default relative finite-difference step.
pub const DEFAULT_STEP: f64 = 0.01;

/// SNR at or above which the high-SNR derivative laws are checked.
pub const HIGH_SNR_MIN: f64 = 100.0;

/// SNR at or below which the low-SNR laws are checked.
pub const LOW_SNR_MAX: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitQuantity {
    Ec2Plateau,
    Gap1Slope,
    Gap2Slope,
    SumSlopeLowSnr,
    ErgodicLimit,
    PairingGapConstant,
}

impl LimitQuantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitQuantity::Ec2Plateau => "ec2_plateau",
            LimitQuantity::Gap1Slope => "gap1_slope",
            LimitQuantity::Gap2Slope => "gap2_slope",
            LimitQuantity::SumSlopeLowSnr => "sum_slope_low_snr",
            LimitQuantity::ErgodicLimit => "ergodic_limit",
            LimitQuantity::PairingGapConstant => "pairing_gap_constant",
        }
    }
}

impl fmt::Display for LimitQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceKind {
    Absolute,
    /// Relative to `|predicted|`.
    Relative,
}

impl ToleranceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToleranceKind::Absolute => "absolute",
            ToleranceKind::Relative => "relative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub quantity: LimitQuantity,
    /// What was compared, e.g. `"ec1 vs mean rate"`.
    pub label: String,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
    pub pass: bool,
    /// SNR of the measured side; NaN when the comparison has none.
    pub rho: f64,
}

impl LimitReport {
    pub fn new(
        quantity: LimitQuantity,
        label: impl Into<String>,
        predicted: f64,
        measured: f64,
        tolerance: f64,
        kind: ToleranceKind,
    ) -> Self {
        let allowed = match kind {
            ToleranceKind::Absolute => tolerance,
            ToleranceKind::Relative => tolerance * predicted.abs(),
        };
        let pass = (predicted - measured).abs() <= allowed;
        Self {
            quantity,
            label: label.into(),
            predicted,
            measured,
            tolerance,
            kind,
            pass,
            rho: f64::NAN,
        }
    }

    /// Sets the SNR at which `measured` was taken.
    pub fn at(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    /// `|measured - predicted|`, relative to `|predicted|` for relative reports.
    pub fn error(&self) -> f64 {
        let e = (self.measured - self.predicted).abs();
        match self.kind {
            ToleranceKind::Absolute => e,
            ToleranceKind::Relative => e / self.predicted.abs(),
        }
    }
}

fn two_user(cfg: &NetworkConfig) -> Result<()> {
    if cfg.m() != 2 {
        return Err(Error::domain(format!(
            "two-user configuration required, got M = {}",
            cfg.m()
        )));
    }
    Ok(())
}

fn plateau_rate(gains: &[f64], p1: f64, p2: f64) -> f64 {
    (p2 * gains[1] / (p1 * gains[0])).ln_1p() / LN_2
}

/// Monte Carlo value of the strong user's high-SNR EC,
/// `(1/β₂) log2 E[(1 + P₂x₂/(P₁x₁))^{β₂}]`. Independent of `ρ`.
pub fn ec2_high_snr_plateau(cfg: &NetworkConfig, settings: McSettings) -> Result<EcEstimate> {
    two_user(cfg)?;
    let (p1, p2) = (cfg.power(1), cfg.power(2));
    let est = estimate_terms(2, &[Term::ec(cfg.beta(2), |g| plateau_rate(g, p1, p2))], settings)?;
    Ok(est.estimate(0))
}

/// Delay-tolerant high-SNR limit of the strong user, `E[log2(1 + P₂x₂/(P₁x₁))]`.
pub fn ec2_delay_tolerant_plateau(cfg: &NetworkConfig, settings: McSettings) -> Result<EcEstimate> {
    two_user(cfg)?;
    let (p1, p2) = (cfg.power(1), cfg.power(2));
    let est = estimate_terms(2, &[Term::mean(|g| plateau_rate(g, p1, p2))], settings)?;
    Ok(est.estimate(0))
}

/// Strong-user closed form at `rho` against the Monte Carlo plateau, judged
/// at `3σ` of the plateau estimate.
pub fn ec2_plateau_check(cfg: &NetworkConfig, rho: f64, settings: McSettings) -> Result<LimitReport> {
    let plateau = ec2_high_snr_plateau(cfg, settings)?;
    let ec2 = ec2_closed_form(&cfg.with_rho(rho)?)?;
    Ok(LimitReport::new(
        LimitQuantity::Ec2Plateau,
        format!("ec2 at rho={rho:e} vs plateau"),
        plateau.value,
        ec2.value,
        3.0 * plateau.se(),
        ToleranceKind::Absolute,
    )
    .at(rho))
}

/// Relative change of the strong-user EC between two high SNRs.
pub fn ec2_plateau_flatness(cfg: &NetworkConfig, rho_lo: f64, rho_hi: f64, rel_tol: f64) -> Result<LimitReport> {
    two_user(cfg)?;
    let lo = ec2_closed_form(&cfg.with_rho(rho_lo)?)?.value;
    let hi = ec2_closed_form(&cfg.with_rho(rho_hi)?)?.value;
    Ok(LimitReport::new(
        LimitQuantity::Ec2Plateau,
        format!("ec2 at rho={rho_lo:e} vs rho={rho_hi:e}"),
        hi,
        lo,
        rel_tol,
        ToleranceKind::Relative,
    )
    .at(rho_lo))
}

/// `E_c^i - Ẽ_c^i` from the closed forms.
pub fn ec_gap(user: usize, cfg: &NetworkConfig) -> Result<f64> {
    two_user(cfg)?;
    let noma = match user {
        1 => ec1_closed_form(cfg)?,
        2 => ec2_closed_form(cfg)?,
        _ => return Err(Error::domain(format!("user {user} outside 1..=2"))),
    };
    Ok(noma.value - ec_oma_closed_form(user, cfg)?.value)
}

fn check_step(rho: f64, h: f64) -> Result<()> {
    validate_rho(rho)?;
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::domain(format!("relative step {h} outside (0, 0.1)")));
    }
    if rho * (1.0 + h) == rho || rho * (1.0 - h) == rho || rho * h == 0.0 {
        return Err(Error::domain(format!("step {h} underflows at rho = {rho:e}")));
    }
    Ok(())
}

/// Central difference of `f` at `rho` with step `h·rho`.
fn central_difference(rho: f64, h: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    check_step(rho, h)?;
    let (lo, hi) = (rho * (1.0 - h), rho * (1.0 + h));
    Ok((f(hi)? - f(lo)?) / (hi - lo))
}

/// Finite-difference slope of `E_c^i - Ẽ_c^i` against its asymptotic law:
/// `±1/(2ρ ln2)` (user 1 / user 2) with 10% relative tolerance at high SNR,
/// and zero with absolute tolerance `1e-3` at low SNR.
pub fn gap_derivative_check(user: usize, cfg: &NetworkConfig, rho: f64, h: f64) -> Result<LimitReport> {
    two_user(cfg)?;
    let quantity = match user {
        1 => LimitQuantity::Gap1Slope,
        2 => LimitQuantity::Gap2Slope,
        _ => return Err(Error::domain(format!("user {user} outside 1..=2"))),
    };
    let measured = central_difference(rho, h, |r| ec_gap(user, &cfg.with_rho(r)?))?;
    let label = format!("d(gap{user})/drho at rho={rho:e}");
    if rho >= HIGH_SNR_MIN {
        let sign = if user == 1 { 1.0 } else { -1.0 };
        let predicted = sign / (2.0 * rho * LN_2);
        Ok(LimitReport::new(quantity, label, predicted, measured, 0.1, ToleranceKind::Relative).at(rho))
    } else if rho <= LOW_SNR_MAX {
        Ok(LimitReport::new(quantity, label, 0.0, measured, 1e-3, ToleranceKind::Absolute).at(rho))
    } else {
        Err(Error::domain(format!(
            "no asymptotic slope law between rho = {LOW_SNR_MAX:e} and {HIGH_SNR_MIN:e} (got {rho:e})"
        )))
    }
}

/// Low-SNR slopes of `V_N` and `V_O` against `Σ P_i E[x_i] / ln2` (2% relative).
pub fn sum_ec_low_snr_slope(cfg: &NetworkConfig, rho_small: f64, h: f64) -> Result<Vec<LimitReport>> {
    two_user(cfg)?;
    if !(rho_small > 0.0 && rho_small <= 1e-3) {
        return Err(Error::domain(format!(
            "low-SNR slope needs 0 < rho <= 1e-3, got {rho_small:e}"
        )));
    }
    let predicted = (1..=2)
        .map(|i| Ok(cfg.power(i) * ordered_mean(i, 2)?))
        .sum::<Result<f64>>()?
        / LN_2;
    let v_n = central_difference(rho_small, h, |r| {
        let c = cfg.with_rho(r)?;
        Ok(ec1_closed_form(&c)?.value + ec2_closed_form(&c)?.value)
    })?;
    let v_o = central_difference(rho_small, h, |r| {
        let c = cfg.with_rho(r)?;
        Ok(ec_oma_closed_form(1, &c)?.value + ec_oma_closed_form(2, &c)?.value)
    })?;
    Ok(vec![
        LimitReport::new(
            LimitQuantity::SumSlopeLowSnr,
            format!("dV_N/drho at rho={rho_small:e}"),
            predicted,
            v_n,
            0.02,
            ToleranceKind::Relative,
        )
        .at(rho_small),
        LimitReport::new(
            LimitQuantity::SumSlopeLowSnr,
            format!("dV_O/drho at rho={rho_small:e}"),
            predicted,
            v_o,
            0.02,
            ToleranceKind::Relative,
        )
        .at(rho_small),
    ])
}

/// The four two-user ECs at `β = DELAY_TOLERANT_BETA` against Monte Carlo
/// ergodic capacities at `cfg.rho()` (0.5% relative), in the order
/// `E_c¹, E_c², Ẽ_c¹, Ẽ_c²`.
pub fn ergodic_limits(cfg: &NetworkConfig, settings: McSettings) -> Result<Vec<LimitReport>> {
    two_user(cfg)?;
    let c = cfg.with_betas(vec![DELAY_TOLERANT_BETA; 2])?;
    let (p, rho) = (c.powers().to_vec(), c.rho());
    let terms = [
        Term::mean(|g| sic_rate(0, g, &p, rho)),
        Term::mean(|g| sic_rate(1, g, &p, rho)),
        Term::mean(|g| oma_rate(g[0], p[0], rho, 0.5)),
        Term::mean(|g| oma_rate(g[1], p[1], rho, 0.5)),
    ];
    let means = estimate_terms(2, &terms, settings)?;
    let ecs = [
        ("ec1", ec1_closed_form(&c)?),
        ("ec2", ec2_closed_form(&c)?),
        ("ec1_oma", ec_oma_closed_form(1, &c)?),
        ("ec2_oma", ec_oma_closed_form(2, &c)?),
    ];
    Ok(ecs
        .iter()
        .enumerate()
        .map(|(k, (name, ec))| {
            LimitReport::new(
                LimitQuantity::ErgodicLimit,
                format!("{name}(beta->0) vs mean rate at rho={rho:e}"),
                means.value(k),
                ec.value,
                0.005,
                ToleranceKind::Relative,
            )
            .at(rho)
        })
        .collect())
}

/// Delay-tolerant strong-user EC at `rho` against `E[log2(1 + P₂x₂/(P₁x₁))]`
/// (1% relative).
pub fn delay_tolerant_plateau_check(cfg: &NetworkConfig, rho: f64, settings: McSettings) -> Result<LimitReport> {
    two_user(cfg)?;
    let c = cfg.with_betas(vec![DELAY_TOLERANT_BETA; 2])?.with_rho(rho)?;
    let limit = ec2_delay_tolerant_plateau(&c, settings)?;
    let ec2 = ec2_closed_form(&c)?;
    Ok(LimitReport::new(
        LimitQuantity::ErgodicLimit,
        format!("ec2(beta->0) at rho={rho:e} vs E[log2(1+P2x2/(P1x1))]"),
        limit.value,
        ec2.value,
        0.01,
        ToleranceKind::Relative,
    )
    .at(rho))
}

/// Which form of the high-SNR pairing gap to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapConstantForm {
    /// Limit of the gap derived term by term from the finite-SNR expression.
    Derived,
    /// The weak-user term as commonly printed,
    /// `(1/β₁) log2(2^{-β₁/M} E[(P₁x₁)^{β₁/M}])`.
    AsPrinted,
}

fn pair_groups(partition: &Partition, betas: &[f64]) -> Result<()> {
    if partition.group_size() != 2 {
        return Err(Error::domain("the pairing gap constant is defined for pairs only"));
    }
    if betas.len() != partition.m() {
        return Err(Error::domain(format!(
            "{} QoS exponents for M = {}",
            betas.len(),
            partition.m()
        )));
    }
    for &b in betas {
        validate_beta(b)?;
    }
    Ok(())
}

/// Registers the constant's EC terms; returns the weights and the additive constant.
fn register_gap_constant(
    reg: &mut TermRegistry,
    partition: &Partition,
    betas: &[f64],
    form: GapConstantForm,
) -> (Vec<(usize, f64)>, f64) {
    let m = partition.m() as f64;
    let mut w = Vec::new();
    let mut constant = 0.0;
    for (group, powers) in partition.canonical_groups() {
        let (weak, strong) = (group[0] - 1, group[1] - 1);
        let (p1, p2) = (powers[0], powers[1]);
        let (b1, b2) = (betas[weak], betas[strong]);
        match form {
            GapConstantForm::Derived => {
                let a = RateSpec::Log {
                    user: weak,
                    coef: p1,
                    share: 2.0 / m,
                };
                let b = RateSpec::Log {
                    user: weak,
                    coef: 2.0 * p1,
                    share: 1.0 / m,
                };
                w.push((reg.ec(a, b1), 1.0));
                w.push((reg.ec(b, b1), -1.0));
            }
            GapConstantForm::AsPrinted => {
                let a = RateSpec::Log {
                    user: weak,
                    coef: p1,
                    share: 1.0 / m,
                };
                w.push((reg.ec(a, b1), 1.0));
                constant -= 1.0 / m;
            }
        }
        let ratio = RateSpec::Ratio {
            weak,
            strong,
            p_weak: p1,
            p_strong: p2,
            share: 2.0 / m,
        };
        let oma = RateSpec::Log {
            user: strong,
            coef: 2.0 * p2,
            share: 1.0 / m,
        };
        w.push((reg.ec(ratio, b2), 1.0));
        w.push((reg.ec(oma, b2), -1.0));
    }
    (w, constant)
}

/// Monte Carlo value of the high-SNR limit of `E_c^tot - Ẽ_c^tot` for a pair
/// partition. Independent of `ρ`.
pub fn pairing_gap_constant(
    partition: &Partition,
    betas: &[f64],
    form: GapConstantForm,
    settings: McSettings,
) -> Result<EcEstimate> {
    pair_groups(partition, betas)?;
    let mut reg = TermRegistry::new();
    let (w, c) = register_gap_constant(&mut reg, partition, betas, form);
    Ok(reg.estimate(partition.m(), settings)?.combination(&w, c))
}

/// The gap constant and the finite-SNR gap `E_c^tot - Ẽ_c^tot` at `rho`,
/// together with their difference, all on common samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapConstantComparison {
    pub constant: EcEstimate,
    pub gap: EcEstimate,
    /// `gap - constant`.
    pub difference: EcEstimate,
}

pub fn pairing_gap_comparison(
    partition: &Partition,
    rho: f64,
    betas: &[f64],
    form: GapConstantForm,
    settings: McSettings,
) -> Result<GapConstantComparison> {
    pair_groups(partition, betas)?;
    validate_rho(rho)?;
    let mut reg = TermRegistry::new();
    let noma = register_partition_noma(&mut reg, partition, rho, betas);
    let oma = register_partition_oma(&mut reg, partition, rho, betas);
    let (cw, cc) = register_gap_constant(&mut reg, partition, betas, form);
    let est: TermEstimates = reg.estimate(partition.m(), settings)?;
    let mut gw: Vec<(usize, f64)> = noma.iter().map(|&k| (k, 1.0)).collect();
    gw.extend(oma.iter().map(|&k| (k, -1.0)));
    let mut dw = gw.clone();
    dw.extend(cw.iter().map(|&(k, w)| (k, -w)));
    Ok(GapConstantComparison {
        constant: est.combination(&cw, cc),
        gap: est.combination(&gw, 0.0),
        difference: est.combination(&dw, -cc),
    })
}

/// Gap at high SNR against the constant, judged at three combined standard
/// errors `3·sqrt(σ_gap² + σ_const²)`. The common-sample standard error of the
/// difference is tighter; see [`pairing_gap_comparison`].
pub fn pairing_gap_check(partition: &Partition, rho: f64, betas: &[f64], settings: McSettings) -> Result<LimitReport> {
    let cmp = pairing_gap_comparison(partition, rho, betas, GapConstantForm::Derived, settings)?;
    Ok(LimitReport::new(
        LimitQuantity::PairingGapConstant,
        format!("{} gap at rho={rho:e} vs constant", partition.label()),
        cmp.constant.value,
        cmp.gap.value,
        3.0 * cmp.gap.se().hypot(cmp.constant.se()),
        ToleranceKind::Absolute,
    )
    .at(rho))
}

/// Gap at low SNR against zero (absolute tolerance `1e-3`).
pub fn pairing_gap_low_snr_check(
    partition: &Partition,
    rho: f64,
    betas: &[f64],
    settings: McSettings,
) -> Result<LimitReport> {
    let t = crate::effective_capacity::totals_partitioned(partition, rho, betas, settings)?;
    Ok(LimitReport::new(
        LimitQuantity::PairingGapConstant,
        format!("{} gap at rho={rho:e} vs 0", partition.label()),
        0.0,
        t.gap.value,
        1e-3,
        ToleranceKind::Absolute,
    )
    .at(rho))
}

/// The default limit checks for a two-user configuration (powers and QoS
/// exponents from `cfg`) and the `M = 4` pairing `(1,4)-(2,3)` with the same
/// per-pair powers and the weak user's exponent.
pub fn default_reports(cfg: &NetworkConfig, settings: McSettings) -> Result<Vec<LimitReport>> {
    two_user(cfg)?;
    let mut out = vec![
        ec2_plateau_flatness(cfg, 1e5, 1e6, 0.01)?,
        ec2_plateau_check(cfg, 1e5, settings)?,
        ec2_plateau_check(cfg, 1e6, settings)?,
    ];
    for user in 1..=2 {
        out.push(gap_derivative_check(user, cfg, 1e4, DEFAULT_STEP)?);
    }
    for user in 1..=2 {
        out.push(gap_derivative_check(user, cfg, 1e-4, DEFAULT_STEP)?);
    }
    out.extend(sum_ec_low_snr_slope(cfg, 1e-3, DEFAULT_STEP)?);
    out.extend(ergodic_limits(&cfg.with_rho(10.0)?, settings)?);
    out.push(delay_tolerant_plateau_check(cfg, 1e6, settings)?);
    let pairing = Partition::parse("(1,4)-(2,3)", cfg.powers())?;
    let betas = vec![cfg.beta(1); 4];
    out.push(pairing_gap_check(&pairing, 1e6, &betas, settings)?);
    out.push(pairing_gap_low_snr_check(&pairing, 1e-3, &betas, settings)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p1: f64, p2: f64) -> NetworkConfig {
        NetworkConfig::two_user(p1, p2, 1.0, -1.0, -1.0).unwrap()
    }

    #[test]
    fn report_pass_rule() {
        let r = LimitReport::new(LimitQuantity::Gap1Slope, "x", 2.0, 2.09, 0.05, ToleranceKind::Relative);
        assert!(r.pass);
        let r = LimitReport::new(LimitQuantity::Gap1Slope, "x", 2.0, 2.11, 0.05, ToleranceKind::Relative);
        assert!(!r.pass);
        let r = LimitReport::new(LimitQuantity::Gap1Slope, "x", 0.0, -1e-4, 1e-3, ToleranceKind::Absolute);
        assert!(r.pass && (r.error() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn plateau_for_equal_powers_matches_quadrature() {
        // With P₁ = P₂ the ratio is x₂/x₁; given x₁, x₂ - x₁ is unit exponential.
        let c = cfg(0.5, 0.5);
        let inner = crate::oracle::integrate_to_infinity(
            |x1| 2.0 * (-2.0 * x1).exp() * crate::oracle::integrate_to_infinity(|t| (-t).exp() / (2.0 + t / x1), 0.0),
            0.0,
        );
        let want = inner.log2() / -1.0;
        let mc = ec2_high_snr_plateau(&c, McSettings::new(400_000, 8)).unwrap();
        assert!(
            (mc.value - want).abs() < 3.0 * mc.se(),
            "{} vs {want} (se {})",
            mc.value,
            mc.se()
        );
    }

    #[test]
    fn gap_slopes_vanish_at_low_snr() {
        for user in 1..=2 {
            let r = gap_derivative_check(user, &cfg(0.2, 0.8), 1e-4, DEFAULT_STEP).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn strong_user_gap_slope_follows_law() {
        let r = gap_derivative_check(2, &cfg(0.2, 0.8), 1e4, DEFAULT_STEP).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn step_validation() {
        let c = cfg(0.2, 0.8);
        assert!(gap_derivative_check(1, &c, 1e4, 0.0).is_err());
        assert!(gap_derivative_check(1, &c, 1e4, 0.2).is_err());
        assert!(gap_derivative_check(1, &c, 1e4, 1e-18).is_err());
        assert!(gap_derivative_check(1, &c, 1.0, 0.01).is_err());
        assert!(gap_derivative_check(3, &c, 1e4, 0.01).is_err());
    }

    #[test]
    fn low_snr_slopes() {
        for (p1, p2) in [(0.2, 0.8), (0.5, 0.5)] {
            let reports = sum_ec_low_snr_slope(&cfg(p1, p2), 1e-3, DEFAULT_STEP).unwrap();
            let want = (p1 * 0.5 + p2 * 1.5) / LN_2;
            for r in &reports {
                assert!((r.predicted - want).abs() < 1e-14);
                assert!(r.pass, "{r:?}");
            }
        }
        assert!(sum_ec_low_snr_slope(&cfg(0.2, 0.8), 1e-2, DEFAULT_STEP).is_err());
    }

    #[test]
    fn printed_constant_differs_from_derived() {
        let p = Partition::parse("(1,4)-(2,3)", &[0.2, 0.8]).unwrap();
        let s = McSettings::new(100_000, 4);
        let d = pairing_gap_constant(&p, &[-1.0; 4], GapConstantForm::Derived, s).unwrap();
        let a = pairing_gap_constant(&p, &[-1.0; 4], GapConstantForm::AsPrinted, s).unwrap();
        assert!((d.value - a.value).abs() > 10.0 * d.se().max(a.se()));
        let triples = Partition::parse("(1,2,3)", &[0.1, 0.3, 0.6]).unwrap();
        assert!(pairing_gap_constant(&triples, &[-1.0; 3], GapConstantForm::Derived, s).is_err());
    }
}
