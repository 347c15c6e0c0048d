use anyhow::Result;
use noma_ec::asymptotics::default_reports;
use noma_ec::channel_model::RngSpec;
use noma_ec::effective_capacity::{
    ec1_closed_form, ec2_closed_form_with, two_user_ecs, Ec2Options, RateSpec, TermRegistry, TwoUserEcs,
};
use noma_ec::monte_carlo::McSettings;
use noma_ec::pairing_search::{
    best_partition, compare_schemes, enumerate_groupings, SchemePowers, SearchResult, DEFAULT_TRIPLE_POWERS,
    SEPARATION_SIGMAS,
};
use noma_ec::{db_to_linear, EcEstimate, NetworkConfig};

use crate::config::{usage, Overrides};
use crate::output::{num, opt, CsvOut};

/// How a command ended, mapped to the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    GateFailure,
    Inconclusive,
}

pub const VALIDATE_HEADER: &[&str] = &[
    "rho_db",
    "rho_linear",
    "ec1_cf",
    "ec1_mc",
    "ec1_se",
    "ec2_cf",
    "ec2_mc",
    "ec2_se",
    "ec2_method",
    "pass",
];
pub const SWEEP_SNR_HEADER: &[&str] = &[
    "rho_db",
    "rho_linear",
    "ec1",
    "ec2",
    "ec1_oma",
    "ec2_oma",
    "v_n",
    "v_o",
    "ec2_method",
];
pub const SWEEP_DELAY_HEADER: &[&str] = &[
    "beta",
    "rho_db",
    "rho_linear",
    "ec1",
    "ec2",
    "ec1_oma",
    "ec2_oma",
    "v_n",
    "v_o",
    "ec2_method",
];
pub const GAPS_HEADER: &[&str] = &["rho_db", "rho_linear", "gap1", "gap2", "v_n_minus_v_o", "gap2_sign"];
pub const PAIRING_HEADER: &[&str] = &[
    "rho_db",
    "rho_linear",
    "rank",
    "partition",
    "total",
    "total_se",
    "oma_total",
    "oma_se",
    "gain",
    "gain_se",
    "inseparable",
];
pub const COMPARE_HEADER: &[&str] = &[
    "rho_db",
    "rho_linear",
    "scheme",
    "partition",
    "total",
    "total_se",
    "margin_to_next",
    "margin_se",
];
pub const LIMITS_HEADER: &[&str] = &[
    "quantity",
    "label",
    "rho_db",
    "rho_linear",
    "predicted",
    "measured",
    "tolerance",
    "tolerance_kind",
    "pass",
];

const DEFAULT_DELAY_GRID: &[f64] = &[-0.1, -0.2, -0.5, -1.0, -2.0, -3.0, -5.0, -10.0];

fn ec2_options(o: &Overrides) -> Ec2Options {
    Ec2Options {
        paper_faithful_floor: o.paper_faithful_floor,
        ..Ec2Options::default()
    }
}

fn two_user_cfg(o: &Overrides, rho: f64) -> Result<NetworkConfig> {
    let (p1, p2) = o.pair_powers()?;
    let b = o.betas(2)?;
    Ok(NetworkConfig::two_user(p1, p2, rho, b[0], b[1])?)
}

fn rho_db_str(rho_db: f64) -> String {
    if rho_db.is_finite() {
        num(rho_db)
    } else {
        String::new()
    }
}

fn linear_to_db_or_nan(rho: f64) -> f64 {
    if rho.is_finite() && rho > 0.0 {
        10.0 * rho.log10()
    } else {
        f64::NAN
    }
}

fn ec_row(e: &TwoUserEcs) -> [String; 7] {
    [
        num(e.ec1.value),
        num(e.ec2.value),
        num(e.ec1_oma.value),
        num(e.ec2_oma.value),
        num(e.v_n()),
        num(e.v_o()),
        e.ec2.method.to_string(),
    ]
}

pub fn validate(o: &Overrides) -> Result<Outcome> {
    two_user_cfg(o, 1.0)?;
    let grid = o.rho_grid(0.0, 40.0, 10.0)?;
    let n = o.samples(1_000_000)?;
    let seed = o.seed();
    let opts = ec2_options(o);
    let mut out = CsvOut::create(o.out.as_deref(), VALIDATE_HEADER)?;
    let mut failures = 0;
    for (k, &rho_db) in grid.iter().enumerate() {
        let rho = db_to_linear(rho_db);
        let cfg = two_user_cfg(o, rho)?;
        let ec1 = ec1_closed_form(&cfg)?;
        let ec2 = ec2_closed_form_with(&cfg, &opts)?;
        let mut reg = TermRegistry::new();
        let t1 = reg.ec(
            RateSpec::Noma {
                members: vec![0],
                powers: vec![cfg.power(1)],
                share: 1.0,
                rho,
            },
            cfg.beta(1),
        );
        let t2 = reg.ec(
            RateSpec::Noma {
                members: vec![0, 1],
                powers: cfg.powers().to_vec(),
                share: 1.0,
                rho,
            },
            cfg.beta(2),
        );
        let settings = McSettings {
            samples: n,
            rng: RngSpec::new(seed, k as u64),
        };
        let est = reg.estimate(2, settings)?;
        let (mc1, mc2) = (est.estimate(t1), est.estimate(t2));
        let within = |cf: &EcEstimate, mc: &EcEstimate| (cf.value - mc.value).abs() <= 3.0 * mc.se();
        let pass = within(&ec1, &mc1) && within(&ec2, &mc2);
        if !pass {
            failures += 1;
        }
        out.row([
            num(rho_db),
            num(rho),
            num(ec1.value),
            num(mc1.value),
            num(mc1.se()),
            num(ec2.value),
            num(mc2.value),
            num(mc2.se()),
            ec2.method.to_string(),
            pass.to_string(),
        ])?;
    }
    out.finish()?;
    eprintln!(
        "validate: {} of {} SNR points within 3 standard errors (n = {n}, seed = {seed})",
        grid.len() - failures,
        grid.len()
    );
    Ok(if failures == 0 {
        Outcome::Pass
    } else {
        Outcome::GateFailure
    })
}

pub fn sweep_snr(o: &Overrides) -> Result<Outcome> {
    two_user_cfg(o, 1.0)?;
    let grid = o.rho_grid(-10.0, 50.0, 2.0)?;
    let opts = ec2_options(o);
    let mut out = CsvOut::create(o.out.as_deref(), SWEEP_SNR_HEADER)?;
    for &rho_db in &grid {
        let rho = db_to_linear(rho_db);
        let e = two_user_ecs(&two_user_cfg(o, rho)?, &opts)?;
        let mut row = vec![num(rho_db), num(rho)];
        row.extend(ec_row(&e));
        out.row(row)?;
    }
    out.finish()?;
    Ok(Outcome::Pass)
}

pub fn sweep_delay(o: &Overrides) -> Result<Outcome> {
    let rho_db = o.rho_db(30.0)?;
    let rho = db_to_linear(rho_db);
    let grid = o.beta_grid.clone().unwrap_or_else(|| DEFAULT_DELAY_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|b| !(*b < 0.0) || !b.is_finite()) {
        return usage(format!("--beta-grid must hold negative values: {grid:?}"));
    }
    let (p1, p2) = o.pair_powers()?;
    let opts = ec2_options(o);
    let mut out = CsvOut::create(o.out.as_deref(), SWEEP_DELAY_HEADER)?;
    for &beta in &grid {
        let cfg = NetworkConfig::two_user(p1, p2, rho, beta, beta)?;
        let e = two_user_ecs(&cfg, &opts)?;
        let mut row = vec![num(beta), num(rho_db), num(rho)];
        row.extend(ec_row(&e));
        out.row(row)?;
    }
    out.finish()?;
    Ok(Outcome::Pass)
}

fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Number of strict sign flips, ignoring exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<i32> = values.iter().map(|&v| sign(v)).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn gaps(o: &Overrides) -> Result<Outcome> {
    two_user_cfg(o, 1.0)?;
    let grid = o.rho_grid(-10.0, 50.0, 2.0)?;
    let opts = ec2_options(o);
    let mut out = CsvOut::create(o.out.as_deref(), GAPS_HEADER)?;
    let mut gap2s = Vec::with_capacity(grid.len());
    for &rho_db in &grid {
        let rho = db_to_linear(rho_db);
        let e = two_user_ecs(&two_user_cfg(o, rho)?, &opts)?;
        gap2s.push(e.gap2());
        out.row([
            num(rho_db),
            num(rho),
            num(e.gap1()),
            num(e.gap2()),
            num(e.v_n() - e.v_o()),
            sign(e.gap2()).to_string(),
        ])?;
    }
    out.finish()?;
    eprintln!(
        "gaps: ec2 - ec2_oma changes sign {} time(s) over the grid",
        sign_changes(&gap2s)
    );
    Ok(Outcome::Pass)
}

fn search_users(o: &Overrides, default_m: usize) -> Result<usize> {
    let m = o.m.unwrap_or(default_m);
    if !(2..=noma_ec::pairing_search::MAX_USERS).contains(&m) {
        return usage(format!("--m {m} is outside 2..={}", noma_ec::pairing_search::MAX_USERS));
    }
    Ok(m)
}

fn summarize_search(r: &SearchResult, n: usize) -> Outcome {
    let w = r.winner();
    eprintln!(
        "pairing-search: best {} total {} (se {}), OMA {} (se {})",
        w.partition.label(),
        w.total.value,
        w.total.se(),
        w.oma_total.value,
        w.oma_total.se()
    );
    match &r.separation {
        None => Outcome::Pass,
        Some(s) if s.conclusive() => {
            eprintln!(
                "pairing-search: runner-up trails by {} ({:.1} standard errors)",
                s.margin.value,
                s.sigmas()
            );
            Outcome::Pass
        }
        Some(s) => {
            let advice = match s.required_samples {
                Some(k) => format!("rerun with --samples {} or more", k.max(n + 1)),
                None => "the leading totals coincide".to_string(),
            };
            eprintln!(
                "pairing-search: inconclusive, {} partition(s) within {SEPARATION_SIGMAS} standard errors of the leader; {advice}",
                s.inseparable.len()
            );
            Outcome::Inconclusive
        }
    }
}

pub fn pairing_search(o: &Overrides) -> Result<Outcome> {
    let m = search_users(o, 4)?;
    let size = o.group_size.unwrap_or(2);
    let powers = match size {
        2 => {
            let (p1, p2) = o.pair_powers()?;
            vec![p1, p2]
        }
        3 => o
            .triple_powers
            .clone()
            .unwrap_or_else(|| DEFAULT_TRIPLE_POWERS.to_vec()),
        _ => return usage(format!("--group-size {size} must be 2 or 3")),
    };
    let rho_db = o.rho_db(30.0)?;
    let rho = db_to_linear(rho_db);
    let betas = o.betas(m)?;
    let n = o.samples(100_000)?;
    let partitions = enumerate_groupings(m, size, &powers)?;
    let r = best_partition(&partitions, rho, &betas, McSettings::new(n, o.seed()))?;
    let inseparable = r.separation.as_ref().map(|s| s.inseparable.clone()).unwrap_or_default();
    let mut out = CsvOut::create(o.out.as_deref(), PAIRING_HEADER)?;
    for (rank, p) in r.ranked.iter().enumerate() {
        out.row([
            num(rho_db),
            num(rho),
            (rank + 1).to_string(),
            p.partition.label(),
            num(p.total.value),
            num(p.total.se()),
            num(p.oma_total.value),
            num(p.oma_total.se()),
            num(p.gain.value),
            num(p.gain.se()),
            inseparable.contains(&rank).to_string(),
        ])?;
    }
    out.finish()?;
    Ok(summarize_search(&r, n))
}

pub fn compare(o: &Overrides) -> Result<Outcome> {
    let m = search_users(o, 6)?;
    let rho_db = o.rho_db(30.0)?;
    let rho = db_to_linear(rho_db);
    let betas = o.betas(m)?;
    let n = o.samples(100_000)?;
    let mut powers = SchemePowers::default();
    if o.p1.is_some() || o.p2.is_some() {
        let (p1, p2) = o.pair_powers()?;
        powers.pair = vec![p1, p2];
    }
    if let Some(t) = &o.triple_powers {
        powers.triple = t.clone();
    }
    powers.full_noma = o.full_powers.clone();
    let c = compare_schemes(m, rho, &betas, &powers, McSettings::new(n, o.seed()))?;

    let mut rows: Vec<(&str, String, EcEstimate)> = vec![("full_noma", String::new(), c.full_noma)];
    if let Some(g) = &c.grouping {
        rows.push(("best_grouping", g.winner().partition.label(), g.winner().total));
    }
    let pw = c.pairing.winner();
    rows.push(("best_pairing", pw.partition.label(), pw.total));
    rows.push(("oma", pw.partition.label(), c.oma));

    let mut out = CsvOut::create(o.out.as_deref(), COMPARE_HEADER)?;
    for (k, (scheme, label, total)) in rows.iter().enumerate() {
        let margin = c.margins.get(k).map(|(_, d)| *d);
        out.row([
            num(rho_db),
            num(rho),
            scheme.to_string(),
            label.clone(),
            num(total.value),
            num(total.se()),
            opt(margin.map(|d| d.value)),
            opt(margin.map(|d| d.se())),
        ])?;
    }
    out.finish()?;

    let mut outcome = Outcome::Pass;
    for (name, d) in &c.margins {
        let z = d.value / d.se();
        eprintln!(
            "compare-schemes: {name} = {} (se {}, {z:.1} standard errors)",
            d.value,
            d.se()
        );
        if d.value == 0.0 && d.se() == 0.0 {
            continue;
        }
        if d.value < -SEPARATION_SIGMAS * d.se() {
            outcome = Outcome::GateFailure;
        } else if d.value <= SEPARATION_SIGMAS * d.se() && outcome == Outcome::Pass {
            outcome = Outcome::Inconclusive;
        }
    }
    match outcome {
        Outcome::Pass => {
            eprintln!("compare-schemes: ordering holds at {SEPARATION_SIGMAS} standard errors under the chosen powers")
        }
        Outcome::GateFailure => eprintln!("compare-schemes: ordering violated"),
        Outcome::Inconclusive => eprintln!("compare-schemes: ordering not separated; increase --samples"),
    }
    Ok(outcome)
}

pub fn limits(o: &Overrides) -> Result<Outcome> {
    let cfg = two_user_cfg(o, 1.0)?;
    let n = o.samples(1_000_000)?;
    let reports = default_reports(&cfg, McSettings::new(n, o.seed()))?;
    let mut out = CsvOut::create(o.out.as_deref(), LIMITS_HEADER)?;
    let mut failed = 0;
    for r in &reports {
        if !r.pass {
            failed += 1;
            eprintln!(
                "limits: FAIL {} {}: predicted {}, measured {}, tolerance {} ({})",
                r.quantity,
                r.label,
                r.predicted,
                r.measured,
                r.tolerance,
                r.kind.as_str()
            );
        }
        out.row([
            r.quantity.to_string(),
            r.label.clone(),
            rho_db_str(linear_to_db_or_nan(r.rho)),
            if r.rho.is_finite() { num(r.rho) } else { String::new() },
            num(r.predicted),
            num(r.measured),
            num(r.tolerance),
            r.kind.as_str().to_string(),
            r.pass.to_string(),
        ])?;
    }
    out.finish()?;
    eprintln!("limits: {} of {} checks pass", reports.len() - failed, reports.len());
    Ok(if failed == 0 {
        Outcome::Pass
    } else {
        Outcome::GateFailure
    })
}
