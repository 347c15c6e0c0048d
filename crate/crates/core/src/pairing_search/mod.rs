//! Exhaustive user pairing and grouping search.
//!
//! Every candidate partition is scored on the same Monte Carlo samples of the
//! global order statistics, so differences between partitions carry far less
//! noise than the totals themselves. Rankings report the leader's margin over
//! the runner-up with its standard error and flag results that cannot be
//! separated at 3σ.

mod partition;

pub use partition::Partition;

use crate::effective_capacity::{
    register_full_noma, register_partition_noma, register_partition_oma, validate_beta, validate_rho, EcEstimate,
    EcMethod, NetworkConfig, TermRegistry,
};
use crate::monte_carlo::{McSettings, TermEstimates};
use crate::{Error, Result};

/// Per-group powers for pairs.
pub const DEFAULT_PAIR_POWERS: [f64; 2] = [0.2, 0.8];

/// Per-group powers for triples.
pub const DEFAULT_TRIPLE_POWERS: [f64; 3] = [0.1, 0.3, 0.6];

/// Largest `M` enumerated exhaustively.
pub const MAX_USERS: usize = 12;

/// Separation (in standard errors) required to call a ranking.
pub const SEPARATION_SIGMAS: f64 = 3.0;

/// All perfect matchings of `1..=m` with [`DEFAULT_PAIR_POWERS`] in every pair.
pub fn enumerate_pairings(m: usize) -> Result<Vec<Partition>> {
    enumerate_groupings(m, 2, &DEFAULT_PAIR_POWERS)
}

/// All partitions of `1..=m` into groups of `group_size`, each group using
/// `powers`. Lexicographic in the sorted group lists.
pub fn enumerate_groupings(m: usize, group_size: usize, powers: &[f64]) -> Result<Vec<Partition>> {
    if !(group_size == 2 || group_size == 3) {
        return Err(Error::domain(format!("group size {group_size} not supported (2 or 3)")));
    }
    if m == 0 || !m.is_multiple_of(group_size) {
        return Err(Error::domain(format!(
            "M = {m} is not a positive multiple of {group_size}"
        )));
    }
    if m > MAX_USERS {
        return Err(Error::domain(format!(
            "M = {m} exceeds the exhaustive limit {MAX_USERS}"
        )));
    }
    if powers.len() != group_size {
        return Err(Error::domain(format!(
            "{} powers for groups of {group_size}",
            powers.len()
        )));
    }
    let mut out = Vec::new();
    let mut used = vec![false; m + 1];
    let mut current = Vec::new();
    enumerate_rec(m, group_size, &mut used, &mut current, &mut out);
    out.into_iter()
        .map(|groups| Partition::with_uniform_powers(groups, powers))
        .collect()
}

fn enumerate_rec(
    m: usize,
    size: usize,
    used: &mut [bool],
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    let Some(first) = (1..=m).find(|&u| !used[u]) else {
        out.push(current.clone());
        return;
    };
    used[first] = true;
    let mut group = vec![first];
    choose_partners(m, size, first + 1, used, &mut group, current, out);
    used[first] = false;
}

fn choose_partners(
    m: usize,
    size: usize,
    from: usize,
    used: &mut [bool],
    group: &mut Vec<usize>,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if group.len() == size {
        current.push(group.clone());
        enumerate_rec(m, size, used, current, out);
        current.pop();
        return;
    }
    for u in from..=m {
        if used[u] {
            continue;
        }
        used[u] = true;
        group.push(u);
        choose_partners(m, size, u + 1, used, group, current, out);
        group.pop();
        used[u] = false;
    }
}

/// One scored partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPartition {
    pub partition: Partition,
    /// `E_c^tot`: NOMA inside groups, TDMA across groups.
    pub total: EcEstimate,
    /// `Ẽ_c^tot` with every user on its own slot at its in-group power.
    pub oma_total: EcEstimate,
    /// `total - oma_total` on common samples.
    pub gain: EcEstimate,
}

/// Leader versus runner-up.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    /// Leader minus runner-up on common samples.
    pub margin: EcEstimate,
    /// Ranks (0-based) of every partition within 3σ of the leader.
    pub inseparable: Vec<usize>,
    /// Sample count at which the current margin would reach 3σ; `None` when
    /// the margin is zero.
    pub required_samples: Option<usize>,
}

impl Separation {
    pub fn sigmas(&self) -> f64 {
        self.margin.value / self.margin.se()
    }

    pub fn conclusive(&self) -> bool {
        self.inseparable.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Descending by total; equal values keep enumeration order.
    pub ranked: Vec<RankedPartition>,
    /// OMA total of the leading partition.
    pub oma_total: EcEstimate,
    pub full_noma_total: Option<EcEstimate>,
    /// `None` for a single candidate.
    pub separation: Option<Separation>,
}

impl SearchResult {
    pub fn winner(&self) -> &RankedPartition {
        &self.ranked[0]
    }

    pub fn inconclusive(&self) -> bool {
        self.separation.as_ref().is_some_and(|s| !s.conclusive())
    }
}

struct Scored {
    noma: Vec<usize>,
    oma: Vec<usize>,
}

fn register(reg: &mut TermRegistry, partitions: &[Partition], rho: f64, betas: &[f64]) -> Vec<Scored> {
    partitions
        .iter()
        .map(|p| Scored {
            noma: register_partition_noma(reg, p, rho, betas),
            oma: register_partition_oma(reg, p, rho, betas),
        })
        .collect()
}

fn weights(idx: &[usize], sign: f64) -> Vec<(usize, f64)> {
    idx.iter().map(|&k| (k, sign)).collect()
}

fn check_inputs(partitions: &[Partition], rho: f64, betas: &[f64]) -> Result<usize> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::domain("no partitions to search"))?;
    let m = first.m();
    if partitions.iter().any(|p| p.m() != m) {
        return Err(Error::domain("partitions cover different user counts"));
    }
    if betas.len() != m {
        return Err(Error::domain(format!("{} QoS exponents for M = {m}", betas.len())));
    }
    validate_rho(rho)?;
    for &b in betas {
        validate_beta(b)?;
    }
    Ok(m)
}

fn rank(
    est: Option<&TermEstimates>,
    partitions: &[Partition],
    scored: &[Scored],
    full_noma: Option<&[usize]>,
) -> SearchResult {
    let zero = EcEstimate::exact(0.0, EcMethod::MonteCarlo);
    let mut ranked: Vec<(RankedPartition, &Scored)> = partitions
        .iter()
        .zip(scored)
        .map(|(p, s)| {
            let entry = match est {
                Some(est) => {
                    let mut gain = weights(&s.noma, 1.0);
                    gain.extend(weights(&s.oma, -1.0));
                    RankedPartition {
                        partition: p.clone(),
                        total: est.combination(&weights(&s.noma, 1.0), 0.0),
                        oma_total: est.combination(&weights(&s.oma, 1.0), 0.0),
                        gain: est.combination(&gain, 0.0),
                    }
                }
                None => RankedPartition {
                    partition: p.clone(),
                    total: zero,
                    oma_total: zero,
                    gain: zero,
                },
            };
            (entry, s)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total.value.total_cmp(&a.0.total.value));

    let separation = (ranked.len() > 1).then(|| {
        let leader = ranked[0].1;
        let diff = |other: &Scored| match est {
            Some(est) => {
                let mut w = weights(&leader.noma, 1.0);
                w.extend(weights(&other.noma, -1.0));
                est.combination(&w, 0.0)
            }
            None => zero,
        };
        let inseparable: Vec<usize> = (1..ranked.len())
            .filter(|&r| {
                let d = diff(ranked[r].1);
                !(d.value > SEPARATION_SIGMAS * d.se()) || d.value == 0.0
            })
            .collect();
        let margin = diff(ranked[1].1);
        let required_samples = (margin.value > 0.0 && margin.n_samples > 0).then(|| {
            let ratio = SEPARATION_SIGMAS * margin.se() / margin.value;
            (margin.n_samples as f64 * ratio * ratio).ceil() as usize
        });
        Separation {
            margin,
            inseparable,
            required_samples,
        }
    });

    let full_noma_total = full_noma.map(|idx| match est {
        Some(est) => est.combination(&weights(idx, 1.0), 0.0),
        None => zero,
    });
    let oma_total = ranked[0].0.oma_total;
    SearchResult {
        ranked: ranked.into_iter().map(|(r, _)| r).collect(),
        oma_total,
        full_noma_total,
        separation,
    }
}

/// Scores every partition on common samples and ranks them by total EC.
pub fn best_partition(partitions: &[Partition], rho: f64, betas: &[f64], settings: McSettings) -> Result<SearchResult> {
    let m = check_inputs(partitions, rho, betas)?;
    let mut reg = TermRegistry::new();
    let scored = register(&mut reg, partitions, rho, betas);
    let est = if rho == 0.0 {
        None
    } else {
        Some(reg.estimate(m, settings)?)
    };
    Ok(rank(est.as_ref(), partitions, &scored, None))
}

/// Power ratio between successive members in [`SchemePowers::default`]; the
/// default pair split `(0.2, 0.8)` has this ratio.
pub const DEFAULT_POWER_RATIO: f64 = 4.0;

/// Power coefficients of `n` users in which each user gets `ratio` times the
/// power of the next weaker one, normalized to sum to one.
pub fn ratio_powers(n: usize, ratio: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / sum).collect()
}

/// Power allocations used by [`compare_schemes`].
#[derive(Debug, Clone, PartialEq)]
pub struct SchemePowers {
    pub pair: Vec<f64>,
    pub triple: Vec<f64>,
    /// Full-NOMA powers for all `M` users, weakest first. `None` applies
    /// [`DEFAULT_POWER_RATIO`] across the `M` users.
    pub full_noma: Option<Vec<f64>>,
}

impl Default for SchemePowers {
    /// Every scheme uses the ratio of the default pair split, so pairs get
    /// `(0.2, 0.8)`, triples `(1, 4, 16)/21` and full NOMA `4^k / Σ 4^j`.
    fn default() -> Self {
        Self {
            pair: ratio_powers(2, DEFAULT_POWER_RATIO),
            triple: ratio_powers(3, DEFAULT_POWER_RATIO),
            full_noma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison {
    pub full_noma: EcEstimate,
    /// `None` when 3 does not divide `M`.
    pub grouping: Option<SearchResult>,
    pub pairing: SearchResult,
    /// OMA total of the best pairing.
    pub oma: EcEstimate,
    /// Adjacent differences on common samples, in report order:
    /// full NOMA − best grouping (or best pairing when no grouping),
    /// best grouping − best pairing, best pairing − OMA.
    pub margins: Vec<(String, EcEstimate)>,
}

impl SchemeComparison {
    /// Whether every adjacent margin is non-negative at 3σ.
    pub fn ordered(&self) -> bool {
        self.margins
            .iter()
            .all(|(_, d)| d.value > SEPARATION_SIGMAS * d.se() || (d.value == 0.0 && d.se() == 0.0))
    }
}

/// Full NOMA, best grouping into triples, best pairing and OMA for `m`
/// users, all on common samples.
pub fn compare_schemes(
    m: usize,
    rho: f64,
    betas: &[f64],
    powers: &SchemePowers,
    settings: McSettings,
) -> Result<SchemeComparison> {
    let pairings = enumerate_groupings(m, 2, &powers.pair)?;
    let groupings = if m.is_multiple_of(3) {
        Some(enumerate_groupings(m, 3, &powers.triple)?)
    } else {
        None
    };
    check_inputs(&pairings, rho, betas)?;
    let full_powers = powers
        .full_noma
        .clone()
        .unwrap_or_else(|| ratio_powers(m, DEFAULT_POWER_RATIO));
    let full_cfg = NetworkConfig::new(full_powers, rho, betas.to_vec())?;

    let mut reg = TermRegistry::new();
    let full_idx = register_full_noma(&mut reg, &full_cfg);
    let pair_scored = register(&mut reg, &pairings, rho, betas);
    let group_scored = groupings.as_ref().map(|g| register(&mut reg, g, rho, betas));
    let est = if rho == 0.0 {
        None
    } else {
        Some(reg.estimate(m, settings)?)
    };
    let est = est.as_ref();

    let pairing = rank(est, &pairings, &pair_scored, Some(&full_idx));
    let grouping = groupings
        .as_ref()
        .zip(group_scored.as_ref())
        .map(|(g, s)| rank(est, g, s, Some(&full_idx)));

    let zero = EcEstimate::exact(0.0, EcMethod::MonteCarlo);
    let best_idx = |parts: &[Partition], scored: &[Scored], winner: &Partition| -> Vec<usize> {
        let k = parts
            .iter()
            .position(|p| p == winner)
            .expect("winner comes from the list");
        scored[k].noma.clone()
    };
    let best_pair_idx = best_idx(&pairings, &pair_scored, &pairing.winner().partition);
    let best_pair_oma = {
        let k = pairings
            .iter()
            .position(|p| *p == pairing.winner().partition)
            .expect("winner");
        pair_scored[k].oma.clone()
    };
    let best_group_idx = grouping.as_ref().map(|g| {
        best_idx(
            groupings.as_deref().expect("grouping implies candidates"),
            group_scored.as_deref().expect("grouping implies scores"),
            &g.winner().partition,
        )
    });
    let diff = |a: &[usize], b: &[usize]| match est {
        Some(est) => {
            let mut w = weights(a, 1.0);
            w.extend(weights(b, -1.0));
            est.combination(&w, 0.0)
        }
        None => zero,
    };

    let mut margins = Vec::new();
    match &best_group_idx {
        Some(g) => {
            margins.push(("full_noma-best_grouping".to_string(), diff(&full_idx, g)));
            margins.push(("best_grouping-best_pairing".to_string(), diff(g, &best_pair_idx)));
        }
        None => margins.push(("full_noma-best_pairing".to_string(), diff(&full_idx, &best_pair_idx))),
    }
    margins.push(("best_pairing-oma".to_string(), diff(&best_pair_idx, &best_pair_oma)));

    Ok(SchemeComparison {
        full_noma: pairing.full_noma_total.expect("full NOMA registered"),
        oma: pairing.oma_total,
        grouping,
        pairing,
        margins,
    })
}
