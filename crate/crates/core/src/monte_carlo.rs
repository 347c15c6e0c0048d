//! Seeded Monte Carlo over ordered gain realizations.
//!
//! A run evaluates a set of [`Term`]s on common samples. Each term maps one
//! ordered gain vector to a "rate" and is summarised either as an EC
//! (`(1/β) log2 E[2^{βR}]`) or as a plain mean. The joint covariance of all
//! terms is kept so that sums and differences of ECs computed on the same
//! samples get correct delta-method standard errors.
//!
//! Samples are generated in fixed-size chunks, chunk `c` drawing from
//! `rng.substream(c)`. Chunk statistics are merged in chunk order, so results
//! are bit-identical for any number of worker threads.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channel_model::{fill_ordered, RngSpec};
use crate::effective_capacity::{EcEstimate, EcMethod};
use crate::{Error, Result};

/// Samples per chunk.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// `(1/β) log2 E[2^{β R}]`, `β < 0`.
    Ec { beta: f64 },
    /// `E[R]`.
    Mean,
}

type RateFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + Send + 'a>;

pub struct Term<'a> {
    pub stat: Statistic,
    rate: RateFn<'a>,
}

impl<'a> Term<'a> {
    pub fn ec(beta: f64, rate: impl Fn(&[f64]) -> f64 + Sync + Send + 'a) -> Self {
        Self {
            stat: Statistic::Ec { beta },
            rate: Box::new(rate),
        }
    }

    pub fn mean(rate: impl Fn(&[f64]) -> f64 + Sync + Send + 'a) -> Self {
        Self {
            stat: Statistic::Mean,
            rate: Box::new(rate),
        }
    }

    #[inline]
    fn sample(&self, gains: &[f64]) -> f64 {
        let r = (self.rate)(gains);
        match self.stat {
            Statistic::Ec { beta } => (beta * r * LN_2).exp_m1(),
            Statistic::Mean => r,
        }
    }
}

impl std::fmt::Debug for Term<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Term").field("stat", &self.stat).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub rng: RngSpec,
}

impl McSettings {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            rng: RngSpec::new(seed, 0),
        }
    }
}

/// Running means and co-moments (Welford / Chan).
#[derive(Debug, Clone)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    // Row-major `t x t` matrix of summed centred cross products.
    comoment: Vec<f64>,
}

impl Moments {
    fn new(t: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; t],
            comoment: vec![0.0; t * t],
        }
    }

    fn push(&mut self, y: &[f64], delta: &mut [f64]) {
        let t = self.mean.len();
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for k in 0..t {
            delta[k] = y[k] - self.mean[k];
            self.mean[k] += delta[k] * inv;
        }
        for i in 0..t {
            let row = &mut self.comoment[i * t..(i + 1) * t];
            let di = delta[i];
            for j in 0..t {
                row[j] += di * (y[j] - self.mean[j]);
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let t = self.mean.len();
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta: Vec<f64> = (0..t).map(|k| other.mean[k] - self.mean[k]).collect();
        for i in 0..t {
            for j in 0..t {
                self.comoment[i * t + j] += other.comoment[i * t + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for k in 0..t {
            self.mean[k] += delta[k] * nb / n;
        }
        self.n += other.n;
    }
}

/// Joint summary of a set of terms over common samples.
#[derive(Debug, Clone)]
pub struct TermEstimates {
    stats: Vec<Statistic>,
    moments: Moments,
}

impl TermEstimates {
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.moments.n as usize
    }

    fn transform(&self, t: usize) -> (f64, f64) {
        let m = self.moments.mean[t];
        match self.stats[t] {
            Statistic::Ec { beta } => (m.ln_1p() / (beta * LN_2), 1.0 / ((1.0 + m) * beta * LN_2)),
            Statistic::Mean => (m, 1.0),
        }
    }

    pub fn value(&self, t: usize) -> f64 {
        self.transform(t).0
    }

    pub fn estimate(&self, t: usize) -> EcEstimate {
        self.combination(&[(t, 1.0)], 0.0)
    }

    /// `constant + Σ w_t · value_t` with its delta-method standard error,
    /// accounting for the covariance between terms.
    pub fn combination(&self, weights: &[(usize, f64)], constant: f64) -> EcEstimate {
        let t = self.stats.len();
        // Merge repeated indices first so that cancelling terms cancel exactly.
        let mut weight = vec![0.0; t];
        for &(k, w) in weights {
            weight[k] += w;
        }
        let mut value = constant;
        let mut coef = vec![0.0; t];
        for k in 0..t {
            if weight[k] != 0.0 {
                let (v, g) = self.transform(k);
                value += weight[k] * v;
                coef[k] = weight[k] * g;
            }
        }
        let n = self.moments.n;
        let std_error = if n < 2 {
            None
        } else {
            let mut var = 0.0;
            for i in 0..t {
                if coef[i] == 0.0 {
                    continue;
                }
                for j in 0..t {
                    var += coef[i] * coef[j] * self.moments.comoment[i * t + j];
                }
            }
            let var = (var / (n - 1) as f64).max(0.0) / n as f64;
            Some(var.sqrt())
        };
        EcEstimate {
            value,
            method: EcMethod::MonteCarlo,
            n_samples: n as usize,
            std_error,
        }
    }
}

/// Runs the terms over `settings.samples` ordered realizations of `m` gains.
pub fn estimate_terms(m: usize, terms: &[Term<'_>], settings: McSettings) -> Result<TermEstimates> {
    if m == 0 {
        return Err(Error::domain("need at least one user"));
    }
    if settings.samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    if terms.is_empty() {
        return Err(Error::domain("no terms to estimate"));
    }
    for term in terms {
        if let Statistic::Ec { beta } = term.stat {
            if !(beta < 0.0) || !beta.is_finite() {
                return Err(Error::domain(format!("QoS exponent beta = {beta} must be negative")));
            }
        }
    }

    let n = settings.samples;
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = settings.rng.substream(c as u64).rng();
            let mut gains = vec![0.0; m];
            let mut y = vec![0.0; terms.len()];
            let mut delta = vec![0.0; terms.len()];
            let mut acc = Moments::new(terms.len());
            for _ in 0..count {
                fill_ordered(&mut rng, &mut gains);
                for (slot, term) in y.iter_mut().zip(terms) {
                    *slot = term.sample(&gains);
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain(format!("non-finite sample for gains {gains:?}")));
                }
                acc.push(&y, &mut delta);
            }
            Ok(acc)
        })
        .collect();

    let mut total = Moments::new(terms.len());
    for part in partials {
        total.merge(&part?);
    }
    Ok(TermEstimates {
        stats: terms.iter().map(|t| t.stat).collect(),
        moments: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rate_ec_equals_rate() {
        for beta in [-0.1, -1.0, -7.0] {
            let est = estimate_terms(2, &[Term::ec(beta, |_| 1.0)], McSettings::new(5000, 1)).unwrap();
            assert!((est.value(0) - 1.0).abs() < 1e-12);
            assert!(est.estimate(0).std_error.unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_sample_has_no_standard_error() {
        let est = estimate_terms(2, &[Term::mean(|g| g[0])], McSettings::new(1, 1)).unwrap();
        assert_eq!(est.estimate(0).std_error, None);
        assert_eq!(est.estimate(0).n_samples, 1);
    }

    #[test]
    fn chunk_merge_matches_single_pass() {
        // Mean and variance of the weak gain over more than one chunk.
        let n = 3 * CHUNK + 17;
        let est = estimate_terms(2, &[Term::mean(|g| g[0]), Term::mean(|g| g[1])], McSettings::new(n, 9)).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in 0..n.div_ceil(CHUNK) {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = RngSpec::new(9, 0).substream(c as u64).rng();
            let mut g = [0.0; 2];
            for _ in 0..count {
                fill_ordered(&mut rng, &mut g);
                xs.push(g[0]);
                ys.push(g[1]);
            }
        }
        let nf = n as f64;
        let mx = xs.iter().sum::<f64>() / nf;
        let my = ys.iter().sum::<f64>() / nf;
        assert!((est.value(0) - mx).abs() < 1e-12);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (nf - 1.0);
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (nf - 1.0);
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / (nf - 1.0);
        let diff = est.combination(&[(0, 1.0), (1, -1.0)], 0.0);
        let want = ((vx + vy - 2.0 * cov) / nf).sqrt();
        assert!((diff.std_error.unwrap() - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn identical_for_any_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let est = estimate_terms(
                    3,
                    &[Term::ec(-1.0, |g| (1.0 + g[0]).log2()), Term::mean(|g| g[2])],
                    McSettings::new(50_000, 42),
                )
                .unwrap();
                (est.estimate(0), est.estimate(1))
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(estimate_terms(2, &[Term::ec(0.0, |_| 1.0)], McSettings::new(10, 1)).is_err());
        assert!(estimate_terms(2, &[Term::ec(-1.0, |_| 1.0)], McSettings::new(0, 1)).is_err());
        assert!(estimate_terms(2, &[], McSettings::new(10, 1)).is_err());
        assert!(estimate_terms(2, &[Term::mean(|_| f64::NAN)], McSettings::new(10, 1)).is_err());
    }
}
