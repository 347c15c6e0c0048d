//! Ordered Rayleigh block fading: unit-mean exponential channel power gains,
//! their order statistics, and reproducible sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// One block-fading realization: channel power gains sorted ascending, so
/// index `k` (0-based) is the `(k+1)`-th weakest user.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedGains(Vec<f64>);

impl OrderedGains {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::domain("gain vector is empty"));
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::domain("gains must be finite and non-negative"));
        }
        if gains.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("gains must be sorted ascending"));
        }
        Ok(Self(gains))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Seed plus substream index. Equal specs give identical sample sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A child stream, statistically independent of its siblings. Used to
    /// give each Monte Carlo chunk (and each search job) its own generator.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_mul(0x1_0000_0000).wrapping_add(index),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn check_index(i: usize, m: usize) -> Result<()> {
    if m == 0 || i == 0 || i > m {
        return Err(Error::domain(format!("order index {i} outside 1..={m}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Density of the `i`-th smallest of `m` unit-mean exponentials (1-based `i`):
/// `ψ_i f(x) (1 - F(x))^{m-i} F(x)^{i-1}` with `ψ_i = 1 / B(i, m-i+1)`.
pub fn ordered_pdf(i: usize, m: usize, x: f64) -> Result<f64> {
    check_index(i, m)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x = {x} must be non-negative")));
    }
    let psi = m as f64 * binomial(m - 1, i - 1);
    let survival = (-x).exp();
    let cdf = -(-x).exp_m1();
    Ok(psi * survival * survival.powi((m - i) as i32) * cdf.powi((i - 1) as i32))
}

/// CDF of the `i`-th order statistic: `Σ_{k=i}^{m} C(m,k) F^k (1-F)^{m-k}`.
pub fn ordered_cdf(i: usize, m: usize, x: f64) -> Result<f64> {
    check_index(i, m)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x = {x} must be non-negative")));
    }
    let f = -(-x).exp_m1();
    let s = (-x).exp();
    Ok((i..=m)
        .map(|k| binomial(m, k) * f.powi(k as i32) * s.powi((m - k) as i32))
        .sum())
}

/// Mean of the `i`-th order statistic: `Σ_{k=m-i+1}^{m} 1/k`.
pub fn ordered_mean(i: usize, m: usize) -> Result<f64> {
    check_index(i, m)?;
    Ok((m - i + 1..=m).map(|k| 1.0 / k as f64).sum())
}

/// Joint density of the two ordered gains when `m = 2`: `2 e^{-x1} e^{-x2}`
/// on `x1 <= x2`, zero elsewhere.
pub fn joint_pdf_two(x1: f64, x2: f64) -> Result<f64> {
    if !(x1 >= 0.0) || !(x2 >= 0.0) {
        return Err(Error::domain("joint_pdf_two needs non-negative gains"));
    }
    if x2 < x1 {
        return Ok(0.0);
    }
    Ok(2.0 * (-x1).exp() * (-x2).exp())
}

/// Inverse-CDF unit exponential draw.
#[inline]
fn unit_exponential<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p()
}

/// Fills `buf` with one ordered realization. The sort is stable.
#[inline]
pub(crate) fn fill_ordered<R: Rng>(rng: &mut R, buf: &mut [f64]) {
    for g in buf.iter_mut() {
        *g = unit_exponential(rng);
    }
    buf.sort_by(f64::total_cmp);
}

/// Iterator over `n` ordered gain vectors for `m` users.
pub struct GainStream {
    rng: ChaCha8Rng,
    m: usize,
    remaining: usize,
}

impl Iterator for GainStream {
    type Item = OrderedGains;

    fn next(&mut self) -> Option<OrderedGains> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let mut buf = vec![0.0; self.m];
        fill_ordered(&mut self.rng, &mut buf);
        Some(OrderedGains(buf))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for GainStream {}

/// Stream of `n` independent ordered realizations of `m` unit-mean
/// exponential gains, fully determined by `rng`.
pub fn sample_ordered_gains(m: usize, rng: RngSpec, n: usize) -> Result<GainStream> {
    if m == 0 {
        return Err(Error::domain("need at least one user"));
    }
    if n == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    Ok(GainStream {
        rng: rng.rng(),
        m,
        remaining: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn pdf_at_origin_matches_two_user_weak_density() {
        assert_eq!(ordered_pdf(1, 2, 0.0).unwrap(), 2.0);
        for x in [0.0_f64, 0.3, 2.0] {
            let want = 2.0 * (-2.0 * x).exp();
            assert!((ordered_pdf(1, 2, x).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_normalizes_and_has_order_statistic_means() {
        for (i, m) in [(1, 2), (2, 2), (3, 6)] {
            let mass = oracle::integrate_to_infinity(|x| ordered_pdf(i, m, x).unwrap(), 0.0);
            assert!((mass - 1.0).abs() < 1e-12, "({i},{m}) mass {mass}");
        }
        for (i, want) in [(1, 0.5), (2, 1.5)] {
            let mean = oracle::integrate_to_infinity(|x| x * ordered_pdf(i, 2, x).unwrap(), 0.0);
            assert!((mean - want).abs() < 1e-12);
            assert!((ordered_mean(i, 2).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for (i, m) in [(1, 2), (2, 2), (2, 4), (5, 6)] {
            for k in 0..10 {
                let x = 0.05 + 0.37 * k as f64;
                let h = 1e-5 * x.max(1.0);
                let fd = (ordered_cdf(i, m, x + h).unwrap() - ordered_cdf(i, m, x - h).unwrap()) / (2.0 * h);
                let pdf = ordered_pdf(i, m, x).unwrap();
                assert!(((fd - pdf) / pdf).abs() < 1e-6, "({i},{m}) x={x}: {fd} vs {pdf}");
            }
        }
    }

    #[test]
    fn order_statistics_average_to_parent_density() {
        for m in [2usize, 4, 6] {
            for k in 0..20 {
                let x = 0.25 * k as f64;
                let avg: f64 = (1..=m).map(|i| ordered_pdf(i, m, x).unwrap()).sum::<f64>() / m as f64;
                assert!((avg - (-x).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_density() {
        assert_eq!(joint_pdf_two(0.0, 0.0).unwrap(), 2.0);
        assert_eq!(joint_pdf_two(2.0, 1.0).unwrap(), 0.0);
        assert!(joint_pdf_two(-1.0, 1.0).is_err());
        // ∫₀^∞ ∫_{x1}^∞ 2 e^{-x1} e^{-x2} dx2 dx1
        let mass = oracle::integrate_to_infinity(
            |x1| oracle::integrate_to_infinity(|x2| joint_pdf_two(x1, x2).unwrap(), x1),
            0.0,
        );
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn index_errors() {
        assert!(ordered_pdf(0, 2, 1.0).is_err());
        assert!(ordered_pdf(3, 2, 1.0).is_err());
        assert!(ordered_pdf(1, 2, -1.0).is_err());
        assert!(OrderedGains::new(vec![2.0, 1.0]).is_err());
        assert!(OrderedGains::new(vec![]).is_err());
        assert!(sample_ordered_gains(0, RngSpec::new(1, 0), 5).is_err());
        assert!(sample_ordered_gains(2, RngSpec::new(1, 0), 0).is_err());
    }

    #[test]
    fn sampling_is_sorted_and_reproducible() {
        let a: Vec<_> = sample_ordered_gains(6, RngSpec::new(7, 3), 1000).unwrap().collect();
        let b: Vec<_> = sample_ordered_gains(6, RngSpec::new(7, 3), 1000).unwrap().collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| g.as_slice().windows(2).all(|w| w[0] <= w[1])));
        let c: Vec<_> = sample_ordered_gains(6, RngSpec::new(7, 4), 1000).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn weak_user_mean_from_samples() {
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for g in sample_ordered_gains(2, RngSpec::new(11, 0), n).unwrap() {
            let x = g.as_slice()[0];
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let sd = (sum2 / n as f64 - mean * mean).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn strong_user_histogram_matches_density() {
        let n = 1_000_000;
        let width = 0.1;
        let bins = 60;
        let mut counts = vec![0usize; bins];
        for g in sample_ordered_gains(2, RngSpec::new(5, 1), n).unwrap() {
            let k = (g.as_slice()[1] / width) as usize;
            if k < bins {
                counts[k] += 1;
            }
        }
        let mut sup: f64 = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            let lo = k as f64 * width;
            let expected = (ordered_cdf(2, 2, lo + width).unwrap() - ordered_cdf(2, 2, lo).unwrap()) / width;
            let empirical = c as f64 / (n as f64 * width);
            sup = sup.max((empirical - expected).abs());
        }
        assert!(sup <= 0.01, "sup-norm {sup}");
    }
}
