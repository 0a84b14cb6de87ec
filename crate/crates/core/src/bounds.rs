//! Executable concentration bounds with Monte Carlo and exact validators.
//!
//! All logarithms are natural. Each bound is a direct formula; the
//! validators (exact Poisson-binomial tails by dynamic programming, Monte
//! Carlo samplers) are independent computation routes used to check them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix2, SplitMix64};

/// Multiplicative Chernoff upper tail for a sum of independent indicators
/// with mean `mu`: `P(X > (1 + delta) mu) <= exp(-mu delta^2 / (2 + delta))`.
pub fn chernoff_upper(mu: f64, delta: f64) -> Result<f64> {
    check_nonneg("mu", mu)?;
    check_nonneg("delta", delta)?;
    if mu == 0.0 {
        return Err(Error::invalid("mu", "must be positive"));
    }
    Ok((-mu * delta * delta / (2.0 + delta)).exp())
}

/// Lower-tail companion: `P(X < (1 - delta) mu) <= exp(-mu delta^2 / 2)`.
pub fn chernoff_lower(mu: f64, delta: f64) -> Result<f64> {
    check_nonneg("mu", mu)?;
    check_nonneg("delta", delta)?;
    if mu == 0.0 {
        return Err(Error::invalid("mu", "must be positive"));
    }
    Ok((-mu * delta * delta / 2.0).exp())
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {v}")))
    }
}

/// Bernoulli KL divergence `D(a || p) = a ln(a/p) + (1-a) ln((1-a)/(1-p))`
/// for `a, p` strictly inside (0, 1). Callers clamp endpoints themselves.
pub fn kl_bernoulli(a: f64, p: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("p", p)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("must be in open (0,1), got {v}")));
        }
    }
    Ok(kl_bernoulli_unchecked(a, p))
}

/// KL with the endpoint conventions `0 ln 0 = 0`.
fn kl_bernoulli_unchecked(a: f64, p: f64) -> f64 {
    let mut d = 0.0;
    if a > 0.0 {
        d += a * (a / p).ln();
    }
    if a < 1.0 {
        d += (1.0 - a) * ((1.0 - a) / (1.0 - p)).ln();
    }
    d
}

/// KL upper bound on the binomial upper tail:
/// `P(Bin(k, p) > M) <= exp(-k D(M/k || p))` for `M > k p`.
pub fn binomial_tail_kl(k: u64, p: f64, m: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be positive"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must be in open (0,1), got {p}")));
    }
    if (m as f64) <= k as f64 * p {
        return Err(Error::invalid(
            "m",
            format!("need m > k p = {}, got {m}", k as f64 * p),
        ));
    }
    if m > k {
        return Ok(0.0);
    }
    let a = m as f64 / k as f64;
    Ok((-(k as f64) * kl_bernoulli_unchecked(a, p)).exp())
}

/// Lower bound on the tail ratio `P(X >= t1) / P(X >= t2)` of a sum of
/// independent indicators with mean `mu`, for integers
/// `t1 >= ceil(mu)`, `t2 > t1`:
/// `exp(((t2 - ceil mu)^2 - (t1 - floor mu)^2) / (2 t2))`.
pub fn pb_ratio_bound(mu: f64, t1: u64, t2: u64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    if (t1 as f64) < mu.ceil() {
        return Err(Error::invalid(
            "t1",
            format!("need t1 >= ceil(mu) = {}, got {t1}", mu.ceil()),
        ));
    }
    if t2 <= t1 {
        return Err(Error::invalid("t2", format!("need t2 > t1 = {t1}, got {t2}")));
    }
    let up = t2 as f64 - mu.ceil();
    let down = t1 as f64 - mu.floor();
    Ok(((up * up - down * down) / (2.0 * t2 as f64)).exp())
}

/// Asymptotic maximum-degree normalizer for a hard-threshold geometric
/// graph on n uniform points with connection radius r in dimension d:
/// `k_n = ln n / ln(ln n / (n r^d))`, valid in the sparse regime
/// `n r^d < ln n`.
pub fn max_degree_estimate(n: u64, r: f64, d: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("n", "must be at least 3"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let ln_n = (n as f64).ln();
    let nrd = n as f64 * r.powi(d as i32);
    if nrd >= ln_n {
        return Err(Error::invalid(
            "r",
            format!("out of regime: need n r^d < ln n, got {nrd} >= {ln_n}"),
        ));
    }
    Ok(ln_n / (ln_n / nrd).ln())
}

/// Lower bound on the maximum load of m balls thrown into n bins, in the
/// regime `m <= n ln n` (with `gamma = n ln n / m > 1`):
/// `(ln n / ln gamma) (1 + 0.9 ln ln gamma / ln gamma)`.
pub fn balls_bins_max_load(m: u64, n: u64) -> Result<f64> {
    if n < 2 || m == 0 {
        return Err(Error::invalid("n", "need n >= 2 and m >= 1"));
    }
    let ln_n = (n as f64).ln();
    let gamma = n as f64 * ln_n / m as f64;
    if gamma <= 1.0 {
        return Err(Error::invalid(
            "m",
            format!("out of regime: gamma = n ln n / m = {gamma} must exceed 1"),
        ));
    }
    let lg = gamma.ln();
    if lg <= 0.0 {
        return Err(Error::invalid("m", "gamma too close to 1 (ln gamma = 0)"));
    }
    Ok(ln_n / lg * (1.0 + 0.9 * lg.ln() / lg))
}

/// Lower bound on the first selection threshold as a function of the cap
/// size: `(ln k / ln ln k)(1 + (ln ln ln k) / (4 ln ln k))`, defined for
/// `k >= 16` so all iterated logarithms are positive.
pub fn c0_lower_bound(k: u64) -> Result<f64> {
    if k < 16 {
        return Err(Error::invalid("k", format!("need k >= 16, got {k}")));
    }
    let l1 = (k as f64).ln();
    let l2 = l1.ln();
    let l3 = l2.ln();
    Ok(l1 / l2 * (1.0 + 0.25 * l3 / l2))
}

/// Exact probability mass function of a Poisson-binomial variable (sum of
/// independent indicators with the given success probabilities), by the
/// standard O(k^2) convolution.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("probs", format!("probability {p} outside [0,1]")));
        }
    }
    let mut pmf = vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let stay = pmf[j] * (1.0 - p);
            let up = if j > 0 { pmf[j - 1] * p } else { 0.0 };
            pmf[j] = stay + up;
        }
    }
    Ok(pmf)
}

/// Exact upper tail `P(X >= t)` from the DP pmf.
pub fn poisson_binomial_tail(probs: &[f64], t: u64) -> Result<f64> {
    let pmf = poisson_binomial_pmf(probs)?;
    Ok(pmf.iter().skip(t as usize).sum())
}

/// What to sample in a Monte Carlo tail check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SamplerSpec {
    Binomial { n: u32, p: f64 },
    PoissonBinomial { probs: Vec<f64> },
}

impl SamplerSpec {
    fn sample(&self, rng: &mut SplitMix64) -> u64 {
        match self {
            SamplerSpec::Binomial { n, p } => {
                let mut c = 0;
                for _ in 0..*n {
                    c += (rng.next_f64() < *p) as u64;
                }
                c
            }
            SamplerSpec::PoissonBinomial { probs } => {
                let mut c = 0;
                for &p in probs {
                    c += (rng.next_f64() < p) as u64;
                }
                c
            }
        }
    }
}

/// Outcome of checking an analytic tail bound against sampling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub empirical_value: f64,
    pub std_error: f64,
    pub trials: u64,
    /// `empirical <= bound + 3 standard errors`.
    pub pass: bool,
}

/// Estimate `P(X > threshold)` by sampling and compare against a claimed
/// upper bound. Needs at least 10^3 trials for the normal-error verdict
/// to mean anything.
pub fn empirical_tail_check(
    sampler: &SamplerSpec,
    threshold: u64,
    bound: f64,
    trials: u64,
    seed: u64,
) -> Result<BoundReport> {
    if trials < 1_000 {
        return Err(Error::invalid("trials", format!("need at least 1000, got {trials}")));
    }
    let chunk = 8192u64;
    let chunks = trials.div_ceil(chunk);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = SplitMix64::new(mix2(seed, c));
            let lo = c * chunk;
            let hi = (lo + chunk).min(trials);
            let mut h = 0u64;
            for _ in lo..hi {
                if sampler.sample(&mut rng) > threshold {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let empirical = hits as f64 / trials as f64;
    let std_error = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    Ok(BoundReport {
        bound_value: bound,
        empirical_value: empirical,
        std_error,
        trials,
        pass: empirical <= bound + 3.0 * std_error,
    })
}
