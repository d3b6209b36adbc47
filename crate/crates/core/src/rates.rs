//! Type II error of the UMP watermark on i.i.d. products `ρ0^⊗n`, the
//! two-sided token-count bounds, and the two-point hard instance.
//!
//! The UMP error of `ρ = ρ0^⊗n` is `Σ_x (ρ(x) − α)₊`. Sequences sharing a
//! count vector share a probability, so the exact sum runs over count-vector
//! classes. The Monte-Carlo path uses `E_{X~ρ}[(1 − α/ρ(X))₊]`.

use crate::error::{check_alpha, Error, Result};
use crate::prob::{binom_exact, inv_binary_entropy, Branch, DiscreteDist};
use crate::rng::{blocks, substream};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use statrs::function::factorial::{ln_binomial, ln_factorial};

/// Largest number of count-vector classes the exact path enumerates.
pub const MAX_CLASSES: u128 = 2_000_000;

/// Largest `n_max` accepted by [`n_required_empirical`].
pub const MAX_SCAN: u64 = 100_000;

const MC_DOMAIN: u16 = 0x0a01;

/// Token-count bounds for detecting with Type I ≤ α and Type II ≤ β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub beta: f64,
    /// Zero for exact values.
    pub stderr: f64,
}

/// β as a function of `n`, with `n` strictly increasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateCurve {
    pub entries: Vec<RatePoint>,
}

/// Neumaier-compensated running sum; deterministic for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `count · (p − α)₊` from log-count and log-probability, arranged so the
/// large multinomial never appears on its own.
fn class_term(ln_count: f64, ln_p: f64, alpha: f64) -> f64 {
    let excess = 1.0 - alpha * (-ln_p).exp();
    if excess <= 0.0 {
        0.0
    } else {
        (ln_count + ln_p).exp() * excess
    }
}

fn check_inputs(rho0: &DiscreteDist, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    // Zero-probability outcomes never appear, so they are dropped up front.
    let probs: Vec<f64> = rho0.probs().iter().copied().filter(|&p| p > 0.0).collect();
    Ok(probs)
}

/// Exact `Σ_x (ρ0^⊗n(x) − α)₊`. Two-outcome laws use a binomial sum, larger
/// ones [`type2_product_classes`].
pub fn type2_product_exact(rho0: &DiscreteDist, n: u64, alpha: f64) -> Result<f64> {
    let probs = check_inputs(rho0, alpha)?;
    if probs.len() <= 2 {
        return Ok(binary_type2(&probs, n, alpha));
    }
    classes_type2(&probs, n, alpha)
}

/// Exact `Σ_x (ρ0^⊗n(x) − α)₊` by enumerating count vectors, for any alphabet.
pub fn type2_product_classes(rho0: &DiscreteDist, n: u64, alpha: f64) -> Result<f64> {
    let probs = check_inputs(rho0, alpha)?;
    classes_type2(&probs, n, alpha)
}

fn classes_type2(probs: &[f64], n: u64, alpha: f64) -> Result<f64> {
    let k = probs.len();
    let classes = binom_exact(n + k as u64 - 1, k as i64 - 1)
        .to_u128()
        .unwrap_or(u128::MAX);
    if classes > MAX_CLASSES {
        return Err(Error::TooLarge {
            what: "count-vector class count",
            size: classes,
            limit: MAX_CLASSES,
        });
    }
    let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let mut acc = CompensatedSum::default();
    let mut counts = vec![0u64; k];
    count_vectors(&mut counts, 0, n, &mut |c| {
        let ln_prob: f64 = c.iter().zip(&ln_p).map(|(&ci, lp)| ci as f64 * lp).sum();
        let ln_count = ln_fact[n as usize] - c.iter().map(|&ci| ln_fact[ci as usize]).sum::<f64>();
        acc.add(class_term(ln_count, ln_prob, alpha));
    });
    Ok(acc.value())
}

/// Visits every `c` with `c[pos..]` summing to `left`, in lexicographic order.
fn count_vectors(c: &mut [u64], pos: usize, left: u64, f: &mut impl FnMut(&[u64])) {
    if pos + 1 == c.len() {
        c[pos] = left;
        f(c);
        return;
    }
    for v in (0..=left).rev() {
        c[pos] = v;
        count_vectors(c, pos + 1, left - v, f);
    }
}

/// Two-outcome (or point-mass) specialisation. With `j` draws of the less
/// likely outcome the sequence probability is non-increasing in `j`, so the
/// sum stops at the first class at or below α.
fn binary_type2(probs: &[f64], n: u64, alpha: f64) -> f64 {
    let (hi, lo) = match *probs {
        [p] => (p, 0.0),
        [a, b] => (a.max(b), a.min(b)),
        _ => unreachable!("at most two outcomes"),
    };
    let ln_alpha = alpha.ln();
    let (ln_hi, ln_lo) = (hi.ln(), lo.ln());
    let mut acc = CompensatedSum::default();
    for j in 0..=n {
        if lo == 0.0 && j > 0 {
            break;
        }
        let ln_prob = if j == 0 {
            n as f64 * ln_hi
        } else {
            (n - j) as f64 * ln_hi + j as f64 * ln_lo
        };
        if ln_prob <= ln_alpha {
            break;
        }
        acc.add(class_term(ln_binomial(n, j), ln_prob, alpha));
    }
    acc.value()
}

/// Monte-Carlo estimate of the product Type II error with its standard error.
/// Samples are drawn in fixed blocks, one stream per block, and the block
/// statistics are merged in block order.
pub fn type2_product_mc(
    rho0: &DiscreteDist,
    n: u64,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if samples < 100 {
        return Err(Error::Domain {
            name: "samples",
            value: samples as f64,
            domain: "[100, ∞)",
        });
    }
    let ln_p: Vec<f64> = rho0.probs().iter().map(|p| p.ln()).collect();
    let parts: Vec<Moments> = blocks(samples)
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = substream(seed, MC_DOMAIN, b);
            let mut m = Moments::default();
            for _ in 0..len {
                let ln_prob: f64 = (0..n).map(|_| ln_p[rho0.sample(&mut rng)]).sum();
                m.push((1.0 - alpha * (-ln_prob).exp()).max(0.0));
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok((total.mean, total.stderr()))
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    fn stderr(&self) -> f64 {
        if self.count < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

/// Two-point distribution `(1 − q0, q0)` with entropy `h` and `q0 ≥ 1/2`.
pub fn hard_instance(h: f64) -> Result<DiscreteDist> {
    if !(h > 0.0 && h <= std::f64::consts::LN_2) {
        return Err(Error::Domain {
            name: "h",
            value: h,
            domain: "(0, ln 2]",
        });
    }
    let q0 = inv_binary_entropy(h, Branch::High)?;
    DiscreteDist::new(vec![1.0 - q0, q0])
}

fn check_rate_args(h: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(h > 0.0 && h < 0.25) {
        return Err(Error::Domain {
            name: "h",
            value: h,
            domain: "(0, 1/4)",
        });
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 0.1) {
            return Err(Error::Domain {
                name,
                value: v,
                domain: "(0, 0.1)",
            });
        }
    }
    Ok(())
}

/// Lower bound on the number of tokens, in nats.
pub fn tokens_lower_bound(h: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_rate_args(h, alpha, beta)?;
    let err = (1.0 / (2.0 * alpha)).ln().min((1.0 / (2.0 * beta)).ln());
    let first = (std::f64::consts::LN_2 / h).ln() / (2.0 * h) * err;
    let second = (1.0 / (2.0 * alpha)).ln() / h;
    Ok(first.max(second))
}

/// Upper bound on the number of tokens for an alphabet of size `k`.
pub fn tokens_upper_bound(h: f64, alpha: f64, beta: f64, k: usize) -> Result<f64> {
    check_rate_args(h, alpha, beta)?;
    if k < 2 {
        return Err(Error::Domain {
            name: "k",
            value: k as f64,
            domain: "[2, ∞)",
        });
    }
    let k = k as f64;
    let err = (1.0 / alpha).ln().min((1.0 / beta).ln());
    let first = 200.0 * (2.0 * (9.0 * k / h).ln() / h) * err;
    let second = (18.0 + 4.0 * (9.0 * k).ln()) * (1.0 / alpha).ln() / h;
    Ok(first.max(second))
}

pub fn rate_bounds(h: f64, alpha: f64, beta: f64, k: usize) -> Result<RateBounds> {
    Ok(RateBounds {
        lower: tokens_lower_bound(h, alpha, beta)?,
        upper: tokens_upper_bound(h, alpha, beta, k)?,
    })
}

/// Scans `n = 1..=n_max` and returns the first `n` with `β(n) ≤ β` together
/// with the full exact curve. β(n) need not be monotone, hence first crossing.
pub fn n_required_empirical(
    rho0: &DiscreteDist,
    alpha: f64,
    beta: f64,
    n_max: u64,
) -> Result<(Option<u64>, RateCurve)> {
    if n_max > MAX_SCAN {
        return Err(Error::TooLarge {
            what: "scan length n_max",
            size: n_max as u128,
            limit: MAX_SCAN as u128,
        });
    }
    let mut curve = RateCurve::default();
    let mut first = None;
    for n in 1..=n_max {
        let b = type2_product_exact(rho0, n, alpha)?;
        if first.is_none() && b <= beta {
            first = Some(n);
        }
        curve.entries.push(RatePoint {
            n,
            beta: b,
            stderr: 0.0,
        });
    }
    Ok((first, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::entropy;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn exact_examples() {
        let fair = DiscreteDist::uniform(2);
        assert_eq!(type2_product_exact(&fair, 3, 0.2).unwrap(), 0.0);
        let skew = DiscreteDist::new(vec![0.9, 0.1]).unwrap();
        close(type2_product_exact(&skew, 2, 0.5).unwrap(), 0.31, 1e-14);
        let point = DiscreteDist::point_mass(3, 1);
        for n in [1, 7, 40] {
            assert_eq!(type2_product_exact(&point, n, 0.3).unwrap(), 0.7);
        }
        assert!(type2_product_exact(&fair, 3, 1.2).is_err());
    }

    #[test]
    fn generic_matches_binary() {
        // A zero-probability third outcome is dropped before dispatch.
        let q = hard_instance(0.1).unwrap();
        let padded = DiscreteDist::new(vec![q.prob(0), q.prob(1), 0.0]).unwrap();
        for n in [1, 5, 20, 60] {
            assert_eq!(
                type2_product_exact(&q, n, 0.01).unwrap(),
                type2_product_exact(&padded, n, 0.01).unwrap()
            );
        }
        let probs = q.probs();
        let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        for n in [1u64, 5, 20, 60] {
            let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
            let mut acc = CompensatedSum::default();
            let mut counts = vec![0u64; 2];
            count_vectors(&mut counts, 0, n, &mut |c| {
                let lp = c[0] as f64 * ln_p[0] + c[1] as f64 * ln_p[1];
                let lc = ln_fact[n as usize] - ln_fact[c[0] as usize] - ln_fact[c[1] as usize];
                acc.add(class_term(lc, lp, 0.01));
            });
            close(acc.value(), binary_type2(probs, n, 0.01), 1e-12);
        }
    }

    #[test]
    fn class_cap() {
        let d = DiscreteDist::uniform(10);
        let err = type2_product_exact(&d, 200, 0.1).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
        assert!(err.to_string().contains("Monte-Carlo"));
    }

    #[test]
    fn mc_examples() {
        let point = DiscreteDist::point_mass(2, 0);
        assert_eq!(type2_product_mc(&point, 5, 0.3, 1000, 3).unwrap(), (0.7, 0.0));
        let fair = DiscreteDist::uniform(2);
        assert_eq!(type2_product_mc(&fair, 3, 0.2, 1000, 3).unwrap(), (0.0, 0.0));
        let skew = DiscreteDist::new(vec![0.9, 0.1]).unwrap();
        let (est, se) = type2_product_mc(&skew, 2, 0.5, 100_000, 11).unwrap();
        assert!((est - 0.31).abs() <= 4.0 * se, "{est} ± {se}");
        assert!(type2_product_mc(&skew, 2, 0.5, 99, 11).is_err());
        assert_eq!(
            type2_product_mc(&skew, 4, 0.2, 5000, 9).unwrap(),
            type2_product_mc(&skew, 4, 0.2, 5000, 9).unwrap()
        );
    }

    #[test]
    fn moments_merge_matches_serial() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut serial = Moments::default();
        xs.iter().for_each(|&x| serial.push(x));
        let merged = xs
            .chunks(97)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .fold(Moments::default(), Moments::merge);
        close(merged.mean, serial.mean, 1e-12);
        close(merged.m2, serial.m2, 1e-8);
    }

    #[test]
    fn hard_instance_examples() {
        let d = hard_instance(std::f64::consts::LN_2).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let d = hard_instance(0.325083).unwrap();
        close(d.prob(1), 0.9, 1e-6);
        let mut prev = 0.5;
        for h in [0.5, 0.2, 0.1, 0.01, 1e-4, 1e-8] {
            let d = hard_instance(h).unwrap();
            close(entropy(&d), h, 1e-9);
            assert!(d.prob(1) > prev);
            prev = d.prob(1);
        }
        assert!(hard_instance(0.0).is_err());
        assert!(hard_instance(0.7).is_err());
    }

    #[test]
    fn bound_examples() {
        close(tokens_lower_bound(0.1, 0.05, 0.05).unwrap(), 10f64.ln() / 0.1, 1e-12);
        let first = (std::f64::consts::LN_2 / 0.1).ln() / 0.2 * 10f64.ln();
        assert!(tokens_lower_bound(0.1, 0.01, 0.05).unwrap() >= first - 1e-12);
        let up = tokens_upper_bound(0.1, 0.05, 0.05, 2).unwrap();
        assert!((up - 62_226.0).abs() < 1.0, "{up}");
        assert!(tokens_lower_bound(0.3, 0.05, 0.05).is_err());
        assert!(tokens_upper_bound(0.1, 0.1, 0.05, 2).is_err());
        assert!(tokens_upper_bound(0.1, 0.05, 0.05, 1).is_err());
        for h in [0.02, 0.06, 0.1, 0.14, 0.18, 0.24] {
            for a in [0.01, 0.05] {
                let b = rate_bounds(h, a, a, 2).unwrap();
                assert!(0.0 < b.lower && b.lower <= b.upper);
                let wide = tokens_upper_bound(h, a, a, 1024).unwrap();
                assert!(wide / b.upper <= (9.0f64 * 1024.0 / h).ln() / (18.0 / h).ln() + 1e-12);
            }
        }
    }

    #[test]
    fn scan_examples() {
        let point = DiscreteDist::point_mass(2, 0);
        let (n, curve) = n_required_empirical(&point, 0.05, 0.05, 30).unwrap();
        assert_eq!(n, None);
        assert!(curve.entries.iter().all(|e| e.beta == 0.95));
        let (n, curve) = n_required_empirical(&DiscreteDist::uniform(2), 0.05, 0.05, 10).unwrap();
        assert!(n.unwrap() <= 5);
        assert_eq!(curve.entries.len(), 10);
        assert!(curve.entries.windows(2).all(|w| w[0].n < w[1].n));
        assert!(n_required_empirical(&point, 0.05, 0.05, MAX_SCAN + 1).is_err());
    }
}
