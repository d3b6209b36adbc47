//! Finite probability primitives.
//!
//! Entropies are in nats, with `0 · ln 0 = 0`. Total variation uses the
//! sup-over-sets convention, which equals half the L1 distance.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::LN_2;

/// Arbitrary-precision fraction kept in lowest terms with a positive denominator.
pub type ExactRational = BigRational;

/// Tolerance on `Σ p = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// Finite distribution over outcome ids `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} = {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(Self {
            probs,
            labels: None,
        })
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Push the rounding residue onto the largest entry so the sum is 1.
        let residue = 1.0 - probs.iter().sum::<f64>();
        if let Some(max) = probs
            .iter_mut()
            .max_by(|a, b| a.partial_cmp(b).unwrap())
        {
            *max += residue;
        }
        Self::new(probs)
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1);
        Self {
            probs: vec![1.0 / k as f64; k],
            labels: None,
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        assert!(at < k);
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Self {
            probs,
            labels: None,
        }
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_on(k: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty());
        let mut probs = vec![0.0; k];
        for &s in support {
            probs[s] = 1.0 / support.len() as f64;
        }
        Self {
            probs,
            labels: None,
        }
    }

    /// Flat Dirichlet draw: normalised unit exponentials.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        Self::from_weights(&w).expect("exponential weights are positive")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.probs.len() {
            return Err(Error::DimensionMismatch(labels.len(), self.probs.len()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// Inverse-CDF draw from one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probs, rng.random::<f64>())
    }
}

/// Index `j` with `cdf(j-1) <= u < cdf(j)`; rounding past the end lands on
/// the last positive entry.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats.
pub fn entropy(d: &DiscreteDist) -> f64 {
    -d.probs.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// `H_b(x) = −x ln x − (1−x) ln(1−x)`, extended by continuity to `{0, 1}`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(-plogp(x) - plogp(1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Root in `[0, 1/2]`.
    Low,
    /// Root in `[1/2, 1]`.
    High,
}

const BISECTION_CAP: usize = 200;

/// Inverts `H_b` on one monotone branch by bisection.
///
/// Bisection runs until the bracket collapses to adjacent doubles (or 200
/// halvings), so the argument is resolved well below `1e-12`.
pub fn inv_binary_entropy(h: f64, branch: Branch) -> Result<f64> {
    // Entropies computed by summation can overshoot ln 2 by an ulp or two.
    if !(0.0..=LN_2 + 1e-15).contains(&h) {
        return Err(Error::Domain {
            name: "h",
            value: h,
            domain: "[0, ln 2]",
        });
    }
    let h = h.min(LN_2);
    if h == 0.0 {
        return Ok(match branch {
            Branch::Low => 0.0,
            Branch::High => 1.0,
        });
    }
    if h == LN_2 {
        return Ok(0.5);
    }
    // On [0, 1/2] H_b increases; on [1/2, 1] it decreases.
    let (mut lo, mut hi) = match branch {
        Branch::Low => (0.0, 0.5),
        Branch::High => (0.5, 1.0),
    };
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = -plogp(mid) - plogp(1.0 - mid);
        let go_right = match branch {
            Branch::Low => v < h,
            Branch::High => v > h,
        };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn tv_distance(a: &DiscreteDist, b: &DiscreteDist) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(0.5
        * a.probs
            .iter()
            .zip(&b.probs)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>())
}

/// Half-L1 distance between raw probability vectors.
pub fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `C(n, k)` as an exact integer; zero outside `0 <= k <= n`.
pub fn binom_exact(n: u64, k: i64) -> BigInt {
    if k < 0 || k as u64 > n {
        return BigInt::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Ratio `C(a, k) / C(b, k)` as an exact rational.
pub fn binom_ratio(a: u64, b: u64, k: i64) -> ExactRational {
    BigRational::new(binom_exact(a, k), binom_exact(b, k))
}

/// Sum of `(p - alpha)₊` over the entries.
pub fn excess_mass(d: &DiscreteDist, alpha: f64) -> f64 {
    d.probs.iter().map(|&p| (p - alpha).max(0.0)).sum()
}
