//! Minimax model-agnostic watermarking.
//!
//! The detector's region `A` is drawn from `η*`, uniform over subsets of size
//! `αn`, independently of the model. For a given `ρ` the best coupling of `X`
//! with `A` is a transportation problem, solved here by max-flow; its miss
//! probability never exceeds `γ(η*) + Σ(ρ(x) − α)₊`.

pub mod flow;

use crate::error::{check_alpha, Error, Result};
use crate::prob::{binom_exact, excess_mass, DiscreteDist, ExactRational};
use crate::scalar::Scalar;
use crate::ump::{Atom, Coupling, Region};
use flow::FlowNetwork;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Largest number of size-`αn` subsets [`build_agnostic_coupling`] enumerates.
pub const MAX_SUBSETS: u128 = 100_000;

/// Largest `n` for the exhaustive checks over all `U ⊆ Ω`.
pub const STRASSEN_MAX_N: usize = 20;

/// Uniform law over subsets of size `m_alpha` of `{0, …, n−1}`, with
/// `α = m_alpha / n` and both `αn` and `1/α` integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtaStar {
    n: u64,
    m_alpha: u64,
}

impl EtaStar {
    pub fn new(n: u64, m_alpha: u64) -> Result<Self> {
        if m_alpha == 0 || m_alpha > n {
            return Err(Error::Integrality(format!(
                "region size {m_alpha} must lie in 1..={n}"
            )));
        }
        if !n.is_multiple_of(m_alpha) {
            return Err(Error::Integrality(format!(
                "1/alpha = {n}/{m_alpha} is not an integer"
            )));
        }
        Ok(Self { n, m_alpha })
    }

    pub fn from_alpha(n: u64, alpha: &ExactRational) -> Result<Self> {
        let m = alpha * BigRational::from_integer(n.into());
        if !m.is_integer() || alpha <= &BigRational::zero() || alpha > &BigRational::one() {
            return Err(Error::Integrality(format!("alpha·n = {alpha}·{n} is not an integer in 1..=n")));
        }
        let m = m.to_integer().to_u64().expect("alpha·n ≤ n");
        Self::new(n, m)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m_alpha(&self) -> u64 {
        self.m_alpha
    }

    pub fn alpha(&self) -> ExactRational {
        BigRational::new(self.m_alpha.into(), self.n.into())
    }

    pub fn inv_alpha(&self) -> u64 {
        self.n / self.m_alpha
    }

    /// Number of regions in the support, `C(n, αn)`.
    pub fn num_subsets(&self) -> BigInt {
        binom_exact(self.n, self.m_alpha as i64)
    }

    /// `P(A ∩ U ≠ ∅)` for `|U| = u`.
    pub fn hit_prob(&self, u: u64) -> ExactRational {
        let miss = BigRational::new(
            binom_exact(self.n - u.min(self.n), self.m_alpha as i64),
            self.num_subsets(),
        );
        BigRational::one() - miss
    }
}

/// `γ(η*) = C(n − 1/α, αn) / C(n, αn)`.
pub fn gamma_star(n: u64, alpha: &ExactRational) -> Result<ExactRational> {
    let es = EtaStar::from_alpha(n, alpha)?;
    let top = n.checked_sub(es.inv_alpha()).map_or(BigInt::zero(), |t| {
        binom_exact(t, es.m_alpha as i64)
    });
    Ok(BigRational::new(top, es.num_subsets()))
}

/// The same quantity as the product `Π_{i<1/α} (n − αn − i)/(n − i)`.
pub fn gamma_telescoping(n: u64, alpha: &ExactRational) -> Result<ExactRational> {
    let es = EtaStar::from_alpha(n, alpha)?;
    let m = es.m_alpha as i64;
    let n = n as i64;
    Ok((0..es.inv_alpha() as i64).fold(BigRational::one(), |acc, i| {
        acc * BigRational::new((n - m - i).into(), (n - i).into())
    }))
}

/// `|γ(η*) − e^{−1}|`, evaluated from the exact rational.
pub fn gamma_limit_check(alpha: &ExactRational, n: u64) -> Result<f64> {
    let g = gamma_star(n, alpha)?.to_f64().unwrap_or(f64::NAN);
    Ok((g - (-1.0f64).exp()).abs())
}

/// Draws a region from `η*`.
pub fn eta_star_sample<R: Rng + ?Sized>(es: &EtaStar, rng: &mut R) -> Region {
    let picked = rand::seq::index::sample(rng, es.n as usize, es.m_alpha as usize);
    Region::new(picked.into_vec())
}

/// All size-`αn` subsets in lexicographic order.
pub fn enumerate_subsets(es: &EtaStar) -> Result<Vec<Region>> {
    let count = es.num_subsets().to_u128().unwrap_or(u128::MAX);
    if count > MAX_SUBSETS {
        return Err(Error::TooLarge {
            what: "subset count C(n, alpha n)",
            size: count,
            limit: MAX_SUBSETS,
        });
    }
    let (n, m) = (es.n as usize, es.m_alpha as usize);
    let mut out = Vec::with_capacity(count as usize);
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(Region::new(idx.clone()));
        let Some(i) = (0..m).rev().find(|&i| idx[i] != i + n - m) else {
            return Ok(out);
        };
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A coupling of `X ~ ρ` with `A ~ η*`, stored as `(outcome, subset index, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgnosticCoupling<T = f64> {
    pub subsets: Vec<Region>,
    pub flows: Vec<(usize, usize, T)>,
}

impl<T: Scalar> AgnosticCoupling<T> {
    pub fn outcome_marginal(&self, n: usize) -> Vec<T> {
        let mut m = vec![T::zero(); n];
        for (x, _, w) in &self.flows {
            m[*x] = m[*x].clone() + w.clone();
        }
        m
    }

    pub fn subset_marginal(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.subsets.len()];
        for (_, a, w) in &self.flows {
            m[*a] = m[*a].clone() + w.clone();
        }
        m
    }

    /// `P(X ∉ A)`.
    pub fn loss(&self) -> T {
        self.flows
            .iter()
            .filter(|(x, a, _)| !self.subsets[*a].contains(*x))
            .fold(T::zero(), |acc, (_, _, w)| acc + w.clone())
    }
}

impl AgnosticCoupling<f64> {
    /// The same law as a region coupling, merging repeated `(x, A)` pairs.
    pub fn to_coupling(&self, k: usize) -> Result<Coupling> {
        let mut merged: Vec<(usize, usize, f64)> = self.flows.clone();
        merged.sort_by_key(|&(x, a, _)| (x, a));
        let mut atoms: Vec<Atom> = Vec::new();
        let mut last = None;
        for (x, a, w) in merged {
            if w <= 0.0 {
                continue;
            }
            if last == Some((x, a)) {
                atoms.last_mut().expect("previous atom").weight += w;
            } else {
                atoms.push(Atom::new(x, self.subsets[a].clone(), w));
                last = Some((x, a));
            }
        }
        Coupling::new(k, atoms)
    }
}

fn build_generic<T: Scalar>(
    rho: &[T],
    es: &EtaStar,
) -> Result<(AgnosticCoupling<T>, T)> {
    if rho.len() as u64 != es.n {
        return Err(Error::DimensionMismatch(rho.len(), es.n as usize));
    }
    let subsets = enumerate_subsets(es)?;
    let (n, s) = (rho.len(), subsets.len());
    let per_subset = T::one() / T::from_float(s as f64);
    let (source, sink) = (n + s, n + s + 1);
    let mut g = FlowNetwork::new(n + s + 2);
    for (x, p) in rho.iter().enumerate() {
        g.add_edge(source, x, p.clone());
    }
    let mut links = Vec::new();
    for (a, region) in subsets.iter().enumerate() {
        for &x in region.members() {
            // Flow through any link is bounded by the source edge, so one
            // unit stands in for infinite capacity.
            links.push((x, a, g.add_edge(x, n + a, T::one())));
        }
        g.add_edge(n + a, sink, per_subset.clone());
    }
    let value = g.max_flow(source, sink);

    let mut flows = Vec::new();
    let mut out_left = rho.to_vec();
    let mut in_left = vec![per_subset; s];
    for (x, a, id) in links {
        let f = g.flow_on(id);
        if f.is_pos() {
            out_left[x] = out_left[x].clone() - f.clone();
            in_left[a] = in_left[a].clone() - f.clone();
            flows.push((x, a, f));
        }
    }
    // The unrouted mass is paired off in north-west-corner order; by
    // maximality every such pair is a miss.
    let (mut x, mut a) = (0, 0);
    while x < n && a < s {
        if !out_left[x].is_pos() {
            x += 1;
            continue;
        }
        if !in_left[a].is_pos() {
            a += 1;
            continue;
        }
        let w = if out_left[x] < in_left[a] {
            out_left[x].clone()
        } else {
            in_left[a].clone()
        };
        out_left[x] = out_left[x].clone() - w.clone();
        in_left[a] = in_left[a].clone() - w.clone();
        flows.push((x, a, w));
    }
    let loss = T::one() - value;
    Ok((AgnosticCoupling { subsets, flows }, loss))
}

/// Optimal coupling of `ρ` with `η*` and its loss `1 − maxflow = P(X ∉ A)`.
pub fn build_agnostic_coupling(
    rho: &DiscreteDist,
    es: &EtaStar,
) -> Result<(AgnosticCoupling, f64)> {
    build_generic(rho.probs(), es)
}

/// Exact-arithmetic variant; `rho` must sum to one exactly.
pub fn build_agnostic_coupling_exact(
    rho: &[ExactRational],
    es: &EtaStar,
) -> Result<(AgnosticCoupling<ExactRational>, ExactRational)> {
    let total = rho.iter().fold(BigRational::zero(), |acc, p| acc + p);
    if !total.is_one() || rho.iter().any(|p| p < &BigRational::zero()) {
        return Err(Error::InvalidDistribution(format!(
            "exact weights must be non-negative and sum to 1, got {total}"
        )));
    }
    build_generic(rho, es)
}

/// `γ(η*) + Σ(ρ(x) − α)₊`, the guaranteed ceiling on the loss.
pub fn loss_budget(rho: &DiscreteDist, es: &EtaStar) -> f64 {
    let alpha = es.alpha().to_f64().expect("finite");
    let gamma = gamma_star(es.n, &es.alpha())
        .expect("valid EtaStar")
        .to_f64()
        .expect("finite");
    gamma + excess_mass(rho, alpha)
}

fn hit_probs(es: &EtaStar) -> Vec<f64> {
    (0..=es.n).map(|u| es.hit_prob(u).to_f64().expect("finite")).collect()
}

fn check_strassen_size(rho: &DiscreteDist, es: &EtaStar) -> Result<()> {
    if rho.len() as u64 != es.n {
        return Err(Error::DimensionMismatch(rho.len(), es.n as usize));
    }
    if rho.len() > STRASSEN_MAX_N {
        return Err(Error::TooLarge {
            what: "outcome count for subset enumeration",
            size: rho.len() as u128,
            limit: STRASSEN_MAX_N as u128,
        });
    }
    Ok(())
}

/// `max_U ρ(U) − P(A ∩ U ≠ ∅)` over all `U ⊆ Ω`; zero at `U = ∅`.
pub fn strassen_max_deficit(rho: &DiscreteDist, es: &EtaStar) -> Result<f64> {
    check_strassen_size(rho, es)?;
    let n = rho.len();
    let hit = hit_probs(es);
    let mut mass = vec![0.0; 1 << n];
    let mut best = 0.0f64;
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + rho.prob(low);
        best = best.max(mass[mask] - hit[mask.count_ones() as usize]);
    }
    Ok(best)
}

/// Whether `ρ(U) − P(A ∩ U ≠ ∅) ≤ budget` for every `U ⊆ Ω`.
pub fn strassen_check(rho: &DiscreteDist, es: &EtaStar, budget: f64) -> Result<bool> {
    Ok(strassen_max_deficit(rho, es)? <= budget + 1e-12)
}

/// Pads to meet the integrality conditions: `α' = 1/⌈1/α⌉ ≤ α` and `n'` the
/// least multiple of `⌈1/α⌉` with `n' ≥ n`, the new outcomes carrying zero
/// mass. The padded scheme is conservative in Type I but its γ belongs to
/// `(n', α')`, so it only approximates the original pair.
pub fn augment(rho: &DiscreteDist, alpha: f64) -> Result<(DiscreteDist, EtaStar)> {
    check_alpha(alpha)?;
    let q = (1.0 / alpha - 1e-12).ceil() as u64;
    let n1 = (rho.len() as u64).div_ceil(q) * q;
    let mut probs = rho.probs().to_vec();
    probs.resize(n1 as usize, 0.0);
    Ok((DiscreteDist::new(probs)?, EtaStar::new(n1, n1 / q)?))
}
