//! Uniformly most powerful watermark couplings.
//!
//! A [`Coupling`] is a finite list of weighted `(outcome, region)` atoms. The
//! UMP coupling of level `α` pairs each outcome `x` with the singleton `{x}`
//! for mass `min(ρ*(x), α)` and with `∅` for the remainder, where `ρ*` is the
//! closest (in the clipped-excess sense) distribution inside the TV-`ε` ball.

use crate::error::{check_alpha, Error, Result};
use crate::prob::{excess_mass, DiscreteDist, SUM_TOL};
use crate::robust::simplex::{simplex_solve, LpProblem, LpStatus};

/// Sorted, duplicate-free set of outcome ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(x: usize) -> Self {
        Self(vec![x])
    }

    pub fn full(k: usize) -> Self {
        Self((0..k).collect())
    }

    /// Region whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub outcome: usize,
    pub region: Region,
    pub weight: f64,
}

impl Atom {
    pub fn new(outcome: usize, region: Region, weight: f64) -> Self {
        Self {
            outcome,
            region,
            weight,
        }
    }
}

/// Joint law of the output `X` and the rejection region `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    k: usize,
    atoms: Vec<Atom>,
}

impl Coupling {
    pub fn new(k: usize, atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if a.outcome >= k || a.region.members().last().is_some_and(|&m| m >= k) {
                return Err(Error::InvalidDistribution(format!(
                    "atom {a:?} references an outcome outside 0..{k}"
                )));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "atom weight {} is negative or not finite",
                    a.weight
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "atom weights sum to {total}"
            )));
        }
        Ok(Self { k, atoms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Law of `X`.
    pub fn x_marginal(&self) -> DiscreteDist {
        let mut p = vec![0.0; self.k];
        for a in &self.atoms {
            p[a.outcome] += a.weight;
        }
        DiscreteDist::new(p).expect("validated at construction")
    }

    /// `P(y ∈ R)` for every outcome `y`.
    pub fn inclusion_probs(&self) -> Vec<f64> {
        let mut inc = vec![0.0; self.k];
        for a in &self.atoms {
            for &y in a.region.members() {
                inc[y] += a.weight;
            }
        }
        inc
    }
}

/// Worst-case false-detection probability. The sup over independent laws `π`
/// is attained at a point mass, so it is the largest inclusion probability.
pub fn type1_exact(c: &Coupling) -> f64 {
    c.inclusion_probs().into_iter().fold(0.0, f64::max)
}

/// Missed-detection probability `P(X ∉ R)`.
pub fn type2_exact(c: &Coupling) -> f64 {
    c.atoms
        .iter()
        .filter(|a| !a.region.contains(a.outcome))
        .fold(0.0, |s, a| s + a.weight)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "eps",
            value: eps,
            domain: "[0, inf)",
        })
    }
}

/// Optimal Type II error of an `ε`-distorted level-`α` watermark:
/// `(S − min(ε, S, C))₊` with surplus `S = Σ(ρ−α)₊` and capacity `C = Σ(α−ρ)₊`.
pub fn optimal_type2(rho: &DiscreteDist, alpha: f64, eps: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_eps(eps)?;
    let surplus = excess_mass(rho, alpha);
    let capacity: f64 = rho.probs().iter().map(|&p| (alpha - p).max(0.0)).sum();
    Ok((surplus - eps.min(surplus).min(capacity)).max(0.0))
}

/// Water-filling representative of the TV-constrained argmin.
///
/// Moves `min(ε, S, C)` mass from entries above `α` (largest surplus first)
/// into entries below `α` (largest capacity first). The objective value is
/// order-independent; the returned distribution is one of many minimisers.
pub fn optimal_distortion(rho: &DiscreteDist, alpha: f64, eps: f64) -> Result<DiscreteDist> {
    check_alpha(alpha)?;
    check_eps(eps)?;
    let p = rho.probs();
    let surplus = excess_mass(rho, alpha);
    let capacity: f64 = p.iter().map(|&x| (alpha - x).max(0.0)).sum();
    let budget = eps.min(surplus).min(capacity);
    if budget <= 0.0 {
        return Ok(rho.clone());
    }

    let by_desc = |key: &dyn Fn(usize) -> f64| {
        let mut idx: Vec<usize> = (0..p.len()).filter(|&i| key(i) > 0.0).collect();
        idx.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap().then(a.cmp(&b)));
        idx
    };
    let donors = by_desc(&|i| p[i] - alpha);
    let receivers = by_desc(&|i| alpha - p[i]);

    let mut out = p.to_vec();
    let mut left = budget;
    for i in donors {
        let take = (p[i] - alpha).min(left);
        out[i] -= take;
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    let mut left = budget;
    for i in receivers {
        let give = (alpha - p[i]).min(left);
        out[i] += give;
        left -= give;
        if left <= 0.0 {
            break;
        }
    }
    DiscreteDist::new(out)
}

/// UMP `ε`-distorted watermark of level `α`. Zero-weight atoms are omitted.
pub fn ump_build(rho: &DiscreteDist, alpha: f64, eps: f64) -> Result<Coupling> {
    let star = optimal_distortion(rho, alpha, eps)?;
    let mut atoms = Vec::with_capacity(2 * star.len());
    for (x, &p) in star.probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        atoms.push(Atom::new(x, Region::singleton(x), p.min(alpha)));
        let miss = (p - alpha).max(0.0);
        if miss > 0.0 {
            atoms.push(Atom::new(x, Region::empty(), miss));
        }
    }
    Coupling::new(star.len(), atoms)
}

/// Largest outcome count accepted by [`ump_oracle`].
pub const ORACLE_MAX_K: usize = 4;

/// LP over all conditional region laws `P(R | x)`, `R ∈ 2^Ω`.
///
/// Variable `x · 2^k + mask` is `P(R = mask | X = x)`. The objective is
/// `P(X ∈ R)`; rows bound every inclusion probability by `α` and every
/// conditional law's total by 1 (slack mass sits on `∅`, which is neutral).
pub fn ump_oracle_lp(rho: &DiscreteDist, alpha: f64) -> Result<LpProblem> {
    check_alpha(alpha)?;
    let k = rho.len();
    if k > ORACLE_MAX_K {
        return Err(Error::TooLarge {
            what: "oracle outcome count",
            size: k as u128,
            limit: ORACLE_MAX_K as u128,
        });
    }
    let masks = 1usize << k;
    let nvar = k * masks;
    let var = |x: usize, mask: usize| x * masks + mask;

    let mut objective = vec![0.0; nvar];
    for x in 0..k {
        for mask in 0..masks {
            if mask >> x & 1 == 1 {
                objective[var(x, mask)] = rho.prob(x);
            }
        }
    }
    let mut lp = LpProblem::new(objective);
    for y in 0..k {
        let mut row = vec![0.0; nvar];
        for x in 0..k {
            for mask in 0..masks {
                if mask >> y & 1 == 1 {
                    row[var(x, mask)] = rho.prob(x);
                }
            }
        }
        lp.add_le(row, alpha);
    }
    for x in 0..k {
        let mut row = vec![0.0; nvar];
        for mask in 0..masks {
            row[var(x, mask)] = 1.0;
        }
        lp.add_le(row, 1.0);
    }
    Ok(lp)
}

/// Minimum Type II error over every coupling with marginal `ρ` and Type I
/// at most `α`, found by brute-force LP. Independent of the closed form.
pub fn ump_oracle(rho: &DiscreteDist, alpha: f64) -> Result<f64> {
    let lp = ump_oracle_lp(rho, alpha)?;
    let sol = simplex_solve(&lp);
    match sol.status {
        LpStatus::Optimal => Ok(1.0 - sol.objective),
        LpStatus::Infeasible => Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => Err(Error::LpStatus("unbounded")),
        LpStatus::IterationLimit => Err(Error::LpStatus("stalled")),
    }
}
