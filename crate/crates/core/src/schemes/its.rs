//! Inverse transform sampling through keyed permutations, detected by a
//! permutation test on the minimum windowed alignment cost.

use super::{open01, SchemeConfig, SchemeVariant, ToyLM, WatermarkKey, ITS_PERM_DOMAIN, ITS_U_DOMAIN};
use crate::error::{Error, Result};
use crate::rng::Stream;
use rand::seq::SliceRandom;

/// Keyed randomness `ξ`: one uniform per position and either one shared
/// permutation or one per position. `perms[·][x]` is the 0-based rank of
/// token `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Xi {
    pub u: Vec<f64>,
    pub perms: Vec<Vec<usize>>,
}

impl Xi {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn rank(&self, position: usize, token: usize) -> usize {
        let p = if self.perms.len() == 1 { 0 } else { position };
        self.perms[p][token]
    }
}

fn params(cfg: &SchemeConfig) -> Result<(usize, usize, bool)> {
    match cfg.variant {
        SchemeVariant::Its {
            resamples,
            block_k,
            shared_permutation,
        } => Ok((resamples, block_k, shared_permutation)),
        _ => Err(Error::InvalidConfig("expected an inverse-transform configuration".into())),
    }
}

fn random_ranks(vocab: usize, rng: &mut Stream) -> Vec<usize> {
    let mut ranks: Vec<usize> = (0..vocab).collect();
    ranks.shuffle(rng);
    ranks
}

/// `ξ` for `t = 0` and the resamples `ξ^(t)` for `t ≥ 1`. With a shared
/// permutation every `ξ^(t)` reuses the permutation of `ξ`.
pub fn keyed_xi(key: WatermarkKey, t: usize, len: usize, vocab: usize, shared: bool) -> Xi {
    let mut urng = key.stream(ITS_U_DOMAIN, t as u64);
    let u = (0..len).map(|_| open01(&mut urng)).collect();
    let perms = if shared {
        vec![random_ranks(vocab, &mut key.stream(ITS_PERM_DOMAIN, 0))]
    } else {
        let mut prng = key.stream(ITS_PERM_DOMAIN, t as u64);
        (0..len).map(|_| random_ranks(vocab, &mut prng)).collect()
    };
    Xi { u, perms }
}

/// First token in rank order whose cumulative mass reaches `u`.
pub fn inverse_transform(probs: &[f64], ranks: &[usize], u: f64) -> usize {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by_key(|&x| ranks[x]);
    let mut cum = 0.0;
    for &x in &order {
        cum += probs[x];
        if cum >= u && probs[x] > 0.0 {
            return x;
        }
    }
    // Rounding left the total just below u: take the last token with mass.
    *order.iter().rev().find(|&&x| probs[x] > 0.0).expect("a distribution has mass")
}

pub fn its_generate(lm: &ToyLM, key: WatermarkKey, cfg: &SchemeConfig) -> Result<(Vec<usize>, Xi)> {
    let (_, _, shared) = params(cfg)?;
    let xi = keyed_xi(key, 0, cfg.n, lm.vocab_size(), shared);
    let mut out: Vec<usize> = Vec::with_capacity(cfg.n);
    for j in 0..cfg.n {
        let d = lm.next_dist(out.last().copied());
        let p = if xi.perms.len() == 1 { 0 } else { j };
        out.push(inverse_transform(d.probs(), &xi.perms[p], xi.u[j]));
    }
    Ok((out, xi))
}

/// `φ(y, ξ)`: minimum over windows `y[i..i+k]` and cyclic offsets `j` of
/// `Σ_l |u_{j+l} − rank_{j+l}(y_{i+l})/(N−1)|`, indices into `ξ` taken
/// modulo its length. Evaluated per diagonal with sliding sums.
pub fn phi(tokens: &[usize], xi: &Xi, vocab: usize, k: usize) -> f64 {
    let (n, m) = (tokens.len(), xi.len());
    assert!(k >= 1 && k <= n && m > 0, "window must fit the text");
    let scale = 1.0 / (vocab as f64 - 1.0);
    let cost = |i: usize, j: usize| (xi.u[j] - xi.rank(j, tokens[i]) as f64 * scale).abs();
    let mut best = f64::INFINITY;
    let mut diag = vec![0.0; n];
    for offset in 0..m {
        for (i, c) in diag.iter_mut().enumerate() {
            *c = cost(i, (offset + i) % m);
        }
        let mut window: f64 = diag[..k].iter().sum();
        best = best.min(window);
        for i in k..n {
            window += diag[i] - diag[i - k];
            best = best.min(window);
        }
    }
    best
}

/// Whether a p-value of `1/(T+1)` can reach the level.
pub fn can_reject(resamples: usize, alpha: f64) -> bool {
    (resamples as f64 + 1.0) * alpha >= 1.0
}

/// `p = (1 + #{t : φ(y, ξ^(t)) ≤ φ(y, ξ)}) / (T + 1)`.
pub fn its_p_value(key: WatermarkKey, tokens: &[usize], vocab: usize, cfg: &SchemeConfig) -> Result<f64> {
    let (resamples, k, shared) = params(cfg)?;
    if tokens.len() < k {
        return Err(Error::InvalidConfig(format!(
            "text of length {} is shorter than the block size {k}",
            tokens.len()
        )));
    }
    if vocab < 2 {
        return Err(Error::InvalidConfig("vocabulary must have at least 2 tokens".into()));
    }
    let len = tokens.len();
    let observed = phi(tokens, &keyed_xi(key, 0, len, vocab, shared), vocab, k);
    let at_most = (1..=resamples)
        .filter(|&t| phi(tokens, &keyed_xi(key, t, len, vocab, shared), vocab, k) <= observed)
        .count();
    Ok((1 + at_most) as f64 / (resamples + 1) as f64)
}

pub fn its_detect(key: WatermarkKey, tokens: &[usize], vocab: usize, cfg: &SchemeConfig) -> Result<(f64, bool)> {
    let p = its_p_value(key, tokens, vocab, cfg)?;
    Ok((p, p <= cfg.target_alpha))
}
