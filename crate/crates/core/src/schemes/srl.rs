//! Soft red list: a keyed green list per position and an `e^δ` boost on
//! green tokens; detection counts green tokens.

use super::{open01, SchemeConfig, SchemeVariant, ToyLM, WatermarkKey, SAMPLE_DOMAIN, SRL_PARTITION_DOMAIN};
use crate::error::{Error, Result};
use crate::prob::{sample_index, DiscreteDist};
use rand::seq::SliceRandom;
use statrs::distribution::{Binomial, DiscreteCDF};

fn params(cfg: &SchemeConfig) -> Result<(f64, f64)> {
    match cfg.variant {
        SchemeVariant::SoftRedList { gamma, delta } => Ok((gamma, delta)),
        _ => Err(Error::InvalidConfig("expected a soft red list configuration".into())),
    }
}

/// Green-list size `round(γN)`, which must leave both lists non-empty.
pub fn green_size(gamma: f64, vocab: usize) -> Result<usize> {
    let g = (gamma * vocab as f64).round() as usize;
    if g == 0 || g >= vocab {
        return Err(Error::InvalidConfig(format!(
            "green list size round({gamma}·{vocab}) = {g} must lie in 1..{vocab}"
        )));
    }
    Ok(g)
}

/// Green-list membership at `position`: the first `g` entries of a keyed
/// shuffle of the vocabulary.
pub fn green_mask(key: WatermarkKey, position: usize, vocab: usize, g: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..vocab).collect();
    order.shuffle(&mut key.stream(SRL_PARTITION_DOMAIN, position as u64));
    let mut mask = vec![false; vocab];
    for &x in &order[..g] {
        mask[x] = true;
    }
    mask
}

/// Next-token law with green mass boosted by `e^δ`.
pub fn boosted(d: &DiscreteDist, green: &[bool], delta: f64) -> Vec<f64> {
    let boost = delta.exp();
    let w: Vec<f64> = d
        .probs()
        .iter()
        .zip(green)
        .map(|(&p, &g)| if g { p * boost } else { p })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn srl_generate(lm: &ToyLM, key: WatermarkKey, cfg: &SchemeConfig) -> Result<Vec<usize>> {
    let (gamma, delta) = params(cfg)?;
    let vocab = lm.vocab_size();
    let g = green_size(gamma, vocab)?;
    let mut rng = key.stream(SAMPLE_DOMAIN, 0);
    let mut out: Vec<usize> = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let q = boosted(lm.next_dist(out.last().copied()), &green_mask(key, i, vocab, g), delta);
        out.push(sample_index(&q, open01(&mut rng)));
    }
    Ok(out)
}

/// `P(Binom(n, γ) ≥ c)`.
fn binom_tail(n: usize, gamma: f64, c: usize) -> f64 {
    if c == 0 {
        return 1.0;
    }
    if c > n {
        return 0.0;
    }
    Binomial::new(gamma, n as u64)
        .expect("gamma in (0, 1)")
        .sf(c as u64 - 1)
}

/// Smallest `C` with `P(Binom(n, γ) ≥ C) ≤ α`; `n + 1` means never reject.
pub fn srl_threshold(n: usize, gamma: f64, alpha: f64) -> usize {
    (0..=n + 1)
        .find(|&c| binom_tail(n, gamma, c) <= alpha)
        .expect("the tail at n + 1 is zero")
}

pub fn green_count(key: WatermarkKey, tokens: &[usize], vocab: usize, g: usize) -> usize {
    tokens
        .iter()
        .enumerate()
        .filter(|&(i, &t)| green_mask(key, i, vocab, g)[t])
        .count()
}

/// Green count and decision at the target level. The null law of the count
/// uses the realised green fraction `g/N`.
pub fn srl_detect(
    key: WatermarkKey,
    tokens: &[usize],
    vocab: usize,
    cfg: &SchemeConfig,
) -> Result<(usize, bool)> {
    let (gamma, _) = params(cfg)?;
    let g = green_size(gamma, vocab)?;
    let count = green_count(key, tokens, vocab, g);
    let gamma_eff = g as f64 / vocab as f64;
    Ok((count, count >= srl_threshold(tokens.len(), gamma_eff, cfg.target_alpha)))
}

pub fn srl_p_value(key: WatermarkKey, tokens: &[usize], vocab: usize, cfg: &SchemeConfig) -> Result<f64> {
    let (gamma, _) = params(cfg)?;
    let g = green_size(gamma, vocab)?;
    let count = green_count(key, tokens, vocab, g);
    Ok(binom_tail(tokens.len(), g as f64 / vocab as f64, count))
}

/// The model averaged over green lists: each step's kernel is the mean of
/// the boosted kernel over all `C(N, g)` green lists. Because lists are drawn
/// independently per position, this is the exact law of the generated text
/// over a uniformly random key.
pub fn srl_average_lm(lm: &ToyLM, gamma: f64, delta: f64) -> Result<ToyLM> {
    let vocab = lm.vocab_size();
    let g = green_size(gamma, vocab)?;
    if vocab > 16 {
        return Err(Error::TooLarge {
            what: "vocabulary for green-list enumeration",
            size: vocab as u128,
            limit: 16,
        });
    }
    let masks: Vec<Vec<bool>> = (0u32..1 << vocab)
        .filter(|m| m.count_ones() as usize == g)
        .map(|m| (0..vocab).map(|x| m >> x & 1 == 1).collect())
        .collect();
    let average = |d: &DiscreteDist| {
        let mut acc = vec![0.0; vocab];
        for mask in &masks {
            for (a, q) in acc.iter_mut().zip(boosted(d, mask, delta)) {
                *a += q / masks.len() as f64;
            }
        }
        DiscreteDist::from_weights(&acc)
    };
    ToyLM::new(
        average(lm.initial())?,
        lm.transitions().iter().map(average).collect::<Result<_>>()?,
    )
}
