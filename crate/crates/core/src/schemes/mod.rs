//! Published watermarking schemes and the UMP baseline over a toy Markov LM.
//!
//! Each scheme is a pair of pure functions: generation from `(lm, key, cfg)`
//! and detection from `(key, tokens, cfg)`. The key seeds every shared random
//! quantity (partitions, uniforms, permutations); the generator's private
//! randomness comes from a separate domain of the same key, so it is
//! reproducible but never consulted by a detector.
//!
//! Detectors report a p-value under the null of text independent of the key
//! and reject when it is at most the target level, which is equivalent to the
//! threshold forms of each scheme.

pub mod christ;
pub mod its;
pub mod lm;
pub mod srl;

pub use lm::ToyLM;

use crate::error::{check_alpha, Error, Result};
use crate::rng::{substream, Stream};
use rand::{Rng, RngCore};
use rand_distr::Open01;
use rayon::prelude::*;

pub(crate) const SAMPLE_DOMAIN: u16 = 0x5001;
pub(crate) const SRL_PARTITION_DOMAIN: u16 = 0x5002;
pub(crate) const CHRIST_U_DOMAIN: u16 = 0x5003;
pub(crate) const ITS_U_DOMAIN: u16 = 0x5004;
pub(crate) const ITS_PERM_DOMAIN: u16 = 0x5005;
const UMP_TEXT_DOMAIN: u16 = 0x5006;
const UMP_V_DOMAIN: u16 = 0x5007;
const TRIAL_KEY_DOMAIN: u16 = 0x5101;
const NULL_TEXT_DOMAIN: u16 = 0x5102;

/// Shared secret between generator and detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WatermarkKey {
    pub seed: u64,
}

impl WatermarkKey {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub(crate) fn stream(&self, domain: u16, index: u64) -> Stream {
        substream(self.seed, domain, index)
    }
}

/// Uniform draw strictly inside `(0, 1)`.
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeVariant {
    /// Keyed green list of size `round(γN)` per position, green logits
    /// boosted by `δ`.
    SoftRedList { gamma: f64, delta: f64 },
    /// Binary tokens; unkeyed prefix until its surprisal reaches `λ` nats,
    /// then keyed inverse-CDF sampling.
    ChristBinary { lambda: f64 },
    /// Inverse transform sampling through keyed permutations with a
    /// `resamples`-fold permutation test over windows of `block_k` tokens.
    Its {
        resamples: usize,
        block_k: usize,
        shared_permutation: bool,
    },
    /// The product UMP coupling: `R = {X}` with probability `min(1, α/ρ(X))`.
    Ump,
}

impl SchemeVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeVariant::SoftRedList { .. } => "srl",
            SchemeVariant::ChristBinary { .. } => "christ",
            SchemeVariant::Its { .. } => "its",
            SchemeVariant::Ump => "ump",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub variant: SchemeVariant,
    pub target_alpha: f64,
    /// Generated sequence length.
    pub n: usize,
}

impl SchemeConfig {
    pub fn new(variant: SchemeVariant, target_alpha: f64, n: usize) -> Result<Self> {
        check_alpha(target_alpha)?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match &variant {
            SchemeVariant::SoftRedList { gamma, delta } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return bad(format!("srl gamma = {gamma} must lie in (0, 1)"));
                }
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return bad(format!("srl delta = {delta} must be finite and ≥ 0"));
                }
            }
            SchemeVariant::ChristBinary { lambda } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("christ lambda = {lambda} must be finite and ≥ 0"));
                }
            }
            SchemeVariant::Its {
                resamples, block_k, ..
            } => {
                if *resamples == 0 || *block_k == 0 {
                    return bad("its resamples and block size must be ≥ 1".into());
                }
                if *block_k > n {
                    return bad(format!("its block size {block_k} exceeds length {n}"));
                }
            }
            SchemeVariant::Ump => {}
        }
        Ok(Self {
            variant,
            target_alpha,
            n,
        })
    }

    /// The same scheme at another level.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.variant.clone(), alpha, self.n)
    }

    /// Whether the detector can ever reject at the target level.
    pub fn can_reject(&self) -> bool {
        match self.variant {
            SchemeVariant::Its { resamples, .. } => its::can_reject(resamples, self.target_alpha),
            _ => true,
        }
    }
}

/// Output of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub tokens: Vec<usize>,
    /// First watermarked position (nonzero only for the binary scheme).
    pub start: usize,
}

fn sample_index_open(probs: &[f64], rng: &mut Stream) -> usize {
    crate::prob::sample_index(probs, open01(rng))
}

/// UMP baseline: the text is sampled from the model with keyed randomness.
pub fn ump_generate(lm: &ToyLM, key: WatermarkKey, cfg: &SchemeConfig) -> Vec<usize> {
    let mut rng = key.stream(UMP_TEXT_DOMAIN, 0);
    let mut out = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let d = lm.next_dist(out.last().copied());
        out.push(sample_index_open(d.probs(), &mut rng));
    }
    out
}

/// p-value of the UMP baseline: `v·ρ(X)` when the text equals the keyed
/// sample `X`, else 1. Rejecting at `p ≤ α` is `X ∈ R` with
/// `P(R = {X} | X) = min(1, α/ρ(X))`.
pub fn ump_p_value(lm: &ToyLM, key: WatermarkKey, tokens: &[usize], cfg: &SchemeConfig) -> f64 {
    if tokens != ump_generate(lm, key, cfg).as_slice() {
        return 1.0;
    }
    let v = open01(&mut key.stream(UMP_V_DOMAIN, 0));
    v * lm.log_prob(tokens).exp()
}

pub fn ump_detect(lm: &ToyLM, key: WatermarkKey, tokens: &[usize], cfg: &SchemeConfig) -> bool {
    ump_p_value(lm, key, tokens, cfg) <= cfg.target_alpha
}

/// Runs the configured generator.
pub fn generate(lm: &ToyLM, key: WatermarkKey, cfg: &SchemeConfig) -> Result<Generated> {
    Ok(match &cfg.variant {
        SchemeVariant::SoftRedList { .. } => Generated {
            tokens: srl::srl_generate(lm, key, cfg)?,
            start: 0,
        },
        SchemeVariant::ChristBinary { .. } => {
            let (tokens, start) = christ::christ_generate(lm, key, cfg)?;
            Generated { tokens, start }
        }
        SchemeVariant::Its { .. } => Generated {
            tokens: its::its_generate(lm, key, cfg)?.0,
            start: 0,
        },
        SchemeVariant::Ump => Generated {
            tokens: ump_generate(lm, key, cfg),
            start: 0,
        },
    })
}

/// Detector p-value for `tokens`; `start` is the watermark start index
/// reported by the generator (ignored except by the binary scheme).
pub fn p_value(
    lm: &ToyLM,
    key: WatermarkKey,
    tokens: &[usize],
    start: usize,
    cfg: &SchemeConfig,
) -> Result<f64> {
    match &cfg.variant {
        SchemeVariant::SoftRedList { .. } => srl::srl_p_value(key, tokens, lm.vocab_size(), cfg),
        SchemeVariant::ChristBinary { .. } => christ::christ_p_value(key, tokens, start, cfg),
        SchemeVariant::Its { .. } => its::its_p_value(key, tokens, lm.vocab_size(), cfg),
        SchemeVariant::Ump => Ok(ump_p_value(lm, key, tokens, cfg)),
    }
}

/// Empirical error rates with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub alpha: f64,
    pub type1: f64,
    pub type1_se: f64,
    pub type2: f64,
    pub type2_se: f64,
}

fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Key used in trial `t` of [`estimate_errors`].
pub fn trial_key(seed: u64, t: u64) -> WatermarkKey {
    WatermarkKey::new(substream(seed, TRIAL_KEY_DOMAIN, t).next_u64())
}

/// Per-trial p-values `(watermarked, independent)`. Trial `t` draws a fresh
/// key, generates watermarked text, and draws independent text from the
/// model; both are scored against the key.
pub fn trial_p_values(
    lm: &ToyLM,
    cfg: &SchemeConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let key = trial_key(seed, t);
            let wm = generate(lm, key, cfg)?;
            let p_wm = p_value(lm, key, &wm.tokens, wm.start, cfg)?;
            let null = lm.sample_sequence(cfg.n, &mut substream(seed, NULL_TEXT_DOMAIN, t));
            let p_null = p_value(lm, key, &null, wm.start, cfg)?;
            Ok((p_wm, p_null))
        })
        .collect()
}

/// Error estimates at several levels from one set of trials. The generators
/// do not depend on the level, so every level sees the same texts.
pub fn estimate_errors_multi(
    lm: &ToyLM,
    cfg: &SchemeConfig,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<ErrorEstimate>> {
    if trials < 100 {
        return Err(Error::InvalidConfig(format!(
            "at least 100 trials are required, got {trials}"
        )));
    }
    for &a in alphas {
        let c = cfg.with_alpha(a)?;
        if !c.can_reject() {
            log::warn!(
                "{} detector cannot reject at alpha = {a}: the smallest p-value exceeds it",
                cfg.variant.name()
            );
        }
    }
    let ps = trial_p_values(lm, cfg, trials, seed)?;
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let misses = ps.iter().filter(|(w, _)| *w > alpha).count();
            let alarms = ps.iter().filter(|(_, z)| *z <= alpha).count();
            let type1 = alarms as f64 / trials as f64;
            let type2 = misses as f64 / trials as f64;
            ErrorEstimate {
                alpha,
                type1,
                type1_se: binomial_se(type1, trials),
                type2,
                type2_se: binomial_se(type2, trials),
            }
        })
        .collect())
}

pub fn estimate_errors(
    lm: &ToyLM,
    cfg: &SchemeConfig,
    trials: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    Ok(estimate_errors_multi(lm, cfg, &[cfg.target_alpha], trials, seed)?[0])
}
