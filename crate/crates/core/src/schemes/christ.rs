//! Binary scheme with an unkeyed high-entropy prefix followed by keyed
//! inverse-CDF sampling; detection sums per-token surprisal of the keyed
//! uniforms.

use super::{open01, SchemeConfig, SchemeVariant, ToyLM, WatermarkKey, CHRIST_U_DOMAIN, SAMPLE_DOMAIN};
use crate::error::{Error, Result};
use crate::prob::sample_index;
use statrs::distribution::{ContinuousCDF, Gamma};

/// Slack on the entropy budget so that sums like `10 × ln 2` meet `10·ln 2`.
const BUDGET_SLACK: f64 = 1e-12;

fn lambda(cfg: &SchemeConfig) -> Result<f64> {
    match cfg.variant {
        SchemeVariant::ChristBinary { lambda } => Ok(lambda),
        _ => Err(Error::InvalidConfig("expected a binary-scheme configuration".into())),
    }
}

/// Keyed uniforms `u_0, …, u_{len−1}`.
pub fn keyed_uniforms(key: WatermarkKey, len: usize) -> Vec<f64> {
    let mut rng = key.stream(CHRIST_U_DOMAIN, 0);
    (0..len).map(|_| open01(&mut rng)).collect()
}

/// Returns the text and the start index `i` of the keyed segment. If the
/// prefix never accrues `λ` nats of surprisal, `i = n` and nothing is keyed.
pub fn christ_generate(lm: &ToyLM, key: WatermarkKey, cfg: &SchemeConfig) -> Result<(Vec<usize>, usize)> {
    let lambda = lambda(cfg)?;
    if lm.vocab_size() != 2 {
        return Err(Error::InvalidConfig(format!(
            "the binary scheme needs a 2-token vocabulary, got {}",
            lm.vocab_size()
        )));
    }
    let mut private = key.stream(SAMPLE_DOMAIN, 0);
    let u = keyed_uniforms(key, cfg.n);
    let mut out: Vec<usize> = Vec::with_capacity(cfg.n);
    let mut surprisal = 0.0;
    let mut start = None;
    for (j, &uj) in u.iter().enumerate() {
        if start.is_none() && surprisal >= lambda - BUDGET_SLACK {
            start = Some(j);
        }
        let d = lm.next_dist(out.last().copied());
        let x = match start {
            Some(_) => usize::from(uj <= d.prob(1)),
            None => {
                let x = sample_index(d.probs(), open01(&mut private));
                surprisal -= d.prob(x).ln();
                x
            }
        };
        out.push(x);
    }
    let start = start.unwrap_or(cfg.n);
    Ok((out, start))
}

/// `Σ_{j ≥ i} −ln(X_j u_j + (1 − X_j)(1 − u_j))`.
pub fn christ_statistic(key: WatermarkKey, tokens: &[usize], start: usize) -> Result<f64> {
    if start > tokens.len() {
        return Err(Error::DimensionMismatch(start, tokens.len()));
    }
    if let Some(&t) = tokens.iter().find(|&&t| t > 1) {
        return Err(Error::InvalidConfig(format!("token {t} is not binary")));
    }
    let u = keyed_uniforms(key, tokens.len());
    Ok(tokens[start..]
        .iter()
        .zip(&u[start..])
        .map(|(&x, &u)| -(if x == 1 { u } else { 1.0 - u }).ln())
        .sum())
}

/// Upper-`α` quantile of `Gamma(m, 1)`: each summand is a unit exponential
/// for text independent of the key.
pub fn christ_threshold(m: usize, alpha: f64) -> f64 {
    Gamma::new(m as f64, 1.0)
        .expect("positive shape")
        .inverse_cdf(1.0 - alpha)
}

fn check_len(tokens: &[usize], cfg: &SchemeConfig) -> Result<()> {
    if tokens.len() != cfg.n {
        return Err(Error::DimensionMismatch(tokens.len(), cfg.n));
    }
    Ok(())
}

/// Statistic and decision. With no keyed segment the detector never rejects.
pub fn christ_detect(key: WatermarkKey, tokens: &[usize], start: usize, cfg: &SchemeConfig) -> Result<(f64, bool)> {
    check_len(tokens, cfg)?;
    let s = christ_statistic(key, tokens, start)?;
    let m = tokens.len() - start;
    Ok((s, m > 0 && s >= christ_threshold(m, cfg.target_alpha)))
}

pub fn christ_p_value(key: WatermarkKey, tokens: &[usize], start: usize, cfg: &SchemeConfig) -> Result<f64> {
    check_len(tokens, cfg)?;
    let s = christ_statistic(key, tokens, start)?;
    let m = tokens.len() - start;
    if m == 0 {
        return Ok(1.0);
    }
    Ok(Gamma::new(m as f64, 1.0).expect("positive shape").sf(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cfg(lambda: f64, alpha: f64, n: usize) -> SchemeConfig {
        SchemeConfig::new(SchemeVariant::ChristBinary { lambda }, alpha, n).unwrap()
    }

    #[test]
    fn start_index() {
        let coin = ToyLM::builtin("fair-coin").unwrap();
        for s in 0..50 {
            let (_, i) = christ_generate(&coin, WatermarkKey::new(s), &cfg(10.0 * LN_2, 0.05, 30)).unwrap();
            assert_eq!(i, 10);
        }
        let (_, i) = christ_generate(&coin, WatermarkKey::new(0), &cfg(0.0, 0.05, 30)).unwrap();
        assert_eq!(i, 0);
        let det = ToyLM::deterministic(2).unwrap();
        let (tokens, i) = christ_generate(&det, WatermarkKey::new(0), &cfg(1.0, 0.05, 12)).unwrap();
        assert_eq!(i, 12);
        let (s, reject) = christ_detect(WatermarkKey::new(0), &tokens, i, &cfg(1.0, 0.05, 12)).unwrap();
        assert_eq!((s, reject), (0.0, false));
    }

    #[test]
    fn rejects_non_binary_model() {
        let lm = ToyLM::builtin("markov4").unwrap();
        assert!(christ_generate(&lm, WatermarkKey::new(0), &cfg(1.0, 0.05, 5)).is_err());
    }

    #[test]
    fn deterministic_in_key() {
        let lm = ToyLM::builtin("binary-markov").unwrap();
        let c = cfg(3.0, 0.05, 40);
        let key = WatermarkKey::new(99);
        assert_eq!(christ_generate(&lm, key, &c).unwrap(), christ_generate(&lm, key, &c).unwrap());
    }

    #[test]
    fn length_mismatch() {
        let c = cfg(1.0, 0.05, 5);
        assert!(christ_detect(WatermarkKey::new(0), &[0, 1], 0, &c).is_err());
        assert!(christ_statistic(WatermarkKey::new(0), &[0, 1], 3).is_err());
    }

    #[test]
    fn watermarked_fair_coin_is_detected() {
        let coin = ToyLM::builtin("fair-coin").unwrap();
        let c = cfg(10.0 * LN_2, 0.01, 110);
        let hits = (0..400)
            .filter(|&s| {
                let key = WatermarkKey::new(s);
                let (t, i) = christ_generate(&coin, key, &c).unwrap();
                christ_detect(key, &t, i, &c).unwrap().1
            })
            .count();
        assert!(hits >= 380, "{hits}");
    }

    #[test]
    fn p_value_matches_threshold() {
        let lm = ToyLM::builtin("binary-markov").unwrap();
        let c = cfg(2.0, 0.05, 30);
        for s in 0..300 {
            let key = WatermarkKey::new(s);
            let (t, i) = christ_generate(&lm, key, &c).unwrap();
            let null = lm.sample_sequence(30, &mut crate::rng::rng_stream(s, 7));
            for text in [&t, &null] {
                let (_, reject) = christ_detect(key, text, i, &c).unwrap();
                let p = christ_p_value(key, text, i, &c).unwrap();
                assert!(reject == (p <= 0.05) || (p - 0.05).abs() < 1e-9);
            }
        }
    }
}
