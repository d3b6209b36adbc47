//! First-order Markov toy language model.

use crate::error::{Error, Result};
use crate::prob::DiscreteDist;
use rand::Rng;
use std::path::Path;

/// Largest number of sequences [`ToyLM::sequence_law`] enumerates.
pub const MAX_LAW_SIZE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyLM {
    initial: DiscreteDist,
    transitions: Vec<DiscreteDist>,
}

impl ToyLM {
    pub fn new(initial: DiscreteDist, transitions: Vec<DiscreteDist>) -> Result<Self> {
        let n = initial.len();
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "vocabulary size must be at least 2, got {n}"
            )));
        }
        if transitions.len() != n {
            return Err(Error::DimensionMismatch(transitions.len(), n));
        }
        if let Some(row) = transitions.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(row.len(), n));
        }
        Ok(Self {
            initial,
            transitions,
        })
    }

    /// Tokens drawn i.i.d. from `d`.
    pub fn iid(d: DiscreteDist) -> Result<Self> {
        Self::new(d.clone(), vec![d.clone(); d.len()])
    }

    /// Zero-entropy model: starts at 0 and steps `x → x + 1 mod N`.
    pub fn deterministic(vocab: usize) -> Result<Self> {
        Self::new(
            DiscreteDist::point_mass(vocab, 0),
            (0..vocab)
                .map(|x| DiscreteDist::point_mass(vocab, (x + 1) % vocab))
                .collect(),
        )
    }

    /// Named models: `binary-markov`, `markov4`, `fair-coin`, `deterministic`.
    pub fn builtin(name: &str) -> Result<Self> {
        let d = |p: &[f64]| DiscreteDist::new(p.to_vec());
        match name {
            "binary-markov" => Self::new(
                d(&[0.5, 0.5])?,
                vec![d(&[0.8, 0.2])?, d(&[0.35, 0.65])?],
            ),
            "markov4" => Self::new(
                DiscreteDist::uniform(4),
                vec![
                    d(&[0.5, 0.2, 0.2, 0.1])?,
                    d(&[0.1, 0.6, 0.2, 0.1])?,
                    d(&[0.25, 0.25, 0.25, 0.25])?,
                    d(&[0.3, 0.1, 0.1, 0.5])?,
                ],
            ),
            "fair-coin" => Self::iid(DiscreteDist::uniform(2)),
            "deterministic" => Self::deterministic(2),
            _ => Err(Error::InvalidConfig(format!("unknown builtin model `{name}`"))),
        }
    }

    /// Loads `builtin:<name>` or a model file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec.strip_prefix("builtin:") {
            Some(name) => Self::builtin(name),
            None => Self::load(spec),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read model file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Parses `vocab N`, a line of initial probabilities and `N` transition
    /// rows. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `vocab N` header".into(),
        })?;
        let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["vocab", n] => n.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("vocabulary size: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `vocab N`, got `{header}`"),
                })
            }
        };
        let mut rows = Vec::with_capacity(n + 1);
        for (line, l) in lines {
            let probs = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("`{t}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if probs.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {n} probabilities, got {}", probs.len()),
                });
            }
            let d = DiscreteDist::new(probs).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            rows.push(d);
        }
        if rows.len() != n + 1 {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected {} probability rows, got {}", n + 1, rows.len()),
            });
        }
        let initial = rows.remove(0);
        Self::new(initial, rows)
    }

    pub fn to_text(&self) -> String {
        let row = |d: &DiscreteDist| {
            d.probs()
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = format!("vocab {}\n{}\n", self.vocab_size(), row(&self.initial));
        for t in &self.transitions {
            s.push_str(&row(t));
            s.push('\n');
        }
        s
    }

    pub fn vocab_size(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &DiscreteDist {
        &self.initial
    }

    pub fn transitions(&self) -> &[DiscreteDist] {
        &self.transitions
    }

    /// Next-token law given the previous token (`None` at the start).
    pub fn next_dist(&self, prev: Option<usize>) -> &DiscreteDist {
        match prev {
            None => &self.initial,
            Some(x) => &self.transitions[x],
        }
    }

    pub fn sample_sequence<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.next_dist(out.last().copied()).sample(rng));
        }
        out
    }

    /// `ln ρ(tokens)`; `-∞` for impossible sequences.
    pub fn log_prob(&self, tokens: &[usize]) -> f64 {
        let mut prev = None;
        let mut lp = 0.0;
        for &t in tokens {
            lp += self.next_dist(prev).prob(t).ln();
            prev = Some(t);
        }
        lp
    }

    /// Exact law of length-`n` sequences, indexed by [`sequence_index`].
    pub fn sequence_law(&self, n: usize) -> Result<Vec<f64>> {
        let size = law_size(self.vocab_size(), n)?;
        let mut law = vec![0.0; size];
        for (idx, p) in law.iter_mut().enumerate() {
            *p = self.log_prob(&sequence_from_index(idx, self.vocab_size(), n)).exp();
        }
        Ok(law)
    }
}

pub(crate) fn law_size(vocab: usize, n: usize) -> Result<usize> {
    let size = (vocab as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_LAW_SIZE as u128 {
        return Err(Error::TooLarge {
            what: "sequence space",
            size,
            limit: MAX_LAW_SIZE as u128,
        });
    }
    Ok(size as usize)
}

/// Base-`vocab` index of a sequence, first token most significant.
pub fn sequence_index(tokens: &[usize], vocab: usize) -> usize {
    tokens.iter().fold(0, |acc, &t| acc * vocab + t)
}

pub fn sequence_from_index(mut idx: usize, vocab: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % vocab;
        idx /= vocab;
    }
    out
}

/// Empirical law of equal-length sequences.
pub fn empirical_law(samples: &[Vec<usize>], vocab: usize, n: usize) -> Result<Vec<f64>> {
    let mut law = vec![0.0; law_size(vocab, n)?];
    for s in samples {
        law[sequence_index(s, vocab)] += 1.0;
    }
    let total = samples.len() as f64;
    law.iter_mut().for_each(|p| *p /= total);
    Ok(law)
}

/// Upper tolerance for the TV distance between an empirical law from
/// `samples` draws and the true `law`: the bound `E[TV] ≤ ½ Σ √(p(1−p)/m)`
/// plus a bounded-differences deviation at confidence `1 − delta`.
pub fn tv_tolerance(law: &[f64], samples: usize, delta: f64) -> f64 {
    let m = samples as f64;
    let mean: f64 = 0.5 * law.iter().map(|p| (p * (1.0 - p) / m).sqrt()).sum::<f64>();
    mean + ((1.0 / delta).ln() / (2.0 * m)).sqrt()
}
