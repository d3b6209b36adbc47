//! Independent oracles shared by the integration tests. None of them call the
//! library routine they check.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use wmstat::robust::simplex::LpProblem;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Solves the square system `m x = rhs` by Gaussian elimination with partial
/// pivoting; `None` if it is (numerically) singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let (pivot, pivot_rhs) = (m[col].clone(), rhs[col]);
        for (r, (row, b)) in m.iter_mut().zip(rhs.iter_mut()).enumerate() {
            let f = row[col] / pivot[col];
            if r != col && f != 0.0 {
                for (a, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *a -= f * p;
                }
                *b -= f * pivot_rhs;
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Maximum of a bounded LP by enumerating every basic point: each choice of
/// `n` tight constraints among rows and finite bounds is solved and kept if
/// feasible.
pub fn lp_vertex_max(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for (i, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        rows.push((e.clone(), -lo));
        if hi.is_finite() {
            e[i] = 1.0;
            rows.push((e, hi));
        }
    }
    let feasible = |x: &[f64]| {
        rows.iter()
            .all(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() <= b + 1e-9)
    };
    let mut best: Option<f64> = None;
    for_each_combination(rows.len(), n, &mut |pick| {
        let m = pick.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs = pick.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(m, rhs) {
            if feasible(&x) {
                let v: f64 = lp.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    });
    best
}

/// `min Σ(ρ'(x) − α)₊` over all `ρ'` on the simplex grid of the given step
/// with `TV(ρ, ρ') ≤ ε`, for up to three outcomes.
pub fn tv_ball_grid_min(rho: &[f64], alpha: f64, eps: f64, step: f64) -> f64 {
    let k = rho.len();
    assert!((1..=3).contains(&k), "grid oracle handles k ≤ 3");
    let units = (1.0 / step).round() as i64;
    let objective = |p: &[f64]| p.iter().map(|&v| (v - alpha).max(0.0)).sum::<f64>();
    let tv = |p: &[f64]| 0.5 * p.iter().zip(rho).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut best = f64::INFINITY;
    let mut visit = |p: &[f64]| {
        if tv(p) <= eps + 1e-9 {
            best = best.min(objective(p));
        }
    };
    match k {
        1 => visit(&[1.0]),
        2 => {
            for i in 0..=units {
                let a = i as f64 / units as f64;
                visit(&[a, 1.0 - a]);
            }
        }
        _ => {
            for i in 0..=units {
                for j in 0..=units - i {
                    let (a, b) = (i as f64 / units as f64, j as f64 / units as f64);
                    visit(&[a, b, ((units - i - j) as f64) / units as f64]);
                }
            }
        }
    }
    best
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Exact `Σ_x (ρ0^⊗n(x) − α)₊` over count vectors with multinomial weights.
pub fn product_type2_rational(rho0: &[BigRational], n: u64, alpha: &BigRational) -> BigRational {
    fn rec(
        rho0: &[BigRational],
        pos: usize,
        left: u64,
        counts: &mut Vec<u64>,
        n: u64,
        alpha: &BigRational,
        acc: &mut BigRational,
    ) {
        if pos + 1 == rho0.len() {
            counts.push(left);
            let mut p = BigRational::one();
            let mut coef = factorial(n);
            for (c, q) in counts.iter().zip(rho0) {
                p *= num_traits::pow(q.clone(), *c as usize);
                coef /= factorial(*c);
            }
            let excess = p - alpha;
            if excess.is_positive() {
                *acc += BigRational::from_integer(coef) * excess;
            }
            counts.pop();
            return;
        }
        for v in 0..=left {
            counts.push(v);
            rec(rho0, pos + 1, left - v, counts, n, alpha, acc);
            counts.pop();
        }
    }
    let mut acc = BigRational::zero();
    rec(rho0, 0, n, &mut Vec::new(), n, alpha, &mut acc);
    acc
}

/// All `m`-subsets of `0..n` as bit masks.
pub fn subsets_of_size(n: usize, m: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for_each_combination(n, m, &mut |pick| out.push(pick.iter().fold(0u32, |acc, &i| acc | 1 << i)));
    out
}

/// `1 − max-flow` of the coupling of `ρ` with the uniform law on
/// `m`-subsets, through min-cut duality: `max_U ρ(U) − P(A ∩ U ≠ ∅)`, with
/// the hitting probability counted subset by subset.
pub fn min_cut_loss(rho: &[f64], m: usize) -> f64 {
    let n = rho.len();
    let subsets = subsets_of_size(n, m);
    let mut best = 0.0f64;
    for u in 0u32..1 << n {
        let mass: f64 = (0..n).filter(|&i| u >> i & 1 == 1).map(|i| rho[i]).sum();
        let hits = subsets.iter().filter(|&&a| a & u != 0).count();
        best = best.max(mass - hits as f64 / subsets.len() as f64);
    }
    best
}

/// `Σ_x (ρ(x) − α)₊` straight from the definition.
pub fn excess(rho: &[f64], alpha: f64) -> f64 {
    rho.iter().map(|&p| (p - alpha).max(0.0)).sum()
}

/// TV distance between the empirical law of `m` watermarked texts (one fresh
/// key each) and of `m` texts sampled from the model, with the tolerance of
/// a single empirical law at confidence `1 − 1e-6`.
pub fn distortion_check(
    lm: &wmstat::schemes::ToyLM,
    cfg: &wmstat::schemes::SchemeConfig,
    m: usize,
    seed: u64,
) -> (f64, f64) {
    use wmstat::schemes::lm::{empirical_law, tv_tolerance};
    use wmstat::schemes::{generate, trial_key};
    let vocab = lm.vocab_size();
    let wm: Vec<Vec<usize>> = (0..m as u64)
        .map(|t| generate(lm, trial_key(seed, t), cfg).unwrap().tokens)
        .collect();
    let mut rng = wmstat::rng::rng_stream(seed, 0xfeed);
    let plain: Vec<Vec<usize>> = (0..m).map(|_| lm.sample_sequence(cfg.n, &mut rng)).collect();
    let a = empirical_law(&wm, vocab, cfg.n).unwrap();
    let b = empirical_law(&plain, vocab, cfg.n).unwrap();
    let tv = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    (tv, tv_tolerance(&lm.sequence_law(cfg.n).unwrap(), m, 1e-6))
}
