//! Robust watermarking against a perturbation graph.
//!
//! A user may replace the output `x` by any `y ∈ out(x)`. Detection survives
//! exactly when `x` lies in the shrinkage `S_G(R) = {x : out(x) ⊆ R}`. The
//! optimal robust Type II error is one minus the optimum of a small LP over
//! per-outcome acceptance weights.

pub mod simplex;

use crate::error::{check_alpha, Error, Result};
use crate::prob::DiscreteDist;
use crate::ump::{Atom, Coupling, Region};
use simplex::{simplex_solve, LpProblem, LpStatus};

/// Directed graph over outcomes with a self-loop at every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationGraph {
    out_adj: Vec<Vec<usize>>,
}

impl PerturbationGraph {
    /// Validates sorted, in-range successor lists that include the vertex itself.
    pub fn new(out_adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = out_adj.len();
        for (v, succ) in out_adj.iter().enumerate() {
            if succ.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!(
                    "successors of {v} are not strictly increasing"
                )));
            }
            if succ.last().is_some_and(|&s| s >= n) {
                return Err(Error::InvalidGraph(format!(
                    "successor of {v} out of range 0..{n}"
                )));
            }
            if succ.binary_search(&v).is_err() {
                return Err(Error::InvalidGraph(format!("vertex {v} lacks a self-loop")));
            }
        }
        Ok(Self { out_adj })
    }

    /// Builds from an edge list, adding any missing self-loops. Returns the
    /// graph and how many loops had to be added.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<(Self, usize)> {
        let mut out_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range 0..{n}"
                )));
            }
            out_adj[u].push(v);
        }
        let mut added = 0;
        for (v, succ) in out_adj.iter_mut().enumerate() {
            if !succ.contains(&v) {
                succ.push(v);
                added += 1;
            }
            succ.sort_unstable();
            succ.dedup();
        }
        Ok((Self { out_adj }, added))
    }

    pub fn self_loops(n: usize) -> Self {
        Self {
            out_adj: (0..n).map(|v| vec![v]).collect(),
        }
    }

    pub fn complete(n: usize) -> Self {
        Self {
            out_adj: vec![(0..n).collect(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.out_adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_adj.is_empty()
    }

    pub fn out(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    /// Predecessor lists (transpose).
    pub fn in_adj(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.len()];
        for (u, succ) in self.out_adj.iter().enumerate() {
            for &v in succ {
                inc[v].push(u);
            }
        }
        inc
    }

    pub fn num_edges(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    /// Copy with the edge `u → v` added.
    pub fn with_edge(&self, u: usize, v: usize) -> Self {
        let mut out_adj = self.out_adj.clone();
        if let Err(pos) = out_adj[u].binary_search(&v) {
            out_adj[u].insert(pos, v);
        }
        Self { out_adj }
    }

    /// Parses `vertices N` followed by one `u v` pair per line. Blank lines
    /// and `#` comments are skipped; missing self-loops are added with a
    /// warning.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `vertices N` header".into(),
        })?;
        let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["vertices", n] => n.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("vertex count: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `vertices N`, got `{header}`"),
                })
            }
        };
        let mut edges = Vec::new();
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("`{s}`: {e}"),
                })
            };
            match parts[..] {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected `u v`, got `{l}`"),
                    })
                }
            }
        }
        let (g, added) = Self::from_edges(n, &edges)?;
        if added > 0 {
            log::warn!("edge list lacked {added} self-loop(s); added them");
        }
        Ok(g)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("vertices {}\n", self.len());
        for (u, succ) in self.out_adj.iter().enumerate() {
            for v in succ {
                s.push_str(&format!("{u} {v}\n"));
            }
        }
        s
    }
}

/// Largest vertex count accepted by [`hamming_graph`].
pub const HAMMING_MAX_VERTICES: u128 = 10_000;

/// Length-`n` strings over `k` symbols, `u → v` iff Hamming distance ≤ `c`.
/// Vertex ids read strings as base-`k` numbers, most significant first.
pub fn hamming_graph(k: usize, n: usize, c: usize) -> Result<PerturbationGraph> {
    let size = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > HAMMING_MAX_VERTICES {
        return Err(Error::TooLarge {
            what: "Hamming graph vertex count",
            size,
            limit: HAMMING_MAX_VERTICES,
        });
    }
    let size = size as usize;
    let digits = |mut v: usize| {
        let mut d = vec![0; n];
        for slot in d.iter_mut().rev() {
            *slot = v % k;
            v /= k;
        }
        d
    };
    let strings: Vec<Vec<usize>> = (0..size).map(digits).collect();
    let out_adj = strings
        .iter()
        .map(|u| {
            (0..size)
                .filter(|&v| u.iter().zip(&strings[v]).filter(|(a, b)| a != b).count() <= c)
                .collect()
        })
        .collect();
    PerturbationGraph::new(out_adj)
}

/// `S_G(R) = {x : out(x) ⊆ R}`.
pub fn shrinkage(g: &PerturbationGraph, r: &Region) -> Region {
    Region::new(
        (0..g.len())
            .filter(|&x| g.out(x).iter().all(|&y| r.contains(y)))
            .collect(),
    )
}

/// Robust LP: maximise `Σ ρ(y) x(y)` subject to `Σ_{y ∈ in(z)} ρ(y) x(y) ≤ α`
/// for every `z` and `0 ≤ x ≤ 1`. With `include_sum_row` the additional row
/// `Σ_z x(z) ≤ 1` is added.
pub fn robust_lp_build(
    rho: &DiscreteDist,
    alpha: f64,
    g: &PerturbationGraph,
    include_sum_row: bool,
) -> Result<LpProblem> {
    check_alpha(alpha)?;
    if rho.len() != g.len() {
        return Err(Error::DimensionMismatch(rho.len(), g.len()));
    }
    let k = rho.len();
    let mut lp = LpProblem::new(rho.probs().to_vec());
    for preds in g.in_adj() {
        let mut row = vec![0.0; k];
        for y in preds {
            row[y] = rho.prob(y);
        }
        lp.add_le(row, alpha);
    }
    if include_sum_row {
        lp.add_le(vec![1.0; k], 1.0);
    }
    for y in 0..k {
        lp.set_bounds(y, 0.0, 1.0);
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSolution {
    /// Per-outcome acceptance weights `x*`.
    pub weights: Vec<f64>,
    /// Robust Type II error `1 − Σ ρ(y) x*(y)`.
    pub beta: f64,
}

pub fn robust_solve(
    rho: &DiscreteDist,
    alpha: f64,
    g: &PerturbationGraph,
    include_sum_row: bool,
) -> Result<RobustSolution> {
    let lp = robust_lp_build(rho, alpha, g, include_sum_row)?;
    let sol = simplex_solve(&lp);
    // x = 0 is feasible and the box bounds the objective.
    assert_eq!(sol.status, LpStatus::Optimal, "robust LP must be solvable");
    Ok(RobustSolution {
        beta: 1.0 - sol.objective,
        weights: sol.x,
    })
}

/// Robust UMP coupling: outcome `y` carries region `out(y)` with mass
/// `ρ(y) x*(y)` and `∅` with the rest. `out(y)` is the smallest region whose
/// shrinkage contains `y`. Zero-weight atoms are omitted.
pub fn robust_ump_build(
    rho: &DiscreteDist,
    alpha: f64,
    g: &PerturbationGraph,
) -> Result<Coupling> {
    let sol = robust_solve(rho, alpha, g, false)?;
    let mut atoms = Vec::new();
    for (y, (&p, &x)) in rho.probs().iter().zip(&sol.weights).enumerate() {
        if p <= 0.0 {
            continue;
        }
        let hit = p * x;
        if hit > 0.0 {
            atoms.push(Atom::new(y, Region::new(g.out(y).to_vec()), hit));
        }
        let miss = p * (1.0 - x);
        if miss > 0.0 {
            atoms.push(Atom::new(y, Region::empty(), miss));
        }
    }
    Coupling::new(rho.len(), atoms)
}

/// Type II error when the user perturbs adversarially: mass of atoms for
/// which some successor of the output falls outside the region.
pub fn robust_type2_exact(c: &Coupling, g: &PerturbationGraph) -> f64 {
    c.atoms()
        .iter()
        .filter(|a| g.out(a.outcome).iter().any(|&y| !a.region.contains(y)))
        .fold(0.0, |s, a| s + a.weight)
}
