//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are `maximize cᵀx` subject to `Ax ≤ b` and per-variable boxes
//! `lo ≤ x ≤ hi` (`lo` finite, `hi` possibly infinite). The tableau is generic
//! over [`Scalar`], so the same code runs in `f64` and in exact rationals.

use crate::scalar::Scalar;
use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Dense LP in maximisation form with `≤` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// All variables start in `[0, ∞)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "row width");
        self.constraints.push(Constraint { coeffs, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        assert!(lo.is_finite() && lo <= hi, "bounds [{lo}, {hi}]");
        self.bounds[var] = (lo, hi);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            lhs - c.rhs
        });
        let boxes = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi));
        rows.chain(boxes).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot cap hit; only reachable through floating-point trouble.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T = f64> {
    pub x: Vec<T>,
    pub objective: T,
    pub status: LpStatus,
}

pub fn simplex_solve(p: &LpProblem) -> LpSolution {
    let mut sol = solve::<f64>(p);
    if sol.status == LpStatus::Optimal {
        // Snap values sitting on a bound to the bound itself.
        for (v, &(lo, hi)) in sol.x.iter_mut().zip(&p.bounds) {
            if (*v - lo).abs() <= 1e-12 {
                *v = lo;
            } else if hi.is_finite() && (*v - hi).abs() <= 1e-12 {
                *v = hi;
            }
        }
        sol.objective = p.objective_value(&sol.x);
    }
    sol
}

/// Exact-arithmetic solve; the `f64` data are converted without rounding.
pub fn simplex_solve_exact(p: &LpProblem) -> LpSolution<BigRational> {
    solve::<BigRational>(p)
}

const MAX_PIVOTS: usize = 100_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    /// Reduced costs; the last entry holds minus the current objective.
    obj: Vec<T>,
    basis: Vec<usize>,
    /// Columns that may never enter (retired artificials).
    barred: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let piv = self.rows[r][s].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[s].clone();
            if !f.is_zero() {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v = v.clone() - f.clone() * p.clone();
                }
                row[s] = T::zero();
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
                let rhs = row.last_mut().unwrap();
                if rhs.is_negligible() && *rhs < T::zero() {
                    *rhs = T::zero();
                }
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = s;
    }

    /// Bland's rule: lowest-index improving column enters; among minimum-ratio
    /// rows the one whose basic variable has the lowest index leaves.
    fn run(&mut self) -> Outcome {
        let w = self.width();
        for _ in 0..MAX_PIVOTS {
            let Some(s) = (0..w).find(|&j| !self.barred[j] && self.obj[j].is_pos()) else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[s].is_pos() {
                    continue;
                }
                let ratio = row[w].clone() / row[s].clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let diff = ratio.clone() - br.clone();
                        if diff.is_neg()
                            || (diff.is_negligible() && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Outcome::Unbounded,
                Some((r, _)) => self.pivot(r, s),
            }
        }
        Outcome::Stalled
    }
}

fn solve<T: Scalar>(p: &LpProblem) -> LpSolution<T> {
    let n = p.num_vars();
    assert_eq!(p.bounds.len(), n, "bounds width");
    let lo: Vec<T> = p.bounds.iter().map(|b| T::from_float(b.0)).collect();

    // Shift x = lo + y, then every row reads a·y ≤ b − a·lo.
    let mut a: Vec<Vec<T>> = Vec::new();
    let mut b: Vec<T> = Vec::new();
    for c in &p.constraints {
        assert_eq!(c.coeffs.len(), n, "row width");
        let row: Vec<T> = c.coeffs.iter().map(|&v| T::from_float(v)).collect();
        let shift = row
            .iter()
            .zip(&lo)
            .fold(T::zero(), |acc, (r, l)| acc + r.clone() * l.clone());
        b.push(T::from_float(c.rhs) - shift);
        a.push(row);
    }
    for (j, &(l, h)) in p.bounds.iter().enumerate() {
        if h.is_finite() {
            let mut row = vec![T::zero(); n];
            row[j] = T::one();
            a.push(row);
            b.push(T::from_float(h) - T::from_float(l));
        }
    }

    let m = a.len();
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < T::zero()).collect();
    let n_art = negative.len();
    let width = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![T::zero(); width + 1];
        let flip = b[i] < T::zero();
        for j in 0..n {
            row[j] = if flip { -a[i][j].clone() } else { a[i][j].clone() };
        }
        row[n + i] = if flip { -T::one() } else { T::one() };
        row[width] = if flip { -b[i].clone() } else { b[i].clone() };
        if flip {
            let art = n + m + negative.iter().position(|&x| x == i).unwrap();
            row[art] = T::one();
            basis.push(art);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        obj: vec![T::zero(); width + 1],
        basis,
        barred: vec![false; width],
    };

    if n_art > 0 {
        // Phase 1: maximise −Σ artificials.
        for (i, row) in t.rows.iter().enumerate() {
            if t.basis[i] >= n + m {
                for (j, (o, v)) in t.obj.iter_mut().zip(row).enumerate() {
                    if j < n + m || j == width {
                        *o = o.clone() + v.clone();
                    }
                }
            }
        }
        if let Outcome::Stalled = t.run() {
            return failed(n, LpStatus::IterationLimit);
        }
        if t.obj[width].is_pos() {
            return failed(n, LpStatus::Infeasible);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n + m {
                match (0..n + m).find(|&j| !t.rows[i][j].is_negligible()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in n + m..width {
            t.barred[j] = true;
        }
    }

    // Phase 2 reduced costs: c − c_Bᵀ B⁻¹ A.
    let c: Vec<T> = p.objective.iter().map(|&v| T::from_float(v)).collect();
    t.obj = vec![T::zero(); width + 1];
    t.obj[..n].clone_from_slice(&c);
    for (i, row) in t.rows.iter().enumerate() {
        let bi = t.basis[i];
        if bi < n && !c[bi].is_zero() {
            for (o, v) in t.obj.iter_mut().zip(row) {
                *o = o.clone() - c[bi].clone() * v.clone();
            }
        }
    }
    for j in 0..width {
        if t.basis.contains(&j) {
            t.obj[j] = T::zero();
        }
    }

    match t.run() {
        Outcome::Optimal => {}
        Outcome::Unbounded => return failed(n, LpStatus::Unbounded),
        Outcome::Stalled => return failed(n, LpStatus::IterationLimit),
    }

    let mut x = lo;
    for (i, &bi) in t.basis.iter().enumerate() {
        if bi < n {
            x[bi] = x[bi].clone() + t.rows[i][width].clone();
        }
    }
    let objective = c
        .iter()
        .zip(&x)
        .fold(T::zero(), |acc, (ci, xi)| acc + ci.clone() * xi.clone());
    LpSolution {
        x,
        objective,
        status: LpStatus::Optimal,
    }
}

fn failed<T: Scalar>(n: usize, status: LpStatus) -> LpSolution<T> {
    LpSolution {
        x: vec![T::zero(); n],
        objective: T::zero(),
        status,
    }
}
