//! Exact solver for small instances by enumerating every `k`-subset.
//!
//! Each subset's continuous problem, `min λ·w'Σw − (1−λ)·μ'w` over
//! `{Σw = 1, ε ≤ w ≤ δ}`, is solved by a primal active-set method that
//! terminates at an exact KKT point (up to rounding). At `λ = 0` the problem
//! is linear and the greedy fill by return is optimal. The winner over all
//! subsets is the lowest objective, ties going to the lexicographically
//! first subset.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataio::ReferenceFrontier;
use crate::model::{
    portfolio_return, portfolio_risk, scalarize, AssetUniverse, ConstraintSet, ModelError, Portfolio,
};

/// Largest subset count the enumeration accepts.
pub const MAX_SUBSETS: u128 = 1_000_000;
const MAX_ACTIVE_SET_ITERS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("C({n}, {k}) = {count} subsets exceeds the limit of {MAX_SUBSETS}")]
    TooLarge { n: usize, k: usize, count: u128 },
    #[error("no subset of size {0} admits a feasible portfolio")]
    Infeasible(usize),
    #[error("lambda {0} outside [0, 1]")]
    Lambda(f64),
    #[error("subset solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub lambda: f64,
    pub portfolio: Portfolio,
    pub objective: f64,
    pub risk: f64,
    pub ret: f64,
    pub subsets_enumerated: u64,
    /// Infinity norm of `w − proj(w − ∇f)` on the winning subset.
    pub kkt_residual: f64,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Continuous problem restricted to one subset.
pub struct SubsetProblem {
    m: usize,
    h: Vec<f64>,
    g: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    linear: bool,
}

impl SubsetProblem {
    /// Returns `None` when the subset cannot hold the budget.
    pub fn new(u: &AssetUniverse, c: &ConstraintSet, sel: &[usize], lambda: f64) -> Option<Self> {
        let m = sel.len();
        let lo: Vec<f64> = sel.iter().map(|&i| c.eps()[i]).collect();
        let hi: Vec<f64> = sel.iter().map(|&i| c.delta()[i]).collect();
        if lo.iter().sum::<f64>() > 1.0 + c.tol() || hi.iter().sum::<f64>() < 1.0 - c.tol() {
            return None;
        }
        let mut h = vec![0.0; m * m];
        for (a, &i) in sel.iter().enumerate() {
            for (b, &j) in sel.iter().enumerate() {
                h[a * m + b] = 2.0 * lambda * u.sigma(i, j);
            }
        }
        let g = sel.iter().map(|&i| -(1.0 - lambda) * u.mu()[i]).collect();
        Some(Self { m, h, g, lo, hi, linear: lambda == 0.0 })
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|a| self.g[a] + self.h[a * self.m..(a + 1) * self.m].iter().zip(x).map(|(h, w)| h * w).sum::<f64>())
            .collect()
    }

    /// Floors everywhere, then the rest of the budget to the most attractive
    /// linear coefficients up to their caps.
    fn greedy_fill(&self, score: &[f64]) -> Vec<f64> {
        let mut x = self.lo.clone();
        let mut spare = 1.0 - x.iter().sum::<f64>();
        let mut order: Vec<usize> = (0..self.m).collect();
        order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
        for i in order {
            if spare <= 0.0 {
                break;
            }
            let add = (self.hi[i] - self.lo[i]).min(spare);
            x[i] += add;
            spare -= add;
        }
        x
    }

    pub fn solve(&self) -> Result<Vec<f64>, OracleError> {
        let x = self.greedy_fill(&self.g);
        if self.linear {
            return Ok(x);
        }
        self.active_set(x)
    }

    fn active_set(&self, mut x: Vec<f64>) -> Result<Vec<f64>, OracleError> {
        let m = self.m;
        // bound state per variable: -1 at lo, 1 at hi, 0 free
        let mut state: Vec<i8> = (0..m)
            .map(|i| {
                if x[i] <= self.lo[i] {
                    -1
                } else if x[i] >= self.hi[i] {
                    1
                } else {
                    0
                }
            })
            .collect();
        if state.iter().all(|&s| s != 0) {
            // keep one variable free so the budget row has a pivot
            if let Some(i) = (0..m).find(|&i| self.lo[i] < self.hi[i]) {
                state[i] = 0;
            }
        }
        // set after a full Newton step: x already minimizes over the working set
        let mut on_minimum = false;
        for _ in 0..MAX_ACTIVE_SET_ITERS {
            let free: Vec<usize> = (0..m).filter(|&i| state[i] == 0).collect();
            let grad = self.gradient(&x);
            let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs())).max(f64::MIN_POSITIVE);
            let step = if on_minimum { vec![0.0; free.len()] } else { self.equality_step(&free, &grad)? };
            let size = step.iter().fold(0.0f64, |a, p| a.max(p.abs()));
            if size <= 1e-15 {
                // stationary on the working set: check bound multipliers
                let nu = if free.is_empty() {
                    0.0
                } else {
                    -free.iter().map(|&i| grad[i]).sum::<f64>() / free.len() as f64
                };
                let mut worst = (0usize, -1e-13 * scale);
                for i in 0..m {
                    let r = grad[i] + nu;
                    let violation = match state[i] {
                        -1 => r,
                        1 => -r,
                        _ => continue,
                    };
                    if violation < worst.1 {
                        worst = (i, violation);
                    }
                }
                if worst.1 >= -1e-13 * scale {
                    return Ok(x);
                }
                state[worst.0] = 0;
                on_minimum = false;
                continue;
            }
            let mut alpha = 1.0f64;
            let mut block: Option<(usize, i8)> = None;
            for (&i, &p) in free.iter().zip(&step) {
                if p < 0.0 {
                    let t = (self.lo[i] - x[i]) / p;
                    if t < alpha {
                        alpha = t.max(0.0);
                        block = Some((i, -1));
                    }
                } else if p > 0.0 {
                    let t = (self.hi[i] - x[i]) / p;
                    if t < alpha {
                        alpha = t.max(0.0);
                        block = Some((i, 1));
                    }
                }
            }
            for (&i, &p) in free.iter().zip(&step) {
                x[i] += alpha * p;
            }
            match block {
                Some((i, s)) => {
                    x[i] = if s < 0 { self.lo[i] } else { self.hi[i] };
                    state[i] = s;
                }
                None => on_minimum = true,
            }
        }
        Err(OracleError::Solver(format!("active set did not settle in {MAX_ACTIVE_SET_ITERS} iterations")))
    }

    /// Newton step on the free variables keeping `Σx` fixed.
    fn equality_step(&self, free: &[usize], grad: &[f64]) -> Result<Vec<f64>, OracleError> {
        let f = free.len();
        if f <= 1 {
            return Ok(vec![0.0; f]);
        }
        let mut kkt = DMatrix::<f64>::zeros(f + 1, f + 1);
        let mut rhs = DVector::<f64>::zeros(f + 1);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = self.h[i * self.m + j];
            }
            kkt[(a, f)] = 1.0;
            kkt[(f, a)] = 1.0;
            rhs[a] = -grad[i];
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| OracleError::Solver("singular KKT system; covariance not positive definite".into()))?;
        Ok(sol.rows(0, f).iter().copied().collect())
    }

    /// Euclidean projection onto the bounded simplex by bisection on the
    /// shift; deliberately independent of the active-set logic.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let total = |tau: f64| -> f64 { (0..self.m).map(|i| (v[i] - tau).clamp(self.lo[i], self.hi[i])).sum() };
        let mut a = v.iter().zip(&self.hi).map(|(v, h)| v - h).fold(f64::INFINITY, f64::min);
        let mut b = v.iter().zip(&self.lo).map(|(v, l)| v - l).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if total(mid) > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let tau = 0.5 * (a + b);
        (0..self.m).map(|i| (v[i] - tau).clamp(self.lo[i], self.hi[i])).collect()
    }

    /// `‖x − proj(x − ∇f(x))‖∞`; zero exactly at a KKT point.
    pub fn kkt_residual(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        let v: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x - g).collect();
        self.project(&v).iter().zip(x).map(|(p, x)| (p - x).abs()).fold(0.0, f64::max)
    }
}

fn lift(n: usize, sel: &[usize], w: &[f64]) -> Portfolio {
    let mut weights = vec![0.0; n];
    let mut selection = vec![false; n];
    for (&i, &x) in sel.iter().zip(w) {
        weights[i] = x;
        selection[i] = true;
    }
    Portfolio { weights, selection }
}

pub fn exact_solve(u: &AssetUniverse, c: &ConstraintSet, lambda: f64) -> Result<ExactSolution, OracleError> {
    let n = u.n();
    if c.n() != n {
        return Err(ModelError::Shape { expected: n, actual: c.n() }.into());
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(OracleError::Lambda(lambda));
    }
    let k = c.k();
    let count = binomial(n, k);
    if count > MAX_SUBSETS {
        return Err(OracleError::TooLarge { n, k, count });
    }
    let solved: Vec<Result<Option<(f64, usize, Vec<usize>, Vec<f64>)>, OracleError>> = (0..n)
        .combinations(k)
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, sel)| {
            let Some(qp) = SubsetProblem::new(u, c, &sel, lambda) else { return Ok(None) };
            let w = qp.solve()?;
            let p = lift(n, &sel, &w);
            let obj = scalarize(portfolio_risk(u, &p)?, portfolio_return(u, &p)?, lambda);
            Ok(Some((obj, idx, sel, w)))
        })
        .collect();
    let mut best: Option<(f64, usize, Vec<usize>, Vec<f64>)> = None;
    for r in solved {
        if let Some(cand) = r? {
            // results arrive in lexicographic order, so strict < keeps the first
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        }
    }
    let (_, _, sel, w) = best.ok_or(OracleError::Infeasible(k))?;
    let qp = SubsetProblem::new(u, c, &sel, lambda).expect("winner was feasible");
    let kkt_residual = qp.kkt_residual(&w);
    let portfolio = lift(n, &sel, &w);
    let risk = portfolio_risk(u, &portfolio)?;
    let ret = portfolio_return(u, &portfolio)?;
    Ok(ExactSolution {
        lambda,
        objective: scalarize(risk, ret, lambda),
        portfolio,
        risk,
        ret,
        subsets_enumerated: count as u64,
        kkt_residual,
    })
}

pub fn exact_frontier(u: &AssetUniverse, c: &ConstraintSet, grid: &[f64]) -> Result<Vec<ExactSolution>, OracleError> {
    grid.iter().map(|&l| exact_solve(u, c, l)).collect()
}

/// Frontier of the problem with only the budget and nonnegativity, sampled
/// at the given `λ` values, as (return, variance) pairs with dominated and
/// repeated points dropped.
pub fn unconstrained_frontier(u: &AssetUniverse, grid: &[f64]) -> Result<ReferenceFrontier, OracleError> {
    let n = u.n();
    let c = ConstraintSet::uniform(n, n, 0.0, 1.0)?;
    let sols = exact_frontier(u, &c, grid)?;
    let mut pts: Vec<(f64, f64)> = sols.iter().map(|s| (s.ret, s.risk)).collect();
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if kept.last().is_none_or(|l: &(f64, f64)| p.0 > l.0) {
            kept.push(p);
        }
    }
    ReferenceFrontier::new(kept).map_err(|e| OracleError::Solver(e.to_string()))
}
