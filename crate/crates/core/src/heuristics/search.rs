//! Shared search state for the metaheuristics.
//!
//! Candidates are encoded as a sorted selection of `k` assets plus one
//! nonnegative score per selected asset; [`crate::model::repair`] decodes
//! them. Every decode counts as one objective evaluation, and each
//! projected-gradient iteration of a polish counts as one more.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::polish::SubsetQp;
use super::SolveBudget;
use crate::model::{portfolio_return, portfolio_risk, repair, scalarize, AssetUniverse, ConstraintSet, Portfolio};

/// Step tolerance for polishes during the search.
const SEARCH_TOL: f64 = 1e-10;
/// Step tolerance for the final polish of the incumbent.
const FINAL_TOL: f64 = 1e-15;
const MAX_POLISH_ITERS: u64 = 20_000;
/// Polished neighbors examined per local-search step.
const LS_POLISH: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Scored {
    pub sel: Vec<usize>,
    pub raw: Vec<f64>,
    pub obj: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Incumbent {
    pub portfolio: Portfolio,
    pub risk: f64,
    pub ret: f64,
    pub obj: f64,
}

pub(crate) struct Context<'a> {
    pub u: &'a AssetUniverse,
    pub c: &'a ConstraintSet,
    pub lambda: f64,
    pub rng: ChaCha8Rng,
    max_evals: u64,
    reserve: u64,
    started: Instant,
    limit: Duration,
    evals: u64,
    timed_out: bool,
    best: Option<Incumbent>,
    trace: Vec<(u64, f64)>,
    memo: HashMap<Vec<usize>, Scored>,
}

impl<'a> Context<'a> {
    pub fn new(u: &'a AssetUniverse, c: &'a ConstraintSet, lambda: f64, budget: &SolveBudget, rng: ChaCha8Rng) -> Self {
        Self {
            u,
            c,
            lambda,
            rng,
            max_evals: budget.max_evaluations,
            // room for the final polish of the incumbent
            reserve: (budget.max_evaluations / 50).min(MAX_POLISH_ITERS),
            started: Instant::now(),
            limit: Duration::from_secs_f64(budget.max_seconds),
            evals: 0,
            timed_out: false,
            best: None,
            trace: Vec::new(),
            memo: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    pub fn k(&self) -> usize {
        self.c.k()
    }

    pub fn evaluations(&self) -> u64 {
        self.evals
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn exhausted(&mut self) -> bool {
        if self.evals + self.reserve >= self.max_evals {
            return true;
        }
        if !self.timed_out && self.started.elapsed() >= self.limit {
            self.timed_out = true;
        }
        self.timed_out
    }

    pub fn into_parts(self) -> (Option<Incumbent>, Vec<(u64, f64)>) {
        (self.best, self.trace)
    }

    fn offer(&mut self, portfolio: Portfolio, risk: f64, ret: f64, obj: f64) {
        let better = match &self.best {
            None => true,
            Some(b) => obj < b.obj || (obj == b.obj && risk < b.risk),
        };
        if better {
            self.trace.push((self.evals, obj));
            self.best = Some(Incumbent { portfolio, risk, ret, obj });
        }
    }

    /// Decodes and scores a candidate. Returns `None` when the selection
    /// cannot hold the budget under its bounds.
    pub fn evaluate(&mut self, sel: Vec<usize>, raw: Vec<f64>) -> Option<Scored> {
        self.evals += 1;
        let p = repair(&sel, &raw, self.c).ok()?;
        let risk = portfolio_risk(self.u, &p).ok()?;
        let ret = portfolio_return(self.u, &p).ok()?;
        let obj = scalarize(risk, ret, self.lambda);
        self.offer(p, risk, ret, obj);
        Some(Scored { sel, raw, obj })
    }

    /// Scalarized value of equal weights over a partial selection, used by
    /// greedy construction. Not a feasible portfolio, never an incumbent.
    pub fn equal_weight_value(&mut self, assets: &[usize]) -> f64 {
        self.evals += 1;
        let w = 1.0 / assets.len() as f64;
        let mut risk = 0.0;
        for &i in assets {
            for &j in assets {
                risk += self.u.sigma(i, j);
            }
        }
        let ret: f64 = assets.iter().map(|&i| self.u.mu()[i]).sum();
        scalarize(risk * w * w, ret * w, self.lambda)
    }

    /// Optimal weights for a selection. Results are cached per selection.
    pub fn polish(&mut self, sel: &[usize], warm: Option<&[f64]>) -> Option<Scored> {
        if let Some(s) = self.memo.get(sel) {
            return Some(s.clone());
        }
        let room = self.max_evals.saturating_sub(self.evals + self.reserve).clamp(1, MAX_POLISH_ITERS);
        let weights = self.run_qp(sel, warm, SEARCH_TOL, room)?;
        let raw = self.raw_from_weights(sel, &weights);
        let scored = self.evaluate(sel.to_vec(), raw)?;
        self.memo.insert(sel.to_vec(), scored.clone());
        Some(scored)
    }

    /// Polishes a candidate, writing the optimal scores back into it.
    pub fn polish_scored(&mut self, s: &Scored) -> Option<Scored> {
        let warm = self.weights_of(s);
        let p = self.polish(&s.sel, warm.as_deref())?;
        Some(if p.obj <= s.obj { p } else { s.clone() })
    }

    /// Tight re-polish of the incumbent selection, using whatever budget is
    /// left, including the reserve.
    pub fn finish(&mut self) {
        let Some(best) = self.best.clone() else { return };
        let sel = best.portfolio.selected();
        let warm: Vec<f64> = sel.iter().map(|&i| best.portfolio.weights[i]).collect();
        let left = self.max_evals.saturating_sub(self.evals + 1);
        if left == 0 || self.timed_out {
            return;
        }
        if let Some(weights) = self.run_qp(&sel, Some(&warm), FINAL_TOL, left.min(MAX_POLISH_ITERS)) {
            let raw = self.raw_from_weights(&sel, &weights);
            self.evaluate(sel, raw);
        }
    }

    fn run_qp(&mut self, sel: &[usize], warm: Option<&[f64]>, tol: f64, max_iter: u64) -> Option<Vec<f64>> {
        let floors: f64 = sel.iter().map(|&i| self.c.eps()[i]).sum();
        let caps: f64 = sel.iter().map(|&i| self.c.delta()[i]).sum();
        if floors > 1.0 + self.c.tol() || caps < 1.0 - self.c.tol() {
            self.evals += 1;
            return None;
        }
        let qp = SubsetQp::new(self.u, self.c, sel, self.lambda);
        let r = qp.solve(warm, tol, max_iter);
        self.evals += r.iterations;
        Some(r.weights)
    }

    fn raw_from_weights(&self, sel: &[usize], w: &[f64]) -> Vec<f64> {
        sel.iter().zip(w).map(|(&i, &x)| (x - self.c.eps()[i]).max(0.0)).collect()
    }

    /// Decoded weights of a candidate, aligned with its selection.
    pub fn weights_of(&self, s: &Scored) -> Option<Vec<f64>> {
        let p = repair(&s.sel, &s.raw, self.c).ok()?;
        Some(s.sel.iter().map(|&i| p.weights[i]).collect())
    }

    pub fn random_selection(&mut self) -> Vec<usize> {
        let (n, k) = (self.n(), self.k());
        let mut sel = sample(&mut self.rng, n, k).into_vec();
        sel.sort_unstable();
        sel
    }

    pub fn random_raw(&mut self) -> Vec<f64> {
        (0..self.k()).map(|_| self.rng.random::<f64>()).collect()
    }

    /// A random candidate, polished. Falls back to fresh draws when a
    /// selection cannot hold the budget.
    pub fn random_solution(&mut self) -> Option<Scored> {
        for _ in 0..100 {
            let sel = self.random_selection();
            let raw = self.random_raw();
            if let Some(s) = self.evaluate(sel, raw) {
                return self.polish_scored(&s);
            }
            if self.exhausted() {
                break;
            }
        }
        None
    }

    fn unselected(&self, sel: &[usize]) -> Vec<usize> {
        let mut held = vec![false; self.n()];
        for &i in sel {
            held[i] = true;
        }
        (0..self.n()).filter(|&i| !held[i]).collect()
    }

    /// Move (a): one selected asset out, one unselected in; the newcomer
    /// inherits the leaver's score.
    pub fn swap(&mut self, s: &Scored) -> (Vec<usize>, Vec<f64>) {
        self.multi_swap(s, 1)
    }

    /// Move (b): one score scaled by `exp(N(0, 0.2))`.
    pub fn perturb(&mut self, s: &Scored) -> (Vec<usize>, Vec<f64>) {
        let mut raw = s.raw.clone();
        let p = self.rng.random_range(0..raw.len());
        let z: f64 = Normal::new(0.0, 0.2).unwrap().sample(&mut self.rng);
        raw[p] = if raw[p] > 0.0 { raw[p] * z.exp() } else { 1e-3 * z.exp() };
        (s.sel.clone(), raw)
    }

    /// Move (c): `m` simultaneous swaps.
    pub fn multi_swap(&mut self, s: &Scored, m: usize) -> (Vec<usize>, Vec<f64>) {
        let out = self.unselected(&s.sel);
        let m = m.min(out.len()).min(s.sel.len());
        let mut sel = s.sel.clone();
        let raw = s.raw.clone();
        if m == 0 {
            return (sel, raw);
        }
        let leave = sample(&mut self.rng, sel.len(), m).into_vec();
        let enter = sample(&mut self.rng, out.len(), m).into_vec();
        for (p, e) in leave.into_iter().zip(enter) {
            sel[p] = out[e];
        }
        canonical(sel, raw)
    }

    /// Swap-neighborhood descent with polished evaluation. Every single swap
    /// is screened by its decoded value; the most promising few are
    /// polished. With `first_improvement` the first polished improvement is
    /// taken, otherwise the best of the polished batch.
    pub fn local_search(&mut self, start: Scored, first_improvement: bool) -> Scored {
        let mut current = start;
        loop {
            if self.exhausted() {
                return current;
            }
            let mut screened = Vec::new();
            let out = self.unselected(&current.sel);
            for p in 0..current.sel.len() {
                for &a in &out {
                    let mut sel = current.sel.clone();
                    sel[p] = a;
                    let (sel, raw) = canonical(sel, current.raw.clone());
                    if let Some(s) = self.evaluate(sel, raw) {
                        screened.push(s);
                    }
                }
                if self.exhausted() {
                    return current;
                }
            }
            screened.sort_by(|a, b| a.obj.total_cmp(&b.obj));
            let mut next: Option<Scored> = None;
            for cand in screened.into_iter().take(LS_POLISH) {
                let Some(p) = self.polish_scored(&cand) else { continue };
                if p.obj < next.as_ref().map_or(current.obj, |n| n.obj) {
                    next = Some(p);
                    if first_improvement {
                        break;
                    }
                }
                if self.exhausted() {
                    break;
                }
            }
            match next {
                Some(n) => current = n,
                None => return current,
            }
        }
    }
}

/// Sorts a selection, carrying the scores along.
pub(crate) fn canonical(sel: Vec<usize>, raw: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut pairs: Vec<(usize, f64)> = sel.into_iter().zip(raw).collect();
    pairs.sort_by_key(|p| p.0);
    pairs.into_iter().unzip()
}

/// Top-`k` indices of a score vector, ties to the lower index; sorted.
pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut sel = idx[..k].to_vec();
    sel.sort_unstable();
    sel
}
