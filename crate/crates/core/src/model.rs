//! Mean-variance model with cardinality, buy-in and holding constraints.
//!
//! A portfolio is scored by its variance `w' Σ w` and expected return `μ' w`,
//! scalarized as `λ·risk − (1−λ)·return` for a weight `λ ∈ [0, 1]`.

use thiserror::Error;

/// Absolute tolerance used by every feasibility check.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
    #[error("infeasible constraint set: {0}")]
    InfeasibleInstance(String),
    #[error("repair infeasible: {0}")]
    RepairInfeasible(String),
    #[error("negative portfolio variance {0:e}")]
    NegativeVariance(f64),
    #[error("lambda step {0} does not divide [0, 1] into whole steps")]
    Grid(f64),
}

/// Expected returns and covariance of `n` assets.
///
/// The model keeps the per-asset standard deviations and the correlation
/// matrix it was built from; the covariance is always derived from them so
/// that the OR-Library representation round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetUniverse {
    n: usize,
    mu: Vec<f64>,
    stddev: Vec<f64>,
    corr: Vec<f64>,
    sigma: Vec<f64>,
}

impl AssetUniverse {
    /// Builds a universe from returns, standard deviations and a dense
    /// row-major correlation matrix. Only the upper triangle of `corr` is
    /// read; the lower triangle is mirrored from it.
    pub fn new(mu: Vec<f64>, stddev: Vec<f64>, corr: Vec<f64>) -> Result<Self, ModelError> {
        let n = mu.len();
        if n == 0 {
            return Err(ModelError::InvalidUniverse("no assets".into()));
        }
        if stddev.len() != n {
            return Err(ModelError::Shape { expected: n, actual: stddev.len() });
        }
        if corr.len() != n * n {
            return Err(ModelError::Shape { expected: n * n, actual: corr.len() });
        }
        if let Some(i) = mu.iter().position(|m| !m.is_finite()) {
            return Err(ModelError::InvalidUniverse(format!("non-finite return for asset {}", i + 1)));
        }
        if let Some(i) = stddev.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(ModelError::InvalidUniverse(format!("invalid stddev for asset {}", i + 1)));
        }
        let mut corr = corr;
        let mut sigma = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let rho = corr[i * n + j];
                if !(-1.0..=1.0).contains(&rho) {
                    return Err(ModelError::InvalidUniverse(format!(
                        "correlation ({}, {}) = {rho} outside [-1, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                corr[j * n + i] = rho;
                let s = rho * stddev[i] * stddev[j];
                sigma[i * n + j] = s;
                sigma[j * n + i] = s;
            }
        }
        Ok(Self { n, mu, stddev, corr, sigma })
    }

    /// Builds a universe from a dense covariance matrix by factoring it into
    /// standard deviations and correlations. Correlations are clamped to
    /// `[-1, 1]`; assets with zero variance get zero off-diagonal correlation.
    pub fn from_covariance(mu: Vec<f64>, cov: &[f64]) -> Result<Self, ModelError> {
        let n = mu.len();
        if cov.len() != n * n {
            return Err(ModelError::Shape { expected: n * n, actual: cov.len() });
        }
        let mut stddev = Vec::with_capacity(n);
        for i in 0..n {
            let v = cov[i * n + i];
            if !(v >= 0.0) {
                return Err(ModelError::InvalidUniverse(format!("negative variance for asset {}", i + 1)));
            }
            stddev.push(v.sqrt());
        }
        let mut corr = vec![0.0; n * n];
        for i in 0..n {
            corr[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let denom = stddev[i] * stddev[j];
                let rho = if denom > 0.0 { (cov[i * n + j] / denom).clamp(-1.0, 1.0) } else { 0.0 };
                corr[i * n + j] = rho;
                corr[j * n + i] = rho;
            }
        }
        Self::new(mu, stddev, corr)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn stddev(&self) -> &[f64] {
        &self.stddev
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.corr[i * self.n + j]
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n + j]
    }

    /// Row `i` of the covariance matrix.
    pub fn sigma_row(&self, i: usize) -> &[f64] {
        &self.sigma[i * self.n..(i + 1) * self.n]
    }

    /// Dense row-major covariance matrix.
    pub fn covariance(&self) -> &[f64] {
        &self.sigma
    }
}

/// Cardinality `k`, per-asset buy-in floors `eps` and caps `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    k: usize,
    eps: Vec<f64>,
    delta: Vec<f64>,
    tol: f64,
}

impl ConstraintSet {
    pub fn new(k: usize, eps: Vec<f64>, delta: Vec<f64>) -> Result<Self, ModelError> {
        let n = eps.len();
        if delta.len() != n {
            return Err(ModelError::Shape { expected: n, actual: delta.len() });
        }
        if k < 1 || k > n {
            return Err(ModelError::InfeasibleInstance(format!("cardinality {k} outside 1..={n}")));
        }
        for i in 0..n {
            let (lo, hi) = (eps[i], delta[i]);
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(ModelError::InfeasibleInstance(format!(
                    "asset {}: bounds [{lo}, {hi}] not within 0 <= eps <= delta <= 1",
                    i + 1
                )));
            }
        }
        let mut lows = eps.clone();
        lows.sort_by(f64::total_cmp);
        let mut highs = delta.clone();
        highs.sort_by(|a, b| b.total_cmp(a));
        let min_floor: f64 = lows[..k].iter().sum();
        let max_cap: f64 = highs[..k].iter().sum();
        if min_floor > 1.0 + DEFAULT_TOL || max_cap < 1.0 - DEFAULT_TOL {
            return Err(ModelError::InfeasibleInstance(format!(
                "no {k}-asset selection can hold a unit budget (floors {min_floor}, caps {max_cap})"
            )));
        }
        Ok(Self { k, eps, delta, tol: DEFAULT_TOL })
    }

    /// Same floor and cap for every one of `n` assets.
    pub fn uniform(n: usize, k: usize, eps: f64, delta: f64) -> Result<Self, ModelError> {
        Self::new(k, vec![eps; n], vec![delta; n])
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Weight vector `w` and selection indicator `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub weights: Vec<f64>,
    pub selection: Vec<bool>,
}

impl Portfolio {
    pub fn new(weights: Vec<f64>, selection: Vec<bool>) -> Result<Self, ModelError> {
        if weights.len() != selection.len() {
            return Err(ModelError::Shape { expected: weights.len(), actual: selection.len() });
        }
        Ok(Self { weights, selection })
    }

    /// Derives the selection from the weights: asset `i` is held iff `w_i > tol`.
    pub fn from_weights(weights: Vec<f64>, tol: f64) -> Self {
        let selection = weights.iter().map(|w| *w > tol).collect();
        Self { weights, selection }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Indices of held assets.
    pub fn selected(&self) -> Vec<usize> {
        self.selection.iter().enumerate().filter(|(_, z)| **z).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub budget_residual: f64,
    pub cardinality_actual: usize,
    /// `(asset index, magnitude by which the bound is exceeded)`.
    pub bound_violations: Vec<(usize, f64)>,
    /// Assets not selected but carrying weight.
    pub consistency_violations: Vec<usize>,
}

fn check_shape(expected: usize, actual: usize) -> Result<(), ModelError> {
    if expected != actual {
        return Err(ModelError::Shape { expected, actual });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::Domain(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// Portfolio variance `Σ_i Σ_j w_i w_j σ_ij`.
///
/// Values in `[-tol, 0)` are floating-point noise and clamp to zero; anything
/// more negative is an error.
pub fn portfolio_risk(u: &AssetUniverse, p: &Portfolio) -> Result<f64, ModelError> {
    check_shape(u.n(), p.n())?;
    let support: Vec<usize> = (0..p.n()).filter(|&i| p.weights[i] != 0.0).collect();
    let mut v = 0.0;
    for &i in &support {
        let row = u.sigma_row(i);
        let mut acc = 0.0;
        for &j in &support {
            acc += row[j] * p.weights[j];
        }
        v += p.weights[i] * acc;
    }
    if v < 0.0 {
        if v >= -DEFAULT_TOL {
            return Ok(0.0);
        }
        return Err(ModelError::NegativeVariance(v));
    }
    Ok(v)
}

/// Expected portfolio return `Σ_i w_i μ_i`.
pub fn portfolio_return(u: &AssetUniverse, p: &Portfolio) -> Result<f64, ModelError> {
    check_shape(u.n(), p.n())?;
    Ok(p.weights.iter().zip(u.mu()).map(|(w, m)| w * m).sum())
}

/// `λ·risk − (1−λ)·return`.
pub fn scalarize(risk: f64, ret: f64, lambda: f64) -> f64 {
    lambda * risk - (1.0 - lambda) * ret
}

pub fn scalarized_objective(u: &AssetUniverse, p: &Portfolio, lambda: f64) -> Result<f64, ModelError> {
    check_lambda(lambda)?;
    Ok(scalarize(portfolio_risk(u, p)?, portfolio_return(u, p)?, lambda))
}

/// Checks budget, exact cardinality, bounds and z/w consistency. Never fails;
/// dimension mismatches are reported as an infeasible portfolio.
pub fn check_feasibility(p: &Portfolio, c: &ConstraintSet) -> FeasibilityReport {
    let tol = c.tol();
    let n = c.n();
    if p.n() != n || p.selection.len() != n {
        return FeasibilityReport {
            feasible: false,
            budget_residual: f64::INFINITY,
            cardinality_actual: p.selection.iter().filter(|z| **z).count(),
            bound_violations: Vec::new(),
            consistency_violations: Vec::new(),
        };
    }
    let budget_residual = (p.weights.iter().sum::<f64>() - 1.0).abs();
    let cardinality_actual = p.selection.iter().filter(|z| **z).count();
    let mut bound_violations = Vec::new();
    let mut consistency_violations = Vec::new();
    for i in 0..n {
        let w = p.weights[i];
        let z = if p.selection[i] { 1.0 } else { 0.0 };
        let lo = c.eps()[i] * z;
        let hi = c.delta()[i] * z;
        if !w.is_finite() {
            bound_violations.push((i, f64::INFINITY));
        } else if w < lo - tol {
            bound_violations.push((i, lo - w));
        } else if w > hi + tol {
            bound_violations.push((i, w - hi));
        }
        if !p.selection[i] && !(w.abs() <= tol) {
            consistency_violations.push(i);
        }
    }
    let feasible = budget_residual <= tol
        && cardinality_actual == c.k()
        && bound_violations.is_empty()
        && consistency_violations.is_empty();
    FeasibilityReport { feasible, budget_residual, cardinality_actual, bound_violations, consistency_violations }
}

/// Maps a selection of `k` assets and nonnegative scores to feasible weights.
///
/// Each selected asset receives its floor plus a share of the remaining
/// budget proportional to its score (equal shares when all scores are zero).
/// Weights above their cap are clamped and the surplus is re-proportioned
/// over the unclamped assets until no cap is exceeded.
pub fn repair(selection: &[usize], raw: &[f64], c: &ConstraintSet) -> Result<Portfolio, ModelError> {
    let n = c.n();
    let k = c.k();
    check_shape(k, selection.len())?;
    check_shape(k, raw.len())?;
    let mut seen = vec![false; n];
    for &i in selection {
        if i >= n {
            return Err(ModelError::Domain(format!("asset index {i} out of range 0..{n}")));
        }
        if seen[i] {
            return Err(ModelError::Domain(format!("asset index {i} selected twice")));
        }
        seen[i] = true;
    }
    if let Some(r) = raw.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(ModelError::Domain(format!("score {r} is not a nonnegative finite number")));
    }
    let floor_sum: f64 = selection.iter().map(|&i| c.eps()[i]).sum();
    let cap_sum: f64 = selection.iter().map(|&i| c.delta()[i]).sum();
    if floor_sum > 1.0 + c.tol() || cap_sum < 1.0 - c.tol() {
        return Err(ModelError::RepairInfeasible(format!(
            "selection floors sum to {floor_sum} and caps to {cap_sum}"
        )));
    }

    let mut weights = vec![0.0; n];
    // positions into `selection` still free to absorb budget
    let mut free: Vec<usize> = (0..k).collect();
    let mut budget = 1.0;
    for _ in 0..=n {
        let floors: f64 = free.iter().map(|&p| c.eps()[selection[p]]).sum();
        let scores: f64 = free.iter().map(|&p| raw[p]).sum();
        let spare = (budget - floors).max(0.0);
        for &p in &free {
            let share = if scores > 0.0 { raw[p] / scores } else { 1.0 / free.len() as f64 };
            weights[selection[p]] = c.eps()[selection[p]] + share * spare;
        }
        let (clamped, rest): (Vec<usize>, Vec<usize>) =
            free.iter().partition(|&&p| weights[selection[p]] > c.delta()[selection[p]]);
        if clamped.is_empty() {
            let mut sel = vec![false; n];
            for &i in selection {
                sel[i] = true;
            }
            return Ok(Portfolio { weights, selection: sel });
        }
        for &p in &clamped {
            let i = selection[p];
            weights[i] = c.delta()[i];
            budget -= c.delta()[i];
        }
        free = rest;
        if free.is_empty() {
            return Err(ModelError::RepairInfeasible("every selected asset hit its cap".into()));
        }
    }
    Err(ModelError::RepairInfeasible("cap redistribution did not reach a fixed point".into()))
}

/// `{0, Δλ, 2Δλ, …, 1}`. Values are computed as `i / steps`, so both
/// endpoints are exact.
pub fn lambda_grid(step: f64) -> Result<Vec<f64>, ModelError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(ModelError::Grid(step));
    }
    let inv = 1.0 / step;
    let steps = inv.round();
    if (inv - steps).abs() > 1e-9 {
        return Err(ModelError::Grid(step));
    }
    let steps = steps as usize;
    Ok((0..=steps).map(|i| i as f64 / steps as f64).collect())
}
