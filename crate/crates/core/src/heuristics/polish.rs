//! Continuous weight refinement for a fixed asset selection.
//!
//! Minimizes `λ·w'Σw − (1−λ)·μ'w` over `{Σw = 1, ε ≤ w ≤ δ}` restricted to
//! the selected assets, by accelerated projected gradient with restarts.

use crate::model::{AssetUniverse, ConstraintSet};

pub(crate) struct SubsetQp {
    m: usize,
    sigma: Vec<f64>,
    mu: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    lambda: f64,
    lipschitz: f64,
}

pub(crate) struct PolishResult {
    pub weights: Vec<f64>,
    pub iterations: u64,
}

impl SubsetQp {
    pub fn new(u: &AssetUniverse, c: &ConstraintSet, sel: &[usize], lambda: f64) -> Self {
        let m = sel.len();
        let mut sigma = vec![0.0; m * m];
        for (a, &i) in sel.iter().enumerate() {
            for (b, &j) in sel.iter().enumerate() {
                sigma[a * m + b] = u.sigma(i, j);
            }
        }
        // Gershgorin bound on the largest eigenvalue of 2λΣ
        let row_max = (0..m)
            .map(|a| sigma[a * m..(a + 1) * m].iter().map(|s| s.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            m,
            sigma,
            mu: sel.iter().map(|&i| u.mu()[i]).collect(),
            lo: sel.iter().map(|&i| c.eps()[i]).collect(),
            hi: sel.iter().map(|&i| c.delta()[i]).collect(),
            lambda,
            lipschitz: 2.0 * lambda * row_max,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let m = self.m;
        let mut risk = 0.0;
        for a in 0..m {
            let row = &self.sigma[a * m..(a + 1) * m];
            risk += x[a] * row.iter().zip(x).map(|(s, w)| s * w).sum::<f64>();
        }
        let ret: f64 = self.mu.iter().zip(x).map(|(m, w)| m * w).sum();
        self.lambda * risk - (1.0 - self.lambda) * ret
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let m = self.m;
        for a in 0..m {
            let row = &self.sigma[a * m..(a + 1) * m];
            out[a] = 2.0 * self.lambda * row.iter().zip(x).map(|(s, w)| s * w).sum::<f64>()
                - (1.0 - self.lambda) * self.mu[a];
        }
    }

    /// Euclidean projection onto `{Σx = 1, lo ≤ x ≤ hi}`.
    ///
    /// `Σ clamp(v − τ)` is piecewise linear and non-increasing in `τ` with
    /// breakpoints at `v − hi` and `v − lo`; the root lies between two
    /// consecutive breakpoints where it is found by linear interpolation.
    fn project(&self, v: &[f64], out: &mut [f64]) {
        let total = |tau: f64| -> f64 {
            (0..self.m).map(|i| (v[i] - tau).clamp(self.lo[i], self.hi[i])).sum()
        };
        let mut bps: Vec<f64> = (0..self.m).flat_map(|i| [v[i] - self.hi[i], v[i] - self.lo[i]]).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let sums: Vec<f64> = bps.iter().map(|&t| total(t)).collect();
        let tau = match sums.iter().position(|&s| s <= 1.0) {
            // every breakpoint already leaves the sum below one: all at hi
            Some(0) => bps[0],
            Some(k) => {
                let (t0, t1, s0, s1) = (bps[k - 1], bps[k], sums[k - 1], sums[k]);
                if s0 == s1 {
                    t0
                } else {
                    t0 + (s0 - 1.0) * (t1 - t0) / (s0 - s1)
                }
            }
            None => *bps.last().unwrap(),
        };
        for i in 0..self.m {
            out[i] = (v[i] - tau).clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Exact minimizer of the linear objective: floors everywhere, then the
    /// remaining budget to the highest returns up to their caps.
    fn linear_optimum(&self) -> Vec<f64> {
        let mut x = self.lo.clone();
        let mut spare = 1.0 - x.iter().sum::<f64>();
        let mut order: Vec<usize> = (0..self.m).collect();
        order.sort_by(|&a, &b| self.mu[b].total_cmp(&self.mu[a]).then(a.cmp(&b)));
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

    pub fn solve(&self, warm: Option<&[f64]>, tol: f64, max_iter: u64) -> PolishResult {
        if self.lipschitz <= 0.0 {
            return PolishResult { weights: self.linear_optimum(), iterations: 1 };
        }
        let m = self.m;
        let mut x = vec![0.0; m];
        match warm {
            Some(w) => self.project(w, &mut x),
            None => self.project(&vec![1.0 / m as f64; m], &mut x),
        }
        let step = 1.0 / self.lipschitz;
        let mut fx = self.objective(&x);
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut g = vec![0.0; m];
        let mut trial = vec![0.0; m];
        let mut x_new = vec![0.0; m];
        let mut iterations = 0;
        while iterations < max_iter {
            iterations += 1;
            self.gradient(&y, &mut g);
            for i in 0..m {
                trial[i] = y[i] - step * g[i];
            }
            self.project(&trial, &mut x_new);
            let f_new = self.objective(&x_new);
            if f_new > fx {
                // momentum overshot: restart from the last accepted point
                if y == x {
                    break;
                }
                y.copy_from_slice(&x);
                t = 1.0;
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let mut diff = 0.0f64;
            for i in 0..m {
                diff = diff.max((x_new[i] - x[i]).abs());
                y[i] = x_new[i] + beta * (x_new[i] - x[i]);
            }
            x.copy_from_slice(&x_new);
            fx = f_new;
            t = t_next;
            if diff <= tol {
                break;
            }
        }
        PolishResult { weights: x, iterations }
    }
}
