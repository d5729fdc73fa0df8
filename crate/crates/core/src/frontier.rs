//! Pareto machinery over `(risk, return)` points.
//!
//! Dominance works in minimization space `(risk, −return)`. Distances for
//! IGD are taken in raw `(return, variance)` units unless normalization is
//! requested.

use std::cmp::Ordering;

use thiserror::Error;

use crate::dataio::{ReferenceFrontier, SolutionRecord};
use crate::model::scalarize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontierError {
    #[error("approximation set is empty, score is infinite")]
    ScoreInfinite,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("percentage deviation undefined: interpolated reference value is zero")]
    DivByZeroPE,
    #[error("lambda grid mismatch: {0}")]
    Grid(String),
    #[error("no defined values to summarize")]
    Empty,
}

/// Where a point came from: algorithm id, scalarization weight, and an index
/// into whatever collection holds the full portfolio.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub algorithm: String,
    pub lambda: f64,
    pub handle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectivePoint {
    pub risk: f64,
    pub ret: f64,
    pub provenance: Provenance,
}

impl ObjectivePoint {
    pub fn new(risk: f64, ret: f64, provenance: Provenance) -> Self {
        Self { risk, ret, provenance }
    }

    /// Point given directly in minimization coordinates `(risk, −return)`.
    pub fn from_objectives(f1: f64, f2: f64) -> Self {
        Self { risk: f1, ret: -f2, provenance: Provenance::default() }
    }

    pub fn objectives(&self) -> [f64; 2] {
        [self.risk, -self.ret]
    }

    pub fn scalarized(&self, lambda: f64) -> f64 {
        scalarize(self.risk, self.ret, lambda)
    }
}

/// Points of a solution set, with `handle` set to the record index.
pub fn points_from_records(records: &[SolutionRecord]) -> Vec<ObjectivePoint> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            ObjectivePoint::new(r.risk, r.ret, Provenance { algorithm: r.algorithm.clone(), lambda: r.lambda, handle: i })
        })
        .collect()
}

/// `a` is strictly better than `b` in both objectives.
pub fn strictly_dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    let (fa, fb) = (a.objectives(), b.objectives());
    fa[0] < fb[0] && fa[1] < fb[1]
}

fn canonical_order(a: &ObjectivePoint, b: &ObjectivePoint) -> Ordering {
    a.risk
        .total_cmp(&b.risk)
        .then(a.ret.total_cmp(&b.ret))
        .then_with(|| a.provenance.algorithm.cmp(&b.provenance.algorithm))
        .then(a.provenance.lambda.total_cmp(&b.provenance.lambda))
        .then(a.provenance.handle.cmp(&b.provenance.handle))
}

/// Points not strictly dominated by any other point, sorted by risk, then
/// return, then algorithm id.
pub fn non_dominated_subset(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    let mut order: Vec<&ObjectivePoint> = points.iter().collect();
    order.sort_by(|a, b| a.risk.total_cmp(&b.risk));
    let mut kept = Vec::new();
    // smallest −return among points with strictly smaller risk
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && order[end].risk == order[start].risk {
            end += 1;
        }
        let mut group_best = f64::INFINITY;
        for p in &order[start..end] {
            let f2 = -p.ret;
            if !(best_before < f2) {
                kept.push((*p).clone());
            }
            group_best = group_best.min(f2);
        }
        best_before = best_before.min(group_best);
        start = end;
    }
    kept.sort_by(canonical_order);
    kept
}

/// Inverted generational distance of `h` against reference `p`.
pub fn igd(p: &ReferenceFrontier, h: &[ObjectivePoint]) -> Result<f64, FrontierError> {
    igd_with(p, h, false)
}

/// IGD, optionally with both axes scaled by the reference frontier's range.
pub fn igd_with(p: &ReferenceFrontier, h: &[ObjectivePoint], normalize: bool) -> Result<f64, FrontierError> {
    if p.is_empty() {
        return Err(FrontierError::Domain("reference frontier is empty".into()));
    }
    if h.is_empty() {
        return Err(FrontierError::ScoreInfinite);
    }
    let (sr, sv) = if normalize {
        let range = |f: fn(&(f64, f64)) -> f64| {
            let lo = p.points().iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = p.points().iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                hi - lo
            } else {
                1.0
            }
        };
        (range(|x| x.0), range(|x| x.1))
    } else {
        (1.0, 1.0)
    };
    let total: f64 = p
        .points()
        .iter()
        .map(|&(r_ref, v_ref)| {
            h.iter()
                .map(|y| {
                    let dr = (r_ref - y.ret) / sr;
                    let dv = (v_ref - y.risk) / sv;
                    (dr * dr + dv * dv).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / p.len() as f64)
}

/// Area dominated by `h` and bounded by `reference`, both in minimization
/// coordinates.
pub fn hypervolume_2d(h: &[ObjectivePoint], reference: [f64; 2]) -> Result<f64, FrontierError> {
    let mut pts: Vec<[f64; 2]> = h.iter().map(ObjectivePoint::objectives).collect();
    if let Some(p) = pts.iter().find(|p| !(p[0] <= reference[0] && p[1] <= reference[1])) {
        return Err(FrontierError::Domain(format!("point {p:?} lies beyond reference {reference:?}")));
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut floor = reference[1];
    for p in pts {
        if p[1] < floor {
            area += (reference[0] - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    Ok(area)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    // first index with xs[k] >= x; k >= 1 here
    let k = xs.partition_point(|&v| v < x);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Percentage deviation of a point from the reference frontier: the smaller
/// of the vertical (return at equal variance) and horizontal (variance at
/// equal return) relative gaps, in percent.
pub fn percentage_deviation(pt: &ObjectivePoint, uef: &ReferenceFrontier) -> Result<f64, FrontierError> {
    let sorted = uef.sorted_by_variance();
    let vars: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let rets: Vec<f64> = sorted.iter().map(|p| p.0).collect();
    let r_hat = interpolate(&vars, &rets, pt.risk);
    let v_hat = interpolate(&rets, &vars, pt.ret);
    if r_hat == 0.0 || v_hat == 0.0 {
        return Err(FrontierError::DivByZeroPE);
    }
    let vertical = 100.0 * (pt.ret - r_hat).abs() / r_hat.abs();
    let horizontal = 100.0 * (pt.risk - v_hat).abs() / v_hat.abs();
    Ok(vertical.min(horizontal))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Entries that contributed a defined PE.
    pub count: usize,
    /// Entries whose PE was undefined.
    pub undefined: usize,
    /// Grid steps with no entry.
    pub missing: usize,
}

/// Summary statistics of [`percentage_deviation`] over every entry of `v`.
pub fn mpe_stats(v: &VLambdaSet, uef: &ReferenceFrontier) -> Result<MpeStats, FrontierError> {
    let mut values = Vec::new();
    let mut undefined = 0;
    for (lambda, entry) in v.iter() {
        if let Some(pt) = entry {
            match percentage_deviation(pt, uef) {
                Ok(pe) => values.push(pe),
                Err(_) => {
                    log::warn!("percentage deviation undefined at lambda {lambda}; excluded");
                    undefined += 1;
                }
            }
        }
    }
    if values.is_empty() {
        return Err(FrontierError::Empty);
    }
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let median = if m % 2 == 1 { values[m / 2] } else { 0.5 * (values[m / 2 - 1] + values[m / 2]) };
    Ok(MpeStats {
        mean: values.iter().sum::<f64>() / m as f64,
        median,
        min: values[0],
        max: values[m - 1],
        count: m,
        undefined,
        missing: v.missing(),
    })
}

/// Best point per grid `λ`. Dominated entries are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct VLambdaSet {
    pub grid: Vec<f64>,
    pub entries: Vec<Option<ObjectivePoint>>,
}

impl VLambdaSet {
    pub fn iter(&self) -> impl Iterator<Item = (f64, Option<&ObjectivePoint>)> + '_ {
        self.grid.iter().copied().zip(self.entries.iter().map(Option::as_ref))
    }

    pub fn points(&self) -> Vec<ObjectivePoint> {
        self.entries.iter().flatten().cloned().collect()
    }

    pub fn missing(&self) -> usize {
        self.entries.iter().filter(|e| e.is_none()).count()
    }
}

/// A solution offered for one `λ` step.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCandidate {
    pub point: ObjectivePoint,
    pub feasible: bool,
}

/// Lower objective wins; exact ties go to lower risk, then to the earlier
/// position.
fn better_at(lambda: f64, a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    match a.scalarized(lambda).total_cmp(&b.scalarized(lambda)) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.risk < b.risk,
    }
}

/// Picks, per `λ`, the feasible candidate minimizing the scalarized
/// objective. `candidates[i]` holds the solutions offered at `grid[i]`.
pub fn build_vlambda(grid: &[f64], candidates: &[Vec<LambdaCandidate>]) -> Result<VLambdaSet, FrontierError> {
    if grid.len() != candidates.len() {
        return Err(FrontierError::Grid(format!("{} grid steps but {} candidate sets", grid.len(), candidates.len())));
    }
    let entries = grid
        .iter()
        .zip(candidates)
        .map(|(&lambda, cands)| {
            let mut best: Option<&ObjectivePoint> = None;
            for c in cands.iter().filter(|c| c.feasible) {
                if best.is_none_or(|b| better_at(lambda, &c.point, b)) {
                    best = Some(&c.point);
                }
            }
            best.cloned()
        })
        .collect();
    Ok(VLambdaSet { grid: grid.to_vec(), entries })
}

/// Builds one algorithm's V(λ) from its solution records.
pub fn vlambda_from_records(grid: &[f64], records: &[SolutionRecord]) -> Result<VLambdaSet, FrontierError> {
    let points = points_from_records(records);
    let mut candidates: Vec<Vec<LambdaCandidate>> = vec![Vec::new(); grid.len()];
    for (r, p) in records.iter().zip(points) {
        let Some(i) = grid.iter().position(|&l| (l - r.lambda).abs() <= 1e-12) else {
            return Err(FrontierError::Grid(format!("lambda {} is not on the grid", r.lambda)));
        };
        candidates[i].push(LambdaCandidate { point: p, feasible: r.feasible });
    }
    build_vlambda(grid, &candidates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub algorithm: String,
    /// Grid steps this algorithm won.
    pub wins: usize,
    /// Grid steps where it tied for the best objective.
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolResult {
    pub pooled: VLambdaSet,
    pub contributions: Vec<Contribution>,
    /// Grid steps where two or more algorithms tied for the best objective.
    pub tied_steps: usize,
}

impl PoolResult {
    /// `wins/steps` labels, e.g. `19/51`.
    pub fn fraction(&self, c: &Contribution) -> String {
        format!("{}/{}", c.wins, self.pooled.grid.len())
    }
}

/// Per `λ`, the entry with the lowest objective across algorithms wins.
/// Exact ties go to lower risk, then to the algorithm listed first.
pub fn pool_vlambda(sets: &[(String, VLambdaSet)]) -> Result<PoolResult, FrontierError> {
    let Some((_, first)) = sets.first() else {
        return Err(FrontierError::Domain("nothing to pool".into()));
    };
    let grid = first.grid.clone();
    for (alg, s) in sets {
        if s.grid != grid {
            return Err(FrontierError::Grid(format!("{alg} was swept on a different lambda grid")));
        }
    }
    let mut contributions: Vec<Contribution> =
        sets.iter().map(|(a, _)| Contribution { algorithm: a.clone(), wins: 0, ties: 0 }).collect();
    let mut entries = Vec::with_capacity(grid.len());
    let mut tied_steps = 0;
    for (step, &lambda) in grid.iter().enumerate() {
        let mut winner: Option<usize> = None;
        for (a, (_, s)) in sets.iter().enumerate() {
            if let Some(p) = &s.entries[step] {
                if winner.is_none_or(|w| better_at(lambda, p, sets[w].1.entries[step].as_ref().unwrap())) {
                    winner = Some(a);
                }
            }
        }
        let Some(w) = winner else {
            entries.push(None);
            continue;
        };
        let best = sets[w].1.entries[step].clone().unwrap();
        let target = best.scalarized(lambda);
        let tied: Vec<usize> = sets
            .iter()
            .enumerate()
            .filter(|(_, (_, s))| s.entries[step].as_ref().is_some_and(|p| p.scalarized(lambda) == target))
            .map(|(a, _)| a)
            .collect();
        if tied.len() > 1 {
            tied_steps += 1;
            for a in tied {
                contributions[a].ties += 1;
            }
        }
        contributions[w].wins += 1;
        entries.push(Some(best));
    }
    Ok(PoolResult { pooled: VLambdaSet { grid, entries }, contributions, tied_steps })
}

/// Leave-one-out IGD improvement per algorithm, in percent:
/// `100·(IGD(P, H without a) − IGD(P, H all)) / IGD(P, H all)`.
/// An infinite value marks a zero pooled IGD (or an empty leave-one-out set).
pub fn igd_contribution(
    all_sets: &[(String, Vec<ObjectivePoint>)],
    p: &ReferenceFrontier,
    normalize: bool,
) -> Result<Vec<(String, f64)>, FrontierError> {
    if all_sets.len() < 2 {
        return Err(FrontierError::Domain("IGD contribution needs at least two algorithms".into()));
    }
    let pooled: Vec<ObjectivePoint> = all_sets.iter().flat_map(|(_, pts)| pts.iter().cloned()).collect();
    let all = igd_with(p, &non_dominated_subset(&pooled), normalize)?;
    all_sets
        .iter()
        .enumerate()
        .map(|(skip, (alg, _))| {
            let rest: Vec<ObjectivePoint> = all_sets
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .flat_map(|(_, (_, pts))| pts.iter().cloned())
                .collect();
            let without = match igd_with(p, &non_dominated_subset(&rest), normalize) {
                Ok(v) => v,
                Err(FrontierError::ScoreInfinite) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let pct = if all == 0.0 {
                if without == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                100.0 * (without - all) / all
            };
            Ok((alg.clone(), pct))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(risk: f64, ret: f64) -> ObjectivePoint {
        ObjectivePoint::new(risk, ret, Provenance::default())
    }

    fn obj(f1: f64, f2: f64) -> ObjectivePoint {
        ObjectivePoint::from_objectives(f1, f2)
    }

    fn uef(points: &[(f64, f64)]) -> ReferenceFrontier {
        ReferenceFrontier::new(points.to_vec()).unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(strictly_dominates(&obj(1.0, 1.0), &obj(2.0, 2.0)));
        assert!(!strictly_dominates(&obj(1.0, 2.0), &obj(1.0, 3.0)));
        assert!(!strictly_dominates(&obj(1.0, 1.0), &obj(1.0, 1.0)));
    }

    #[test]
    fn non_dominated_examples() {
        let h = non_dominated_subset(&[obj(1.0, 1.0), obj(2.0, 2.0)]);
        assert_eq!(h, vec![obj(1.0, 1.0)]);
        let h = non_dominated_subset(&[obj(1.0, 2.0), obj(2.0, 1.0)]);
        assert_eq!(h.len(), 2);
        // equal in one coordinate: neither strictly dominates
        let h = non_dominated_subset(&[obj(1.0, 2.0), obj(1.0, 3.0), obj(0.5, 3.0)]);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn igd_examples() {
        let p = uef(&[(0.0, 0.0), (1.0, 1.0)]);
        let same: Vec<ObjectivePoint> = p.points().iter().map(|&(r, v)| pt(v, r)).collect();
        assert_eq!(igd(&p, &same).unwrap(), 0.0);
        let h = vec![pt(0.0, 0.0)];
        assert_relative_eq!(igd(&p, &h).unwrap(), std::f64::consts::SQRT_2 / 2.0, epsilon = 1e-15);
        assert_eq!(igd(&p, &[]), Err(FrontierError::ScoreInfinite));
    }

    #[test]
    fn igd_normalized_scales_axes() {
        let p = uef(&[(0.0, 0.0), (2.0, 4.0)]);
        let h = vec![pt(0.0, 0.0)];
        // distances (0, sqrt(1 + 1)) in normalized units
        assert_relative_eq!(igd_with(&p, &h, true).unwrap(), std::f64::consts::SQRT_2 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume_2d(&[obj(0.0, 0.0)], [1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(hypervolume_2d(&[obj(0.0, 0.5), obj(0.5, 0.0)], [1.0, 1.0]).unwrap(), 0.75);
        assert_eq!(hypervolume_2d(&[], [1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(hypervolume_2d(&[obj(1.5, 0.0)], [1.0, 1.0]), Err(FrontierError::Domain(_))));
    }

    #[test]
    fn pe_on_vertex_is_zero() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004), (0.005, 0.0012)]);
        assert_eq!(percentage_deviation(&pt(0.0004, 0.003), &f).unwrap(), 0.0);
    }

    #[test]
    fn pe_horizontal_ten_percent() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004), (0.005, 0.0012)]);
        let pe = percentage_deviation(&pt(0.0004 * 1.1, 0.003), &f).unwrap();
        assert!(pe <= 10.0 + 1e-9);
        // horizontal component alone
        let v_hat = 0.0004;
        assert_relative_eq!(100.0 * (0.0004f64 * 1.1 - v_hat).abs() / v_hat, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn pe_clamps_outside_span() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004)]);
        // beyond the high-variance end: vertical compares against the last return
        let pe = percentage_deviation(&pt(0.001, 0.0027), &f).unwrap();
        let vertical = 100.0 * (0.0027f64 - 0.003).abs() / 0.003;
        let horizontal = {
            let v_hat = 0.0001 + (0.0004 - 0.0001) * (0.0027 - 0.001) / (0.003 - 0.001);
            100.0 * (0.001f64 - v_hat).abs() / v_hat
        };
        assert_relative_eq!(pe, vertical.min(horizontal), epsilon = 1e-12);
    }

    #[test]
    fn pe_zero_denominator() {
        let f = uef(&[(0.0, 0.0), (0.003, 0.0004)]);
        assert_eq!(percentage_deviation(&pt(0.0, 0.0), &f), Err(FrontierError::DivByZeroPE));
    }

    fn vset(grid: &[f64], pts: Vec<Option<ObjectivePoint>>) -> VLambdaSet {
        VLambdaSet { grid: grid.to_vec(), entries: pts }
    }

    #[test]
    fn mpe_on_frontier_is_zero() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004), (0.005, 0.0012)]);
        let v = vset(&[0.0, 0.5, 1.0], f.points().iter().map(|&(r, v)| Some(pt(v, r))).collect());
        let s = mpe_stats(&v, &f).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(s.count, 3);
    }

    #[test]
    fn mpe_single_point() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004)]);
        let v = vset(&[0.0], vec![Some(pt(0.0003, 0.002))]);
        let s = mpe_stats(&v, &f).unwrap();
        assert_eq!(s.mean, s.median);
        assert_eq!(s.min, s.max);
        assert_eq!(s.mean, s.min);
    }

    #[test]
    fn mpe_even_median_and_missing() {
        let f = uef(&[(0.001, 0.0001), (0.003, 0.0004)]);
        let v = vset(
            &[0.0, 0.5, 1.0],
            vec![Some(pt(0.0001, 0.0009)), None, Some(pt(0.0004, 0.0027))],
        );
        let s = mpe_stats(&v, &f).unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.missing, 1);
        assert_relative_eq!(s.median, 0.5 * (s.min + s.max), epsilon = 1e-12);
    }

    fn cand(risk: f64, ret: f64, feasible: bool) -> LambdaCandidate {
        LambdaCandidate { point: pt(risk, ret), feasible }
    }

    #[test]
    fn vlambda_selection_rules() {
        // λ = 1: objective is the risk
        let v = build_vlambda(&[1.0], &[vec![cand(0.2, 0.0, true), cand(0.1, 0.0, true)]]).unwrap();
        assert_eq!(v.entries[0].as_ref().unwrap().risk, 0.1);
        // infeasible ignored; empty step marked missing
        let v = build_vlambda(&[1.0, 0.0], &[vec![cand(0.05, 0.0, false), cand(0.1, 0.0, true)], vec![]]).unwrap();
        assert_eq!(v.entries[0].as_ref().unwrap().risk, 0.1);
        assert!(v.entries[1].is_none());
        // λ = 0.5 tie (objective 0): lower risk wins
        let v = build_vlambda(&[0.5], &[vec![cand(0.2, 0.2, true), cand(0.1, 0.1, true)]]).unwrap();
        assert_eq!(v.entries[0].as_ref().unwrap().risk, 0.1);
        // full tie: earlier candidate kept
        let mut a = cand(0.1, 0.1, true);
        a.point.provenance.handle = 7;
        let v = build_vlambda(&[0.5], &[vec![a, cand(0.1, 0.1, true)]]).unwrap();
        assert_eq!(v.entries[0].as_ref().unwrap().provenance.handle, 7);
        assert!(build_vlambda(&[0.0, 1.0], &[vec![]]).is_err());
    }

    #[test]
    fn pooling_single_and_identical() {
        let grid = crate::model::lambda_grid(0.02).unwrap();
        let s = vset(&grid, grid.iter().map(|&l| Some(pt(0.001 + l * 1e-3, 0.002 + l * 1e-3))).collect());
        let r = pool_vlambda(&[("HC".into(), s.clone())]).unwrap();
        assert_eq!(r.contributions[0].wins, 51);
        assert_eq!(r.fraction(&r.contributions[0]), "51/51");

        let r = pool_vlambda(&[("DE".into(), s.clone()), ("PSO".into(), s.clone())]).unwrap();
        assert_eq!(r.contributions[0].wins, 51);
        assert_eq!(r.contributions[1].wins, 0);
        assert_eq!(r.tied_steps, 51);
        assert_eq!(r.contributions[1].ties, 51);

        let other = vset(&grid[..50], vec![None; 50]);
        assert!(matches!(pool_vlambda(&[("A".into(), s), ("B".into(), other)]), Err(FrontierError::Grid(_))));
    }

    #[test]
    fn pooling_picks_lower_objective() {
        let grid = [0.0, 1.0];
        let a = vset(&grid, vec![Some(pt(0.01, 0.05)), Some(pt(0.01, 0.05))]);
        let b = vset(&grid, vec![Some(pt(0.001, 0.01)), Some(pt(0.001, 0.01))]);
        let r = pool_vlambda(&[("A".into(), a), ("B".into(), b)]).unwrap();
        // λ = 0 maximizes return (A), λ = 1 minimizes risk (B)
        assert_eq!(r.contributions[0].wins, 1);
        assert_eq!(r.contributions[1].wins, 1);
        assert_eq!(r.tied_steps, 0);
    }

    #[test]
    fn igd_contribution_dominated_algorithm_is_zero() {
        let p = uef(&[(0.001, 0.0001), (0.003, 0.0004)]);
        let good = vec![pt(0.0001, 0.001), pt(0.0004, 0.003)];
        let bad = vec![pt(0.0002, 0.0009), pt(0.0005, 0.0029)];
        let r = igd_contribution(&[("GOOD".into(), good), ("BAD".into(), bad)], &p, false).unwrap();
        assert_eq!(r[1].1, 0.0);
        // GOOD matches P exactly, pooled IGD is zero
        assert_eq!(r[0].1, f64::INFINITY);
    }

    #[test]
    fn igd_contribution_symmetric() {
        let p = uef(&[(0.0, 0.0), (1.0, 1.0)]);
        let a = vec![pt(0.2, 0.0)];
        let b = vec![pt(1.0, 0.8)];
        let r = igd_contribution(&[("A".into(), a), ("B".into(), b)], &p, false).unwrap();
        assert!(r[0].1 > 0.0);
        assert_relative_eq!(r[0].1, r[1].1, epsilon = 1e-12);
        assert!(igd_contribution(&[("A".into(), vec![pt(0.0, 0.0)])], &p, false).is_err());
    }

    fn brute_nd(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
        let mut out: Vec<ObjectivePoint> = points
            .iter()
            .filter(|y| !points.iter().any(|z| strictly_dominates(z, y)))
            .cloned()
            .collect();
        out.sort_by(canonical_order);
        out
    }

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<ObjectivePoint>> {
        prop::collection::vec((0u8..20, 0u8..20), 0..max)
            .prop_map(|v| v.into_iter().map(|(a, b)| obj(a as f64, b as f64)).collect())
    }

    proptest! {
        #[test]
        fn nd_matches_pairwise_and_is_idempotent(points in arb_points(60)) {
            let h = non_dominated_subset(&points);
            prop_assert_eq!(&h, &brute_nd(&points));
            prop_assert_eq!(non_dominated_subset(&h), h);
        }

        #[test]
        fn adding_dominated_point_changes_nothing(points in arb_points(30), dx in 0.1f64..3.0, dy in 0.1f64..3.0, pick in 0usize..30) {
            prop_assume!(!points.is_empty());
            let base = &points[pick % points.len()];
            let worse = obj(base.risk + dx, -base.ret + dy);
            let mut more = points.clone();
            more.push(worse);
            prop_assert_eq!(non_dominated_subset(&more), non_dominated_subset(&points));
        }

        #[test]
        fn igd_never_worsens_with_more_points(a in arb_points(20), b in arb_points(20)) {
            prop_assume!(!a.is_empty());
            let p = uef(&[(0.0, 0.0), (-5.0, 5.0), (-10.0, 12.0)].iter().map(|&(x, y)| (-x, y)).collect::<Vec<_>>());
            let mut ab = a.clone();
            ab.extend(b);
            prop_assert!(igd(&p, &ab).unwrap() <= igd(&p, &a).unwrap());
        }

        #[test]
        fn hypervolume_monotone(a in arb_points(20), b in arb_points(20)) {
            let mut ab = a.clone();
            ab.extend(b);
            let r = [20.0, 20.0];
            prop_assert!(hypervolume_2d(&ab, r).unwrap() >= hypervolume_2d(&a, r).unwrap());
        }

        #[test]
        fn dominance_is_strict_partial_order(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3)) {
            let p: Vec<ObjectivePoint> = pts.iter().map(|&(a, b)| obj(a, b)).collect();
            for x in &p {
                prop_assert!(!strictly_dominates(x, x));
                for y in &p {
                    prop_assert!(!(strictly_dominates(x, y) && strictly_dominates(y, x)));
                    for z in &p {
                        if strictly_dominates(x, y) && strictly_dominates(y, z) {
                            prop_assert!(strictly_dominates(x, z));
                        }
                    }
                }
            }
        }

        #[test]
        fn contributions_sum_to_steps(seed in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 33)) {
            let grid = crate::model::lambda_grid(0.1).unwrap();
            let sets: Vec<(String, VLambdaSet)> = (0..3).map(|a| {
                let entries = grid.iter().enumerate().map(|(i, _)| {
                    let (r, m, _) = seed[a * 11 + i];
                    Some(pt(r, m))
                }).collect();
                (format!("A{a}"), vset(&grid, entries))
            }).collect();
            let r = pool_vlambda(&sets).unwrap();
            prop_assert_eq!(r.contributions.iter().map(|c| c.wins).sum::<usize>(), grid.len());
        }
    }
}
