//! Particle swarm over score vectors with a ring topology and heavy-tailed
//! jumps.
//!
//! 40 particles move in `[0, 1]^n`; a particle's selection is its `k`
//! largest coordinates. Each particle follows the best of itself and its two
//! ring neighbors (inertia 0.7, cognitive and social weights 1.5). One
//! update in twenty also kicks a single coordinate by a Pareto(α = 1.5)
//! distributed step. Every 20 iterations the global best goes through
//! single-swap descent.

use rand::Rng;
use rand_distr::{Distribution, Pareto};

use super::search::{top_k, Context, Scored};

const PARTICLES: usize = 40;
const INERTIA: f64 = 0.7;
const COGNITIVE: f64 = 1.5;
const SOCIAL: f64 = 1.5;
const VMAX: f64 = 0.5;
const JUMP_RATE: f64 = 0.05;
const JUMP_SCALE: f64 = 0.1;
const LOCAL_SEARCH_EVERY: usize = 20;

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best: Scored,
}

fn decode(ctx: &mut Context<'_>, x: &[f64], prev: Option<&Scored>) -> Option<Scored> {
    let sel = top_k(x, ctx.k());
    let raw: Vec<f64> = sel.iter().map(|&i| x[i]).collect();
    let changed = prev.is_none_or(|p| p.sel != sel);
    let s = ctx.evaluate(sel, raw)?;
    if changed {
        return ctx.polish_scored(&s);
    }
    Some(s)
}

/// Writes a candidate's scores into a position, rescaled so the largest is
/// one, and pushes unselected coordinates below the selected ones.
fn absorb(x: &mut [f64], s: &Scored) {
    let top = s.raw.iter().copied().fold(0.0f64, f64::max);
    let scale = if top > 0.0 { 1.0 / top } else { 1.0 };
    let mut floor = f64::INFINITY;
    for (&i, &r) in s.sel.iter().zip(&s.raw) {
        x[i] = (r * scale).clamp(0.0, 1.0);
        floor = floor.min(x[i]);
    }
    let mut held = vec![false; x.len()];
    for &i in &s.sel {
        held[i] = true;
    }
    for (j, v) in x.iter_mut().enumerate() {
        if !held[j] {
            *v = v.min(0.5 * floor);
        }
    }
}

pub(crate) fn run(ctx: &mut Context<'_>) {
    let n = ctx.n();
    let jump = Pareto::new(1.0, 1.5).unwrap();
    let mut swarm: Vec<Particle> = Vec::with_capacity(PARTICLES);
    while swarm.len() < PARTICLES && !ctx.exhausted() {
        let mut x: Vec<f64> = (0..n).map(|_| ctx.rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..n).map(|_| ctx.rng.random_range(-0.1..0.1)).collect();
        let Some(s) = decode(ctx, &x, None) else { continue };
        absorb(&mut x, &s);
        swarm.push(Particle { best_x: x.clone(), x, v, best: s });
    }
    if swarm.is_empty() {
        return;
    }
    let size = swarm.len();
    let mut iteration = 0;
    while !ctx.exhausted() {
        for i in 0..size {
            let nb = [(i + size - 1) % size, i, (i + 1) % size]
                .into_iter()
                .min_by(|&a, &b| swarm[a].best.obj.total_cmp(&swarm[b].best.obj))
                .unwrap();
            let leader = swarm[nb].best_x.clone();
            let p = &mut swarm[i];
            for j in 0..n {
                let r1: f64 = ctx.rng.random();
                let r2: f64 = ctx.rng.random();
                p.v[j] = (INERTIA * p.v[j] + COGNITIVE * r1 * (p.best_x[j] - p.x[j]) + SOCIAL * r2 * (leader[j] - p.x[j]))
                    .clamp(-VMAX, VMAX);
                p.x[j] = (p.x[j] + p.v[j]).clamp(0.0, 1.0);
            }
            if ctx.rng.random::<f64>() < JUMP_RATE {
                let j = ctx.rng.random_range(0..n);
                let step: f64 = JUMP_SCALE * jump.sample(&mut ctx.rng);
                let sign = if ctx.rng.random::<bool>() { 1.0 } else { -1.0 };
                p.x[j] = (p.x[j] + sign * step).clamp(0.0, 1.0);
            }
            let x = swarm[i].x.clone();
            let prev = swarm[i].best.clone();
            if let Some(s) = decode(ctx, &x, Some(&prev)) {
                if s.obj < swarm[i].best.obj {
                    let p = &mut swarm[i];
                    absorb(&mut p.x, &s);
                    p.best_x = p.x.clone();
                    p.best = s;
                }
            }
            if ctx.exhausted() {
                return;
            }
        }
        iteration += 1;
        if iteration % LOCAL_SEARCH_EVERY == 0 {
            let g = (0..size).min_by(|&a, &b| swarm[a].best.obj.total_cmp(&swarm[b].best.obj)).unwrap();
            let improved = ctx.local_search(swarm[g].best.clone(), false);
            if improved.obj < swarm[g].best.obj {
                let p = &mut swarm[g];
                absorb(&mut p.best_x, &improved);
                p.best = improved;
            }
        }
    }
}
