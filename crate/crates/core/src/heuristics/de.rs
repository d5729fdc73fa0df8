//! Differential evolution with memetic local search.
//!
//! rand/1/bin over full-length score vectors (F = 0.5, CR = 0.9, 50
//! individuals). A trial's selection is the union of its target's and base
//! vector's selections cut back to the `k` best trial scores. Every 20
//! generations the best individual goes through greedy single-swap descent.

use rand::seq::index::sample;
use rand::Rng;

use super::search::{Context, Scored};

const POP: usize = 50;
const F: f64 = 0.5;
const CR: f64 = 0.9;
const LOCAL_SEARCH_EVERY: usize = 20;

struct Individual {
    scores: Vec<f64>,
    sol: Scored,
}

fn absorb(scores: &mut [f64], sol: &Scored) {
    for (&i, &r) in sol.sel.iter().zip(&sol.raw) {
        scores[i] = r;
    }
}

pub(crate) fn run(ctx: &mut Context<'_>) {
    let n = ctx.n();
    let k = ctx.k();
    let mut pop: Vec<Individual> = Vec::with_capacity(POP);
    while pop.len() < POP && !ctx.exhausted() {
        let Some(sol) = ctx.random_solution() else { return };
        let mut scores: Vec<f64> = (0..n).map(|_| ctx.rng.random::<f64>() * 0.1).collect();
        absorb(&mut scores, &sol);
        pop.push(Individual { scores, sol });
    }
    if pop.len() < 4 {
        return;
    }
    let mut generation = 0;
    while !ctx.exhausted() {
        for i in 0..pop.len() {
            let picks = loop {
                let p = sample(&mut ctx.rng, pop.len(), 3).into_vec();
                if !p.contains(&i) {
                    break p;
                }
            };
            let (a, b, c) = (picks[0], picks[1], picks[2]);
            let forced = ctx.rng.random_range(0..n);
            let mut trial = pop[i].scores.clone();
            for j in 0..n {
                if j == forced || ctx.rng.random::<f64>() < CR {
                    trial[j] = (pop[a].scores[j] + F * (pop[b].scores[j] - pop[c].scores[j])).max(0.0);
                }
            }
            let mut pool: Vec<usize> = pop[i].sol.sel.iter().chain(&pop[a].sol.sel).copied().collect();
            pool.sort_unstable();
            pool.dedup();
            pool.sort_by(|&x, &y| trial[y].total_cmp(&trial[x]).then(x.cmp(&y)));
            let mut sel = pool[..k].to_vec();
            sel.sort_unstable();
            let raw: Vec<f64> = sel.iter().map(|&s| trial[s]).collect();
            let changed = sel != pop[i].sol.sel;
            let Some(mut cand) = ctx.evaluate(sel, raw) else { continue };
            if changed {
                if let Some(p) = ctx.polish_scored(&cand) {
                    cand = p;
                }
            }
            if cand.obj <= pop[i].sol.obj {
                absorb(&mut trial, &cand);
                pop[i] = Individual { scores: trial, sol: cand };
            }
            if ctx.exhausted() {
                return;
            }
        }
        generation += 1;
        if generation % LOCAL_SEARCH_EVERY == 0 {
            let best = (0..pop.len()).min_by(|&x, &y| pop[x].sol.obj.total_cmp(&pop[y].sol.obj)).unwrap();
            let improved = ctx.local_search(pop[best].sol.clone(), false);
            if improved.obj < pop[best].sol.obj {
                let worst = (0..pop.len()).max_by(|&x, &y| pop[x].sol.obj.total_cmp(&pop[y].sol.obj)).unwrap();
                let mut scores = pop[best].scores.clone();
                absorb(&mut scores, &improved);
                pop[worst] = Individual { scores, sol: improved };
            }
        }
    }
}
