//! Hill climbing with adaptive multi-swap moves.
//!
//! Steepest descent over the swap and score-perturbation neighborhood. After
//! a run of non-improving evaluations the swap size escalates from one to two
//! assets; after longer stagnation the climber restarts from a random point.

use super::search::{Context, Scored};

const ESCALATE_AFTER: u64 = 1_000;
const RESTART_AFTER: u64 = 2_000;
/// Polished candidates per step.
const POLISH_PER_STEP: usize = 3;

pub(crate) fn run(ctx: &mut Context<'_>) {
    let Some(mut current) = ctx.random_solution() else { return };
    let mut stagnant = 0u64;
    let mut m = 1;
    while !ctx.exhausted() {
        let before = ctx.evaluations();
        match step(ctx, &current, m) {
            Some(next) => {
                current = next;
                stagnant = 0;
                m = 1;
            }
            None => {
                stagnant += ctx.evaluations() - before;
                if stagnant >= RESTART_AFTER {
                    match ctx.random_solution() {
                        Some(s) => current = s,
                        None => return,
                    }
                    stagnant = 0;
                    m = 1;
                } else if stagnant >= ESCALATE_AFTER {
                    m = 2;
                }
            }
        }
    }
}

fn step(ctx: &mut Context<'_>, current: &Scored, m: usize) -> Option<Scored> {
    let k = ctx.k();
    let n = ctx.n();
    let mut screened = Vec::new();
    if m == 1 {
        for p in 0..k {
            for a in 0..n {
                if current.sel.contains(&a) {
                    continue;
                }
                let mut sel = current.sel.clone();
                sel[p] = a;
                let (sel, raw) = super::search::canonical(sel, current.raw.clone());
                if let Some(s) = ctx.evaluate(sel, raw) {
                    screened.push(s);
                }
            }
        }
    } else {
        for _ in 0..k * (n - k) {
            let (sel, raw) = ctx.multi_swap(current, 2);
            if let Some(s) = ctx.evaluate(sel, raw) {
                screened.push(s);
            }
        }
    }
    for _ in 0..k {
        let (sel, raw) = ctx.perturb(current);
        if let Some(s) = ctx.evaluate(sel, raw) {
            screened.push(s);
        }
    }
    screened.sort_by(|a, b| a.obj.total_cmp(&b.obj));
    let mut best: Option<Scored> = None;
    for cand in screened.into_iter().take(POLISH_PER_STEP) {
        if ctx.exhausted() {
            break;
        }
        let Some(p) = ctx.polish_scored(&cand) else { continue };
        if p.obj < best.as_ref().map_or(current.obj, |b| b.obj) {
            best = Some(p);
        }
    }
    best
}
