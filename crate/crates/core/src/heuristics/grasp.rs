//! Greedy randomized adaptive search.
//!
//! Each restart draws a greediness `α ~ U(0, 1)`, builds a selection one
//! asset at a time from a restricted candidate list ranked by the
//! equal-weight scalarized value of adding each asset, polishes it, then
//! runs first-improvement swap descent.

use rand::Rng;

use super::search::Context;

pub(crate) fn run(ctx: &mut Context<'_>) {
    while !ctx.exhausted() {
        let alpha: f64 = ctx.rng.random();
        let Some(sel) = construct(ctx, alpha) else { continue };
        let raw = ctx.random_raw();
        let Some(start) = ctx.evaluate(sel, raw) else { continue };
        let Some(start) = ctx.polish_scored(&start) else { continue };
        ctx.local_search(start, true);
    }
}

fn construct(ctx: &mut Context<'_>, alpha: f64) -> Option<Vec<usize>> {
    let n = ctx.n();
    let mut partial: Vec<usize> = Vec::with_capacity(ctx.k());
    let mut held = vec![false; n];
    while partial.len() < ctx.k() {
        let mut values: Vec<(f64, usize)> = Vec::with_capacity(n);
        for a in (0..n).filter(|&a| !held[a]) {
            partial.push(a);
            values.push((ctx.equal_weight_value(&partial), a));
            partial.pop();
        }
        if ctx.exhausted() {
            return None;
        }
        values.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let lo = values[0].0;
        let hi = values[values.len() - 1].0;
        let threshold = lo + alpha * (hi - lo);
        let within = values.iter().take_while(|v| v.0 <= threshold).count();
        let size = within.max(2).min(values.len());
        let pick = values[ctx.rng.random_range(0..size)].1;
        held[pick] = true;
        partial.push(pick);
    }
    partial.sort_unstable();
    Some(partial)
}
