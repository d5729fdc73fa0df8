//! Artificial bee colony with biased initialization and adaptive neighbor
//! strategies.
//!
//! Half the food sources start from blends of the highest-return and
//! lowest-variance assets. Employed and onlooker bees pick a neighbor
//! strategy with probability proportional to its past successes; one
//! strategy swaps in an asset drawn by how often it appears across the
//! colony. Sources that fail to improve for `LIMIT` trials are abandoned.

use rand::Rng;

use super::search::{canonical, Context, Scored};

const SOURCES: usize = 40;
const LIMIT: u32 = 50;

#[derive(Clone, Copy)]
enum Strategy {
    Swap,
    Perturb,
    MultiSwap,
    Guided,
}

const STRATEGIES: [Strategy; 4] = [Strategy::Swap, Strategy::Perturb, Strategy::MultiSwap, Strategy::Guided];

struct Source {
    sol: Scored,
    trials: u32,
}

pub(crate) fn run(ctx: &mut Context<'_>) {
    let mut colony: Vec<Source> = Vec::with_capacity(SOURCES);
    for j in 0..SOURCES {
        if ctx.exhausted() {
            break;
        }
        let sol = if j < SOURCES / 2 { biased_source(ctx, j) } else { ctx.random_solution() };
        if let Some(sol) = sol {
            colony.push(Source { sol, trials: 0 });
        }
    }
    if colony.is_empty() {
        return;
    }
    let mut successes = [1.0f64; 4];
    while !ctx.exhausted() {
        for i in 0..colony.len() {
            forage(ctx, &mut colony, i, &mut successes);
            if ctx.exhausted() {
                return;
            }
        }
        // onlookers favor better sources by rank
        let mut ranked: Vec<usize> = (0..colony.len()).collect();
        ranked.sort_by(|&a, &b| colony[a].sol.obj.total_cmp(&colony[b].sol.obj));
        let total = (colony.len() * (colony.len() + 1) / 2) as f64;
        for _ in 0..colony.len() {
            let mut pick = ctx.rng.random::<f64>() * total;
            let mut chosen = ranked[0];
            for (r, &i) in ranked.iter().enumerate() {
                pick -= (colony.len() - r) as f64;
                if pick <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            forage(ctx, &mut colony, chosen, &mut successes);
            if ctx.exhausted() {
                return;
            }
        }
        // scout: abandon the most exhausted source
        let (worst, trials) = colony
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.trials))
            .max_by_key(|&(i, t)| (t, std::cmp::Reverse(i)))
            .unwrap();
        if trials > LIMIT {
            if let Some(sol) = ctx.random_solution() {
                colony[worst] = Source { sol, trials: 0 };
            }
        }
    }
}

fn forage(ctx: &mut Context<'_>, colony: &mut [Source], i: usize, successes: &mut [f64; 4]) {
    let total: f64 = successes.iter().sum();
    let mut pick = ctx.rng.random::<f64>() * total;
    let mut s = 0;
    for (j, w) in successes.iter().enumerate() {
        pick -= w;
        if pick <= 0.0 {
            s = j;
            break;
        }
    }
    let current = colony[i].sol.clone();
    let (sel, raw) = match STRATEGIES[s] {
        Strategy::Swap => ctx.swap(&current),
        Strategy::Perturb => ctx.perturb(&current),
        Strategy::MultiSwap => ctx.multi_swap(&current, 2),
        Strategy::Guided => guided_swap(ctx, colony, &current),
    };
    let changed = sel != current.sel;
    let Some(mut cand) = ctx.evaluate(sel, raw) else {
        colony[i].trials += 1;
        return;
    };
    if changed {
        if let Some(p) = ctx.polish_scored(&cand) {
            cand = p;
        }
    }
    if cand.obj < current.obj {
        colony[i] = Source { sol: cand, trials: 0 };
        successes[s] += 1.0;
    } else {
        colony[i].trials += 1;
    }
}

/// Swaps in an asset drawn by its frequency across the colony's selections.
fn guided_swap(ctx: &mut Context<'_>, colony: &[Source], current: &Scored) -> (Vec<usize>, Vec<f64>) {
    let n = ctx.n();
    let mut freq = vec![0.0f64; n];
    for src in colony {
        for &a in &src.sol.sel {
            freq[a] += 1.0;
        }
    }
    for &a in &current.sel {
        freq[a] = 0.0;
    }
    let total: f64 = freq.iter().sum();
    if total <= 0.0 {
        return ctx.swap(current);
    }
    let mut pick = ctx.rng.random::<f64>() * total;
    let mut enter = freq.iter().rposition(|&f| f > 0.0).unwrap();
    for (a, f) in freq.iter().enumerate() {
        pick -= f;
        if *f > 0.0 && pick <= 0.0 {
            enter = a;
            break;
        }
    }
    let mut sel = current.sel.clone();
    let p = ctx.rng.random_range(0..sel.len());
    sel[p] = enter;
    canonical(sel, current.raw.clone())
}

/// Blend of top-return and lowest-variance assets; source `j` takes
/// roughly `j / (SOURCES/2)` of its picks from the low-variance list.
fn biased_source(ctx: &mut Context<'_>, j: usize) -> Option<Scored> {
    let n = ctx.n();
    let k = ctx.k();
    let mut by_return: Vec<usize> = (0..n).collect();
    by_return.sort_by(|&a, &b| ctx.u.mu()[b].total_cmp(&ctx.u.mu()[a]).then(a.cmp(&b)));
    let mut by_var: Vec<usize> = (0..n).collect();
    by_var.sort_by(|&a, &b| ctx.u.sigma(a, a).total_cmp(&ctx.u.sigma(b, b)).then(a.cmp(&b)));
    let low_var = (k * j) / (SOURCES / 2 - 1).max(1);
    let mut held = vec![false; n];
    let mut sel = Vec::with_capacity(k);
    for &a in by_var.iter().take(low_var.min(k)) {
        held[a] = true;
        sel.push(a);
    }
    for &a in &by_return {
        if sel.len() == k {
            break;
        }
        if !held[a] {
            held[a] = true;
            sel.push(a);
        }
    }
    let raw = ctx.random_raw();
    let (sel, raw) = canonical(sel, raw);
    let start = ctx.evaluate(sel, raw)?;
    // one random swap keeps biased sources from collapsing onto each other
    let (sel, raw) = if j > 0 { ctx.swap(&start) } else { (start.sel.clone(), start.raw.clone()) };
    let s = ctx.evaluate(sel, raw).unwrap_or(start);
    ctx.polish_scored(&s)
}
