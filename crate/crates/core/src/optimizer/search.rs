use rand::seq::{IndexedRandom, SliceRandom};

use super::{SearchContext, SearchEvent, Selection};
use crate::constraints::CostTuple;
use crate::error::Result;
use crate::measures::Solution;

/// Candidate evaluations (cached or not) allowed per unit of budget; bounds
/// the work once most of the neighborhood is cached.
const CANDIDATES_PER_EVALUATION: usize = 100;

enum Climb {
    LocalOptimum(Selection, CostTuple),
    OutOfBudget(Selection, CostTuple),
}

/// First-improvement descent from `start`, visiting neighbours in random
/// order. `start` is evaluated first; `None` if even that is out of budget.
fn climb(ctx: &mut SearchContext<'_>, start: Selection) -> Result<Option<Climb>> {
    let Some((mut cost, fresh)) = ctx.eval(&start)? else {
        return Ok(None);
    };
    ctx.record(fresh, cost);
    let mut current = start;
    loop {
        let mut neighbours = ctx.deps.neighbours(&current, ctx.config.mode);
        neighbours.shuffle(&mut ctx.rng);
        let mut improved = false;
        for n in neighbours {
            let Some((c, fresh)) = ctx.eval(&n)? else {
                return Ok(Some(Climb::OutOfBudget(current, cost)));
            };
            if c < cost {
                current = n;
                cost = c;
                improved = true;
            }
            ctx.record(fresh, cost);
            if improved {
                break;
            }
        }
        if !improved {
            return Ok(Some(Climb::LocalOptimum(current, cost)));
        }
    }
}

/// Hill climbing from `s0` until no neighbour improves or the budget is
/// spent. Returns the final solution and its cost.
pub fn hill_climbing(ctx: &mut SearchContext<'_>, s0: &Solution) -> Result<(Solution, CostTuple)> {
    let start = ctx.selection(s0)?;
    match climb(ctx, start.clone())? {
        Some(Climb::LocalOptimum(s, c) | Climb::OutOfBudget(s, c)) => Ok((ctx.solution(&s), c)),
        None => Ok((s0.clone(), CostTuple::new(u8::MAX, f64::INFINITY))),
    }
}

fn perturb_selection(ctx: &mut SearchContext<'_>, mut sel: Selection, strength: usize) -> Selection {
    for _ in 0..strength {
        let neighbours = ctx.deps.neighbours(&sel, ctx.config.mode);
        match neighbours.choose(&mut ctx.rng) {
            Some(n) => sel = n.clone(),
            None => break,
        }
    }
    sel
}

/// `strength` uniformly random neighbourhood moves, without evaluation.
pub fn perturbate(ctx: &mut SearchContext<'_>, s: &Solution, strength: usize) -> Result<Solution> {
    let sel = ctx.selection(s)?;
    let out = perturb_selection(ctx, sel, strength);
    Ok(ctx.solution(&out))
}

/// Hill climbing, then repeated perturbation and re-climbing; a new local
/// optimum replaces the incumbent only if strictly better.
pub fn iterated_local_search(ctx: &mut SearchContext<'_>, s0: &Solution) -> Result<(Solution, CostTuple)> {
    let start = ctx.selection(s0)?;
    let (mut best, mut best_cost) = match climb(ctx, start)? {
        Some(Climb::LocalOptimum(s, c)) => (s, c),
        Some(Climb::OutOfBudget(s, c)) => {
            ctx.incumbent(c);
            return Ok((ctx.solution(&s), c));
        }
        None => return Ok((s0.clone(), CostTuple::new(u8::MAX, f64::INFINITY))),
    };
    ctx.incumbent(best_cost);
    let mut idle = 0;
    while idle < ctx.config.stop_after_no_improvement && ctx.budget_left() {
        let strength = ctx.config.perturbation_strength;
        let perturbed = perturb_selection(ctx, best.clone(), strength);
        ctx.mark(SearchEvent::Perturbation);
        let (s, c, exhausted) = match climb(ctx, perturbed)? {
            Some(Climb::LocalOptimum(s, c)) => (s, c, false),
            Some(Climb::OutOfBudget(s, c)) => (s, c, true),
            None => break,
        };
        if c < best_cost {
            best = s;
            best_cost = c;
            idle = 0;
            ctx.incumbent(best_cost);
        } else {
            idle += 1;
        }
        if exhausted {
            break;
        }
    }
    Ok((ctx.solution(&best), best_cost))
}

/// Late acceptance hill climbing with history length
/// `lahc_history_length`, restarted from `s0` whenever the run's best has
/// not improved for twice the history length of candidates.
pub fn late_acceptance_hc(ctx: &mut SearchContext<'_>, s0: &Solution) -> Result<(Solution, CostTuple)> {
    let start = ctx.selection(s0)?;
    let len = ctx.config.lahc_history_length;
    let cap = ctx.config.evaluation_budget.saturating_mul(CANDIDATES_PER_EVALUATION);
    let mut overall: Option<(Selection, CostTuple)> = None;
    let mut candidates = 0usize;

    'restart: while ctx.budget_left() && candidates < cap {
        let Some((c0, fresh)) = ctx.eval(&start)? else {
            break;
        };
        ctx.record(fresh, c0);
        let mut current = start.clone();
        let mut cost = c0;
        let mut history = vec![c0; len];
        let mut run_best = c0;
        ctx.incumbent(run_best);
        let mut idle = 0;
        let mut k = 0usize;
        if overall.as_ref().is_none_or(|(_, b)| c0 < *b) {
            overall = Some((current.clone(), c0));
        }
        loop {
            if candidates >= cap {
                break 'restart;
            }
            let neighbours = ctx.deps.neighbours(&current, ctx.config.mode);
            let Some(n) = neighbours.choose(&mut ctx.rng).cloned() else {
                break 'restart;
            };
            candidates += 1;
            let Some((c, fresh)) = ctx.eval(&n)? else {
                break 'restart;
            };
            let slot = k % len;
            if c < history[slot] || c < cost {
                current = n;
                cost = c;
                history[slot] = c;
            }
            ctx.record(fresh, cost);
            k += 1;
            if cost < run_best {
                run_best = cost;
                idle = 0;
                ctx.incumbent(run_best);
                if overall.as_ref().is_none_or(|(_, b)| cost < *b) {
                    overall = Some((current.clone(), cost));
                }
            } else {
                idle += 1;
            }
            if idle >= 2 * len {
                ctx.mark(SearchEvent::Restart);
                continue 'restart;
            }
        }
    }
    Ok(match overall {
        Some((s, c)) => (ctx.solution(&s), c),
        None => (s0.clone(), CostTuple::new(u8::MAX, f64::INFINITY)),
    })
}
