use std::cmp::Ordering;

use rayon::prelude::*;

use super::{cost_of, Dependencies};
use crate::constraints::CostTuple;
use crate::error::{Error, Result};
use crate::measures::{PlanningProblem, Solution};

pub const MAX_EXHAUSTIVE_MEASURES: usize = 24;

/// Global optimum over all dependency-satisfying subsets of the catalog.
///
/// Ties on cost go to the smaller solution, then to the lexicographically
/// smaller list of sorted measure ids.
pub fn exhaustive_search(problem: &PlanningProblem) -> Result<(Solution, CostTuple)> {
    let catalog = &problem.catalog;
    let n = catalog.len();
    if n > MAX_EXHAUSTIVE_MEASURES {
        return Err(Error::CatalogTooLarge(n, MAX_EXHAUSTIVE_MEASURES));
    }
    let deps = Dependencies::compile(catalog)?;
    // position of each measure in id order, for the tie-break
    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by(|&a, &b| catalog.measures[a].id.cmp(&catalog.measures[b].id));
    let mut rank = vec![0; n];
    for (r, &i) in by_id.iter().enumerate() {
        rank[i] = r;
    }
    let key = |mask: u32| -> Vec<usize> {
        let mut ranks: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).collect();
        ranks.sort_unstable();
        ranks
    };
    let better = |a: &(CostTuple, u32), b: &(CostTuple, u32)| -> Ordering {
        a.0.cmp(&b.0)
            .then(a.1.count_ones().cmp(&b.1.count_ones()))
            .then_with(|| key(a.1).cmp(&key(b.1)))
    };

    let best = (0..1u32 << n)
        .into_par_iter()
        .map(|mask| -> Result<Option<(CostTuple, u32)>> {
            let sel: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if !deps.satisfied(&bits, &sel) {
                return Ok(None);
            }
            Ok(Some((cost_of(problem, &sel)?, mask)))
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (Some(a), Some(b)) => Some(if better(&a, &b) == Ordering::Greater { b } else { a }),
                    (a, None) => a,
                    (None, b) => b,
                })
            },
        )?;

    let (cost, mask) = best.ok_or(Error::NoValidSolution)?;
    let solution = (0..n)
        .filter(|&i| mask >> i & 1 == 1)
        .map(|i| catalog.measures[i].id.as_str())
        .collect();
    Ok((solution, cost))
}
