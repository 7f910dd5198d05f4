//! Float pre-screening for the exact argmin searches.
//!
//! Every round the rules need the project with the smallest exact price. We
//! estimate each price in `f64` together with an error allowance, then run
//! the exact computation only on projects whose estimate could still win.
//! Results are the same as an exhaustive exact search.

use std::cmp::Ordering;

use crate::model::Election;
use crate::num::Num;
use crate::rules::beats;

/// Relative slack on top of any float estimate.
const SLACK: f64 = 1e-9;

/// `f64` copies of the utility lists, aligned with `Election::utilities`.
pub(crate) struct FloatView {
    pub util: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
}

impl FloatView {
    pub fn new(election: &Election) -> Self {
        let m = election.n_projects();
        FloatView {
            util: (0..m)
                .map(|c| election.utilities.supporters(c).iter().map(|(i, u)| (*i, u.to_f64())).collect())
                .collect(),
            cost: (0..m).map(|c| election.cost(c).to_f64()).collect(),
        }
    }
}

pub(crate) fn to_f64s(values: &[Num]) -> Vec<f64> {
    values.iter().map(Num::to_f64).collect()
}

fn float_payers(sup: &[(usize, f64)], b: &[f64]) -> Vec<(f64, f64)> {
    let mut payers: Vec<(f64, f64)> = sup.iter().filter(|(i, _)| b[*i] > 0.0).map(|(i, u)| (b[*i], *u)).collect();
    payers.sort_by(|x, y| (x.0 / x.1).partial_cmp(&(y.0 / y.1)).unwrap_or(Ordering::Equal));
    payers
}

fn rho_of_sorted(cost: f64, payers: &[(f64, f64)]) -> Option<(f64, f64)> {
    let total: f64 = payers.iter().map(|p| p.0).sum();
    if total < cost * (1.0 - SLACK) {
        return None;
    }
    let mut paid = 0.0;
    let mut weight: f64 = payers.iter().map(|p| p.1).sum();
    for (k, &(b, u)) in payers.iter().enumerate() {
        // Recompute the tail weight now and then to keep cancellation in check.
        if k % 32 == 31 {
            weight = payers[k..].iter().map(|p| p.1).sum();
        }
        let rho = (cost - paid) / weight;
        if rho * u <= b {
            let err = SLACK * (rho + (cost + paid) / weight);
            return Some((rho, err));
        }
        paid += b;
        weight -= u;
    }
    // Only reachable when the money barely covers the cost.
    let rho = payers.iter().map(|p| p.0 / p.1).fold(0.0, f64::max);
    Some((rho, rho * 1e-6 + SLACK))
}

/// Estimate of the smallest full-funding `rho`, with an error allowance.
/// `None` means the exact computation would also find nothing.
pub(crate) fn approx_rho(cost: f64, sup: &[(usize, f64)], b: &[f64]) -> Option<(f64, f64)> {
    rho_of_sorted(cost, &float_payers(sup, b))
}

/// Estimate of the best `rho / alpha` over fractions, with an error allowance.
pub(crate) fn approx_ratio(cost: f64, sup: &[(usize, f64)], b: &[f64]) -> Option<(f64, f64)> {
    let payers = float_payers(sup, b);
    if payers.is_empty() {
        return None;
    }
    let full = rho_of_sorted(cost, &payers);
    let mut best = f64::INFINITY;
    let mut prefix_b = 0.0;
    let mut suffix_u: f64 = payers.iter().map(|p| p.1).sum();
    for &(b, u) in &payers {
        let lambda = b / u;
        if let Some((f, _)) = full {
            if lambda >= f {
                break;
            }
        }
        let alpha = ((prefix_b + lambda * suffix_u) / cost).min(1.0);
        best = best.min(lambda / (alpha * alpha));
        prefix_b += b;
        suffix_u -= u;
    }
    let mut err = 0.0;
    if let Some((f, e)) = full {
        best = best.min(f);
        err = e;
    }
    Some((best, err + SLACK * best))
}

/// Exact argmin over `candidates`, evaluating `exact` only where the float
/// estimate leaves a chance of winning. Ties go by `rank`.
pub(crate) fn screened_min<T>(
    candidates: impl Iterator<Item = usize>,
    estimate: impl Fn(usize) -> Option<(f64, f64)>,
    mut exact: impl FnMut(usize) -> Option<(Num, T)>,
    rank: &[usize],
) -> Option<(usize, Num, T)> {
    let mut queue: Vec<(f64, usize)> =
        candidates.filter_map(|c| estimate(c).map(|(v, err)| (v - err, c))).collect();
    queue.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(rank[a.1].cmp(&rank[b.1])));
    let mut best: Option<(usize, Num, T, f64)> = None;
    for (lo, c) in queue {
        if let Some((.., best_f)) = &best {
            if lo > *best_f {
                break;
            }
        }
        if let Some((value, extra)) = exact(c) {
            if best.as_ref().map_or(true, |(bc, bv, ..)| beats(&value, c, bv, *bc, rank)) {
                let f = value.to_f64();
                best = Some((c, value, extra, f + f.abs() * 1e-12));
            }
        }
    }
    best.map(|(c, v, t, _)| (c, v, t))
}
