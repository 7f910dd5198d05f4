use std::cmp::Ordering;

use crate::model::{BudgetState, Election, Outcome, Round};
use crate::num::Num;
use crate::rules::utilitarian::{by_total_score, greedy_fill};
use crate::rules::screen::{approx_rho, screened_min, to_f64s, FloatView};
use crate::rules::{AffordabilityQuote, RuleConfig};

/// A supporter that still has money, with their account and utility.
pub(crate) struct Payer<'a> {
    pub voter: usize,
    pub budget: &'a Num,
    pub utility: &'a Num,
}

/// Supporters with positive money, ascending by `b_i / u_i`, ties by voter.
pub(crate) fn sorted_payers<'a>(supporters: &'a [(usize, Num)], budgets: &'a [Num]) -> Vec<Payer<'a>> {
    let mut payers: Vec<Payer<'a>> = supporters
        .iter()
        .filter(|(i, _)| budgets[*i].is_positive())
        .map(|(i, u)| Payer { voter: *i, budget: &budgets[*i], utility: u })
        .collect();
    // Sort on a float estimate first, then fix up exactly; the exact pass is
    // linear when the estimate is already right.
    let approx: Vec<f64> = payers.iter().map(|p| p.budget.to_f64() / p.utility.to_f64()).collect();
    let mut idx: Vec<usize> = (0..payers.len()).collect();
    idx.sort_by(|&a, &b| approx[a].partial_cmp(&approx[b]).unwrap_or(Ordering::Equal));
    let mut ordered: Vec<Payer<'a>> = Vec::with_capacity(payers.len());
    let mut slots: Vec<Option<Payer<'a>>> = payers.drain(..).map(Some).collect();
    for k in idx {
        ordered.push(slots[k].take().expect("each index once"));
    }
    let cmp = |a: &Payer, b: &Payer| {
        (a.budget * b.utility).cmp(&(b.budget * a.utility)).then(a.voter.cmp(&b.voter))
    };
    for k in 1..ordered.len() {
        let mut j = k;
        while j > 0 && cmp(&ordered[j - 1], &ordered[j]) == Ordering::Greater {
            ordered.swap(j - 1, j);
            j -= 1;
        }
    }
    ordered
}

/// Smallest `rho` with `cost = sum_i min(b_i, u_i * rho)`, if any.
pub(crate) fn min_rho_value(cost: &Num, payers: &[Payer]) -> Option<Num> {
    let total: Num = payers.iter().map(|p| p.budget).sum();
    if total < *cost {
        return None;
    }
    let mut paid = Num::zero();
    let mut weight: Num = payers.iter().map(|p| p.utility).sum();
    for p in payers {
        let rho = (cost - &paid) / &weight;
        if &rho * p.utility <= *p.budget {
            return Some(rho);
        }
        paid += p.budget;
        weight -= p.utility;
    }
    unreachable!("total money covers the cost")
}

pub(crate) fn capped_payments(supporters: &[(usize, Num)], budgets: &[Num], rho: &Num) -> Vec<(usize, Num)> {
    supporters
        .iter()
        .filter(|(i, _)| budgets[*i].is_positive())
        .map(|(i, u)| (*i, Num::min_of(&budgets[*i], &(u * rho))))
        .collect()
}

/// Cheapest price per unit of utility at which `project` is fully fundable.
pub fn min_rho(election: &Election, project: usize, state: &BudgetState) -> Option<AffordabilityQuote> {
    let supporters = election.utilities.supporters(project);
    let payers = sorted_payers(supporters, &state.budgets);
    let rho = min_rho_value(election.cost(project), &payers)?;
    let payments = capped_payments(supporters, &state.budgets, &rho);
    Some(AffordabilityQuote { project, alpha: Num::one(), ratio: rho.clone(), rho, payments })
}

/// Finds the min-rho project among `alive` under `budgets`.
fn best_project(
    election: &Election,
    view: &FloatView,
    alive: &[usize],
    budgets: &[Num],
    rank: &[usize],
) -> Option<(usize, Num)> {
    let bf = to_f64s(budgets);
    screened_min(
        alive.iter().copied(),
        |c| approx_rho(view.cost[c], &view.util[c], &bf),
        |c| {
            let payers = sorted_payers(election.utilities.supporters(c), budgets);
            min_rho_value(election.cost(c), &payers).map(|rho| (rho, ()))
        },
        rank,
    )
    .map(|(c, rho, ())| (c, rho))
}

/// Method of Equal Shares with per-voter endowment `b_ini`.
///
/// For `b_ini` above `b / n` the result may overrun the budget; check with
/// [`crate::model::is_feasible`].
pub fn mes(election: &Election, config: &RuleConfig, b_ini: &Num) -> Outcome {
    run_mes(election, config, b_ini, false).expect("unbounded run always finishes")
}

/// MES proper; with `stop_over_budget` it gives up (returning `None`) as
/// soon as the selection costs more than the budget.
fn run_mes(election: &Election, config: &RuleConfig, b_ini: &Num, stop_over_budget: bool) -> Option<Outcome> {
    let m = election.n_projects();
    let rank = config.tie_breaker.ranks(m);
    let mut budgets = vec![b_ini.clone(); election.n_voters];
    let view = FloatView::new(election);
    let mut alive: Vec<usize> = (0..m).collect();
    let mut out = Outcome { endowment: Some(b_ini.clone()), ..Default::default() };
    if election.n_voters == 0 || !b_ini.is_positive() {
        return Some(out);
    }
    let mut spent = Num::zero();
    while let Some((c, rho)) = best_project(election, &view, &alive, &budgets, &rank) {
        spent += election.cost(c);
        if stop_over_budget && spent > election.budget {
            return None;
        }
        let payments = capped_payments(election.utilities.supporters(c), &budgets, &rho);
        debug_assert_eq!(payments.iter().map(|(_, p)| p).sum::<Num>(), *election.cost(c));
        for (i, p) in &payments {
            budgets[*i] -= p;
        }
        alive.retain(|&x| x != c);
        out.selected.push(c);
        out.rounds.push(Round { project: c, alpha: Num::one(), rho, payments, overspend: Vec::new() });
    }
    Some(out)
}

/// MES with Add1U endowment probing, then a greedy tail by vote count.
pub fn add1u(election: &Election, config: &RuleConfig) -> Outcome {
    assert!(config.add1u_step.is_positive(), "add1u step must be positive");
    let base = crate::rules::default_endowment(election);
    let supported: Vec<usize> =
        (0..election.n_projects()).filter(|&c| !election.utilities.supporters(c).is_empty()).collect();
    let covers_all = |o: &Outcome| supported.iter().all(|c| o.selected.contains(c));

    let mut best = mes(election, config, &base);
    if election.n_voters > 0 {
        let mut k: i64 = 1;
        while !covers_all(&best) {
            let b_ini = &base + &config.add1u_step * Num::from(k);
            if b_ini > election.budget {
                break;
            }
            match run_mes(election, config, &b_ini, true) {
                Some(out) => best = out,
                None => break,
            }
            k += 1;
        }
    }
    let rank = config.tie_breaker.ranks(election.n_projects());
    let order = by_total_score(election, &rank);
    best.completed = greedy_fill(election, &mut best.selected, &order);
    best
}
