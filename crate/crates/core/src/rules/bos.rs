use serde::{Deserialize, Serialize};

use crate::model::{BudgetState, Election, Outcome, Round, UtilityModel};
use crate::num::Num;
use crate::rules::mes::{min_rho_value, sorted_payers};
use crate::rules::screen::{approx_ratio, screened_min, to_f64s, FloatView};
use crate::rules::{default_endowment, AffordabilityQuote, RuleConfig};

/// Best `(alpha, rho)` pair for one project; no payments yet.
#[derive(Debug, Clone)]
pub(crate) struct RawQuote {
    pub lambda: Num,
    pub alpha: Num,
    pub rho: Num,
    pub ratio: Num,
}

pub(crate) fn raw_quote(cost: &Num, supporters: &[(usize, Num)], budgets: &[Num]) -> Option<RawQuote> {
    let payers = sorted_payers(supporters, budgets);
    if payers.is_empty() {
        return None;
    }
    let full = min_rho_value(cost, &payers);
    let mut best: Option<RawQuote> = None;
    let mut consider = |lambda: Num, money: Num| {
        let alpha = if money >= *cost { Num::one() } else { money / cost };
        let rho = &lambda / &alpha;
        let ratio = &rho / &alpha;
        let better = match &best {
            None => true,
            Some(b) => {
                ratio < b.ratio || (ratio == b.ratio && (alpha > b.alpha || (alpha == b.alpha && rho < b.rho)))
            }
        };
        if better {
            best = Some(RawQuote { lambda, alpha, rho, ratio });
        }
    };

    // money(lambda) at lambda = b_k/u_k is prefix_b[k] + lambda * suffix_u[k].
    let mut prefix_b = Num::zero();
    let mut suffix_u: Num = payers.iter().map(|p| p.utility).sum();
    for p in &payers {
        let lambda = p.budget / p.utility;
        if let Some(f) = &full {
            if lambda >= *f {
                // alpha is 1 from here on and lambda only grows.
                break;
            }
        }
        let money = &prefix_b + &lambda * &suffix_u;
        consider(lambda, money);
        prefix_b += p.budget;
        suffix_u -= p.utility;
    }
    if let Some(f) = full {
        consider(f, cost.clone());
    }
    best
}

/// Nominal shares `min(b_i, u_i * lambda) / alpha`.
pub(crate) fn nominal_payments(supporters: &[(usize, Num)], budgets: &[Num], q: &RawQuote) -> Vec<(usize, Num)> {
    supporters
        .iter()
        .filter(|(i, _)| budgets[*i].is_positive())
        .map(|(i, u)| (*i, Num::min_of(&budgets[*i], &(u * &q.lambda)) / &q.alpha))
        .collect()
}

/// Lowest `rho / alpha` at which some fraction of `project` is affordable.
///
/// Returns `None` when no supporter has money or the project does not fit
/// `remaining_budget`.
pub fn bos_quote(
    election: &Election,
    project: usize,
    state: &BudgetState,
    remaining_budget: &Num,
) -> Option<AffordabilityQuote> {
    if election.cost(project) > remaining_budget {
        return None;
    }
    let supporters = election.utilities.supporters(project);
    let q = raw_quote(election.cost(project), supporters, &state.budgets)?;
    let payments = nominal_payments(supporters, &state.budgets, &q);
    Some(AffordabilityQuote { project, alpha: q.alpha, rho: q.rho, payments, ratio: q.ratio })
}

/// Best BOS candidate among unselected projects fitting `remaining`.
pub(crate) fn best_bos(
    election: &Election,
    view: &FloatView,
    selected: &[bool],
    budgets: &[Num],
    remaining: &Num,
    rank: &[usize],
) -> Option<(usize, RawQuote)> {
    let bf = to_f64s(budgets);
    screened_min(
        (0..election.n_projects()).filter(|&c| !selected[c] && election.cost(c) <= remaining),
        |c| approx_ratio(view.cost[c], &view.util[c], &bf),
        |c| raw_quote(election.cost(c), election.utilities.supporters(c), budgets).map(|q| (q.ratio.clone(), q)),
        rank,
    )
    .map(|(c, _, q)| (c, q))
}

/// A round in which overspending happened but at most half of the payers
/// ran out of money.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityViolation {
    pub round: usize,
    pub payers: usize,
    pub exhausted: usize,
}

/// `(payers, exhausted)` for one BOS round, or `None` when nobody overspends.
fn overspend_split(supporters: &[(usize, Num)], budgets: &[Num], rho: &Num, payments: &[(usize, Num)]) -> Option<(usize, usize)> {
    let overspends = payments.iter().any(|(i, p)| *p > budgets[*i]);
    if !overspends {
        return None;
    }
    let mut payers = 0;
    let mut exhausted = 0;
    for (i, u) in supporters {
        if budgets[*i].is_positive() {
            payers += 1;
            if !(&budgets[*i] - u * rho).is_positive() {
                exhausted += 1;
            }
        }
    }
    Some((payers, exhausted))
}

/// BOS Equal Shares.
pub fn bos(election: &Election, config: &RuleConfig) -> Outcome {
    let m = election.n_projects();
    let n = election.n_voters;
    let rank = config.tie_breaker.ranks(m);
    let mut out = Outcome::default();
    if n == 0 {
        return out;
    }
    let mut budgets = vec![default_endowment(election); n];
    let mut selected = vec![false; m];
    let mut remaining = election.budget.clone();
    let view = FloatView::new(election);
    let redistribute = config.exhaustive_redistribution;
    let mut removed = vec![false; n];
    let check_majority =
        cfg!(debug_assertions) && !redistribute && election.model == UtilityModel::Cost && election.is_approval();
    if redistribute {
        redistribute_leftovers(election, &selected, &mut budgets, &mut removed);
    }

    while let Some((c, q)) = best_bos(election, &view, &selected, &budgets, &remaining, &rank) {
        let supporters = election.utilities.supporters(c);
        let payments = nominal_payments(supporters, &budgets, &q);
        debug_assert_eq!(payments.iter().map(|(_, p)| p).sum::<Num>(), *election.cost(c));
        if check_majority {
            if let Some((payers, exhausted)) = overspend_split(supporters, &budgets, &q.rho, &payments) {
                debug_assert!(2 * exhausted > payers, "overspending round with {exhausted} of {payers} exhausted");
            }
        }
        let mut overspend = Vec::new();
        for (i, p) in &payments {
            if *p > budgets[*i] {
                overspend.push((*i, p - &budgets[*i]));
            }
        }
        for (i, u) in supporters {
            if budgets[*i].is_positive() {
                let left = &budgets[*i] - u * &q.rho;
                budgets[*i] = if left.is_positive() { left } else { Num::zero() };
            }
        }
        selected[c] = true;
        remaining -= election.cost(c);
        out.selected.push(c);
        out.rounds.push(Round { project: c, alpha: q.alpha, rho: q.rho, payments, overspend });
        if redistribute {
            redistribute_leftovers(election, &selected, &mut budgets, &mut removed);
        }
    }
    out
}

/// Hands the money of voters whose supported projects are all funded to
/// everyone still in play, in equal parts.
fn redistribute_leftovers(election: &Election, selected: &[bool], budgets: &mut [Num], removed: &mut [bool]) {
    let mut pool = Num::zero();
    for i in 0..election.n_voters {
        if !removed[i] && election.utilities.voter(i).iter().all(|(c, _)| selected[*c]) {
            removed[i] = true;
            pool += std::mem::take(&mut budgets[i]);
        }
    }
    let keep = removed.iter().filter(|r| !**r).count();
    if keep == 0 || !pool.is_positive() {
        return;
    }
    let share = pool / Num::from(keep);
    for i in 0..election.n_voters {
        if !removed[i] {
            budgets[i] += &share;
        }
    }
}

/// Replays a plain BOS run and reports rounds where overspending happened
/// without a strict majority of payers running dry.
pub fn overspend_majority_violations(election: &Election, outcome: &Outcome) -> Vec<MajorityViolation> {
    let mut budgets = vec![default_endowment(election); election.n_voters];
    let mut found = Vec::new();
    for (k, r) in outcome.rounds.iter().enumerate() {
        let supporters = election.utilities.supporters(r.project);
        if let Some((payers, exhausted)) = overspend_split(supporters, &budgets, &r.rho, &r.payments) {
            if 2 * exhausted <= payers {
                found.push(MajorityViolation { round: k, payers, exhausted });
            }
        }
        for (i, u) in supporters {
            if budgets[*i].is_positive() {
                let left = &budgets[*i] - u * &r.rho;
                budgets[*i] = if left.is_positive() { left } else { Num::zero() };
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{outcome_utility, Allocation, UtilityModel};
    use crate::rules::TieBreaker;
    use proptest::prelude::*;

    fn k(v: i64) -> Num {
        n(v * 1000)
    }

    #[test]
    fn ten_voters_trace() {
        let e = ten_voters(UtilityModel::Cost);
        let out = bos(&e, &RuleConfig::default());
        assert_eq!(e.names(&out.selected), ["A", "C", "D", "F"]);
        let r = Num::ratio;
        let params: Vec<(Num, Num)> = out.rounds.iter().map(|x| (x.alpha.clone(), x.rho.clone())).collect();
        assert_eq!(params, [(n(1), r(1, 6)), (r(5, 6), r(1, 5)), (n(1), r(5, 18)), (r(5, 6), r(3, 5))]);
        assert_eq!(out.rounds[1].overspend, [(1, k(10)), (2, k(10)), (3, k(10)), (4, k(10))]);
        assert_eq!(e.budget.clone() - out.spent(&e), k(60));
        let total: Num = (0..10).map(|i| outcome_utility(&e, i, &out)).sum();
        assert_eq!(total, n(4_560_000));
        assert!(overspend_majority_violations(&e, &out).is_empty());
    }

    #[test]
    fn quote_for_c_in_round_two() {
        let e = ten_voters(UtilityModel::Cost);
        let mut s = BudgetState::uniform(10, k(50));
        for i in 6..10 {
            s.budgets[i] = k(100);
        }
        let q = bos_quote(&e, 2, &s, &k(700)).unwrap();
        assert_eq!((q.alpha, q.rho, q.ratio), (Num::ratio(5, 6), Num::ratio(1, 5), Num::ratio(6, 25)));
        assert_eq!(q.payments.iter().map(|(_, p)| p).sum::<Num>(), k(300));
        assert!(bos_quote(&e, 1, &s, &k(300)).is_none());
    }

    #[test]
    fn unconstrained_quote_is_proportional() {
        let e = Election::from_scores(&[("x", n(6))], n(6), vec![vec![(0, n(3))]; 3], UtilityModel::Score).unwrap();
        let q = bos_quote(&e, 0, &BudgetState::uniform(3, n(2)), &n(6)).unwrap();
        assert_eq!((q.alpha, q.rho), (n(1), Num::ratio(2, 3)));
    }

    #[test]
    fn redistribution_moves_leftovers() {
        // v0 only wants x; after x is bought v0's change goes to v1 and v2.
        let e = Election::from_scores(
            &[("x", n(1)), ("y", n(5))],
            n(6),
            vec![vec![(0, n(10))], vec![(1, n(1))], vec![(1, n(1))]],
            UtilityModel::Score,
        )
        .unwrap();
        let plain = bos(&e, &RuleConfig::default());
        let cfg = RuleConfig { exhaustive_redistribution: true, ..Default::default() };
        let redis = bos(&e, &cfg);
        assert_eq!(redis.selected, [0, 1]);
        assert_eq!(redis.rounds[1].alpha, n(1));
        assert_eq!(plain.selected, [0, 1]);
        assert!(plain.rounds[1].alpha < n(1));
    }

    #[test]
    fn tie_order_can_favour_later_projects() {
        let e = Election::from_scores(
            &[("x", n(1)), ("y", n(1))],
            n(1),
            vec![vec![(0, n(1)), (1, n(1))]],
            UtilityModel::Cost,
        )
        .unwrap();
        assert_eq!(bos(&e, &RuleConfig::with_ties(TieBreaker::Custom(vec![1]))).selected, [1]);
    }

    /// Every quote on random small instances must satisfy the fraction identity
    /// and never lose to a brute-force scan over all breakpoints.
    fn brute_ratio(cost: &Num, sup: &[(usize, Num)], b: &[Num]) -> Option<Num> {
        let mut lambdas: Vec<Num> = sup.iter().filter(|(i, _)| b[*i].is_positive()).map(|(i, u)| &b[*i] / u).collect();
        if lambdas.is_empty() {
            return None;
        }
        let total: Num = sup.iter().map(|(i, _)| b[*i].clone()).sum();
        if total >= *cost {
            // solve sum min(b, u l) = cost by scanning
            let money = |l: &Num| sup.iter().map(|(i, u)| Num::min_of(&b[*i], &(u * l))).sum::<Num>();
            let mut sorted = lambdas.clone();
            sorted.sort();
            let mut lo = Num::zero();
            for hi in sorted {
                if money(&hi) >= *cost {
                    let slope: Num = sup.iter().filter(|(i, u)| b[*i] >= u * &hi).map(|(_, u)| u.clone()).sum();
                    lambdas.push(&lo + (cost - money(&lo)) / slope);
                    break;
                }
                lo = hi;
            }
        }
        lambdas
            .iter()
            .map(|l| {
                let money: Num = sup.iter().map(|(i, u)| Num::min_of(&b[*i], &(u * l))).sum();
                let a = Num::min_of(&(money / cost), &Num::one());
                l / (&a * &a)
            })
            .min()
    }

    proptest! {
        #[test]
        fn quotes_match_breakpoint_scan(
            cost in 1i64..30,
            utils in proptest::collection::vec(0i64..5, 1..7),
            budgets in proptest::collection::vec(0i64..10, 7),
        ) {
            let n_v = utils.len();
            let rows = utils.iter().map(|u| vec![(0usize, n(*u))]).collect();
            let e = Election::from_scores(&[("x", n(cost))], n(30), rows, UtilityModel::Score).unwrap();
            let s = BudgetState { budgets: budgets[..n_v].iter().map(|b| n(*b)).collect(), overspent: vec![Num::zero(); n_v] };
            let q = bos_quote(&e, 0, &s, &n(30));
            let want = brute_ratio(&n(cost), e.utilities.supporters(0), &s.budgets);
            prop_assert_eq!(q.as_ref().map(|q| q.ratio.clone()), want);
            if let Some(q) = q {
                let lhs = &q.alpha * n(cost);
                let rhs: Num = e.utilities.supporters(0).iter().map(|(i, u)| Num::min_of(&s.budgets[*i], &(&q.alpha * u * &q.rho))).sum();
                prop_assert_eq!(lhs, rhs);
                prop_assert_eq!(q.payments.iter().map(|(_, p)| p).sum::<Num>(), n(cost));
            }
        }

        #[test]
        fn feasible_and_majority_on_approvals(
            costs in proptest::collection::vec(1i64..8, 1..6),
            votes in proptest::collection::vec(proptest::collection::vec(0i64..2, 6), 1..8),
        ) {
            let m = costs.len();
            let names: Vec<String> = (0..m).map(|k| format!("p{k}")).collect();
            let cs: Vec<(&str, Num)> = names.iter().zip(&costs).map(|(s, c)| (s.as_str(), n(*c))).collect();
            let rows = votes.iter().map(|r| r[..m].iter().enumerate().map(|(c, s)| (c, n(*s))).collect()).collect();
            let e = Election::from_scores(&cs, n(10), rows, UtilityModel::Cost).unwrap();
            let out = bos(&e, &RuleConfig::default());
            prop_assert!(crate::model::is_feasible(&e, &out));
            prop_assert!(overspend_majority_violations(&e, &out).is_empty());
        }
    }
}
