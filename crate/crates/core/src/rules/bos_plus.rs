use crate::model::{Election, Outcome, Round};
use crate::num::Num;
use crate::rules::bos::{best_bos, nominal_payments};
use crate::rules::mes::{min_rho_value, sorted_payers};
use crate::rules::screen::{approx_rho, screened_min, to_f64s, FloatView};
use crate::rules::{default_endowment, RuleConfig};

/// BOS+: a BOS round that would overspend instead tops every account up by
/// the overspend it would cause and buys the cheapest fully affordable project.
pub fn bos_plus(election: &Election, config: &RuleConfig) -> Outcome {
    let m = election.n_projects();
    let n = election.n_voters;
    let rank = config.tie_breaker.ranks(m);
    let mut out = Outcome::default();
    if n == 0 {
        return out;
    }
    let util = &election.utilities;
    let mut budgets = vec![default_endowment(election); n];
    let mut over = vec![Num::zero(); n];
    let mut selected = vec![false; m];
    let mut remaining = election.budget.clone();
    let view = FloatView::new(election);

    loop {
        let Some((star, q)) = best_bos(election, &view, &selected, &budgets, &remaining, &rank) else {
            break;
        };
        let cost_star = election.cost(star);
        let delta = if q.alpha == Num::one() {
            Num::zero()
        } else {
            let short = util
                .supporters(star)
                .iter()
                .filter(|(i, u)| budgets[*i].is_positive() && &q.rho * u >= budgets[*i])
                .count();
            (cost_star - &q.alpha * cost_star) / Num::from(short)
        };
        let raised: Vec<Num> = (0..n)
            .map(|i| {
                let top = &delta - &over[i];
                if top.is_positive() { &budgets[i] + top } else { budgets[i].clone() }
            })
            .collect();

        let raised_f = to_f64s(&raised);
        let pick = screened_min(
            (0..m).filter(|&c| !selected[c] && election.cost(c) <= &remaining),
            |c| approx_rho(view.cost[c], &view.util[c], &raised_f),
            |c| min_rho_value(election.cost(c), &sorted_payers(util.supporters(c), &raised)).map(|rho| (rho, ())),
            &rank,
        )
        .map(|(c, rho, ())| (c, rho));

        let round = match pick {
            Some((c, rho)) => {
                let mut payments = Vec::new();
                let mut overspend = Vec::new();
                for (i, u) in util.supporters(c) {
                    let pay = Num::min_of(&raised[*i], &(u * &rho));
                    if !pay.is_positive() {
                        continue;
                    }
                    if budgets[*i] >= pay {
                        budgets[*i] -= &pay;
                    } else {
                        let extra = &pay - &budgets[*i];
                        over[*i] += &extra;
                        overspend.push((*i, extra));
                        budgets[*i] = Num::zero();
                    }
                    payments.push((*i, pay));
                }
                Round { project: c, alpha: Num::one(), rho, payments, overspend }
            }
            None => {
                // Nothing is fully affordable even after the top-up: buy the
                // BOS choice the plain BOS way.
                let supporters = util.supporters(star);
                let payments = nominal_payments(supporters, &budgets, &q);
                let mut overspend = Vec::new();
                for (i, p) in &payments {
                    if *p > budgets[*i] {
                        let extra = p - &budgets[*i];
                        over[*i] += &extra;
                        overspend.push((*i, extra));
                    }
                }
                for (i, u) in supporters {
                    if budgets[*i].is_positive() {
                        let left = &budgets[*i] - u * &q.rho;
                        budgets[*i] = if left.is_positive() { left } else { Num::zero() };
                    }
                }
                Round { project: star, alpha: q.alpha, rho: q.rho, payments, overspend }
            }
        };
        selected[round.project] = true;
        remaining -= election.cost(round.project);
        out.selected.push(round.project);
        out.rounds.push(round);
    }
    out
}
