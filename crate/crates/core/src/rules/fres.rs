use crate::model::{Election, FractionalOutcome, Round};
use crate::num::Num;
use crate::rules::screen::screened_min;
use crate::rules::{default_endowment, RuleConfig};

/// Fractional Equal Shares.
pub fn fres(election: &Election, config: &RuleConfig) -> FractionalOutcome {
    let m = election.n_projects();
    let n = election.n_voters;
    let rank = config.tie_breaker.ranks(m);
    let util = &election.utilities;
    let mut out = FractionalOutcome::empty(m);
    if n == 0 {
        return out;
    }
    let mut budgets = vec![default_endowment(election); n];
    let mut active = vec![true; n];
    // Sum of utilities over voters still holding money, per project.
    let mut weight: Vec<Num> = (0..m).map(|c| util.total(c)).collect();
    let one = Num::one();
    let cost_f: Vec<f64> = (0..m).map(|c| election.cost(c).to_f64()).collect();

    loop {
        let pick = screened_min(
            (0..m).filter(|&c| out.fractions[c] != one && weight[c].is_positive()),
            |c| {
                let v = cost_f[c] / weight[c].to_f64();
                Some((v, v * 1e-9))
            },
            |c| Some((election.cost(c) / &weight[c], ())),
            &rank,
        );
        let Some((c, rho, ())) = pick else { break };

        // Largest fraction nobody's account rules out; exact check only for
        // the voters whose float cap is close to the smallest.
        let rho_f = rho.to_f64();
        let caps: Vec<(usize, &Num, f64)> = util
            .supporters(c)
            .iter()
            .filter(|(i, _)| active[*i])
            .map(|(i, u)| (*i, u, budgets[*i].to_f64() / (rho_f * u.to_f64())))
            .collect();
        let floor = caps.iter().map(|x| x.2).fold(f64::INFINITY, f64::min);
        let mut alpha = &one - &out.fractions[c];
        for (i, u, cap_f) in caps {
            if cap_f <= floor * (1.0 + 1e-9) + 1e-300 {
                let cap = &budgets[i] / (&rho * u);
                if cap < alpha {
                    alpha = cap;
                }
            }
        }
        out.fractions[c] += &alpha;

        let mut payments = Vec::new();
        let mut dropped = Vec::new();
        let share = &alpha * &rho;
        for (i, u) in util.supporters(c) {
            if !active[*i] {
                continue;
            }
            let p = &share * u;
            budgets[*i] -= &p;
            debug_assert!(!budgets[*i].is_negative());
            payments.push((*i, p));
            if budgets[*i].is_zero() {
                dropped.push(*i);
            }
        }
        for i in dropped {
            active[i] = false;
            for (d, u) in util.voter(i) {
                weight[*d] -= u;
            }
        }
        out.purchases.push(Round { project: c, alpha, rho, payments, overspend: Vec::new() });
    }
    out
}

/// Spends what FrES left over on the projects with the best total utility per cost.
pub fn fres_utilitarian_completion(
    election: &Election,
    config: &RuleConfig,
    mut partial: FractionalOutcome,
) -> FractionalOutcome {
    let m = election.n_projects();
    let rank = config.tie_breaker.ranks(m);
    let spent: Num = (0..m).map(|c| election.cost(c) * &partial.fractions[c]).sum();
    let mut left = &election.budget - spent;
    let density: Vec<Num> = (0..m).map(|c| election.utilities.total(c) / election.cost(c)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| density[b].cmp(&density[a]).then(rank[a].cmp(&rank[b])));
    let one = Num::one();
    for c in order {
        if !left.is_positive() {
            break;
        }
        let missing = &one - &partial.fractions[c];
        if !missing.is_positive() {
            continue;
        }
        let add = Num::min_of(&missing, &(&left / election.cost(c)));
        left -= election.cost(c) * &add;
        partial.fractions[c] += &add;
        partial.completion.push((c, add));
    }
    partial
}
