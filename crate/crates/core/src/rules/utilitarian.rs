use crate::model::{Election, Outcome};
use crate::num::Num;
use crate::rules::RuleConfig;

/// Projects by descending total score, ties by the tie-breaker.
pub(crate) fn by_total_score(election: &Election, rank: &[usize]) -> Vec<usize> {
    let totals: Vec<Num> = (0..election.n_projects()).map(|c| election.scores.total(c)).collect();
    let mut order: Vec<usize> = (0..election.n_projects()).collect();
    order.sort_by(|&a, &b| totals[b].cmp(&totals[a]).then(rank[a].cmp(&rank[b])));
    order
}

/// Appends every project from `order` that still fits. Returns the additions.
pub(crate) fn greedy_fill(election: &Election, selected: &mut Vec<usize>, order: &[usize]) -> Vec<usize> {
    let mut taken = vec![false; election.n_projects()];
    let mut spent = Num::zero();
    for &c in selected.iter() {
        taken[c] = true;
        spent += election.cost(c);
    }
    let mut added = Vec::new();
    for &c in order {
        if taken[c] {
            continue;
        }
        let next = &spent + election.cost(c);
        if next <= election.budget {
            spent = next;
            taken[c] = true;
            selected.push(c);
            added.push(c);
        }
    }
    added
}

/// Greedy by vote count (total score).
pub fn utilitarian(election: &Election, config: &RuleConfig) -> Outcome {
    let rank = config.tie_breaker.ranks(election.n_projects());
    let order = by_total_score(election, &rank);
    let mut selected = Vec::new();
    greedy_fill(election, &mut selected, &order);
    Outcome { selected, ..Default::default() }
}
