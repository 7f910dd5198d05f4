//! Outcome metrics and proportionality checks.

mod ejr;
mod fractional;

use serde::{Deserialize, Serialize};

pub use ejr::{ejr_plus_violations, ejr_up_to_witnesses, Caps, EjrPlusReport, EjrPlusWitness, EjrWitness, Slack};
pub use fractional::{fractional_ejr_falsifier, CohesiveSpec, FalsifierReport};

use crate::model::{Allocation, Election, Outcome, UtilityModel};
use crate::num::Num;
use crate::rules::RuleOutput;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("this check needs approval ballots")]
    NotApproval,
    #[error("instance too large for exhaustive search: {n} voters, {m} projects (caps {max_n}, {max_m})")]
    TooLarge { n: usize, m: usize, max_n: usize, max_m: usize },
}

/// Fraction of voters with no utility from any funded project.
pub fn exclusion_ratio<A: Allocation + ?Sized>(election: &Election, outcome: &A) -> Num {
    if election.n_voters == 0 {
        return Num::zero();
    }
    let funded: Vec<usize> = outcome.funded().into_iter().map(|(c, _)| c).collect();
    let mut hit = vec![false; election.n_projects()];
    for c in funded {
        hit[c] = true;
    }
    let excluded = (0..election.n_voters)
        .filter(|&i| !election.scores.voter(i).iter().any(|(c, _)| hit[*c]))
        .count();
    Num::from(excluded) / Num::from(election.n_voters)
}

/// Total utility over all voters under the given model.
pub fn satisfaction<A: Allocation + ?Sized>(election: &Election, outcome: &A, model: UtilityModel) -> Num {
    outcome
        .funded()
        .iter()
        .map(|(c, w)| {
            let score = election.scores.total(*c);
            match model {
                UtilityModel::Score => score * w,
                UtilityModel::Cost => score * election.cost(*c) * w,
            }
        })
        .sum()
}

/// `value / reference`, with `0 / 0 = 1`.
pub fn relative(value: &Num, reference: &Num) -> Num {
    if reference.is_zero() {
        if value.is_zero() { Num::one() } else { Num::zero() }
    } else {
        value / reference
    }
}

pub fn budget_spent_fraction<A: Allocation + ?Sized>(election: &Election, outcome: &A) -> Num {
    outcome.spent(election) / &election.budget
}

/// No unselected project fits in what is left of the budget.
pub fn is_exhaustive(election: &Election, selected: &[usize]) -> bool {
    let left = &election.budget - selected.spent(election);
    (0..election.n_projects()).all(|c| selected.contains(&c) || *election.cost(c) > left)
}

/// The whole budget is spent, or every project is fully funded.
pub fn is_exhaustive_fractional(election: &Election, fractions: &[Num]) -> bool {
    let spent: Num = fractions.iter().enumerate().map(|(c, w)| election.cost(c) * w).sum();
    spent == election.budget || fractions.iter().all(|w| *w == Num::one())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub score_satisfaction: Num,
    pub cost_satisfaction: Num,
    pub relative_score_satisfaction: Num,
    pub relative_cost_satisfaction: Num,
    pub exclusion_ratio: Num,
    pub budget_spent_fraction: Num,
    pub exhaustive: bool,
    /// Only defined for approval ballots.
    pub ejr_plus_violations: Option<usize>,
}

impl AuditReport {
    /// Audits `output`; `reference` is the utilitarian outcome on the same election.
    pub fn compute(election: &Election, output: &RuleOutput, reference: &Outcome) -> AuditReport {
        let funded = output.funded();
        let score = satisfaction(election, &funded, UtilityModel::Score);
        let cost = satisfaction(election, &funded, UtilityModel::Cost);
        let ref_score = satisfaction(election, reference, UtilityModel::Score);
        let ref_cost = satisfaction(election, reference, UtilityModel::Cost);
        let exhaustive = match output {
            RuleOutput::Integral(o) => is_exhaustive(election, &o.selected),
            RuleOutput::Fractional(f) => is_exhaustive_fractional(election, &f.fractions),
        };
        let ejr = if election.is_approval() {
            ejr_plus_violations(election, &funded).ok().map(|r| r.count)
        } else {
            None
        };
        AuditReport {
            relative_score_satisfaction: relative(&score, &ref_score),
            relative_cost_satisfaction: relative(&cost, &ref_cost),
            score_satisfaction: score,
            cost_satisfaction: cost,
            exclusion_ratio: exclusion_ratio(election, &funded),
            budget_spent_fraction: budget_spent_fraction(election, &funded),
            exhaustive,
            ejr_plus_violations: ejr,
        }
    }
}
