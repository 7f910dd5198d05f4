use serde::{Deserialize, Serialize};

use crate::audit::AuditError;
use crate::model::{Allocation, Election};
use crate::num::Num;

/// Cost-utility satisfaction `u_i(W)` for every voter, from raw approvals.
fn cost_satisfactions(election: &Election, funded: &[(usize, Num)]) -> Vec<Num> {
    let mut w = vec![Num::zero(); election.n_projects()];
    for (c, f) in funded {
        w[*c] = f.clone();
    }
    (0..election.n_voters)
        .map(|i| election.scores.voter(i).iter().map(|(c, s)| s * election.cost(*c) * &w[*c]).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EjrPlusWitness {
    pub project: usize,
    pub group: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EjrPlusReport {
    /// Number of unfunded projects with a violating group.
    pub count: usize,
    pub witnesses: Vec<EjrPlusWitness>,
}

/// EJR+ up to one under cost utilities, counted per project.
///
/// A project `c` not fully funded is a violation when some `s` of its
/// approvers all satisfy `u_i(W) + cost(c) <= s * b / n`. Checking the `s`
/// least satisfied approvers for each `s` is enough.
pub fn ejr_plus_violations<A: Allocation + ?Sized>(election: &Election, outcome: &A) -> Result<EjrPlusReport, AuditError> {
    if !election.is_approval() {
        return Err(AuditError::NotApproval);
    }
    let mut report = EjrPlusReport::default();
    if election.n_voters == 0 {
        return Ok(report);
    }
    let funded = outcome.funded();
    let sat = cost_satisfactions(election, &funded);
    let share = &election.budget / Num::from(election.n_voters);
    let full: Vec<usize> = funded.iter().filter(|(_, f)| *f == Num::one()).map(|(c, _)| *c).collect();
    for c in 0..election.n_projects() {
        if full.contains(&c) {
            continue;
        }
        let mut approvers: Vec<usize> = election.scores.supporters(c).iter().map(|(i, _)| *i).collect();
        approvers.sort_by(|a, b| sat[*a].cmp(&sat[*b]).then(a.cmp(b)));
        for (k, &i) in approvers.iter().enumerate() {
            let s = k + 1;
            if &sat[i] + election.cost(c) <= &share * Num::from(s) {
                report.count += 1;
                report.witnesses.push(EjrPlusWitness { project: c, group: approvers[..s].to_vec() });
                break;
            }
        }
    }
    Ok(report)
}

/// How much slack `t` a group gets in the EJR-up-to-`t` check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slack {
    Fixed(Num),
    /// `(n - |S|) / (2|S|) * max cost`.
    OverspendBound,
    /// The same bound rounded up to an integer.
    CeilOverspendBound,
}

impl Slack {
    fn value(&self, n: usize, group: usize, max_cost: &Num) -> Num {
        match self {
            Slack::Fixed(t) => t.clone(),
            Slack::OverspendBound => Num::from(n - group) / Num::from(2 * group) * max_cost,
            Slack::CeilOverspendBound => (Num::from(n - group) / Num::from(2 * group) * max_cost).ceil(),
        }
    }
}

/// Size limits for exhaustive group enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_voters: usize,
    pub max_projects: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_voters: 12, max_projects: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EjrWitness {
    pub group: Vec<usize>,
    pub projects: Vec<usize>,
    pub missing: usize,
    pub slack: Num,
}

/// Every deserving group left behind by more than the slack.
///
/// Enumerates voter groups `S` and subsets `T` of their common approvals with
/// `|S| * b >= cost(T) * n`; reports `(S, T)` when some unselected `c` in `T`
/// leaves every member below `cost(T) - t - cost(c)`.
pub fn ejr_up_to_witnesses(
    election: &Election,
    selected: &[usize],
    slack: &Slack,
    caps: Caps,
) -> Result<Vec<EjrWitness>, AuditError> {
    let (n, m) = (election.n_voters, election.n_projects());
    if n > caps.max_voters.min(31) || m > caps.max_projects.min(31) {
        return Err(AuditError::TooLarge { n, m, max_n: caps.max_voters, max_m: caps.max_projects });
    }
    if !election.is_approval() {
        return Err(AuditError::NotApproval);
    }
    let sat = cost_satisfactions(election, &selected.funded());
    let approves: Vec<u32> =
        (0..n).map(|i| election.scores.voter(i).iter().fold(0u32, |acc, (c, _)| acc | (1 << c))).collect();
    let chosen: u32 = selected.iter().fold(0, |acc, c| acc | (1 << c));
    let max_cost = election.projects.iter().map(|p| p.cost.clone()).max().unwrap_or_else(Num::zero);
    let mut found = Vec::new();

    for group in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| group & (1 << i) != 0).collect();
        let common = members.iter().fold(u32::MAX >> (32 - m.max(1)), |acc, i| acc & approves[*i]);
        if common & !chosen == 0 {
            continue;
        }
        let size = members.len();
        let t = slack.value(n, size, &max_cost);
        let best_off = members.iter().map(|i| &sat[*i]).max().expect("nonempty group");
        let mut sub = common;
        while sub != 0 {
            let unselected = sub & !chosen;
            if unselected != 0 {
                let cost_t: Num = (0..m).filter(|c| sub & (1 << c) != 0).map(|c| election.cost(c)).sum();
                if Num::from(size) * &election.budget >= &cost_t * Num::from(n) {
                    let missing = (0..m)
                        .filter(|c| unselected & (1 << c) != 0)
                        .min_by(|a, b| election.cost(*a).cmp(election.cost(*b)).then(a.cmp(b)))
                        .expect("nonempty");
                    let bar = &cost_t - &t - election.cost(missing);
                    if *best_off < bar {
                        found.push(EjrWitness {
                            group: members.clone(),
                            projects: (0..m).filter(|c| sub & (1 << c) != 0).collect(),
                            missing,
                            slack: t.clone(),
                        });
                    }
                }
            }
            sub = (sub - 1) & common;
        }
    }
    Ok(found)
}
