//! Election data model shared by the rules, the auditor and the I/O layers.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::num::Num;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(Num),
    #[error("project {name:?} has non-positive cost {cost}")]
    NonPositiveCost { name: String, cost: Num },
    #[error("project {name:?} costs {cost}, more than the budget {budget}")]
    CostAboveBudget { name: String, cost: Num, budget: Num },
    #[error("voter {voter} references unknown project {project}")]
    UnknownProject { voter: usize, project: usize },
    #[error("voter {voter} lists project {project} twice")]
    DuplicateEntry { voter: usize, project: usize },
    #[error("voter {voter} has negative utility {value} for project {project}")]
    NegativeUtility { voter: usize, project: usize, value: Num },
    #[error("project {0} listed twice")]
    DuplicateProject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityModel {
    Score,
    Cost,
}

impl std::str::FromStr for UtilityModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "score" => Ok(UtilityModel::Score),
            "cost" => Ok(UtilityModel::Cost),
            other => Err(format!("unknown utility model {other:?}")),
        }
    }
}

impl std::fmt::Display for UtilityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UtilityModel::Score => "score",
            UtilityModel::Cost => "cost",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    /// Dense index in input order.
    pub id: usize,
    /// External identifier (the Pabulib `project_id`).
    pub name: String,
    pub cost: Num,
}

/// Sparse voter × project matrix of non-negative utilities.
///
/// Both orientations are stored and kept sorted by index. Zero entries are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UtilityProfile {
    by_voter: Vec<Vec<(usize, Num)>>,
    by_project: Vec<Vec<(usize, Num)>>,
}

impl UtilityProfile {
    /// Builds a profile from per-voter rows of `(project, value)`.
    pub fn from_rows(n_projects: usize, rows: Vec<Vec<(usize, Num)>>) -> Result<Self, ModelError> {
        let mut by_voter = Vec::with_capacity(rows.len());
        let mut by_project = vec![Vec::new(); n_projects];
        for (voter, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|(c, _)| *c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(ModelError::DuplicateEntry { voter, project: w[0].0 });
                }
            }
            let mut kept = Vec::with_capacity(row.len());
            for (c, v) in row {
                if c >= n_projects {
                    return Err(ModelError::UnknownProject { voter, project: c });
                }
                if v.is_negative() {
                    return Err(ModelError::NegativeUtility { voter, project: c, value: v });
                }
                if v.is_zero() {
                    continue;
                }
                by_project[c].push((voter, v.clone()));
                kept.push((c, v));
            }
            by_voter.push(kept);
        }
        Ok(UtilityProfile { by_voter, by_project })
    }

    pub fn n_voters(&self) -> usize {
        self.by_voter.len()
    }

    pub fn n_projects(&self) -> usize {
        self.by_project.len()
    }

    /// Positive entries of voter `i`, ascending by project.
    pub fn voter(&self, i: usize) -> &[(usize, Num)] {
        &self.by_voter[i]
    }

    /// Voters with positive utility for project `c`, ascending by voter.
    pub fn supporters(&self, c: usize) -> &[(usize, Num)] {
        &self.by_project[c]
    }

    pub fn get(&self, i: usize, c: usize) -> Num {
        match self.by_voter[i].binary_search_by_key(&c, |(p, _)| *p) {
            Ok(k) => self.by_voter[i][k].1.clone(),
            Err(_) => Num::zero(),
        }
    }

    pub fn total(&self, c: usize) -> Num {
        self.by_project[c].iter().map(|(_, u)| u).sum()
    }

    /// Every entry multiplied by `f(project)`.
    pub fn scale_by_project(&self, f: impl Fn(usize) -> Num) -> UtilityProfile {
        let factors: Vec<Num> = (0..self.n_projects()).map(f).collect();
        let rows = self
            .by_voter
            .iter()
            .map(|row| row.iter().map(|(c, u)| (*c, u * &factors[*c])).collect())
            .collect();
        UtilityProfile::from_rows(self.n_projects(), rows).expect("scaling keeps a valid profile")
    }

    pub fn rows(&self) -> &[Vec<(usize, Num)>] {
        &self.by_voter
    }
}

/// `u_i(c) = score_i(c) · cost(c)`.
pub fn derive_cost_utilities(scores: &UtilityProfile, projects: &[Project]) -> UtilityProfile {
    scores.scale_by_project(|c| projects[c].cost.clone())
}

/// An immutable election: projects, voters, budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Election {
    pub projects: Vec<Project>,
    pub n_voters: usize,
    pub budget: Num,
    /// Raw ballot scores.
    pub scores: UtilityProfile,
    /// Utilities the rules operate on (scores, or scores × cost).
    pub utilities: UtilityProfile,
    pub model: UtilityModel,
    pub metadata: IndexMap<String, String>,
}

impl Election {
    pub fn new(
        projects: Vec<Project>,
        budget: Num,
        scores: UtilityProfile,
        model: UtilityModel,
        metadata: IndexMap<String, String>,
    ) -> Result<Self, ModelError> {
        if !budget.is_positive() {
            return Err(ModelError::NonPositiveBudget(budget));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &projects {
            if !p.cost.is_positive() {
                return Err(ModelError::NonPositiveCost { name: p.name.clone(), cost: p.cost.clone() });
            }
            if p.cost > budget {
                return Err(ModelError::CostAboveBudget {
                    name: p.name.clone(),
                    cost: p.cost.clone(),
                    budget: budget.clone(),
                });
            }
            if !seen.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateProject(p.name.clone()));
            }
        }
        assert_eq!(scores.n_projects(), projects.len(), "profile width must match project count");
        for (k, p) in projects.iter().enumerate() {
            assert_eq!(p.id, k, "project ids must be dense and in order");
        }
        let utilities = match model {
            UtilityModel::Score => scores.clone(),
            UtilityModel::Cost => derive_cost_utilities(&scores, &projects),
        };
        Ok(Election { n_voters: scores.n_voters(), projects, budget, scores, utilities, model, metadata })
    }

    /// Convenience constructor from per-voter `(project, score)` rows.
    pub fn from_scores(
        costs: &[(&str, Num)],
        budget: Num,
        rows: Vec<Vec<(usize, Num)>>,
        model: UtilityModel,
    ) -> Result<Self, ModelError> {
        let projects: Vec<Project> = costs
            .iter()
            .enumerate()
            .map(|(id, (name, cost))| Project { id, name: name.to_string(), cost: cost.clone() })
            .collect();
        let scores = UtilityProfile::from_rows(projects.len(), rows)?;
        Election::new(projects, budget, scores, model, IndexMap::new())
    }

    /// Same ballots, different utility model.
    pub fn with_model(&self, model: UtilityModel) -> Election {
        Election::new(self.projects.clone(), self.budget.clone(), self.scores.clone(), model, self.metadata.clone())
            .expect("already validated")
    }

    pub fn n_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn cost(&self, c: usize) -> &Num {
        &self.projects[c].cost
    }

    pub fn project_by_name(&self, name: &str) -> Option<usize> {
        self.projects.iter().position(|p| p.name == name)
    }

    pub fn names(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&c| self.projects[c].name.clone()).collect()
    }

    /// True when every stored score is 0 or 1.
    pub fn is_approval(&self) -> bool {
        self.scores.rows().iter().flatten().all(|(_, s)| *s == Num::one())
    }
}

/// One purchase step of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub project: usize,
    /// Fraction bought (integral rules) or purchase increment (FrES).
    pub alpha: Num,
    pub rho: Num,
    /// Money actually taken from each voter's account, sparse.
    pub payments: Vec<(usize, Num)>,
    /// Amount by which a voter's nominal share exceeded the account, sparse.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overspend: Vec<(usize, Num)>,
}

impl Round {
    pub fn charged(&self) -> Num {
        self.payments.iter().map(|(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Outcome {
    /// Selected projects in selection order.
    pub selected: Vec<usize>,
    pub rounds: Vec<Round>,
    /// Projects appended by a completion step (also present in `selected`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub completed: Vec<usize>,
    /// Per-voter initial endowment actually used (Add1U).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endowment: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FractionalOutcome {
    /// `W_c` for every project, dense.
    pub fractions: Vec<Num>,
    pub purchases: Vec<Round>,
    /// `(project, added fraction)` from utilitarian completion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub completion: Vec<(usize, Num)>,
}

impl FractionalOutcome {
    pub fn empty(m: usize) -> Self {
        FractionalOutcome { fractions: vec![Num::zero(); m], purchases: Vec::new(), completion: Vec::new() }
    }
}

/// Per-voter working accounts during a rule evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetState {
    pub budgets: Vec<Num>,
    pub overspent: Vec<Num>,
}

impl BudgetState {
    pub fn uniform(n: usize, each: Num) -> Self {
        BudgetState { budgets: vec![each; n], overspent: vec![Num::zero(); n] }
    }

    pub fn total(&self) -> Num {
        self.budgets.iter().sum()
    }
}

/// Anything that funds projects to some extent.
pub trait Allocation {
    /// `(project, fraction)` for every project funded with positive fraction.
    fn funded(&self) -> Vec<(usize, Num)>;

    fn spent(&self, election: &Election) -> Num {
        self.funded().iter().map(|(c, w)| election.cost(*c) * w).sum()
    }
}

impl Allocation for Outcome {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.selected.iter().map(|&c| (c, Num::one())).collect()
    }
}

impl Allocation for FractionalOutcome {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.fractions.iter().enumerate().filter(|(_, w)| w.is_positive()).map(|(c, w)| (c, w.clone())).collect()
    }
}

impl Allocation for [usize] {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.iter().map(|&c| (c, Num::one())).collect()
    }
}

impl Allocation for Vec<usize> {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.as_slice().funded()
    }
}

/// Funded `(project, fraction)` pairs as an allocation.
impl Allocation for [(usize, Num)] {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.to_vec()
    }
}

impl Allocation for Vec<(usize, Num)> {
    fn funded(&self) -> Vec<(usize, Num)> {
        self.clone()
    }
}

/// `u_i(W)` under the election's utility model, weighted by funded fraction.
pub fn outcome_utility<A: Allocation + ?Sized>(election: &Election, voter: usize, outcome: &A) -> Num {
    utility_in(&election.utilities, voter, outcome)
}

pub(crate) fn utility_in<A: Allocation + ?Sized>(profile: &UtilityProfile, voter: usize, outcome: &A) -> Num {
    outcome.funded().iter().map(|(c, w)| profile.get(voter, *c) * w).sum()
}

pub fn is_feasible<A: Allocation + ?Sized>(election: &Election, outcome: &A) -> bool {
    outcome.spent(election) <= election.budget
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn n(v: i64) -> Num {
        Num::from(v)
    }

    /// Ten voters, six projects, budget one million.
    pub fn ten_voters(model: UtilityModel) -> Election {
        let costs = [("A", 300_000), ("B", 400_000), ("C", 300_000), ("D", 240_000), ("E", 170_000), ("F", 100_000)];
        let approvals: [&[usize]; 10] = [
            &[0],
            &[0, 1, 2, 4],
            &[0, 1, 2],
            &[0, 1, 2],
            &[0, 1, 2],
            &[0, 1, 5],
            &[3, 4],
            &[3, 4],
            &[3, 4, 5],
            &[2, 3, 5],
        ];
        let costs: Vec<(&str, Num)> = costs.iter().map(|(s, c)| (*s, n(*c))).collect();
        let rows = approvals.iter().map(|a| a.iter().map(|&c| (c, Num::one())).collect()).collect();
        Election::from_scores(&costs, n(1_000_000), rows, model).unwrap()
    }
}
