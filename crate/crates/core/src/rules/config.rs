use serde::{Deserialize, Serialize};

use crate::model::Election;
use crate::num::Num;

/// Total order over projects used to break ties between equally good candidates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreaker {
    /// Lower project id wins.
    #[default]
    Ascending,
    /// Listed projects win in the listed order; unlisted ones follow by id.
    Custom(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TieOrderError {
    #[error("tie order names unknown project {0:?}")]
    UnknownProject(String),
    #[error("tie order lists project {0:?} twice")]
    Duplicate(String),
}

impl TieBreaker {
    /// `rank[c]` for every project; smaller rank wins a tie.
    pub fn ranks(&self, m: usize) -> Vec<usize> {
        match self {
            TieBreaker::Ascending => (0..m).collect(),
            TieBreaker::Custom(order) => {
                let mut rank = vec![usize::MAX; m];
                let mut next = 0;
                for &c in order {
                    if c < m && rank[c] == usize::MAX {
                        rank[c] = next;
                        next += 1;
                    }
                }
                for r in rank.iter_mut() {
                    if *r == usize::MAX {
                        *r = next;
                        next += 1;
                    }
                }
                rank
            }
        }
    }

    /// Builds a custom order from external project names.
    pub fn from_names<S: AsRef<str>>(election: &Election, names: &[S]) -> Result<Self, TieOrderError> {
        let mut order = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let c = election.project_by_name(name).ok_or_else(|| TieOrderError::UnknownProject(name.to_string()))?;
            if order.contains(&c) {
                return Err(TieOrderError::Duplicate(name.to_string()));
            }
            order.push(c);
        }
        Ok(TieBreaker::Custom(order))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub tie_breaker: TieBreaker,
    /// Endowment increment for Add1U probing.
    pub add1u_step: Num,
    /// BOS variant that hands the leftover money of fully served voters to everyone else.
    pub exhaustive_redistribution: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { tie_breaker: TieBreaker::Ascending, add1u_step: Num::one(), exhaustive_redistribution: false }
    }
}

impl RuleConfig {
    pub fn with_ties(tie_breaker: TieBreaker) -> Self {
        RuleConfig { tie_breaker, ..Default::default() }
    }
}
