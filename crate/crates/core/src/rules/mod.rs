//! Voting rules. Each rule is a pure function of an [`Election`] and a
//! [`RuleConfig`] and returns its full round log.

mod bos;
mod bos_plus;
mod config;
mod fres;
mod mes;
mod screen;
mod utilitarian;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bos::{bos, bos_quote, overspend_majority_violations, MajorityViolation};
pub use bos_plus::bos_plus;
pub use config::{RuleConfig, TieBreaker, TieOrderError};
pub use fres::{fres, fres_utilitarian_completion};
pub use mes::{add1u, mes, min_rho};
pub use utilitarian::utilitarian;

use crate::model::{Election, FractionalOutcome, Outcome};
use crate::num::Num;

/// A candidate's price quote for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffordabilityQuote {
    pub project: usize,
    pub alpha: Num,
    pub rho: Num,
    /// Nominal per-voter shares, summing to the project cost.
    pub payments: Vec<(usize, Num)>,
    /// `rho / alpha`.
    pub ratio: Num,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "utilitarian")]
    Utilitarian,
    #[serde(rename = "mes")]
    Mes,
    #[serde(rename = "mes-add1u")]
    MesAdd1u,
    #[serde(rename = "fres")]
    Fres,
    #[serde(rename = "fres-complete")]
    FresComplete,
    #[serde(rename = "bos")]
    Bos,
    #[serde(rename = "bos-plus")]
    BosPlus,
}

impl Rule {
    pub const ALL: [Rule; 7] =
        [Rule::Utilitarian, Rule::Mes, Rule::MesAdd1u, Rule::Fres, Rule::FresComplete, Rule::Bos, Rule::BosPlus];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Utilitarian => "utilitarian",
            Rule::Mes => "mes",
            Rule::MesAdd1u => "mes-add1u",
            Rule::Fres => "fres",
            Rule::FresComplete => "fres-complete",
            Rule::Bos => "bos",
            Rule::BosPlus => "bos-plus",
        }
    }

    pub fn is_fractional(self) -> bool {
        matches!(self, Rule::Fres | Rule::FresComplete)
    }

    pub fn run(self, election: &Election, config: &RuleConfig) -> RuleOutput {
        match self {
            Rule::Utilitarian => RuleOutput::Integral(utilitarian(election, config)),
            Rule::Mes => {
                let b_ini = default_endowment(election);
                RuleOutput::Integral(mes(election, config, &b_ini))
            }
            Rule::MesAdd1u => RuleOutput::Integral(add1u(election, config)),
            Rule::Fres => RuleOutput::Fractional(fres(election, config)),
            Rule::FresComplete => {
                let partial = fres(election, config);
                RuleOutput::Fractional(fres_utilitarian_completion(election, config, partial))
            }
            Rule::Bos => RuleOutput::Integral(bos(election, config)),
            Rule::BosPlus => RuleOutput::Integral(bos_plus(election, config)),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase().replace('_', "-");
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == lower)
            .or(match lower.as_str() {
                "add1u" => Some(Rule::MesAdd1u),
                "bos+" | "bosplus" => Some(Rule::BosPlus),
                _ => None,
            })
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleOutput {
    Integral(Outcome),
    Fractional(FractionalOutcome),
}

impl RuleOutput {
    pub fn funded(&self) -> Vec<(usize, Num)> {
        use crate::model::Allocation;
        match self {
            RuleOutput::Integral(o) => o.funded(),
            RuleOutput::Fractional(f) => f.funded(),
        }
    }
}

/// `b / n`, or zero for an election without voters.
pub fn default_endowment(election: &Election) -> Num {
    if election.n_voters == 0 {
        Num::zero()
    } else {
        &election.budget / Num::from(election.n_voters)
    }
}

/// True when `(value_a, a)` beats `(value_b, b)`: smaller value, ties by rank.
pub(crate) fn beats(value_a: &Num, a: usize, value_b: &Num, b: usize, rank: &[usize]) -> bool {
    match value_a.cmp(value_b) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => rank[a] < rank[b],
    }
}
