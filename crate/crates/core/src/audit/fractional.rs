use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{outcome_utility, Allocation, Election};
use crate::num::Num;

/// A group `S`, projects `T` with fractions `beta` and per-project guarantees `gamma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohesiveSpec {
    pub group: Vec<usize>,
    /// `(project, beta, gamma)` for every project in `T`.
    pub projects: Vec<(usize, Num, Num)>,
}

impl CohesiveSpec {
    /// Both cohesiveness conditions hold.
    pub fn is_cohesive(&self, election: &Election) -> bool {
        if self.group.is_empty() {
            return false;
        }
        let spend: Num = self.projects.iter().map(|(c, beta, _)| election.cost(*c) * beta).sum();
        let cap = &election.budget * Num::from(self.group.len()) / Num::from(election.n_voters);
        spend <= cap
            && self.projects.iter().all(|(c, beta, gamma)| {
                self.group.iter().all(|&i| election.utilities.get(i, *c) * beta >= *gamma)
            })
    }

    /// True when every member gets less than the guaranteed total.
    pub fn refutes<A: Allocation + ?Sized>(&self, election: &Election, outcome: &A) -> bool {
        let owed: Num = self.projects.iter().map(|(_, _, g)| g).sum();
        self.group.iter().all(|&i| outcome_utility(election, i, outcome) < owed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsifierReport {
    pub trials: usize,
    pub counterexample: Option<CohesiveSpec>,
}

const GRID: i64 = 8;

/// Random search for a cohesive group that the outcome leaves short.
///
/// Finding nothing is evidence, not proof.
pub fn fractional_ejr_falsifier<A: Allocation + ?Sized>(
    election: &Election,
    outcome: &A,
    trials: usize,
    seed: u64,
) -> FalsifierReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = election.n_voters;
    let m = election.n_projects();
    if n == 0 || m == 0 {
        return FalsifierReport { trials, counterexample: None };
    }
    let voters: Vec<usize> = (0..n).collect();
    for _ in 0..trials {
        let size = rng.gen_range(1..=n);
        let mut group: Vec<usize> = voters.choose_multiple(&mut rng, size).copied().collect();
        group.sort_unstable();

        let common: Vec<usize> = (0..m)
            .filter(|&c| group.iter().all(|&i| election.utilities.get(i, c).is_positive()))
            .collect();
        if common.is_empty() {
            continue;
        }
        let mut picked: Vec<(usize, i64)> = Vec::new();
        for &c in &common {
            if rng.gen_bool(0.5) {
                picked.push((c, rng.gen_range(1..=GRID)));
            }
        }
        if picked.is_empty() {
            let c = *common.choose(&mut rng).expect("nonempty");
            picked.push((c, rng.gen_range(1..=GRID)));
        }

        // Shrink the largest fraction until T fits the group's share.
        let cap = &election.budget * Num::from(group.len()) / Num::from(n);
        loop {
            let spend: Num = picked.iter().map(|(c, k)| election.cost(*c) * Num::ratio(*k, GRID)).sum();
            if spend <= cap {
                break;
            }
            let top = (0..picked.len()).max_by_key(|&j| (picked[j].1, std::cmp::Reverse(j))).expect("nonempty");
            picked[top].1 -= 1;
            picked.retain(|(_, k)| *k > 0);
            if picked.is_empty() {
                break;
            }
        }
        if picked.is_empty() {
            continue;
        }

        let projects = picked
            .iter()
            .map(|&(c, k)| {
                let beta = Num::ratio(k, GRID);
                let gamma = group
                    .iter()
                    .map(|&i| election.utilities.get(i, c) * &beta)
                    .min()
                    .expect("nonempty group");
                (c, beta, gamma)
            })
            .collect();
        let spec = CohesiveSpec { group, projects };
        debug_assert!(spec.is_cohesive(election));
        if spec.refutes(election, outcome) {
            return FalsifierReport { trials, counterexample: Some(spec) };
        }
    }
    FalsifierReport { trials, counterexample: None }
}
