//! Equal Shares family of participatory-budgeting rules.
//!
//! The crate is organised bottom-up:
//!
//! * [`num`] and [`model`] hold exact rationals and the election model;
//! * [`rules`] implements Utilitarian, MES (with Add1U), FrES, BOS and BOS+;
//! * [`audit`] computes satisfaction metrics and proportionality checks;
//! * [`pabulib`] reads and writes `.pb` files;
//! * [`synth`] generates synthetic elections.

pub mod audit;
pub mod model;
pub mod num;
pub mod pabulib;
pub mod rules;
pub mod synth;

pub use model::{
    derive_cost_utilities, is_feasible, outcome_utility, Allocation, BudgetState, Election, FractionalOutcome,
    ModelError, Outcome, Project, Round, UtilityModel, UtilityProfile,
};
pub use num::Num;
pub use rules::{Rule, RuleConfig, TieBreaker};
