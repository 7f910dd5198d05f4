//! Benchmark inputs: the bundled fixtures and a seeded Euclidean election.

use std::path::Path;

use eqs_core::pabulib::read_election;
use eqs_core::synth::{gen_euclidean, EuclideanConfig};
use eqs_core::{Election, UtilityModel};

pub fn fixture(name: &str) -> Election {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    read_election(&text, UtilityModel::Cost).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Named inputs in a fixed order.
pub fn corpus() -> Vec<(&'static str, Election)> {
    let euclid = gen_euclidean(&EuclideanConfig::preset(1, 0).expect("preset 1 exists")).expect("default config is valid");
    vec![
        ("ten-voters", fixture("ten-voters.pb")),
        ("helenka", fixture("helenka.pb")),
        ("two-blocs", fixture("two-blocs.pb")),
        ("euclidean", euclid.election),
    ]
}
