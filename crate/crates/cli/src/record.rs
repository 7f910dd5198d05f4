use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eqs_core::audit::AuditReport;
use eqs_core::rules::{utilitarian, RuleOutput};
use eqs_core::{Election, Num, Rule, RuleConfig, TieBreaker, UtilityModel};

/// One rule evaluated on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub rule: Rule,
    pub model: UtilityModel,
    pub ballot_type: String,
    pub n_projects: usize,
    pub n_voters: usize,
    /// Integral rules: projects in selection order. Fractional rules: every
    /// project with a positive fraction.
    pub selected: Vec<String>,
    /// Fractional rules only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractions: Option<Vec<(String, Num)>>,
    pub spent: Num,
    pub audit: AuditReport,
    /// Rule-only wall time. Left out of batch records so they stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
    pub config_hash: String,
}

#[derive(Serialize)]
struct ConfigKey<'a> {
    rule: Rule,
    model: UtilityModel,
    tie_order: Vec<String>,
    add1u_step: &'a Num,
    exhaustive_redistribution: bool,
}

/// First 16 hex digits of SHA-256 over the canonical JSON of the settings.
pub fn config_hash(election: &Election, rule: Rule, config: &RuleConfig) -> String {
    let tie_order = match &config.tie_breaker {
        TieBreaker::Ascending => Vec::new(),
        TieBreaker::Custom(order) => election.names(order),
    };
    let key = ConfigKey {
        rule,
        model: election.model,
        tie_order,
        add1u_step: &config.add1u_step,
        exhaustive_redistribution: config.exhaustive_redistribution,
    };
    let json = serde_json::to_vec(&key).expect("plain data serialises");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Runs `rule`, timing only the rule itself, and audits the result against
/// the utilitarian `reference`.
pub fn evaluate(
    instance: &str,
    ballot_type: &str,
    election: &Election,
    rule: Rule,
    config: &RuleConfig,
    reference: &eqs_core::Outcome,
) -> (RunRecord, RuleOutput) {
    let start = Instant::now();
    let output = rule.run(election, config);
    let runtime = start.elapsed().as_secs_f64();

    let funded = output.funded();
    let (selected, fractions) = match &output {
        RuleOutput::Integral(o) => (election.names(&o.selected), None),
        RuleOutput::Fractional(_) => {
            let ids: Vec<usize> = funded.iter().map(|(c, _)| *c).collect();
            let fr = funded.iter().map(|(c, w)| (election.projects[*c].name.clone(), w.clone())).collect();
            (election.names(&ids), Some(fr))
        }
    };
    let spent = funded.iter().map(|(c, w)| election.cost(*c) * w).sum();
    let record = RunRecord {
        instance: instance.to_string(),
        rule,
        model: election.model,
        ballot_type: ballot_type.to_string(),
        n_projects: election.n_projects(),
        n_voters: election.n_voters,
        selected,
        fractions,
        spent,
        audit: AuditReport::compute(election, &output, reference),
        runtime_s: Some(runtime),
        config_hash: config_hash(election, rule, config),
    };
    (record, output)
}

/// Evaluates several rules on one election, sharing the utilitarian reference.
pub fn evaluate_all(
    instance: &str,
    ballot_type: &str,
    election: &Election,
    rules: &[Rule],
    config: &RuleConfig,
) -> Vec<(RunRecord, RuleOutput)> {
    let reference = utilitarian(election, config);
    rules.iter().map(|&r| evaluate(instance, ballot_type, election, r, config, &reference)).collect()
}
