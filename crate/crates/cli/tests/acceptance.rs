//! Acceptance suite: thirteen numbered checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqs_cli::aggregate::METRICS;
use eqs_cli::RunRecord;
use eqs_core::audit::{ejr_plus_violations, ejr_up_to_witnesses, fractional_ejr_falsifier, AuditReport, Caps, Slack};
use eqs_core::pabulib::{parse_pb, read_election, write_pb, write_pb_file, BallotType, PbFile, PbProject, PbVote};
use eqs_core::rules::{
    add1u, bos, bos_plus, bos_quote, overspend_majority_violations, default_endowment, fres, mes, utilitarian, RuleOutput,
};
use eqs_core::synth::{gen_euclidean, gen_prop_one, EuclideanConfig, PropOneConfig};
use eqs_core::{BudgetState, Election, FractionalOutcome, Num, Outcome, Rule, RuleConfig, TieBreaker, UtilityModel};

type Verdict = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(name: &str, model: UtilityModel) -> Election {
    read_election(&fs::read_to_string(fixture(name)).unwrap(), model).unwrap()
}

fn r(p: i64, q: i64) -> Num {
    Num::ratio(p, q)
}

fn k(v: i64) -> Num {
    Num::from_integer(v)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn names(e: &Election, o: &Outcome) -> Vec<String> {
    e.names(&o.selected)
}

/// Every BOS outcome under cost utilities, for the overspending-majority check.
struct BosLog(Vec<(Election, Outcome)>);

impl BosLog {
    fn run(&mut self, e: &Election, config: &RuleConfig) -> Outcome {
        let o = bos(e, config);
        if e.model == UtilityModel::Cost && !config.exhaustive_redistribution {
            self.0.push((e.clone(), o.clone()));
        }
        o
    }
}

fn criterion_1(log: &mut BosLog) -> Verdict {
    let start = Instant::now();
    let e = load("ten-voters.pb", UtilityModel::Cost);
    let config = RuleConfig::default();

    let u = utilitarian(&e, &config);
    ensure(names(&e, &u) == ["A", "B", "C"], || format!("utilitarian gave {:?}", names(&e, &u)))?;

    let m = mes(&e, &config, &default_endowment(&e));
    ensure(names(&e, &m) == ["A", "D", "E"], || format!("mes gave {:?}", names(&e, &m)))?;
    let rhos: Vec<Num> = m.rounds.iter().map(|x| x.rho.clone()).collect();
    ensure(rhos == [r(1, 6), r(1, 4), r(5, 17)], || format!("mes rho {rhos:?}"))?;
    let thousand = |v: [i64; 10]| v.map(|x| k(x * 1000)).to_vec();
    let expected = [
        thousand([50, 50, 50, 50, 50, 50, 100, 100, 100, 100]),
        thousand([50, 50, 50, 50, 50, 50, 40, 40, 40, 40]),
        thousand([50, 0, 50, 50, 50, 50, 0, 0, 0, 40]),
    ];
    let mut budgets = vec![k(100_000); 10];
    for (round, want) in m.rounds.iter().zip(&expected) {
        for (i, p) in &round.payments {
            budgets[*i] -= p;
        }
        ensure(budgets == *want, || format!("mes budgets after {}: {budgets:?}", e.projects[round.project].name))?;
    }

    let order = TieBreaker::from_names(&e, &["A", "C", "D", "E", "F", "B"]).unwrap();
    let f = fres(&e, &RuleConfig::with_ties(order));
    ensure(f.fractions == [k(1), k(0), r(5, 6), k(1), r(11, 17), r(1, 2)], || format!("fres {:?}", f.fractions))?;
    let trace: Vec<(String, Num, Num)> =
        f.purchases.iter().map(|p| (e.projects[p.project].name.clone(), p.rho.clone(), p.alpha.clone())).collect();
    let want: Vec<(String, Num, Num)> = [
        ("A", r(1, 6), k(1)),
        ("C", r(1, 5), r(5, 6)),
        ("D", r(1, 4), r(5, 6)),
        ("D", r(1, 3), r(1, 6)),
        ("E", r(1, 3), r(11, 17)),
        ("F", k(1), r(1, 2)),
    ]
    .into_iter()
    .map(|(s, a, b)| (s.to_string(), a, b))
    .collect();
    ensure(trace == want, || format!("fres trace {trace:?}"))?;

    let b = log.run(&e, &config);
    ensure(names(&e, &b) == ["A", "C", "D", "F"], || format!("bos gave {:?}", names(&e, &b)))?;
    let rounds: Vec<(String, Num, Num)> =
        b.rounds.iter().map(|x| (e.projects[x.project].name.clone(), x.alpha.clone(), x.rho.clone())).collect();
    let want = [("C", r(5, 6), r(1, 5)), ("D", k(1), r(5, 18)), ("F", r(5, 6), r(3, 5))];
    for (name, alpha, rho) in want {
        let hit = rounds.iter().any(|(n, a, p)| n == name && *a == alpha && *p == rho);
        ensure(hit, || format!("bos round for {name} missing from {rounds:?}"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("exact match, {:.0} ms", t.as_secs_f64() * 1e3))
}

fn criterion_2(log: &mut BosLog) -> Verdict {
    let config = RuleConfig::default();
    let h = load("helenka.pb", UtilityModel::Cost);
    ensure(names(&h, &add1u(&h, &config)) == ["B"], || "helenka mes-add1u".into())?;
    ensure(names(&h, &log.run(&h, &config)) == ["A"], || "helenka bos".into())?;
    ensure(names(&h, &bos_plus(&h, &config)) == ["A"], || "helenka bos_plus".into())?;

    let t = load("tail-utilities.pb", UtilityModel::Score);
    ensure(names(&t, &mes(&t, &config, &default_endowment(&t))) == ["B"], || "tail mes".into())?;
    ensure(names(&t, &bos(&t, &config)) == ["A"], || "tail bos".into())?;

    let x = load("two-blocs.pb", UtilityModel::Cost);
    let count = |o: &Outcome, prefix: char| names(&x, o).iter().filter(|s| s.starts_with(prefix)).count();
    let m = mes(&x, &config, &default_endowment(&x));
    ensure((count(&m, 'A'), count(&m, 'B')) == (7, 0), || format!("two blocs mes {:?}", names(&x, &m)))?;
    let a = add1u(&x, &config);
    ensure((count(&a, 'A'), count(&a, 'B')) == (10, 0), || format!("two blocs add1u {:?}", names(&x, &a)))?;
    let b = log.run(&x, &config);
    ensure((count(&b, 'A'), count(&b, 'B')) == (7, 3), || format!("two blocs bos {:?}", names(&x, &b)))?;
    let p = bos_plus(&x, &config);
    ensure((count(&p, 'A'), count(&p, 'B')) == (10, 0), || format!("two blocs bos+ {:?}", names(&x, &p)))?;

    // Reference value from a separate step-by-step simulation of the probe loop.
    let t1 = load("ten-voters.pb", UtilityModel::Cost);
    let a = add1u(&t1, &config);
    ensure(names(&t1, &a) == ["A", "C", "D", "F"], || format!("ten voters add1u {:?}", names(&t1, &a)))?;
    ensure(a.endowment == Some(k(115_999)), || format!("ten voters add1u endowment {:?}", a.endowment))?;
    Ok("helenka, tail utilities, two blocs and ten-voter add1u all exact".into())
}

/// `x` voters want a project costing the whole budget, `n - x` want a cheap one.
fn golden_instance(n: usize, x: usize) -> Election {
    let b = 1000 * n as i64;
    let mut rows = vec![vec![(0usize, Num::one())]; x];
    rows.extend(vec![vec![(1usize, Num::one())]; n - x]);
    Election::from_scores(&[("big", k(b)), ("small", k(1))], k(b), rows, UtilityModel::Cost).unwrap()
}

fn criterion_3(log: &mut BosLog) -> Verdict {
    let config = RuleConfig::default();
    let mut checked = 0;
    for n in [100usize, 414, 1000] {
        for x in 1..n {
            let e = golden_instance(n, x);
            let state = BudgetState::uniform(n, default_endowment(&e));
            let qa = bos_quote(&e, 0, &state, &e.budget).ok_or("no quote for big")?;
            let qb = bos_quote(&e, 1, &state, &e.budget).ok_or("no quote for small")?;
            ensure(qa.ratio == r(n as i64, (x * x) as i64), || format!("n={n} x={x}: big quote {}", qa.ratio))?;
            ensure(qb.ratio == r(1, (n - x) as i64), || format!("n={n} x={x}: small quote {}", qb.ratio))?;
            // x/n > (√5 - 1)/2  ⇔  (2x + n)² > 5n²
            let above = (2 * x + n).pow(2) > 5 * n * n;
            let picked_big = log.run(&e, &config).selected == [0];
            ensure(picked_big == above, || format!("n={n} x={x}: big selected = {picked_big}"))?;
            ensure(picked_big == (qa.ratio < qb.ratio), || format!("n={n} x={x}: quote order disagrees"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} instances, threshold exact"))
}

fn criterion_4(log: &mut BosLog) -> Verdict {
    for ell in 1..=3 {
        let inst = gen_prop_one(PropOneConfig { ell }).map_err(|e| e.to_string())?;
        let config = RuleConfig::with_ties(inst.tie_order.clone());
        let want: HashSet<usize> = inst.c2.iter().chain(&inst.c3).copied().collect();
        let b = log.run(&inst.election, &config);
        ensure(b.selected.iter().copied().collect::<HashSet<_>>() == want, || format!("bos at ell={ell}"))?;
        let p = bos_plus(&inst.election, &config);
        ensure(p.selected.iter().copied().collect::<HashSet<_>>() == want, || format!("bos+ at ell={ell}"))?;
    }
    Ok("ell = 1, 2, 3: C2 and C3 only".into())
}

fn random_election(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_score: i64, model: UtilityModel) -> Election {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let costs: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=10)).collect();
    let max_cost = *costs.iter().max().unwrap();
    let budget = rng.gen_range(max_cost..=costs.iter().sum::<i64>());
    let labels: Vec<String> = (0..m).map(|c| format!("p{c}")).collect();
    let cs: Vec<(&str, Num)> = labels.iter().zip(&costs).map(|(s, c)| (s.as_str(), k(*c))).collect();
    let rows = (0..n)
        .map(|_| {
            (0..m)
                .filter_map(|c| {
                    let s = if max_score == 1 { rng.gen_bool(0.5) as i64 } else { rng.gen_range(0..=max_score) };
                    (s > 0).then(|| (c, k(s)))
                })
                .collect()
        })
        .collect();
    Election::from_scores(&cs, k(budget), rows, model).unwrap()
}

fn criterion_5(log: &mut BosLog) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = RuleConfig::default();
    let mut groups = 0;
    for trial in 0..500 {
        let e = random_election(&mut rng, 8, 6, 1, UtilityModel::Cost);
        for (label, o) in [("bos", log.run(&e, &config)), ("bos+", bos_plus(&e, &config))] {
            let w = ejr_up_to_witnesses(&e, &o.selected, &Slack::OverspendBound, Caps::default())
                .map_err(|err| err.to_string())?;
            ensure(w.is_empty(), || format!("instance {trial}: {label} witness {:?}", w[0]))?;
            groups += 1;
        }
    }
    Ok(format!("500 instances, {groups} outcomes, no witness"))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let config = RuleConfig::default();
    for trial in 0..200u64 {
        let e = random_election(&mut rng, 6, 5, 4, UtilityModel::Score);
        let out: FractionalOutcome = fres(&e, &config);
        let report = fractional_ejr_falsifier(&e, &out, 1000, trial);
        ensure(report.counterexample.is_none(), || format!("instance {trial}: {:?}", report.counterexample))?;
    }
    Ok("200 instances x 1000 trials, none found".into())
}

fn criterion_7(log: &BosLog) -> Verdict {
    let mut overspending = 0;
    for (e, o) in &log.0 {
        let v = overspend_majority_violations(e, o);
        ensure(v.is_empty(), || format!("{v:?}"))?;
        overspending += o.rounds.iter().filter(|x| !x.overspend.is_empty()).count();
    }
    Ok(format!("{} bos runs, {overspending} overspending rounds, all with a strict majority", log.0.len()))
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let config = RuleConfig::default();
    let (mut bos_hit, mut plus_hit) = (0, 0);
    for trial in 0..500 {
        let e = random_election(&mut rng, 10, 8, 1, UtilityModel::Cost);
        let m = mes(&e, &config, &default_endowment(&e));
        let a = add1u(&e, &config);
        for (label, o) in [("mes", &m), ("mes-add1u", &a)] {
            let c = ejr_plus_violations(&e, o).map_err(|x| x.to_string())?.count;
            ensure(c == 0, || format!("instance {trial}: {label} has {c} violations"))?;
        }
        bos_hit += (ejr_plus_violations(&e, &bos(&e, &config)).unwrap().count > 0) as usize;
        plus_hit += (ejr_plus_violations(&e, &bos_plus(&e, &config)).unwrap().count > 0) as usize;
    }
    Ok(format!(
        "500 instances, mes and mes-add1u clean; instances with violations: bos {:.1}%, bos+ {:.1}%",
        bos_hit as f64 / 5.0,
        plus_hit as f64 / 5.0
    ))
}

/// Smallest `rho` with `alpha * cost <= sum min(b_i, alpha u_i rho)`, by bisection.
fn solve_rho(alpha: f64, cost: f64, payers: &[(f64, f64)]) -> Option<f64> {
    let target = alpha * cost;
    if payers.iter().map(|p| p.0).sum::<f64>() < target {
        return None;
    }
    let paid = |rho: f64| payers.iter().map(|&(b, u)| b.min(alpha * u * rho)).sum::<f64>();
    let mut hi = payers.iter().map(|&(b, u)| b / (alpha * u)).fold(0.0, f64::max);
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if paid(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut done, mut worst_gap) = (0, 0.0f64);
    while done < 200 {
        let n = rng.gen_range(1..=6);
        let cost = rng.gen_range(1..=15);
        let rows: Vec<Vec<(usize, Num)>> = (0..n)
            .map(|_| match rng.gen_range(0..=5) {
                0 => vec![],
                u => vec![(0, k(u))],
            })
            .collect();
        let e = Election::from_scores(&[("c", k(cost))], k(cost), rows, UtilityModel::Score).unwrap();
        let budgets: Vec<Num> = (0..n).map(|_| r(rng.gen_range(0..=20), 4)).collect();
        let state = BudgetState { budgets: budgets.clone(), overspent: vec![Num::zero(); n] };
        let Some(q) = bos_quote(&e, 0, &state, &e.budget) else { continue };
        let payers: Vec<(f64, f64)> = e
            .utilities
            .supporters(0)
            .iter()
            .filter(|(i, _)| budgets[*i].is_positive())
            .map(|(i, u)| (budgets[*i].to_f64(), u.to_f64()))
            .collect();
        let mut sweep = f64::INFINITY;
        for step in 1..=10_000 {
            let alpha = step as f64 / 10_000.0;
            if let Some(rho) = solve_rho(alpha, cost as f64, &payers) {
                sweep = sweep.min(rho / alpha);
            }
        }
        let quote = q.ratio.to_f64();
        ensure(quote <= sweep * (1.0 + 1e-9), || format!("quote {quote} above sweep {sweep}"))?;
        worst_gap = worst_gap.max(sweep / quote - 1.0);
        done += 1;
    }
    Ok(format!("200 quotes never above the sweep; largest sweep excess {worst_gap:.2e}"))
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let config = RuleConfig::default();
    let mut notes = Vec::new();
    for dist in 1..=3u8 {
        let (mut util_left, mut util_total) = (0usize, 0usize);
        let mut right: BTreeMap<&str, f64> = BTreeMap::new();
        const RUNS: usize = 50;
        for seed in 0..RUNS as u64 {
            let g = gen_euclidean(&EuclideanConfig::preset(dist, seed).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let e = &g.election;
            let is_right = |c: usize| g.candidates[c].0 > 0.5;
            let u = utilitarian(e, &config);
            util_total += u.selected.len();
            util_left += u.selected.iter().filter(|&&c| !is_right(c)).count();
            let share = |o: &Outcome| o.selected.iter().filter(|&&c| is_right(c)).count() as f64 / o.selected.len() as f64;
            *right.entry("mes").or_default() += share(&mes(e, &config, &default_endowment(e)));
            *right.entry("bos").or_default() += share(&bos(e, &config));
            let f = fres(e, &config);
            let total: Num = f.fractions.iter().sum();
            let on_right: Num = f.fractions.iter().enumerate().filter(|(c, _)| is_right(*c)).map(|(_, w)| w).sum();
            *right.entry("fres").or_default() += (on_right / total).to_f64();
        }
        let left = util_left as f64 / util_total as f64;
        if dist == 1 {
            ensure(left >= 0.90 - 0.05, || format!("utilitarian left share {left:.3} on distribution 1"))?;
        }
        let mut parts = vec![format!("d{dist}: utilitarian left {:.0}%", left * 100.0)];
        for (rule, sum) in &right {
            let avg = sum / RUNS as f64;
            ensure(avg > 0.0 && avg < 1.0 / 3.0 + 0.05, || format!("{rule} right share {avg:.3} on distribution {dist}"))?;
            parts.push(format!("{rule} right {:.0}%", avg * 100.0));
        }
        notes.push(parts.join(", "));
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(300), || format!("took {t:?}"))?;
    Ok(format!("{}; {:.0} s", notes.join("; "), t.as_secs_f64()))
}

fn figure_bucket(n: usize) -> &'static str {
    match n {
        0..=8 => "1-8",
        9..=15 => "9-15",
        16..=27 => "16-27",
        _ => "28+",
    }
}

fn metric_of(rec: &RunRecord, name: &str) -> Option<Num> {
    let a = &rec.audit;
    let hundred = |b: bool| if b { k(100) } else { k(0) };
    match name {
        "score_satisfaction" => Some(a.score_satisfaction.clone()),
        "cost_satisfaction" => Some(a.cost_satisfaction.clone()),
        "relative_score_satisfaction" => Some(a.relative_score_satisfaction.clone()),
        "relative_cost_satisfaction" => Some(a.relative_cost_satisfaction.clone()),
        "exclusion_ratio" => Some(a.exclusion_ratio.clone()),
        "budget_spent_fraction" => Some(a.budget_spent_fraction.clone()),
        "exhaustive_pct" => Some(hundred(a.exhaustive)),
        "ejr_plus_violations" => a.ejr_plus_violations.map(|v| k(v as i64)),
        "ejr_plus_violation_pct" => a.ejr_plus_violations.map(|v| hundred(v > 0)),
        "runtime_s" => rec.runtime_s.and_then(Num::from_f64),
        other => panic!("unknown metric {other}"),
    }
}

/// Second implementation: two-pass variance, integer-split quantile positions.
fn oracle_stats(mut v: Vec<Num>) -> Vec<String> {
    let n = v.len();
    let mean = v.iter().fold(Num::zero(), |acc, x| acc + x) / k(n as i64);
    let var = v.iter().fold(Num::zero(), |acc, x| {
        let d = x - &mean;
        acc + &d * &d
    }) / k(n as i64);
    v.sort();
    let mut out = vec![n.to_string(), mean.to_string(), var.to_f64().sqrt().to_string(), var.to_string()];
    for p in [10usize, 25, 50, 75, 90] {
        let pos = p * (n - 1);
        let (i, rem) = (pos / 100, pos % 100);
        let q = if rem == 0 { v[i].clone() } else { &v[i] + r(rem as i64, 100) * (&v[i + 1] - &v[i]) };
        out.push(q.to_string());
    }
    out
}

fn criterion_11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rules = [Rule::Mes, Rule::Bos, Rule::Fres];
    let types = ["approval", "ordinal", "cumulative"];
    let rand_num = |rng: &mut ChaCha8Rng| r(rng.gen_range(0..2000), rng.gen_range(1..40));
    let records: Vec<RunRecord> = (0..100)
        .map(|i| {
            let ballot = types[rng.gen_range(0..3)];
            RunRecord {
                instance: format!("synthetic-{i:03}"),
                rule: rules[rng.gen_range(0..3)],
                model: UtilityModel::Cost,
                ballot_type: ballot.to_string(),
                n_projects: rng.gen_range(1..45),
                n_voters: rng.gen_range(1..500),
                selected: vec![],
                fractions: None,
                spent: Num::zero(),
                audit: AuditReport {
                    score_satisfaction: rand_num(&mut rng),
                    cost_satisfaction: rand_num(&mut rng),
                    relative_score_satisfaction: rand_num(&mut rng),
                    relative_cost_satisfaction: rand_num(&mut rng),
                    exclusion_ratio: r(rng.gen_range(0..=20), 20),
                    budget_spent_fraction: r(rng.gen_range(0..=100), 100),
                    exhaustive: rng.gen_bool(0.5),
                    ejr_plus_violations: (ballot == "approval").then(|| rng.gen_range(0..4)),
                },
                runtime_s: Some(rng.gen_range(0..10_000) as f64 / 1024.0),
                config_hash: "0".repeat(16),
            }
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("records.jsonl");
    let text: String = records.iter().map(|x| serde_json::to_string(x).unwrap() + "\n").collect();
    fs::write(&input, text).map_err(|e| e.to_string())?;
    let output = dir.path().join("table.csv");
    let code = eqs_cli::run_cli(["eqs", "aggregate", input.to_str().unwrap(), "--out", output.to_str().unwrap()]);
    ensure(code == 0, || format!("aggregate exited with {code}"))?;

    let mut reader = csv::Reader::from_path(&output).map_err(|e| e.to_string())?;
    let mut rows = 0;
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let (rule, metric, bucket, ballot) = (&row[0], &row[1], &row[2], &row[3]);
        let values: Vec<Num> = records
            .iter()
            .filter(|x| x.rule.name() == rule)
            .filter(|x| bucket == "all" || figure_bucket(x.n_projects) == bucket)
            .filter(|x| ballot == "all" || x.ballot_type == ballot)
            .filter_map(|x| metric_of(x, metric))
            .collect();
        let want = oracle_stats(values);
        let got: Vec<String> = row.iter().skip(4).map(str::to_string).collect();
        ensure(got == want, || format!("{rule}/{metric}/{bucket}/{ballot}: {got:?} vs {want:?}"))?;
        seen.insert((rule.to_string(), metric.to_string(), bucket.to_string(), ballot.to_string()));
        rows += 1;
    }
    // Every non-empty group must be present.
    let mut expected = HashSet::new();
    for x in &records {
        for m in METRICS {
            if metric_of(x, m).is_none() {
                continue;
            }
            for b in [figure_bucket(x.n_projects), "all"] {
                for t in [x.ballot_type.as_str(), "all"] {
                    expected.insert((x.rule.name().to_string(), m.to_string(), b.to_string(), t.to_string()));
                }
            }
        }
    }
    ensure(seen == expected, || format!("{} groups reported, {} expected", seen.len(), expected.len()))?;
    Ok(format!("{rows} groups over 100 records identical to the second implementation"))
}

fn random_pb(rng: &mut ChaCha8Rng) -> PbFile {
    let ballot_type = [BallotType::Approval, BallotType::Choose1, BallotType::Cumulative, BallotType::Scoring, BallotType::Ordinal]
        [rng.gen_range(0..5)];
    let m = rng.gen_range(1..8);
    let budget = r(rng.gen_range(100..100_000), [1, 10, 100][rng.gen_range(0..3)]);
    let mut meta = IndexMap::new();
    meta.insert("description".to_string(), format!("fuzz; case {}", rng.gen::<u16>()));
    meta.insert("budget".to_string(), budget.to_string());
    meta.insert("vote_type".to_string(), ballot_type.as_str().to_string());
    let projects: Vec<PbProject> = (0..m)
        .map(|c| {
            let mut extra = IndexMap::new();
            extra.insert("name".to_string(), format!("Project \"{c}\", phase {}", rng.gen_range(1..4)));
            let cost = &budget * r(rng.gen_range(1..=100), 100);
            PbProject { id: format!("{}", 100 + c), cost, extra, line: 0 }
        })
        .collect();
    let votes = (0..rng.gen_range(0..30))
        .map(|i| {
            let mut ids: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
            if ids.is_empty() || ballot_type == BallotType::Choose1 {
                ids = vec![rng.gen_range(0..m)];
            }
            if ballot_type == BallotType::Ordinal {
                ids.sort_by_key(|_| rng.gen::<u32>());
            }
            let points = matches!(ballot_type, BallotType::Cumulative | BallotType::Scoring)
                .then(|| ids.iter().map(|_| r(rng.gen_range(0..40), 8)).collect());
            PbVote {
                voter_id: format!("v{i}"),
                vote: ids.iter().map(|c| projects[*c].id.clone()).collect(),
                points,
                extra: IndexMap::new(),
                line: 0,
            }
        })
        .collect();
    PbFile { meta, budget, ballot_type, projects, votes }
}

fn strip_lines(mut pb: PbFile) -> PbFile {
    pb.projects.iter_mut().for_each(|p| p.line = 0);
    pb.votes.iter_mut().for_each(|v| v.line = 0);
    pb
}

fn criterion_12() -> Verdict {
    let fixtures = ["ten-voters.pb", "helenka.pb", "tail-utilities.pb", "two-blocs.pb"];
    for f in fixtures {
        let text = fs::read_to_string(fixture(f)).map_err(|e| e.to_string())?;
        let pb = parse_pb(&text).map_err(|e| format!("{f}: {e}"))?;
        ensure(write_pb_file(&pb) == text, || format!("{f}: canonical text differs"))?;
        let e = read_election(&text, UtilityModel::Cost).map_err(|e| e.to_string())?;
        let back = read_election(&write_pb(&e, pb.ballot_type).map_err(|e| e.to_string())?, UtilityModel::Cost)
            .map_err(|e| e.to_string())?;
        ensure(back == e, || format!("{f}: election changed through write_pb"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let pb = random_pb(&mut rng);
        let text = write_pb_file(&pb);
        let parsed = parse_pb(&text).map_err(|e| format!("fuzz {case}: {e}\n{text}"))?;
        ensure(strip_lines(parsed.clone()) == pb, || format!("fuzz {case}: file changed"))?;
        ensure(write_pb_file(&parsed) == text, || format!("fuzz {case}: text changed"))?;
        let e = read_election(&text, UtilityModel::Score).map_err(|e| format!("fuzz {case}: {e}"))?;
        let again = read_election(&write_pb(&e, pb.ballot_type).map_err(|e| e.to_string())?, UtilityModel::Score)
            .map_err(|e| e.to_string())?;
        ensure(again.projects == e.projects && again.scores == e.scores && again.budget == e.budget, || {
            format!("fuzz {case}: election changed")
        })?;
    }
    Ok(format!("{} fixtures and 100 fuzzed files round-trip", fixtures.len()))
}

fn criterion_13() -> Verdict {
    let config = RuleConfig::default();
    let corpus: Vec<Election> =
        ["ten-voters.pb", "helenka.pb", "tail-utilities.pb", "two-blocs.pb"].iter().map(|f| load(f, UtilityModel::Cost)).collect();
    let time = |rule: Rule| -> f64 {
        corpus
            .iter()
            .map(|e| {
                (0..3)
                    .map(|_| {
                        let start = Instant::now();
                        let out = rule.run(e, &config);
                        let t = start.elapsed().as_secs_f64();
                        assert!(matches!(out, RuleOutput::Integral(_)));
                        t
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };
    let b = time(Rule::Bos);
    let a = time(Rule::MesAdd1u);
    ensure(b < a / 5.0, || format!("bos {b:.4} s vs mes-add1u {a:.4} s"))?;
    Ok(format!("bos {:.1} ms, mes-add1u {:.1} ms ({:.0}x)", b * 1e3, a * 1e3, a / b))
}

fn main() {
    let mut log = BosLog(Vec::new());
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let status = if verdict.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &verdict {
            Ok(s) | Err(s) => s.clone(),
        };
        println!("criterion {id:>2} [{status}] {name}: {detail}");
        results.push((id, name, verdict));
    };
    run(1, "golden traces", &mut || criterion_1(&mut log));
    run(2, "case studies", &mut || criterion_2(&mut log));
    run(3, "golden-ratio threshold", &mut || criterion_3(&mut log));
    run(4, "hard instance family", &mut || criterion_4(&mut log));
    run(5, "EJR up to the overspend bound", &mut || criterion_5(&mut log));
    run(6, "fractional EJR falsifier", &mut criterion_6);
    run(7, "overspending majority", &mut || criterion_7(&log));
    run(8, "EJR+ for equal shares", &mut criterion_8);
    run(9, "quote grid optimality", &mut criterion_9);
    run(10, "euclidean reproduction", &mut criterion_10);
    run(11, "aggregation oracle", &mut criterion_11);
    run(12, "format round-trip", &mut criterion_12);
    run(13, "relative runtime", &mut criterion_13);
    let failed = results.iter().filter(|(.., v)| v.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
