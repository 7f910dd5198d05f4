use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use eqs_core::pabulib::{ballots_to_utilities, parse_pb, write_pb, BallotType};
use eqs_core::rules::RuleOutput;
use eqs_core::synth::{gen_euclidean, gen_prop_one, voter_preset, EuclideanConfig, PropOneConfig};
use eqs_core::{Election, Num, Rule, RuleConfig, TieBreaker, UtilityModel};

use crate::aggregate::{aggregate, to_csv, Buckets};
use crate::record::{evaluate_all, RunRecord};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FLAGS: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

trait WithCode<T> {
    fn code(self, code: i32) -> Result<T, Failure>;
}

impl<T> WithCode<T> for anyhow::Result<T> {
    fn code(self, code: i32) -> Result<T, Failure> {
        self.map_err(|error| Failure { code, error })
    }
}

#[derive(Debug, Parser)]
#[command(name = "eqs", version, about = "Equal Shares participatory-budgeting rules")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one rule on one `.pb` file and print the outcome as JSON.
    Run(RunArgs),
    /// Run several rules over every `.pb` file in a directory.
    Batch(BatchArgs),
    /// Summary statistics over a records file.
    Aggregate(AggregateArgs),
    /// Generate synthetic elections.
    Gen(GenArgs),
    /// Coordinates of selected candidates, one CSV per rule.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
struct RuleFlags {
    /// Utility model the rules operate on.
    #[arg(long, default_value = "cost")]
    model: UtilityModel,
    /// Endowment increment for Add1U.
    #[arg(long, default_value = "1")]
    add1u_step: Num,
    /// BOS variant that redistributes the money of fully served voters.
    #[arg(long)]
    exhaustive_redistribution: bool,
}

impl RuleFlags {
    fn config(&self) -> Result<RuleConfig, Failure> {
        if !self.add1u_step.is_positive() {
            return Err(anyhow!("--add1u-step must be positive, got {}", self.add1u_step)).code(EXIT_FLAGS);
        }
        Ok(RuleConfig {
            tie_breaker: TieBreaker::Ascending,
            add1u_step: self.add1u_step.clone(),
            exhaustive_redistribution: self.exhaustive_redistribution,
        })
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long)]
    rule: Rule,
    #[command(flatten)]
    flags: RuleFlags,
    /// File listing project ids in tie-break priority order.
    #[arg(long)]
    tie_order: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    dir: PathBuf,
    /// Comma-separated rule names, `all` (the five compared rules) or `every`.
    #[arg(long, default_value = "all")]
    rules: String,
    #[command(flatten)]
    flags: RuleFlags,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Output directory for `records.jsonl` and `timings.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    records: PathBuf,
    /// `figure`, `table`, or ascending lower bounds like `1,9,16,28`.
    #[arg(long, default_value = "figure")]
    buckets: Buckets,
    /// `timings.csv` from the same batch, adds the `runtime_s` metric.
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Print floats instead of exact rationals.
    #[arg(long)]
    decimal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    generator: Generator,
    /// Voter distribution preset (1, 2 or 3).
    #[arg(long, default_value_t = 1)]
    dist: u8,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed of the first election; election `k` uses `seed + k`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1")]
    lambda: Num,
    /// Standard deviation of the Gaussian presets.
    #[arg(long, default_value_t = eqs_core::synth::DEFAULT_SD)]
    sd: f64,
    #[arg(long, default_value_t = 150)]
    candidates: usize,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    Euclidean,
    Prop1,
}

#[derive(Debug, Args)]
struct PlotArgs {
    records: PathBuf,
    /// Directory holding `<instance>.coords.csv` sidecars.
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQS_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FLAGS } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).code(1),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    id: String,
    ballot_type: BallotType,
    election: Election,
}

fn load(path: &Path, model: UtilityModel) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pb = parse_pb(&text).with_context(|| format!("parsing {}", path.display()))?;
    let election = ballots_to_utilities(&pb, model).with_context(|| format!("converting {}", path.display()))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Loaded { id, ballot_type: pb.ballot_type, election })
}

/// Project ids separated by newlines, commas or whitespace.
fn read_tie_order(path: &Path, election: &Election) -> anyhow::Result<TieBreaker> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let names: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    Ok(TieBreaker::from_names(election, &names)?)
}

#[derive(Serialize)]
struct RunReport<'a> {
    record: &'a RunRecord,
    projects: Vec<String>,
    outcome: &'a RuleOutput,
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut config = a.flags.config()?;
    let loaded = load(&a.instance, a.flags.model).code(EXIT_INPUT)?;
    if let Some(p) = &a.tie_order {
        config.tie_breaker = read_tie_order(p, &loaded.election).code(EXIT_FLAGS)?;
    }
    let mut runs = evaluate_all(&loaded.id, loaded.ballot_type.as_str(), &loaded.election, &[a.rule], &config);
    let (record, output) = runs.pop().expect("one rule, one record");
    let report = RunReport {
        record: &record,
        projects: loaded.election.projects.iter().map(|p| p.name.clone()).collect(),
        outcome: &output,
    };
    let json = serde_json::to_string_pretty(&report).context("serialising").code(1)?;
    write_or_print(a.out.as_deref(), &(json + "\n"))
}

/// The five rules of the experimental comparison.
pub const COMPARED: [Rule; 5] = [Rule::Utilitarian, Rule::MesAdd1u, Rule::Fres, Rule::Bos, Rule::BosPlus];

pub fn parse_rules(spec: &str) -> Result<Vec<Rule>, String> {
    match spec {
        "all" => Ok(COMPARED.to_vec()),
        "every" => Ok(Rule::ALL.to_vec()),
        _ => {
            let mut rules: Vec<Rule> = spec.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
            rules.sort();
            rules.dedup();
            Ok(rules)
        }
    }
}

fn pb_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pb"))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_batch(a: BatchArgs) -> Result<(), Failure> {
    let base = a.flags.config()?;
    let rules = parse_rules(&a.rules).map_err(|e| anyhow!(e)).code(EXIT_FLAGS)?;
    let files = pb_files(&a.dir).code(EXIT_INPUT)?;
    if files.is_empty() {
        return Err(anyhow!("no .pb files in {}", a.dir.display())).code(EXIT_INPUT);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.parallelism).build().context("thread pool").code(1)?;
    let results: Vec<Option<Vec<RunRecord>>> = pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let loaded = match load(path, a.flags.model) {
                    Ok(l) => l,
                    Err(e) => {
                        log::warn!("skipping {}: {e:#}", path.display());
                        return None;
                    }
                };
                let mut config = base.clone();
                let ties = path.with_extension("ties");
                if ties.exists() {
                    match read_tie_order(&ties, &loaded.election) {
                        Ok(t) => config.tie_breaker = t,
                        Err(e) => {
                            log::warn!("skipping {}: {e:#}", path.display());
                            return None;
                        }
                    }
                }
                let runs = evaluate_all(&loaded.id, loaded.ballot_type.as_str(), &loaded.election, &rules, &config);
                Some(runs.into_iter().map(|(r, _)| r).collect())
            })
            .collect()
    });
    let failed = results.iter().filter(|r| r.is_none()).count();
    if failed == files.len() {
        return Err(anyhow!("all {failed} files failed to load")).code(EXIT_INPUT);
    }
    let mut records: Vec<RunRecord> = results.into_iter().flatten().flatten().collect();
    records.sort_by(|x, y| x.instance.cmp(&y.instance).then(x.rule.cmp(&y.rule)));

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).code(1)?;
    let mut jsonl = String::new();
    let mut timings = csv::Writer::from_writer(Vec::new());
    timings.write_record(["instance", "rule", "runtime_s"]).context("timings").code(1)?;
    for r in &mut records {
        let t = r.runtime_s.take().unwrap_or_default();
        timings.write_record([r.instance.as_str(), r.rule.name(), &t.to_string()]).context("timings").code(1)?;
        jsonl.push_str(&serde_json::to_string(r).context("serialising").code(1)?);
        jsonl.push('\n');
    }
    let timings = timings.into_inner().context("timings").code(1)?;
    fs::write(a.out.join("records.jsonl"), jsonl).context("writing records.jsonl").code(1)?;
    fs::write(a.out.join("timings.csv"), timings).context("writing timings.csv").code(1)?;
    log::info!("{} records from {} files ({failed} skipped)", records.len(), files.len());
    Ok(())
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), k + 1)))
        .collect()
}

fn attach_timings(records: &mut [RunRecord], path: &Path) -> anyhow::Result<()> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut times = std::collections::HashMap::new();
    for row in reader.records() {
        let row = row?;
        let rule: Rule = row.get(1).unwrap_or_default().parse().map_err(|e: String| anyhow!(e))?;
        let t: f64 = row.get(2).unwrap_or_default().parse().context("runtime column")?;
        times.insert((row.get(0).unwrap_or_default().to_string(), rule), t);
    }
    for r in records {
        if let Some(t) = times.get(&(r.instance.clone(), r.rule)) {
            r.runtime_s = Some(*t);
        }
    }
    Ok(())
}

fn cmd_aggregate(a: AggregateArgs) -> Result<(), Failure> {
    let mut records = read_records(&a.records).code(EXIT_INPUT)?;
    if records.is_empty() {
        return Err(anyhow!("no records in {}", a.records.display())).code(EXIT_EMPTY);
    }
    if let Some(t) = &a.timings {
        attach_timings(&mut records, t).code(EXIT_INPUT)?;
    }
    let table = aggregate(&records, &a.buckets);
    write_or_print(a.out.as_deref(), &to_csv(&table, &a.buckets, a.decimal))
}

#[derive(Serialize)]
struct Manifest<'a> {
    generator: &'a str,
    config: serde_json::Value,
    instances: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    seed: Option<u64>,
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).code(1)?;
    let write = |name: &str, text: &str| -> Result<(), Failure> {
        let p = a.out.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display())).code(1)
    };
    let manifest = match a.generator {
        Generator::Euclidean => {
            if a.count == 0 {
                return Err(anyhow!("--count must be positive")).code(EXIT_FLAGS);
            }
            let clusters = voter_preset(a.dist, a.sd).map_err(anyhow::Error::from).code(EXIT_FLAGS)?;
            let template = EuclideanConfig {
                n_candidates: a.candidates,
                voter_clusters: clusters,
                lambda: a.lambda.clone(),
                seed: a.seed,
                ..Default::default()
            };
            let mut instances = Vec::new();
            for k in 0..a.count {
                let seed = a.seed.wrapping_add(k as u64);
                let config = EuclideanConfig { seed, ..template.clone() };
                let g = gen_euclidean(&config).map_err(anyhow::Error::from).code(EXIT_FLAGS)?;
                let stem = format!("euclid-d{}-{:04}", a.dist, k);
                let text = write_pb(&g.election, BallotType::Scoring).context("serialising election").code(1)?;
                write(&format!("{stem}.pb"), &text)?;
                write(&format!("{stem}.coords.csv"), &g.coordinates_csv())?;
                instances.push(ManifestEntry { file: format!("{stem}.pb"), seed: Some(seed) });
            }
            let mut config = serde_json::to_value(&template).context("manifest").code(1)?;
            config["distribution"] = a.dist.into();
            config["count"] = a.count.into();
            Manifest { generator: "euclidean", config, instances }
        }
        Generator::Prop1 => {
            let inst = gen_prop_one(PropOneConfig { ell: a.ell }).map_err(anyhow::Error::from).code(EXIT_FLAGS)?;
            let stem = format!("prop1-l{}", a.ell);
            let text = write_pb(&inst.election, BallotType::Approval).context("serialising election").code(1)?;
            write(&format!("{stem}.pb"), &text)?;
            let order = match &inst.tie_order {
                TieBreaker::Custom(o) => inst.election.names(o),
                TieBreaker::Ascending => Vec::new(),
            };
            write(&format!("{stem}.ties"), &(order.join("\n") + "\n"))?;
            Manifest {
                generator: "prop1",
                config: serde_json::json!({ "ell": a.ell }),
                instances: vec![ManifestEntry { file: format!("{stem}.pb"), seed: None }],
            }
        }
    };
    let json = serde_json::to_string_pretty(&manifest).context("manifest").code(1)?;
    write("manifest.json", &(json + "\n"))
}

fn read_coords(path: &Path) -> anyhow::Result<std::collections::HashMap<String, (String, String)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("missing sidecar {}", path.display()))?;
    let mut out = std::collections::HashMap::new();
    for row in reader.records() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        if row.get(0) == Some("candidate") {
            let field = |k| row.get(k).unwrap_or_default().to_string();
            out.insert(field(1), (field(2), field(3)));
        }
    }
    Ok(out)
}

fn cmd_plotdata(a: PlotArgs) -> Result<(), Failure> {
    let records = read_records(&a.records).code(EXIT_INPUT)?;
    let mut by_rule: std::collections::BTreeMap<Rule, csv::Writer<Vec<u8>>> = std::collections::BTreeMap::new();
    for rule in Rule::ALL {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "candidate", "x", "y", "weight"]).context("plot data").code(1)?;
        by_rule.insert(rule, w);
    }
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|x, y| x.instance.cmp(&y.instance).then(x.rule.cmp(&y.rule)));
    let mut cache: std::collections::HashMap<String, _> = std::collections::HashMap::new();
    for r in sorted {
        if !cache.contains_key(&r.instance) {
            let coords = read_coords(&a.coords.join(format!("{}.coords.csv", r.instance))).code(EXIT_INPUT)?;
            cache.insert(r.instance.clone(), coords);
        }
        let coords = &cache[&r.instance];
        let points: Vec<(String, Num)> = match &r.fractions {
            Some(f) => f.clone(),
            None => r.selected.iter().map(|c| (c.clone(), Num::one())).collect(),
        };
        let w = by_rule.get_mut(&r.rule).expect("every rule has a writer");
        for (c, weight) in points {
            let (x, y) = coords
                .get(&c)
                .ok_or_else(|| anyhow!("candidate {c:?} of {} has no coordinates", r.instance))
                .code(EXIT_INPUT)?;
            w.write_record([r.instance.as_str(), &c, x, y, &weight.to_f64().to_string()]).context("plot data").code(1)?;
        }
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).code(1)?;
    for (rule, w) in by_rule {
        let bytes = w.into_inner().context("plot data").code(1)?;
        let p = a.out.join(format!("{}.csv", rule.name()));
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display())).code(1)?;
    }
    Ok(())
}
