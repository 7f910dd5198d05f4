//! Summary statistics over run records.
//!
//! Everything except the standard deviation is exact. Quantiles use linear
//! interpolation between order statistics: for `N` sorted values and level
//! `p`, take `h = (N - 1) p` and return `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋ + 1] - x[⌊h⌋])`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use eqs_core::{Num, Rule};

use crate::record::RunRecord;

/// Quantile levels in percent.
pub const LEVELS: [i64; 5] = [10, 25, 50, 75, 90];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub count: usize,
    pub mean: Num,
    /// Population variance.
    pub variance: Num,
    pub quantiles: [Num; 5],
}

impl Summary {
    pub fn std(&self) -> f64 {
        self.variance.to_f64().sqrt()
    }
}

/// Linear-interpolation quantile of sorted `values` at `p` in `[0, 1]`.
pub fn quantile(sorted: &[Num], p: &Num) -> Num {
    let h = Num::from(sorted.len() - 1) * p;
    let lo = h.floor().to_i64().expect("index fits") as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1].clone();
    }
    let frac = &h - Num::from(lo);
    &sorted[lo] + frac * (&sorted[lo + 1] - &sorted[lo])
}

/// `None` for an empty slice.
pub fn summarize(values: &[Num]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = Num::from(values.len());
    let mean: Num = values.iter().sum::<Num>() / &n;
    let second: Num = values.iter().map(|v| v * v).sum::<Num>() / &n;
    let variance = second - &mean * &mean;
    let mut sorted = values.to_vec();
    sorted.sort();
    let quantiles = LEVELS.map(|k| quantile(&sorted, &Num::ratio(k, 100)));
    Some(Summary { count: values.len(), mean, variance, quantiles })
}

/// Ranges of project counts. The last bucket is open-ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buckets {
    /// Inclusive lower bounds, ascending; the first must be 1 or lower.
    starts: Vec<usize>,
}

impl Buckets {
    /// 1–8, 9–15, 16–27, 28+.
    pub fn figure() -> Self {
        Buckets { starts: vec![1, 9, 16, 28] }
    }

    /// 1–8, 9–16, 17–28, 29+.
    pub fn table() -> Self {
        Buckets { starts: vec![1, 9, 17, 29] }
    }

    pub fn index(&self, n_projects: usize) -> usize {
        self.starts.iter().rposition(|&s| s <= n_projects).unwrap_or(0)
    }

    pub fn label(&self, k: usize) -> String {
        match self.starts.get(k + 1) {
            Some(next) => format!("{}-{}", self.starts[k], next - 1),
            None => format!("{}+", self.starts[k]),
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

impl FromStr for Buckets {
    type Err = String;

    /// `figure`, `table`, or lower bounds such as `1,9,16,28`.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "figure" => return Ok(Buckets::figure()),
            "table" => return Ok(Buckets::table()),
            _ => {}
        }
        let starts = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad bucket bound {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if starts.is_empty() || starts[0] > 1 || starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("bucket bounds must ascend from 1, got {s:?}"));
        }
        Ok(Buckets { starts })
    }
}

impl fmt::Display for Buckets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.len()).map(|k| self.label(k)).collect();
        f.write_str(&parts.join(","))
    }
}

pub const METRICS: [&str; 10] = [
    "score_satisfaction",
    "cost_satisfaction",
    "relative_score_satisfaction",
    "relative_cost_satisfaction",
    "exclusion_ratio",
    "budget_spent_fraction",
    "exhaustive_pct",
    "ejr_plus_violations",
    "ejr_plus_violation_pct",
    "runtime_s",
];

/// Metric values of one record, indexed like [`METRICS`].
pub fn metric_values(r: &RunRecord) -> [Option<Num>; 10] {
    let a = &r.audit;
    let pct = |b: bool| Num::from_integer(if b { 100 } else { 0 });
    [
        Some(a.score_satisfaction.clone()),
        Some(a.cost_satisfaction.clone()),
        Some(a.relative_score_satisfaction.clone()),
        Some(a.relative_cost_satisfaction.clone()),
        Some(a.exclusion_ratio.clone()),
        Some(a.budget_spent_fraction.clone()),
        Some(pct(a.exhaustive)),
        a.ejr_plus_violations.map(Num::from),
        a.ejr_plus_violations.map(|v| pct(v > 0)),
        r.runtime_s.and_then(|t| Num::from_f64(t)),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub rule: Rule,
    pub metric: usize,
    /// Bucket index, or `None` for all sizes.
    pub bucket: Option<usize>,
    /// `None` for all ballot types.
    pub ballot_type: Option<String>,
}

/// Groups by rule × metric × bucket × ballot type, including the pooled
/// "all" rows for bucket and ballot type.
pub fn aggregate(records: &[RunRecord], buckets: &Buckets) -> BTreeMap<GroupKey, Summary> {
    let mut groups: BTreeMap<GroupKey, Vec<Num>> = BTreeMap::new();
    for r in records {
        let b = buckets.index(r.n_projects);
        for (metric, value) in metric_values(r).into_iter().enumerate() {
            let Some(v) = value else { continue };
            for bucket in [Some(b), None] {
                for ballot_type in [Some(r.ballot_type.clone()), None] {
                    groups
                        .entry(GroupKey { rule: r.rule, metric, bucket, ballot_type })
                        .or_default()
                        .push(v.clone());
                }
            }
        }
    }
    groups.into_iter().map(|(k, v)| (k, summarize(&v).expect("groups are never empty"))).collect()
}

/// CSV text for [`aggregate`]. With `decimal`, exact values are printed as
/// floats.
pub fn to_csv(table: &BTreeMap<GroupKey, Summary>, buckets: &Buckets, decimal: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rule", "metric", "bucket", "ballot_type", "count", "mean", "std", "variance", "q10", "q25", "q50", "q75", "q90",
    ])
    .expect("in-memory write");
    let show = |v: &Num| if decimal { v.to_f64().to_string() } else { v.to_string() };
    for (key, s) in table {
        let mut row = vec![
            key.rule.name().to_string(),
            METRICS[key.metric].to_string(),
            key.bucket.map_or("all".to_string(), |b| buckets.label(b)),
            key.ballot_type.clone().unwrap_or_else(|| "all".to_string()),
            s.count.to_string(),
            show(&s.mean),
            s.std().to_string(),
            show(&s.variance),
        ];
        row.extend(s.quantiles.iter().map(show));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
