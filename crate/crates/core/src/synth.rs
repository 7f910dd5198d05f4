//! Synthetic elections: 2D Euclidean profiles and a hard approval family.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, with stream 0 for
//! candidate positions and stream `1 + j` for voter cluster `j`. Changing the
//! number of voters therefore never moves the candidates.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{Election, ModelError, Project, UtilityModel, UtilityProfile};
use crate::num::Num;
use crate::rules::TieBreaker;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One coordinate's distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dist1D {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
}

enum Sampler {
    Uniform(f64, f64),
    Normal(Normal<f64>),
    Beta(Beta<f64>),
}

impl Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Uniform(lo, hi) => rng.gen_range(*lo..*hi),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Beta(d) => d.sample(rng),
        }
    }
}

impl Dist1D {
    fn sampler(&self) -> Result<Sampler, SynthError> {
        let bad = |msg: String| SynthError::Distribution(msg);
        match *self {
            Dist1D::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(Sampler::Uniform(lo, hi)),
            Dist1D::Uniform { lo, hi } => Err(bad(format!("uniform needs lo < hi, got [{lo}, {hi}]"))),
            Dist1D::Gaussian { mean, sd } if sd > 0.0 && mean.is_finite() && sd.is_finite() => {
                Ok(Sampler::Normal(Normal::new(mean, sd).map_err(|e| bad(e.to_string()))?))
            }
            Dist1D::Gaussian { sd, .. } => Err(bad(format!("gaussian needs sd > 0, got {sd}"))),
            Dist1D::Beta { a, b } if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() => {
                Ok(Sampler::Beta(Beta::new(a, b).map_err(|e| bad(e.to_string()))?))
            }
            Dist1D::Beta { a, b } => Err(bad(format!("beta needs a, b > 0, got ({a}, {b})"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterCluster {
    pub count: usize,
    pub x: Dist1D,
    pub y: Dist1D,
}

/// Standard deviation used by the Gaussian presets.
pub const DEFAULT_SD: f64 = 0.1;

/// Voter clusters for presets 1 (two rectangles), 2 (Gaussian x and y) and
/// 3 (Gaussian x, Beta(1.5, 3) y). Each has 100 voters on the left and 50 on
/// the right.
pub fn voter_preset(distribution: u8, sd: f64) -> Result<Vec<VoterCluster>, SynthError> {
    let gx = |mean| Dist1D::Gaussian { mean, sd };
    Ok(match distribution {
        1 => vec![
            VoterCluster {
                count: 100,
                x: Dist1D::Uniform { lo: 0.05, hi: 0.4 },
                y: Dist1D::Uniform { lo: 0.05, hi: 0.95 },
            },
            VoterCluster {
                count: 50,
                x: Dist1D::Uniform { lo: 0.6, hi: 0.95 },
                y: Dist1D::Uniform { lo: 0.05, hi: 0.95 },
            },
        ],
        2 => vec![
            VoterCluster { count: 100, x: gx(0.25), y: Dist1D::Gaussian { mean: 0.5, sd } },
            VoterCluster { count: 50, x: gx(0.75), y: Dist1D::Gaussian { mean: 0.5, sd } },
        ],
        3 => vec![
            VoterCluster { count: 100, x: gx(0.25), y: Dist1D::Beta { a: 1.5, b: 3.0 } },
            VoterCluster { count: 50, x: gx(0.75), y: Dist1D::Beta { a: 1.5, b: 3.0 } },
        ],
        other => return Err(SynthError::Config(format!("unknown distribution {other}, expected 1, 2 or 3"))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanConfig {
    pub n_candidates: usize,
    pub voter_clusters: Vec<VoterCluster>,
    pub lambda: Num,
    pub unit_cost: Num,
    pub budget: Num,
    pub quantization_denominator: u64,
    pub seed: u64,
}

impl EuclideanConfig {
    pub fn preset(distribution: u8, seed: u64) -> Result<Self, SynthError> {
        Ok(EuclideanConfig { voter_clusters: voter_preset(distribution, DEFAULT_SD)?, seed, ..Default::default() })
    }
}

impl Default for EuclideanConfig {
    fn default() -> Self {
        EuclideanConfig {
            n_candidates: 150,
            voter_clusters: voter_preset(1, DEFAULT_SD).expect("preset 1 exists"),
            lambda: Num::one(),
            unit_cost: Num::one(),
            budget: Num::from_integer(10),
            quantization_denominator: 1_000_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanElection {
    pub election: Election,
    pub voters: Vec<(f64, f64)>,
    pub candidates: Vec<(f64, f64)>,
}

impl EuclideanElection {
    /// Sidecar CSV with columns `kind,id,x,y`.
    pub fn coordinates_csv(&self) -> String {
        let mut out = String::from("kind,id,x,y\n");
        for (i, (x, y)) in self.voters.iter().enumerate() {
            out.push_str(&format!("voter,{},{x},{y}\n", i + 1));
        }
        for (c, (x, y)) in self.candidates.iter().enumerate() {
            out.push_str(&format!("candidate,{},{x},{y}\n", self.election.projects[c].name));
        }
        out
    }
}

/// `1 / (distance + lambda)` rounded to the nearest multiple of `1/denom`,
/// never below `1/denom`.
pub fn quantized_utility(voter: (f64, f64), candidate: (f64, f64), lambda: f64, denom: u64) -> Num {
    let d = ((voter.0 - candidate.0).powi(2) + (voter.1 - candidate.1).powi(2)).sqrt();
    let k = ((denom as f64) / (d + lambda)).round().max(1.0) as i64;
    Num::ratio(k, denom as i64)
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub fn gen_euclidean(config: &EuclideanConfig) -> Result<EuclideanElection, SynthError> {
    if config.n_candidates == 0 {
        return Err(SynthError::Config("need at least one candidate".into()));
    }
    if config.voter_clusters.is_empty() || config.voter_clusters.iter().any(|c| c.count == 0) {
        return Err(SynthError::Config("every voter cluster needs a positive count".into()));
    }
    if !config.lambda.is_positive() {
        return Err(SynthError::Config(format!("lambda must be positive, got {}", config.lambda)));
    }
    if config.quantization_denominator == 0 || config.quantization_denominator > i64::MAX as u64 {
        return Err(SynthError::Config("quantization denominator out of range".into()));
    }

    let mut rng = stream(config.seed, 0);
    let candidates: Vec<(f64, f64)> =
        (0..config.n_candidates).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();

    let mut voters = Vec::new();
    for (j, cluster) in config.voter_clusters.iter().enumerate() {
        let (sx, sy) = (cluster.x.sampler()?, cluster.y.sampler()?);
        let mut rng = stream(config.seed, 1 + j as u64);
        for _ in 0..cluster.count {
            let x = sx.sample(&mut rng);
            let y = sy.sample(&mut rng);
            voters.push((x, y));
        }
    }

    let lambda = config.lambda.to_f64();
    let rows = voters
        .iter()
        .map(|&v| {
            candidates
                .iter()
                .enumerate()
                .map(|(c, &p)| (c, quantized_utility(v, p, lambda, config.quantization_denominator)))
                .collect()
        })
        .collect();
    let projects = (0..config.n_candidates)
        .map(|id| Project { id, name: format!("c{}", id + 1), cost: config.unit_cost.clone() })
        .collect();
    let mut meta = IndexMap::new();
    meta.insert("description".to_string(), "synthetic euclidean election".to_string());
    meta.insert("num_projects".to_string(), config.n_candidates.to_string());
    meta.insert("num_votes".to_string(), voters.len().to_string());
    meta.insert("lambda".to_string(), config.lambda.to_string());
    meta.insert("seed".to_string(), config.seed.to_string());
    let scores = UtilityProfile::from_rows(config.n_candidates, rows)?;
    let election = Election::new(projects, config.budget.clone(), scores, UtilityModel::Score, meta)?;
    Ok(EuclideanElection { election, voters, candidates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropOneConfig {
    pub ell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropOneInstance {
    pub election: Election,
    /// C₃ first, then C₂, then C₁.
    pub tie_order: TieBreaker,
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub c3: Vec<usize>,
}

/// Approval instance with `4ℓ² + ℓ` voters and unit-cost candidates.
///
/// `ℓ` voters approve `C₁` (`ℓ` candidates). The other `4ℓ²` voters approve
/// all of `C₂` (`4ℓ² - ℓ` candidates) and form `2ℓ` blocks of `2ℓ`, block `k`
/// also approving the `k`-th member of `C₃`. Budget is `4ℓ² + ℓ`.
pub fn gen_prop_one(config: PropOneConfig) -> Result<PropOneInstance, SynthError> {
    let l = config.ell;
    if l == 0 {
        return Err(SynthError::Config("ell must be at least 1".into()));
    }
    let (n1, n2, n3) = (l, 4 * l * l - l, 2 * l);
    let c1: Vec<usize> = (0..n1).collect();
    let c2: Vec<usize> = (n1..n1 + n2).collect();
    let c3: Vec<usize> = (n1 + n2..n1 + n2 + n3).collect();
    let mut names = Vec::new();
    names.extend((1..=n1).map(|k| format!("C1_{k}")));
    names.extend((1..=n2).map(|k| format!("C2_{k}")));
    names.extend((1..=n3).map(|k| format!("C3_{k}")));

    let mut rows: Vec<Vec<(usize, Num)>> = Vec::new();
    for _ in 0..l {
        rows.push(c1.iter().map(|&c| (c, Num::one())).collect());
    }
    for block in 0..2 * l {
        for _ in 0..2 * l {
            let mut row: Vec<(usize, Num)> = c2.iter().map(|&c| (c, Num::one())).collect();
            row.push((c3[block], Num::one()));
            rows.push(row);
        }
    }
    let projects = names.iter().enumerate().map(|(id, s)| Project { id, name: s.clone(), cost: Num::one() }).collect();
    let mut meta = IndexMap::new();
    meta.insert("description".to_string(), format!("hard approval instance, ell = {l}"));
    meta.insert("vote_type".to_string(), "approval".to_string());
    let budget = Num::from(4 * l * l + l);
    let scores = UtilityProfile::from_rows(names.len(), rows)?;
    let election = Election::new(projects, budget, scores, UtilityModel::Cost, meta)?;
    let order = c3.iter().chain(&c2).chain(&c1).copied().collect();
    Ok(PropOneInstance { election, tie_order: TieBreaker::Custom(order), c1, c2, c3 })
}
