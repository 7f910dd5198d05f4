//! Reader and writer for Pabulib `.pb` files.
//!
//! A file has three sections, `META`, `PROJECTS` and `VOTES`, each opened by
//! its name on a line of its own and followed by a semicolon-separated header
//! row and data rows. Multi-valued cells (`vote`, `points`) are
//! comma-separated.

use std::collections::HashSet;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::model::{Election, ModelError, Project, UtilityModel, UtilityProfile};
use crate::num::Num;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PbError {
    #[error("line {line}: expected section {expected}, found {found:?}")]
    SectionOrder { line: usize, expected: &'static str, found: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("line {line}: {section} header lacks column {column:?}")]
    MissingColumn { line: usize, section: &'static str, column: &'static str },
    #[error("META lacks required key {0:?}")]
    MissingMeta(&'static str),
    #[error("line {line}: unknown vote_type {value:?}")]
    UnknownVoteType { line: usize, value: String },
    #[error("line {line}: {field} is not a number: {value:?}")]
    BadNumber { line: usize, field: &'static str, value: String },
    #[error("line {line}: vote references unknown project {project:?}")]
    UnknownProject { line: usize, project: String },
    #[error("line {line}: duplicate project id {id:?}")]
    DuplicateProject { line: usize, id: String },
    #[error("line {line}: duplicate voter id {id:?}")]
    DuplicateVoter { line: usize, id: String },
    #[error("line {line}: duplicate META key {key:?}")]
    DuplicateMeta { line: usize, key: String },
    #[error("line {line}: vote lists project {project:?} twice")]
    RepeatedInVote { line: usize, project: String },
    #[error("line {line}: {votes} projects but {points} points")]
    PointsLength { line: usize, votes: usize, points: usize },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("line {line}: negative points")]
    NegativePoints { line: usize },
    #[error("line {line}: choose-1 ballot lists {count} projects")]
    ChooseOneCount { line: usize, count: usize },
    #[error("voter {voter}: ballot cannot be written as {ballot}: {reason}")]
    Inexpressible { voter: usize, ballot: BallotType, reason: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallotType {
    Approval,
    #[serde(rename = "choose-1")]
    Choose1,
    Cumulative,
    Scoring,
    Ordinal,
}

impl BallotType {
    pub fn as_str(self) -> &'static str {
        match self {
            BallotType::Approval => "approval",
            BallotType::Choose1 => "choose-1",
            BallotType::Cumulative => "cumulative",
            BallotType::Scoring => "scoring",
            BallotType::Ordinal => "ordinal",
        }
    }

    fn has_points(self) -> bool {
        matches!(self, BallotType::Cumulative | BallotType::Scoring)
    }
}

impl std::fmt::Display for BallotType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BallotType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "approval" => Ok(BallotType::Approval),
            "choose-1" | "choose1" | "choose_1" => Ok(BallotType::Choose1),
            "cumulative" => Ok(BallotType::Cumulative),
            "scoring" => Ok(BallotType::Scoring),
            "ordinal" => Ok(BallotType::Ordinal),
            other => Err(format!("unknown ballot type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbProject {
    pub id: String,
    pub cost: Num,
    /// Remaining columns, keyed by header name.
    pub extra: IndexMap<String, String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbVote {
    pub voter_id: String,
    pub vote: Vec<String>,
    pub points: Option<Vec<Num>>,
    pub extra: IndexMap<String, String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbFile {
    pub meta: IndexMap<String, String>,
    pub budget: Num,
    pub ballot_type: BallotType,
    pub projects: Vec<PbProject>,
    pub votes: Vec<PbVote>,
}

struct Section {
    header_line: usize,
    lines: Vec<(usize, String)>,
}

const SECTIONS: [&str; 3] = ["META", "PROJECTS", "VOTES"];

fn split_sections(text: &str) -> Result<[Section; 3], PbError> {
    let mut sections: Vec<Section> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim_end_matches('\r').trim();
        let marker = SECTIONS.iter().position(|s| trimmed.eq_ignore_ascii_case(s));
        match marker {
            Some(pos) => {
                if pos != sections.len() {
                    let expected = SECTIONS.get(sections.len()).copied().unwrap_or("end of file");
                    return Err(PbError::SectionOrder { line, expected, found: trimmed.to_string() });
                }
                sections.push(Section { header_line: line, lines: Vec::new() });
            }
            None => match sections.last_mut() {
                Some(s) => {
                    if !trimmed.is_empty() {
                        s.lines.push((line, raw.trim_end_matches('\r').to_string()));
                    }
                }
                None if trimmed.is_empty() => {}
                None => {
                    return Err(PbError::SectionOrder { line, expected: "META", found: trimmed.to_string() });
                }
            },
        }
    }
    if sections.len() < 3 {
        return Err(PbError::MissingSection(SECTIONS[sections.len()]));
    }
    let mut it = sections.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Header plus rows of one section, each row with its source line.
fn read_rows(section: &Section) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>), PbError> {
    let body: String = section.lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| section.lines.get(p.line() as usize - 1).map_or(section.header_line, |l| l.0))
                .unwrap_or(section.header_line);
            PbError::Csv { line, message: e.to_string() }
        })?;
        let pos_line = record.position().map_or(0, |p| p.line() as usize);
        let line = section.lines.get(pos_line.saturating_sub(1)).map_or(section.header_line, |l| l.0);
        rows.push((line, record.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    if rows.is_empty() {
        return Ok((Vec::new(), rows));
    }
    let (_, header) = rows.remove(0);
    Ok((header, rows))
}

fn column(header: &[String], name: &'static str) -> Option<usize> {
    header.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn need_column(header: &[String], name: &'static str, section: &'static str, line: usize) -> Result<usize, PbError> {
    column(header, name).ok_or(PbError::MissingColumn { line, section, column: name })
}

fn number(value: &str, field: &'static str, line: usize) -> Result<Num, PbError> {
    value.parse().map_err(|_| PbError::BadNumber { line, field, value: value.to_string() })
}

fn list(cell: &str) -> Vec<String> {
    cell.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Parses `.pb` text. Accepts LF and CRLF line endings.
pub fn parse_pb(text: &str) -> Result<PbFile, PbError> {
    let [meta_s, proj_s, vote_s] = split_sections(text)?;

    let (_, meta_rows) = read_rows(&meta_s)?;
    let mut meta = IndexMap::new();
    let mut meta_lines = IndexMap::new();
    for (line, row) in meta_rows {
        let key = row.first().cloned().unwrap_or_default();
        let value = row.get(1..).map(|v| v.join(";")).unwrap_or_default();
        if meta.insert(key.clone(), value).is_some() {
            return Err(PbError::DuplicateMeta { line, key });
        }
        meta_lines.insert(key, line);
    }
    let find = |key: &str| meta.iter().position(|(k, _)| k.eq_ignore_ascii_case(key));
    let budget_at = find("budget").ok_or(PbError::MissingMeta("budget"))?;
    let (bk, bv) = meta.get_index(budget_at).unwrap();
    let budget = number(bv, "budget", meta_lines[bk])?;
    let vt_at = find("vote_type").ok_or(PbError::MissingMeta("vote_type"))?;
    let (vk, vv) = meta.get_index(vt_at).unwrap();
    let ballot_type: BallotType =
        vv.parse().map_err(|_| PbError::UnknownVoteType { line: meta_lines[vk], value: vv.clone() })?;

    let (header, rows) = read_rows(&proj_s)?;
    let id_col = need_column(&header, "project_id", "PROJECTS", proj_s.header_line + 1)?;
    let cost_col = need_column(&header, "cost", "PROJECTS", proj_s.header_line + 1)?;
    let mut projects = Vec::with_capacity(rows.len());
    let mut known = HashSet::new();
    for (line, row) in rows {
        let id = row.get(id_col).cloned().unwrap_or_default();
        let cost = number(row.get(cost_col).map(String::as_str).unwrap_or(""), "cost", line)?;
        if !known.insert(id.clone()) {
            return Err(PbError::DuplicateProject { line, id });
        }
        let extra = header
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != id_col && *k != cost_col)
            .map(|(k, h)| (h.clone(), row.get(k).cloned().unwrap_or_default()))
            .collect();
        projects.push(PbProject { id, cost, extra, line });
    }

    let (header, rows) = read_rows(&vote_s)?;
    let mut votes = Vec::with_capacity(rows.len());
    if !rows.is_empty() || !header.is_empty() {
        let hl = vote_s.lines.first().map_or(vote_s.header_line, |l| l.0);
        let voter_col = need_column(&header, "voter_id", "VOTES", hl)?;
        let vote_col = need_column(&header, "vote", "VOTES", hl)?;
        let points_col = if ballot_type.has_points() { Some(need_column(&header, "points", "VOTES", hl)?) } else { None };
        let mut voters = HashSet::new();
        for (line, row) in rows {
            let voter_id = row.get(voter_col).cloned().unwrap_or_default();
            if !voters.insert(voter_id.clone()) {
                return Err(PbError::DuplicateVoter { line, id: voter_id });
            }
            let vote = list(row.get(vote_col).map(String::as_str).unwrap_or(""));
            let mut seen = HashSet::new();
            for p in &vote {
                if !known.contains(p) {
                    return Err(PbError::UnknownProject { line, project: p.clone() });
                }
                if !seen.insert(p) {
                    return Err(PbError::RepeatedInVote { line, project: p.clone() });
                }
            }
            let points = match points_col {
                Some(k) => {
                    let pts = list(row.get(k).map(String::as_str).unwrap_or(""))
                        .iter()
                        .map(|v| number(v, "points", line))
                        .collect::<Result<Vec<_>, _>>()?;
                    if pts.len() != vote.len() {
                        return Err(PbError::PointsLength { line, votes: vote.len(), points: pts.len() });
                    }
                    Some(pts)
                }
                None => None,
            };
            let extra = header
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != voter_col && *k != vote_col && Some(*k) != points_col)
                .map(|(k, h)| (h.clone(), row.get(k).cloned().unwrap_or_default()))
                .collect();
            votes.push(PbVote { voter_id, vote, points, extra, line });
        }
    }
    Ok(PbFile { meta, budget, ballot_type, projects, votes })
}

/// Turns ballots into an [`Election`].
///
/// Projects costing more than the budget are dropped with a warning and
/// removed from every ballot before scoring. Ordinal ballots get Borda
/// scores: the `j`-th of `r` ranked projects (from 0) scores `r - j`.
pub fn ballots_to_utilities(pb: &PbFile, model: UtilityModel) -> Result<Election, PbError> {
    let mut index = IndexMap::new();
    let mut projects = Vec::new();
    for p in &pb.projects {
        if p.cost > pb.budget {
            log::warn!("dropping project {:?}: cost {} exceeds budget {}", p.id, p.cost, pb.budget);
            continue;
        }
        index.insert(p.id.clone(), projects.len());
        projects.push(Project { id: projects.len(), name: p.id.clone(), cost: p.cost.clone() });
    }

    let mut rows = Vec::with_capacity(pb.votes.len());
    for v in &pb.votes {
        if pb.ballot_type == BallotType::Choose1 && v.vote.len() != 1 {
            return Err(PbError::ChooseOneCount { line: v.line, count: v.vote.len() });
        }
        let kept: Vec<(usize, Option<&Num>)> = v
            .vote
            .iter()
            .enumerate()
            .filter_map(|(k, p)| index.get(p).map(|&c| (c, v.points.as_ref().map(|pts| &pts[k]))))
            .collect();
        let r = kept.len() as i64;
        let mut row = Vec::with_capacity(kept.len());
        for (j, (c, pts)) in kept.into_iter().enumerate() {
            let score = match pb.ballot_type {
                BallotType::Approval | BallotType::Choose1 => Num::one(),
                BallotType::Ordinal => Num::from(r - j as i64),
                BallotType::Cumulative | BallotType::Scoring => {
                    let s = pts.expect("points checked at parse time").clone();
                    if s.is_negative() {
                        return Err(PbError::NegativePoints { line: v.line });
                    }
                    s
                }
            };
            row.push((c, score));
        }
        rows.push(row);
    }
    let scores = UtilityProfile::from_rows(projects.len(), rows)?;
    Ok(Election::new(projects, pb.budget.clone(), scores, model, pb.meta.clone())?)
}

/// Convenience: parse and convert in one go.
pub fn read_election(text: &str, model: UtilityModel) -> Result<Election, PbError> {
    ballots_to_utilities(&parse_pb(text)?, model)
}

fn push_row(out: &mut String, cells: &[&str]) {
    let mut w = csv::WriterBuilder::new().delimiter(b';').has_headers(false).from_writer(Vec::new());
    w.write_record(cells).expect("writing to memory");
    out.push_str(std::str::from_utf8(&w.into_inner().expect("flush to memory")).expect("utf-8 in, utf-8 out"));
}

/// Canonical text for a parsed file.
pub fn write_pb_file(pb: &PbFile) -> String {
    let mut out = String::from("META\nkey;value\n");
    for (k, v) in &pb.meta {
        push_row(&mut out, &[k, v]);
    }
    out.push_str("PROJECTS\n");
    let extra_p: Vec<&String> = pb.projects.first().map(|p| p.extra.keys().collect()).unwrap_or_default();
    let mut header = vec!["project_id", "cost"];
    header.extend(extra_p.iter().map(|s| s.as_str()));
    push_row(&mut out, &header);
    for p in &pb.projects {
        let cost = p.cost.to_string();
        let mut row = vec![p.id.as_str(), cost.as_str()];
        row.extend(p.extra.values().map(String::as_str));
        push_row(&mut out, &row);
    }
    out.push_str("VOTES\n");
    let extra_v: Vec<&String> = pb.votes.first().map(|v| v.extra.keys().collect()).unwrap_or_default();
    let mut header = vec!["voter_id", "vote"];
    if pb.ballot_type.has_points() {
        header.push("points");
    }
    header.extend(extra_v.iter().map(|s| s.as_str()));
    push_row(&mut out, &header);
    for v in &pb.votes {
        let vote = v.vote.join(",");
        let points = v.points.as_ref().map(|p| p.iter().map(Num::to_string).collect::<Vec<_>>().join(","));
        let mut row = vec![v.voter_id.as_str(), vote.as_str()];
        if let Some(p) = &points {
            row.push(p.as_str());
        }
        row.extend(v.extra.values().map(String::as_str));
        push_row(&mut out, &row);
    }
    out
}

/// Serialises an election as `.pb` text in the given ballot format.
///
/// Fails when some voter's scores do not fit the format: points with no
/// finite decimal expansion, scores that are not a Borda ranking, approvals other than 0/1,
/// or choose-1 ballots with other than one project.
pub fn write_pb(election: &Election, ballot_type: BallotType) -> Result<String, PbError> {
    let mut meta: IndexMap<String, String> = IndexMap::new();
    let mut wrote_budget = false;
    let mut wrote_type = false;
    for (k, v) in &election.metadata {
        if k.eq_ignore_ascii_case("budget") {
            let same = v.parse::<Num>().map_or(false, |b| b == election.budget);
            meta.insert(k.clone(), if same { v.clone() } else { election.budget.to_string() });
            wrote_budget = true;
        } else if k.eq_ignore_ascii_case("vote_type") {
            let same = v.parse::<BallotType>().map_or(false, |b| b == ballot_type);
            meta.insert(k.clone(), if same { v.clone() } else { ballot_type.to_string() });
            wrote_type = true;
        } else {
            meta.insert(k.clone(), v.clone());
        }
    }
    if !wrote_budget {
        meta.insert("budget".into(), election.budget.to_string());
    }
    if !wrote_type {
        meta.insert("vote_type".into(), ballot_type.to_string());
    }

    let projects = election
        .projects
        .iter()
        .map(|p| PbProject { id: p.name.clone(), cost: p.cost.clone(), extra: IndexMap::new(), line: 0 })
        .collect();

    let mut votes = Vec::with_capacity(election.n_voters);
    for i in 0..election.n_voters {
        let row = election.scores.voter(i);
        let bad = |reason| PbError::Inexpressible { voter: i, ballot: ballot_type, reason };
        let (ids, points): (Vec<usize>, Option<Vec<Num>>) = match ballot_type {
            BallotType::Approval | BallotType::Choose1 => {
                if row.iter().any(|(_, s)| *s != Num::one()) {
                    return Err(bad("scores other than 0 and 1"));
                }
                if ballot_type == BallotType::Choose1 && row.len() != 1 {
                    return Err(bad("choose-1 needs exactly one project"));
                }
                (row.iter().map(|(c, _)| *c).collect(), None)
            }
            BallotType::Cumulative | BallotType::Scoring => {
                if row.iter().any(|(_, s)| s.to_decimal().is_none()) {
                    return Err(bad("points without a finite decimal form"));
                }
                (row.iter().map(|(c, _)| *c).collect(), Some(row.iter().map(|(_, s)| s.clone()).collect()))
            }
            BallotType::Ordinal => {
                let mut ranked: Vec<&(usize, Num)> = row.iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1));
                let r = ranked.len() as i64;
                if ranked.iter().enumerate().any(|(j, (_, s))| *s != Num::from(r - j as i64)) {
                    return Err(bad("scores are not a Borda ranking"));
                }
                (ranked.iter().map(|(c, _)| *c).collect(), None)
            }
        };
        votes.push(PbVote {
            voter_id: (i + 1).to_string(),
            vote: ids.iter().map(|&c| election.projects[c].name.clone()).collect(),
            points,
            extra: IndexMap::new(),
            line: 0,
        });
    }
    Ok(write_pb_file(&PbFile { meta, budget: election.budget.clone(), ballot_type, projects, votes }))
}
