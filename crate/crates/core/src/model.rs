//! Domain types and dataset file ingestion.
//!
//! Four line-oriented UTF-8 files make up a dataset:
//!
//! * `users.jsonl`: one account per line (unknown fields are ignored),
//! * `tweets.jsonl`: `{"user_id": ..., "tweets": [...]}` per line,
//! * `edges.tsv`: `follower<TAB>followed`, `#` comment lines ignored,
//! * `lexicon.txt`: one lowercase spam entry per line; two tokens make a bigram.
//!
//! Labels may also come from a separate `labels.csv` (`id,label`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: malformed line {line}: {reason}")]
    MalformedLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("duplicate user id {0:?}")]
    DuplicateId(String),
    #[error("user {0:?}: created_at is unparseable or after the snapshot date")]
    InvalidDate(String),
    #[error("{path}: self-loop on {id:?} at line {line}")]
    SelfLoop { path: String, id: String, line: usize },
    #[error("label for unknown user {0:?}")]
    UnknownLabelUser(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn malformed(path: &Path, line: usize, reason: impl fmt::Display) -> Self {
        IngestError::MalformedLine {
            path: path.display().to_string(),
            line,
            reason: reason.to_string(),
        }
    }
}

/// Class label: 0 = genuine, 1 = spam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Genuine,
    Spam,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Genuine => 0,
            Label::Spam => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::Genuine),
            1 => Ok(Label::Spam),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

/// One account's metadata. Only the fields consumed by feature extraction are typed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: String,
    pub user_name: String,
    pub screen_name: String,
    pub statuses_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub favourites_count: u64,
    pub verified: bool,
    pub geo_enabled: bool,
    pub profile_use_background_image: bool,
    pub profile_background_tile: bool,
    pub default_profile: bool,
    pub description: String,
    pub created_at: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Deserialize)]
struct RawUser {
    id: Option<String>,
    #[serde(default)]
    user_name: Option<String>,
    #[serde(default)]
    screen_name: Option<String>,
    #[serde(default)]
    statuses_count: Option<u64>,
    #[serde(default)]
    followers_count: Option<u64>,
    #[serde(default)]
    friends_count: Option<u64>,
    #[serde(default)]
    favourites_count: Option<u64>,
    #[serde(default)]
    verified: Option<bool>,
    #[serde(default)]
    geo_enabled: Option<bool>,
    #[serde(default)]
    profile_use_background_image: Option<bool>,
    #[serde(default)]
    profile_background_tile: Option<bool>,
    #[serde(default)]
    default_profile: Option<bool>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    label: Option<Label>,
}

/// Accepts `YYYY-MM-DD` or any string starting with it (RFC 3339 timestamps).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = s.get(..10)?;
    if s.len() > 10 && !matches!(s.as_bytes()[10], b'T' | b' ') {
        return None;
    }
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

/// Per-user ordered tweet texts. Keys are iterated in sorted order.
pub type TweetCorpus = BTreeMap<String, Vec<String>>;

/// Known spam n-grams.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpamLexicon {
    pub unigrams: BTreeSet<String>,
    pub bigrams: BTreeSet<(String, String)>,
}

impl SpamLexicon {
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a str>) -> Self {
        let mut lex = SpamLexicon::default();
        for e in entries {
            let toks: Vec<String> = e.split_whitespace().map(str::to_lowercase).collect();
            match toks.as_slice() {
                [a] => {
                    lex.unigrams.insert(a.clone());
                }
                [a, b] => {
                    lex.bigrams.insert((a.clone(), b.clone()));
                }
                _ => {}
            }
        }
        lex
    }

    pub fn is_empty(&self) -> bool {
        self.unigrams.is_empty() && self.bigrams.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub users: Vec<UserRecord>,
    pub tweets: TweetCorpus,
    pub edges: Vec<(String, String)>,
    pub snapshot_date: NaiveDate,
    pub lexicon: SpamLexicon,
}

impl Dataset {
    pub fn labeled_users(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.iter().filter(|u| u.label.is_some())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, IngestError> {
    let file = fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| IngestError::io(path, e))
}

/// Parses `users.jsonl`. Missing booleans default to false, counts to 0, description to "".
pub fn parse_users_file(path: &Path, snapshot_date: NaiveDate) -> Result<Vec<UserRecord>, IngestError> {
    let mut seen = HashSet::new();
    let mut users = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawUser =
            serde_json::from_str(line).map_err(|e| IngestError::malformed(path, i + 1, e))?;
        let id = match raw.id {
            Some(id) if !id.is_empty() => id,
            _ => return Err(IngestError::malformed(path, i + 1, "missing or empty id")),
        };
        let created_at = raw
            .created_at
            .as_deref()
            .and_then(parse_date)
            .filter(|d| *d <= snapshot_date)
            .ok_or_else(|| IngestError::InvalidDate(id.clone()))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        users.push(UserRecord {
            id,
            user_name: raw.user_name.unwrap_or_default(),
            screen_name: raw.screen_name.unwrap_or_default(),
            statuses_count: raw.statuses_count.unwrap_or(0),
            followers_count: raw.followers_count.unwrap_or(0),
            friends_count: raw.friends_count.unwrap_or(0),
            favourites_count: raw.favourites_count.unwrap_or(0),
            verified: raw.verified.unwrap_or(false),
            geo_enabled: raw.geo_enabled.unwrap_or(false),
            profile_use_background_image: raw.profile_use_background_image.unwrap_or(false),
            profile_background_tile: raw.profile_background_tile.unwrap_or(false),
            default_profile: raw.default_profile.unwrap_or(false),
            description: raw.description.unwrap_or_default(),
            created_at,
            label: raw.label,
        });
    }
    Ok(users)
}

/// Parses `edges.tsv` into deduplicated (follower, followed) pairs in first-seen order.
pub fn parse_edges_file(path: &Path) -> Result<Vec<(String, String)>, IngestError> {
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                (a.trim(), b.trim())
            }
            _ => return Err(IngestError::malformed(path, i + 1, "expected `ID1<TAB>ID2`")),
        };
        if a == b {
            return Err(IngestError::SelfLoop {
                path: path.display().to_string(),
                id: a.to_string(),
                line: i + 1,
            });
        }
        let edge = (a.to_string(), b.to_string());
        if seen.insert(edge.clone()) {
            edges.push(edge);
        }
    }
    Ok(edges)
}

#[derive(Serialize, Deserialize)]
struct TweetLine {
    user_id: String,
    #[serde(default)]
    tweets: Vec<String>,
}

/// Parses `tweets.jsonl`; repeated user ids are concatenated in file order.
pub fn parse_tweets_file(path: &Path) -> Result<TweetCorpus, IngestError> {
    let mut corpus = TweetCorpus::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tl: TweetLine =
            serde_json::from_str(line).map_err(|e| IngestError::malformed(path, i + 1, e))?;
        corpus.entry(tl.user_id).or_default().extend(tl.tweets);
    }
    Ok(corpus)
}

pub fn parse_lexicon_file(path: &Path) -> Result<SpamLexicon, IngestError> {
    let mut lex = SpamLexicon::default();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
        match toks.as_slice() {
            [a] => {
                lex.unigrams.insert(a.clone());
            }
            [a, b] => {
                lex.bigrams.insert((a.clone(), b.clone()));
            }
            _ => return Err(IngestError::malformed(path, i + 1, "expected one or two tokens")),
        }
    }
    Ok(lex)
}

/// Parses `labels.csv` (`id,label` header) into a map.
pub fn parse_labels_file(path: &Path) -> Result<BTreeMap<String, Label>, IngestError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| IngestError::malformed(path, 0, e))?;
    let mut labels = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| IngestError::malformed(path, line, e))?;
        if rec.len() != 2 {
            return Err(IngestError::malformed(path, line, "expected `id,label`"));
        }
        let label = rec[1]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(|v| Label::try_from(v).ok())
            .ok_or_else(|| IngestError::malformed(path, line, "label must be 0 or 1"))?;
        if labels.insert(rec[0].to_string(), label).is_some() {
            return Err(IngestError::DuplicateId(rec[0].to_string()));
        }
    }
    Ok(labels)
}

/// Applies labels from a label map; every labeled id must have a user record.
pub fn apply_labels(users: &mut [UserRecord], labels: &BTreeMap<String, Label>) -> Result<(), IngestError> {
    let known: HashSet<&str> = users.iter().map(|u| u.id.as_str()).collect();
    if let Some(missing) = labels.keys().find(|id| !known.contains(id.as_str())) {
        return Err(IngestError::UnknownLabelUser(missing.clone()));
    }
    for u in users.iter_mut() {
        if let Some(&l) = labels.get(&u.id) {
            u.label = Some(l);
        }
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<(), IngestError> {
    let mut f = fs::File::create(path).map_err(|e| IngestError::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| IngestError::io(path, e))
}

pub fn write_users_file(path: &Path, users: &[UserRecord]) -> Result<(), IngestError> {
    let mut out = String::new();
    for u in users {
        out.push_str(&serde_json::to_string(u).expect("user record serializes"));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_tweets_file(path: &Path, corpus: &TweetCorpus) -> Result<(), IngestError> {
    let mut out = String::new();
    for (user_id, tweets) in corpus {
        let line = TweetLine {
            user_id: user_id.clone(),
            tweets: tweets.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("tweet line serializes"));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_edges_file(path: &Path, edges: &[(String, String)]) -> Result<(), IngestError> {
    let mut out = String::new();
    for (a, b) in edges {
        out.push_str(a);
        out.push('\t');
        out.push_str(b);
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_lexicon_file(path: &Path, lex: &SpamLexicon) -> Result<(), IngestError> {
    let mut out = String::new();
    for u in &lex.unigrams {
        out.push_str(u);
        out.push('\n');
    }
    for (a, b) in &lex.bigrams {
        out.push_str(&format!("{a} {b}\n"));
    }
    write_file(path, &out)
}

pub fn write_labels_file(path: &Path, users: &[UserRecord]) -> Result<(), IngestError> {
    let mut out = String::from("id,label\n");
    for u in users {
        if let Some(l) = u.label {
            out.push_str(&format!("{},{}\n", u.id, l.as_u8()));
        }
    }
    write_file(path, &out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ValidationIssue {
    LabeledUserNotInGraph(String),
    UnknownTweetUser(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub class_counts: BTreeMap<u8, usize>,
}

impl ValidationReport {
    /// A dataset is rejected only when tweets reference unknown users.
    pub fn accepted(&self) -> bool {
        !self
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::UnknownTweetUser(_)))
    }
}

pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let graph_nodes: HashSet<&str> = d
        .edges
        .iter()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect();
    let user_ids: HashSet<&str> = d.users.iter().map(|u| u.id.as_str()).collect();
    let mut report = ValidationReport::default();
    for u in &d.users {
        if let Some(l) = u.label {
            *report.class_counts.entry(l.as_u8()).or_insert(0) += 1;
            if !graph_nodes.contains(u.id.as_str()) {
                report
                    .issues
                    .push(ValidationIssue::LabeledUserNotInGraph(u.id.clone()));
            }
        }
    }
    for id in d.tweets.keys() {
        if !user_ids.contains(id.as_str()) {
            report
                .issues
                .push(ValidationIssue::UnknownTweetUser(id.clone()));
        }
    }
    report
}
