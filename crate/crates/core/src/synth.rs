//! Deterministic synthetic datasets with planted spam/genuine differences.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    write_edges_file, write_labels_file, write_lexicon_file, write_tweets_file, write_users_file, Dataset,
    IngestError, Label, SpamLexicon, TweetCorpus, UserRecord,
};

pub const LEXICON: &str = include_str!("../data/spam_lexicon.txt");

pub const USERS_FILE: &str = "users.jsonl";
pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const EDGES_FILE: &str = "edges.tsv";
pub const LABELS_FILE: &str = "labels.csv";
pub const LEXICON_FILE: &str = "lexicon.txt";

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_genuine: usize,
    pub n_spam: usize,
    /// Extra accounts present in the graph and tweets but absent from labels.csv.
    pub n_unlabeled: usize,
    /// Inclusive `[min, max]` tweets per user.
    pub tweets_per_user: [usize; 2],
    pub spam_community_count: usize,
    pub intra_spam_edge_prob: f64,
    pub cross_edge_prob: f64,
    pub genuine_edge_prob: f64,
    pub spam_template_count: usize,
    pub vocab_size: usize,
    /// Probability that a template token is replaced by a random word.
    pub template_noise: f64,
    /// 1 plants the full class difference; 0 makes spam accounts statistically
    /// identical to genuine ones.
    pub effect_strength: f64,
    pub snapshot_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_genuine: 1500,
            n_spam: 500,
            n_unlabeled: 100,
            tweets_per_user: [8, 30],
            spam_community_count: 10,
            intra_spam_edge_prob: 0.15,
            cross_edge_prob: 0.002,
            genuine_edge_prob: 0.004,
            spam_template_count: 5,
            vocab_size: 2000,
            template_noise: 0.2,
            effect_strength: 1.0,
            snapshot_date: NaiveDate::from_ymd_opt(2019, 6, 1).expect("valid date"),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::ConfigInvalid(m.to_string()));
        if self.n_genuine + self.n_spam < 10 {
            return bad("n_genuine + n_spam must be >= 10");
        }
        for (name, p) in [
            ("intra_spam_edge_prob", self.intra_spam_edge_prob),
            ("cross_edge_prob", self.cross_edge_prob),
            ("genuine_edge_prob", self.genuine_edge_prob),
            ("template_noise", self.template_noise),
            ("effect_strength", self.effect_strength),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::ConfigInvalid(format!("{name} must be in [0, 1]")));
            }
        }
        if self.tweets_per_user[0] > self.tweets_per_user[1] {
            return bad("tweets_per_user must be [min, max] with min <= max");
        }
        if self.n_spam > 0 && (self.spam_community_count == 0 || self.spam_template_count == 0) {
            return bad("spam_community_count and spam_template_count must be >= 1");
        }
        if self.vocab_size < 10 {
            return bad("vocab_size must be >= 10");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Genuine,
    Spam { community: usize },
    Unlabeled,
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "pe", "da", "zu", "ho", "ri", "ma", "ku", "bo", "li", "te", "gu",
    "fa", "yo", "ce", "wi", "po",
];

/// Pronounceable pseudo-word for vocabulary index `i`; distinct indices give distinct words.
fn pseudo_word(mut i: usize) -> String {
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    // a trailing consonant keeps short words from colliding with real tokens
    w.push('n');
    w
}

struct Words {
    vocab: Vec<String>,
    zipf: WeightedIndex<f64>,
    spam_words: Vec<String>,
}

impl Words {
    fn new(vocab_size: usize, lexicon: &SpamLexicon) -> Self {
        let mut spam_words: Vec<String> = lexicon.unigrams.iter().cloned().collect();
        for (a, b) in &lexicon.bigrams {
            spam_words.push(format!("{a} {b}"));
        }
        Words {
            vocab: (0..vocab_size).map(pseudo_word).collect(),
            zipf: WeightedIndex::new((0..vocab_size).map(|r| 1.0 / (r as f64 + 1.0))).expect("positive weights"),
            spam_words,
        }
    }

    fn common(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.vocab[self.zipf.sample(rng)]
    }

    fn spam(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.spam_words[rng.gen_range(0..self.spam_words.len())]
    }
}

fn mix(genuine: f64, spam: f64, s: f64) -> f64 {
    genuine + s * (spam - genuine)
}

/// Log-uniform integer in `[lo, hi]`.
fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> u64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp().round() as u64
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn random_handle(rng: &mut ChaCha8Rng) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    let len = rng.gen_range(8..=12);
    (0..len).map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char).collect()
}

/// Which parts of an account follow the spam-side distribution.
#[derive(Debug, Clone, Copy)]
struct Traits {
    handle: bool,
    young: bool,
    hyperactive: bool,
    follows_many: bool,
    few_favourites: bool,
    flags: bool,
    promo_description: bool,
    templated_tweets: bool,
}

/// Share of genuine accounts showing any one spam-side trait.
const BASE_TRAIT_RATE: f64 = 0.1;
/// Share of spam accounts showing any one trait at full effect strength.
const SPAM_TRAIT_RATE: f64 = 0.65;

impl Traits {
    fn draw(rng: &mut ChaCha8Rng, is_spam: bool, strength: f64) -> Self {
        let p = if is_spam {
            mix(BASE_TRAIT_RATE, SPAM_TRAIT_RATE, strength)
        } else {
            BASE_TRAIT_RATE
        };
        let mut t = || rng.gen_bool(p);
        Traits {
            handle: t(),
            young: t(),
            hyperactive: t(),
            follows_many: t(),
            few_favourites: t(),
            flags: t(),
            promo_description: t(),
            templated_tweets: t(),
        }
    }
}

fn make_user(rng: &mut ChaCha8Rng, id: String, tr: Traits, words: &Words, snapshot: NaiveDate) -> UserRecord {
    let first = capitalize(words.common(rng));
    let last = capitalize(words.common(rng));
    let user_name = format!("{first} {last}");
    let screen_name = if tr.handle {
        random_handle(rng)
    } else if rng.gen_bool(0.5) {
        format!("{}{}", first.to_lowercase(), last.to_lowercase())
    } else {
        format!("{}_{}{}", first.to_lowercase(), last.to_lowercase(), rng.gen_range(1..100))
    };
    let age = if tr.young { rng.gen_range(10..400) } else { rng.gen_range(200..3000) };
    let per_day = if tr.hyperactive { rng.gen_range(5.0..40.0) } else { rng.gen_range(0.2..5.0) };
    let statuses_count = (per_day * age as f64).round() as u64;
    let (followers_count, friends_count) = if tr.follows_many {
        (log_uniform(rng, 1.0, 200.0), log_uniform(rng, 500.0, 5000.0))
    } else {
        let followers = log_uniform(rng, 20.0, 5000.0);
        (followers, (followers as f64 * rng.gen_range(0.3..2.0)).round() as u64)
    };
    let favourites_count = if tr.few_favourites {
        log_uniform(rng, 1.0, 100.0)
    } else {
        (statuses_count as f64 * rng.gen_range(0.2..1.5)).round() as u64
    };
    let p = |g: f64, s: f64| if tr.flags { s } else { g };
    let description = if tr.promo_description {
        let k = rng.gen_range(1..4);
        (0..k).map(|_| words.spam(rng).to_string()).collect::<Vec<_>>().join(" ")
    } else {
        let k = rng.gen_range(3..12);
        (0..k).map(|_| words.common(rng).to_string()).collect::<Vec<_>>().join(" ")
    };
    UserRecord {
        id,
        user_name,
        screen_name,
        statuses_count,
        followers_count,
        friends_count,
        favourites_count,
        verified: rng.gen_bool(p(0.05, 0.0)),
        geo_enabled: rng.gen_bool(p(0.4, 0.1)),
        profile_use_background_image: rng.gen_bool(p(0.8, 0.4)),
        profile_background_tile: rng.gen_bool(p(0.2, 0.05)),
        default_profile: rng.gen_bool(p(0.3, 0.7)),
        description,
        created_at: snapshot - Duration::days(age),
        label: None,
    }
}

fn genuine_tweet(rng: &mut ChaCha8Rng, words: &Words) -> String {
    let len = rng.gen_range(5..=15);
    let mut toks: Vec<String> = (0..len).map(|_| words.common(rng).to_string()).collect();
    if rng.gen_bool(0.02) {
        toks.push(words.spam(rng).to_string());
    }
    if rng.gen_bool(0.15) {
        toks.push(format!("#{}", words.common(rng)));
    }
    if rng.gen_bool(0.2) {
        toks.push(format!("@{}", words.common(rng)));
    }
    toks.join(" ")
}

fn spam_tweet(rng: &mut ChaCha8Rng, template: &[String], noise: f64, words: &Words) -> String {
    let mut toks: Vec<String> = template
        .iter()
        .map(|t| if rng.gen_bool(noise) { words.common(rng).to_string() } else { t.clone() })
        .collect();
    if rng.gen_bool(0.6) {
        toks.push(format!("#{}", words.spam(rng).replace(' ', "")));
    }
    if rng.gen_bool(0.5) {
        toks.push(format!("@{}", words.common(rng)));
    }
    toks.join(" ")
}

/// Generates a dataset. All randomness comes from `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lexicon = SpamLexicon::from_entries(LEXICON.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')));
    let words = Words::new(cfg.vocab_size, &lexicon);
    let s = cfg.effect_strength;

    let mut roles: Vec<Role> = Vec::with_capacity(cfg.n_genuine + cfg.n_spam + cfg.n_unlabeled);
    roles.extend(std::iter::repeat_n(Role::Genuine, cfg.n_genuine));
    roles.extend((0..cfg.n_spam).map(|i| Role::Spam {
        community: i % cfg.spam_community_count.max(1),
    }));
    roles.extend(std::iter::repeat_n(Role::Unlabeled, cfg.n_unlabeled));
    roles.shuffle(&mut rng);
    let ids: Vec<String> = (0..roles.len()).map(|i| format!("u{i:05}")).collect();

    let templates: Vec<Vec<String>> = (0..cfg.spam_template_count)
        .map(|_| {
            let len = rng.gen_range(6..=10);
            (0..len)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        words.spam(&mut rng).to_string()
                    } else {
                        words.common(&mut rng).to_string()
                    }
                })
                .collect()
        })
        .collect();

    let mut users = Vec::with_capacity(roles.len());
    let mut tweets = TweetCorpus::new();
    for (id, role) in ids.iter().zip(&roles) {
        let is_spam = matches!(role, Role::Spam { .. });
        let traits = Traits::draw(&mut rng, is_spam, s);
        let mut user = make_user(&mut rng, id.clone(), traits, &words, cfg.snapshot_date);
        user.label = match role {
            Role::Genuine => Some(Label::Genuine),
            Role::Spam { .. } => Some(Label::Spam),
            Role::Unlabeled => None,
        };
        let n_tweets = rng.gen_range(cfg.tweets_per_user[0]..=cfg.tweets_per_user[1]);
        let primary = rng.gen_range(0..templates.len().max(1));
        let user_tweets = (0..n_tweets)
            .map(|_| {
                if traits.templated_tweets {
                    // mostly one template, sometimes another
                    let t = if rng.gen_bool(0.8) { primary } else { rng.gen_range(0..templates.len()) };
                    spam_tweet(&mut rng, &templates[t], cfg.template_noise, &words)
                } else {
                    genuine_tweet(&mut rng, &words)
                }
            })
            .collect();
        tweets.insert(id.clone(), user_tweets);
        users.push(user);
    }

    let mut edges = Vec::new();
    let intra = mix(cfg.genuine_edge_prob, cfg.intra_spam_edge_prob, s);
    let cross = mix(cfg.genuine_edge_prob, cfg.cross_edge_prob, s);
    for (a, ra) in roles.iter().enumerate() {
        for (b, rb) in roles.iter().enumerate() {
            if a == b {
                continue;
            }
            let p = match (ra, rb) {
                (Role::Spam { community: ca }, Role::Spam { community: cb }) if ca == cb => intra,
                (Role::Spam { .. }, Role::Spam { .. }) => cfg.genuine_edge_prob,
                (Role::Spam { .. }, _) | (_, Role::Spam { .. }) => cross,
                _ => cfg.genuine_edge_prob,
            };
            if p > 0.0 && rng.gen_bool(p) {
                edges.push((ids[a].clone(), ids[b].clone()));
            }
        }
    }
    // every account needs at least one edge to be part of the graph
    let mut touched = vec![false; roles.len()];
    for (a, b) in &edges {
        for id in [a, b] {
            touched[id[1..].parse::<usize>().expect("generated id")] = true;
        }
    }
    for v in 0..roles.len() {
        if !touched[v] {
            let mut u = rng.gen_range(0..roles.len() - 1);
            if u >= v {
                u += 1;
            }
            edges.push((ids[v].clone(), ids[u].clone()));
        }
    }
    edges.sort();
    edges.dedup();

    Ok(Dataset {
        users,
        tweets,
        edges,
        snapshot_date: cfg.snapshot_date,
        lexicon,
    })
}

/// Writes the five dataset files into `dir`, which must exist.
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<(), SynthError> {
    if !dir.is_dir() {
        return Err(SynthError::ConfigInvalid(format!("output directory {} does not exist", dir.display())));
    }
    let unlabeled: Vec<UserRecord> = d.users.iter().map(|u| UserRecord { label: None, ..u.clone() }).collect();
    write_users_file(&dir.join(USERS_FILE), &unlabeled)?;
    write_tweets_file(&dir.join(TWEETS_FILE), &d.tweets)?;
    write_edges_file(&dir.join(EDGES_FILE), &d.edges)?;
    write_labels_file(&dir.join(LABELS_FILE), &d.users)?;
    write_lexicon_file(&dir.join(LEXICON_FILE), &d.lexicon)?;
    Ok(())
}

/// Per-class counts of a generated dataset, keyed by label.
pub fn class_counts(d: &Dataset) -> BTreeMap<u8, usize> {
    let mut c = BTreeMap::new();
    for u in d.labeled_users() {
        *c.entry(u.label.expect("labeled").as_u8()).or_insert(0) += 1;
    }
    c
}
