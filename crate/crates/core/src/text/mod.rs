//! Features computed from a user's tweet texts.

mod tfidf;
mod tokenize;

pub use tfidf::{sparse_dot, SparseRow, TfIdfModel};
pub use tokenize::{content_tokens, is_marker, tokenize};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::SpamLexicon;

/// Number of largest pairwise similarities averaged by [`tweet_similarity`].
pub const TOP_PAIRS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextFeatures {
    pub tweet_similarity: f64,
    pub lexical_diversity: f64,
    pub hashtag_count: u64,
    pub user_mention_count: u64,
    pub unigram_spam_freq: f64,
    pub bigram_spam_freq: f64,
}

impl TextFeatures {
    pub fn extract<S: AsRef<str>>(tweets: &[S], lexicon: &SpamLexicon) -> Self {
        let (hashtag_count, user_mention_count) = count_markers(tweets);
        let (unigram_spam_freq, bigram_spam_freq) = spam_word_freq(tweets, lexicon);
        TextFeatures {
            tweet_similarity: tweet_similarity(tweets),
            lexical_diversity: lexical_diversity(tweets),
            hashtag_count,
            user_mention_count,
            unigram_spam_freq,
            bigram_spam_freq,
        }
    }
}

/// Mean of the [`TOP_PAIRS`] largest pairwise cosine similarities between the
/// tf-idf vectors of one user's tweets. Fewer than two tweets give 0.
pub fn tweet_similarity<S: AsRef<str>>(tweets: &[S]) -> f64 {
    if tweets.len() < 2 {
        return 0.0;
    }
    let docs: Vec<Vec<String>> = tweets.iter().map(|t| content_tokens(t.as_ref())).collect();
    let model = TfIdfModel::fit(&docs);
    let rows: Vec<SparseRow> = docs.iter().map(|d| model.transform(d)).collect();
    let mut sims = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            sims.push(sparse_dot(&rows[i], &rows[j]).clamp(0.0, 1.0));
        }
    }
    let k = sims.len().min(TOP_PAIRS);
    if sims.len() > k {
        sims.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
        sims.truncate(k);
    }
    sims.sort_by(|a, b| b.total_cmp(a));
    sims.iter().sum::<f64>() / k as f64
}

/// Type-token ratio over all non-marker tokens. No tokens gives 0.
pub fn lexical_diversity<S: AsRef<str>>(tweets: &[S]) -> f64 {
    let mut types = HashSet::new();
    let mut tokens = 0usize;
    for t in tweets {
        for tok in content_tokens(t.as_ref()) {
            tokens += 1;
            types.insert(tok);
        }
    }
    if tokens == 0 {
        0.0
    } else {
        types.len() as f64 / tokens as f64
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Counts whitespace-separated words of the form `#\w+...` and `@\w+...`.
pub fn count_markers<S: AsRef<str>>(tweets: &[S]) -> (u64, u64) {
    let (mut hashtags, mut mentions) = (0, 0);
    for t in tweets {
        for word in t.as_ref().split_whitespace() {
            let mut chars = word.chars();
            let (Some(marker), Some(next)) = (chars.next(), chars.next()) else {
                continue;
            };
            if !is_word_char(next) {
                continue;
            }
            match marker {
                '#' => hashtags += 1,
                '@' => mentions += 1,
                _ => {}
            }
        }
    }
    (hashtags, mentions)
}

/// Fraction of tokens in the unigram lexicon and of within-tweet adjacent
/// token pairs in the bigram lexicon.
pub fn spam_word_freq<S: AsRef<str>>(tweets: &[S], lexicon: &SpamLexicon) -> (f64, f64) {
    let (mut tokens, mut uni_hits, mut pairs, mut bi_hits) = (0usize, 0usize, 0usize, 0usize);
    for t in tweets {
        let toks = content_tokens(t.as_ref());
        tokens += toks.len();
        uni_hits += toks.iter().filter(|w| lexicon.unigrams.contains(*w)).count();
        for w in toks.windows(2) {
            pairs += 1;
            if lexicon.bigrams.contains(&(w[0].clone(), w[1].clone())) {
                bi_hits += 1;
            }
        }
    }
    (
        uni_hits as f64 / tokens.max(1) as f64,
        bi_hits as f64 / pairs.max(1) as f64,
    )
}
