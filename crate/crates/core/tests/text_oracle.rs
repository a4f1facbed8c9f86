//! Tweet similarity against a dense tf-idf computed from scratch.

use std::collections::BTreeSet;

use proptest::prelude::*;
use spamdetect::text::{tweet_similarity, TOP_PAIRS};

fn dense_similarity(tweets: &[String]) -> f64 {
    if tweets.len() < 2 {
        return 0.0;
    }
    let docs: Vec<Vec<String>> = tweets
        .iter()
        .map(|t| t.split(' ').filter(|w| !w.starts_with('#') && !w.starts_with('@')).map(String::from).collect())
        .collect();
    let vocab: Vec<String> = docs.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| {
            let df = docs.iter().filter(|d| d.contains(w)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let vecs: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| {
            vocab
                .iter()
                .zip(&idf)
                .map(|(w, i)| d.iter().filter(|t| *t == w).count() as f64 * i)
                .collect()
        })
        .collect();
    let mut sims = Vec::new();
    for a in 0..vecs.len() {
        for b in (a + 1)..vecs.len() {
            let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
            let na = vecs[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = vecs[b].iter().map(|x| x * x).sum::<f64>().sqrt();
            sims.push(if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) });
        }
    }
    sims.sort_by(|x, y| y.total_cmp(x));
    let k = sims.len().min(TOP_PAIRS);
    sims[..k].iter().sum::<f64>() / k as f64
}

#[test]
fn three_tweets_use_all_pairs() {
    let tw: Vec<String> = ["buy cheap now", "buy now", "hello there now"].iter().map(|s| s.to_string()).collect();
    let got = tweet_similarity(&tw);
    let want = dense_similarity(&tw);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!(got > 0.0 && got < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn matches_dense_oracle(tw in prop::collection::vec("[#@]?[a-f]{1,2}( [#@]?[a-f]{1,2}){0,6}", 0..26)) {
        let got = tweet_similarity(&tw);
        let want = dense_similarity(&tw);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }
}
