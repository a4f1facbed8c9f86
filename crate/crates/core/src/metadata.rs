//! Engineered profile-metadata features.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::UserRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetadataError {
    #[error("account created {created} after snapshot {snapshot}")]
    FutureCreation { created: NaiveDate, snapshot: NaiveDate },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetadataFeatures {
    pub ff_ratio: f64,
    pub name_similarity: f64,
    pub account_age_days: u32,
    pub activity_ratio: f64,
    pub fav_status_ratio: f64,
    pub entropy_per_length: f64,
}

impl MetadataFeatures {
    pub fn extract(user: &UserRecord, snapshot: NaiveDate) -> Result<Self, MetadataError> {
        let age = account_age_days(user.created_at, snapshot)?;
        Ok(MetadataFeatures {
            ff_ratio: ff_ratio(user.friends_count, user.followers_count),
            name_similarity: name_similarity(&user.user_name, &user.screen_name),
            account_age_days: age,
            activity_ratio: activity_ratio(user.statuses_count, age),
            fav_status_ratio: fav_status_ratio(user.favourites_count, user.statuses_count),
            entropy_per_length: entropy_per_length(&user.description),
        })
    }
}

/// Friends (followings) over followers; zero followers count as one.
pub fn ff_ratio(friends_count: u64, followers_count: u64) -> f64 {
    friends_count as f64 / followers_count.max(1) as f64
}

/// Longest common contiguous block in `a[alo..ahi]` / `b[blo..bhi]`,
/// earliest in `a` (then in `b`) among equally long blocks.
fn longest_block(a: &[char], alo: usize, ahi: usize, b: &[char], blo: usize, bhi: usize) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best) = (alo, blo, 0);
    let width = bhi - blo;
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    for i in alo..ahi {
        for j in blo..bhi {
            let k = if a[i] == b[j] { prev[j - blo] + 1 } else { 0 };
            cur[j - blo + 1] = k;
            if k > best {
                best = k;
                best_i = i + 1 - k;
                best_j = j + 1 - k;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (best_i, best_j, best)
}

fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, k) = longest_block(a, alo, ahi, b, blo, bhi);
        if k == 0 {
            continue;
        }
        total += k;
        stack.push((alo, i, blo, j));
        stack.push((i + k, ahi, j + k, bhi));
    }
    total
}

/// Ratcliff/Obershelp gestalt similarity `2M / T` of the lowercased names.
///
/// The pair is ordered lexicographically before matching so that tie-breaks
/// between equally long blocks cannot make the score depend on argument order.
pub fn name_similarity(user_name: &str, screen_name: &str) -> f64 {
    let (x, y) = (user_name.to_lowercase(), screen_name.to_lowercase());
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let a: Vec<char> = x.chars().collect();
    let b: Vec<char> = y.chars().collect();
    let t = a.len() + b.len();
    if t == 0 {
        return 1.0;
    }
    2.0 * matched_chars(&a, &b) as f64 / t as f64
}

/// Whole days between creation and snapshot, floored at 1.
pub fn account_age_days(created_at: NaiveDate, snapshot: NaiveDate) -> Result<u32, MetadataError> {
    if created_at > snapshot {
        return Err(MetadataError::FutureCreation {
            created: created_at,
            snapshot,
        });
    }
    let days = (snapshot - created_at).num_days().max(1);
    Ok(u32::try_from(days).unwrap_or(u32::MAX))
}

pub fn activity_ratio(statuses_count: u64, account_age_days: u32) -> f64 {
    statuses_count as f64 / f64::from(account_age_days.max(1))
}

pub fn fav_status_ratio(favourites_count: u64, statuses_count: u64) -> f64 {
    favourites_count as f64 / statuses_count.max(1) as f64
}

/// Character-level Shannon entropy (bits) divided by the character count.
pub fn entropy_per_length(description: &str) -> f64 {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut len = 0usize;
    for c in description.chars() {
        *counts.entry(c).or_insert(0) += 1;
        len += 1;
    }
    if len == 0 {
        return 0.0;
    }
    let n = len as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // -0.0 for single-symbol strings
    (h / n).max(0.0)
}
