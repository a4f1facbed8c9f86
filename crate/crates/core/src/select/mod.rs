//! Feature table assembly, SHAP and correlation selection, and the final
//! per-user vectors.

mod shap;

pub use shap::{expected_value, shap_base_value, tree_shap, tree_shap_rows};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::graph::CentralityTable;
use crate::metadata::MetadataFeatures;
use crate::model::{Dataset, UserRecord};
use crate::models::{GBDTModel, ModelError};
use crate::text::TextFeatures;

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("user {id} has no {block} features")]
    MissingUser { id: String, block: &'static str },
    #[error("user {0} has no embedding")]
    MissingEmbedding(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("feature table has no labels")]
    NoLabels,
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("non-finite value for user {id} in {feature}")]
    NonFinite { id: String, feature: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Column order of the full feature table: metadata block, text block,
/// centrality block, then raw profile counts and flags.
pub const FEATURE_NAMES: [&str; 26] = [
    "ff_ratio",
    "name_similarity",
    "account_age",
    "activity_ratio",
    "fav_status_ratio",
    "entropy_per_length",
    "tweet_similarity",
    "lexical_diversity",
    "hashtag_count",
    "user_mention_count",
    "unigram_spam_freq",
    "bigram_spam_freq",
    "degree_centrality",
    "betweenness_centrality",
    "in_eig_centrality",
    "out_eig_centrality",
    "pagerank",
    "statuses_count",
    "followers_count",
    "friends_count",
    "favourites_count",
    "verified",
    "geo_enabled",
    "profile_use_background_image",
    "profile_background_tile",
    "default_profile",
];

/// The fixed 16-feature list used when `paper_faithful_features` is on.
pub const PAPER_FEATURES: [&str; 16] = [
    "favourites_count",
    "geo_enabled",
    "profile_use_background_image",
    "profile_background_tile",
    "verified",
    "lexical_diversity",
    "unigram_spam_freq",
    "tweet_similarity",
    "ff_ratio",
    "account_age",
    "name_similarity",
    "hashtag_count",
    "user_mention_count",
    "degree_centrality",
    "in_eig_centrality",
    "out_eig_centrality",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

fn feature_row(u: &UserRecord, c: [f64; 5], m: &MetadataFeatures, t: &TextFeatures) -> Vec<f64> {
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    vec![
        m.ff_ratio,
        m.name_similarity,
        f64::from(m.account_age_days),
        m.activity_ratio,
        m.fav_status_ratio,
        m.entropy_per_length,
        t.tweet_similarity,
        t.lexical_diversity,
        t.hashtag_count as f64,
        t.user_mention_count as f64,
        t.unigram_spam_freq,
        t.bigram_spam_freq,
        c[0],
        c[1],
        c[2],
        c[3],
        c[4],
        u.statuses_count as f64,
        u.followers_count as f64,
        u.friends_count as f64,
        u.favourites_count as f64,
        b(u.verified),
        b(u.geo_enabled),
        b(u.profile_use_background_image),
        b(u.profile_background_tile),
        b(u.default_profile),
    ]
}

/// One row per labeled user, in the dataset's user order.
pub fn build_feature_table(
    d: &Dataset,
    cent: &CentralityTable,
    meta: &HashMap<String, MetadataFeatures>,
    text: &HashMap<String, TextFeatures>,
) -> Result<FeatureTable, SelectError> {
    let users: Vec<&UserRecord> = d.labeled_users().collect();
    let mut t = build_rows(&users, cent, meta, text)?;
    t.labels = Some(users.iter().map(|u| u.label.expect("labeled").as_u8()).collect());
    Ok(t)
}

/// Unlabeled table for the given users, e.g. for scoring.
pub fn build_rows(
    users: &[&UserRecord],
    cent: &CentralityTable,
    meta: &HashMap<String, MetadataFeatures>,
    text: &HashMap<String, TextFeatures>,
) -> Result<FeatureTable, SelectError> {
    let cent_index: HashMap<&str, usize> = cent.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let missing = |id: &str, block| SelectError::MissingUser {
        id: id.to_string(),
        block,
    };
    let mut rows = Vec::with_capacity(users.len());
    for u in users {
        let c = *cent_index.get(u.id.as_str()).ok_or_else(|| missing(&u.id, "centrality"))?;
        let m = meta.get(&u.id).ok_or_else(|| missing(&u.id, "metadata"))?;
        let t = text.get(&u.id).ok_or_else(|| missing(&u.id, "text"))?;
        let row = feature_row(u, cent.row(c), m, t);
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(SelectError::NonFinite {
                id: u.id.clone(),
                feature: FEATURE_NAMES[j].to_string(),
            });
        }
        rows.push(row);
    }
    Ok(FeatureTable {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        ids: users.iter().map(|u| u.id.clone()).collect(),
        rows,
        labels: None,
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl FeatureTable {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Table restricted to `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            names: self.names.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
        }
    }

    /// CSV with an `id` column, the features, and `label` when present.
    /// Values carry 17 significant digits so they read back bit-exactly.
    pub fn write_csv(&self, path: &Path) -> Result<(), SelectError> {
        let err = |e: csv::Error| SelectError::Format(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        let mut header = vec!["id".to_string()];
        header.extend(self.names.iter().cloned());
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header).map_err(err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(row.iter().map(|&v| fmt17(v)));
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| SelectError::Format(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<FeatureTable, SelectError> {
        let err = |e: csv::Error| SelectError::Format(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let header: Vec<String> = r.headers().map_err(err)?.iter().map(String::from).collect();
        if header.first().map(String::as_str) != Some("id") {
            return Err(SelectError::Format(format!("{}: first column must be id", path.display())));
        }
        let has_label = header.last().map(String::as_str) == Some("label");
        let end = header.len() - usize::from(has_label);
        let names = header[1..end].to_vec();
        let (mut ids, mut rows, mut labels) = (vec![], vec![], vec![]);
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(err)?;
            let line = k + 2;
            let bad = || SelectError::Format(format!("{}: line {line}: bad value", path.display()));
            ids.push(rec[0].to_string());
            rows.push((1..end).map(|j| rec[j].parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?);
            if has_label {
                labels.push(rec[end].parse::<u8>().map_err(|_| bad())?);
            }
        }
        Ok(FeatureTable {
            names,
            ids,
            rows,
            labels: has_label.then_some(labels),
        })
    }
}

/// Sample Pearson correlation. A constant input gives 0.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, SelectError> {
    if x.len() != y.len() {
        return Err(SelectError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation of every column with the label, in column order.
pub fn label_correlations(t: &FeatureTable) -> Result<Vec<f64>, SelectError> {
    let labels = t.labels.as_ref().ok_or(SelectError::NoLabels)?;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    (0..t.names.len()).map(|j| pearson_correlation(&t.column(j), &y)).collect()
}

/// Features with `|r| >= threshold` against the label, by descending `|r|`
/// (column order on ties).
pub fn correlation_select(t: &FeatureTable, threshold: f64) -> Result<Vec<String>, SelectError> {
    let r = label_correlations(t)?;
    Ok(rank(&t.names, &r.iter().map(|v| v.abs()).collect::<Vec<_>>())
        .into_iter()
        .filter(|&j| r[j].abs() >= threshold)
        .map(|j| t.names[j].clone())
        .collect())
}

/// Column indices by descending score, stable on ties.
fn rank(names: &[String], score: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..names.len()).collect();
    idx.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
    idx
}

/// Mean absolute SHAP value of every column over the table's rows.
pub fn mean_abs_shap(model: &GBDTModel, t: &FeatureTable) -> Result<Vec<f64>, SelectError> {
    let phis = tree_shap_rows(model, &t.rows)?;
    let mut mean = vec![0.0; t.names.len()];
    for phi in &phis {
        for (m, p) in mean.iter_mut().zip(phi) {
            *m += p.abs();
        }
    }
    let n = phis.len().max(1) as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Top `k` features by mean absolute SHAP value, descending; column order on ties.
pub fn shap_select(model: &GBDTModel, t: &FeatureTable, k: usize) -> Result<Vec<String>, SelectError> {
    let mean = mean_abs_shap(model, t)?;
    Ok(rank(&t.names, &mean)
        .into_iter()
        .take(k)
        .map(|j| t.names[j].clone())
        .collect())
}

/// Elements of `s1` that are also in `s2`, in `s1` order.
pub fn intersect(s1: &[String], s2: &[String]) -> Vec<String> {
    let b: BTreeSet<&String> = s2.iter().collect();
    s1.iter().filter(|n| b.contains(n)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub mean_abs_shap: f64,
    pub pearson_r: f64,
    #[serde(rename = "in_S1")]
    pub in_s1: bool,
    #[serde(rename = "in_S2")]
    pub in_s2: bool,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Number of columns in the full feature table.
    pub column_count: usize,
    pub shap_set: Vec<String>,
    pub correlation_set: Vec<String>,
    /// `shap_set ∩ correlation_set`, in SHAP rank order.
    pub intersection: Vec<String>,
    /// Features actually used downstream: the intersection, or the fixed
    /// 16-name list when that override is on.
    pub selected: Vec<String>,
    pub paper_faithful: bool,
    pub features: BTreeMap<String, FeatureScore>,
    /// Feature pairs with `|r| >= 0.9`. Reported only; nothing is dropped.
    pub redundant_pairs: Vec<(String, String, f64)>,
}

pub const REDUNDANCY_THRESHOLD: f64 = 0.9;

/// Runs both selection channels on `t` and picks the final feature list.
pub fn select_features(
    model: &GBDTModel,
    t: &FeatureTable,
    k: usize,
    threshold: f64,
    paper_faithful: bool,
) -> Result<SelectionReport, SelectError> {
    let shap = mean_abs_shap(model, t)?;
    let r = label_correlations(t)?;
    let shap_set: Vec<String> = rank(&t.names, &shap).into_iter().take(k).map(|j| t.names[j].clone()).collect();
    let correlation_set = correlation_select(t, threshold)?;
    let intersection = intersect(&shap_set, &correlation_set);
    let selected = if paper_faithful {
        for n in PAPER_FEATURES {
            t.column_index(n).ok_or_else(|| SelectError::UnknownFeature(n.to_string()))?;
        }
        PAPER_FEATURES.iter().map(|s| s.to_string()).collect()
    } else {
        intersection.clone()
    };
    let features = t
        .names
        .iter()
        .enumerate()
        .map(|(j, n)| {
            (
                n.clone(),
                FeatureScore {
                    mean_abs_shap: shap[j],
                    pearson_r: r[j],
                    in_s1: shap_set.contains(n),
                    in_s2: correlation_set.contains(n),
                    selected: selected.contains(n),
                },
            )
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..t.names.len()).map(|j| t.column(j)).collect();
    let mut redundant_pairs = Vec::new();
    for a in 0..cols.len() {
        for b in (a + 1)..cols.len() {
            let rab = pearson_correlation(&cols[a], &cols[b])?;
            if rab.abs() >= REDUNDANCY_THRESHOLD {
                redundant_pairs.push((t.names[a].clone(), t.names[b].clone(), rab));
            }
        }
    }
    Ok(SelectionReport {
        column_count: t.names.len(),
        shap_set,
        correlation_set,
        intersection,
        selected,
        paper_faithful,
        features,
        redundant_pairs,
    })
}

/// Z-score parameters of the selected columns, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub features: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations; a constant column stores 1.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(t: &FeatureTable, selected: &[String]) -> Result<Self, SelectError> {
        let n = t.rows.len() as f64;
        let (mut means, mut stds) = (vec![], vec![]);
        for name in selected {
            let j = t.column_index(name).ok_or_else(|| SelectError::UnknownFeature(name.clone()))?;
            let col = t.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(Standardizer {
            features: selected.to_vec(),
            means,
            stds,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledVectors {
    pub ids: Vec<String>,
    pub selected_width: usize,
    pub embedding_dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

impl AssembledVectors {
    pub fn width(&self) -> usize {
        self.selected_width + self.embedding_dim
    }

    /// CSV with header `id,f1..fk,v1..vd[,label]`.
    pub fn write_csv(&self, path: &Path) -> Result<(), SelectError> {
        let err = |e: csv::Error| SelectError::Format(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        let mut header = vec!["id".to_string()];
        header.extend((1..=self.selected_width).map(|i| format!("f{i}")));
        header.extend((1..=self.embedding_dim).map(|i| format!("v{i}")));
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header).map_err(err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(row.iter().map(|&v| fmt17(v)));
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| SelectError::Format(e.to_string()))
    }
}

/// `W_i` = standardized selected features (in `std.features` order) followed
/// by the user's embedding, unscaled.
pub fn assemble(t: &FeatureTable, std: &Standardizer, emb: &EmbeddingMatrix) -> Result<AssembledVectors, SelectError> {
    let cols: Vec<usize> = std
        .features
        .iter()
        .map(|n| t.column_index(n).ok_or_else(|| SelectError::UnknownFeature(n.clone())))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(t.rows.len());
    for (id, src) in t.ids.iter().zip(&t.rows) {
        let v = emb.get(id).ok_or_else(|| SelectError::MissingEmbedding(id.clone()))?;
        let mut row: Vec<f64> = cols
            .iter()
            .enumerate()
            .map(|(k, &j)| (src[j] - std.means[k]) / std.stds[k])
            .collect();
        row.extend_from_slice(v);
        rows.push(row);
    }
    Ok(AssembledVectors {
        ids: t.ids.clone(),
        selected_width: cols.len(),
        embedding_dim: emb.dim(),
        rows,
        labels: t.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[(&str, Vec<f64>)], labels: Vec<u8>) -> FeatureTable {
        let n = labels.len();
        FeatureTable {
            names: cols.iter().map(|c| c.0.to_string()).collect(),
            ids: (0..n).map(|i| format!("u{i}")).collect(),
            rows: (0..n).map(|i| cols.iter().map(|c| c.1[i]).collect()).collect(),
            labels: Some(labels),
        }
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        // Sxy = 2, Sxx = 5, Syy = 1
        let r = pearson_correlation(&x, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((r - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((r - 0.8944).abs() < 1e-4);
        assert_eq!(pearson_correlation(&[3.0; 4], &x).unwrap(), 0.0);
        assert!(matches!(pearson_correlation(&x, &x[..3]), Err(SelectError::LengthMismatch(4, 3))));
    }

    #[test]
    fn correlation_select_orders_by_magnitude() {
        let y: Vec<u8> = (0..8).map(|i| (i >= 4) as u8).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let weak = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let neg: Vec<f64> = (0..8).map(|i| -(i as f64) * 0.1 + if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let t = table(&[("weak", weak.clone()), ("label", yf.clone()), ("neg", neg.clone())], y);
        let rw = pearson_correlation(&weak, &yf).unwrap();
        let rn = pearson_correlation(&neg, &yf).unwrap();
        assert!(rw.abs() < 0.1 && rn < -0.1, "{rw} {rn}");
        assert_eq!(correlation_select(&t, 0.1).unwrap(), vec!["label", "neg"]);
        assert!(matches!(
            correlation_select(&FeatureTable { labels: None, ..t }, 0.1),
            Err(SelectError::NoLabels)
        ));
    }

    #[test]
    fn intersection_keeps_first_order() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(intersect(&s(&["c", "a", "b"]), &s(&["b", "c"])), s(&["c", "b"]));
    }

    #[test]
    fn standardizer_handles_constant_column() {
        let t = table(&[("a", vec![1.0, 2.0, 3.0]), ("c", vec![5.0; 3])], vec![0, 1, 0]);
        let s = Standardizer::fit(&t, &["c".into(), "a".into()]).unwrap();
        assert_eq!(s.stds[0], 1.0);
        assert_eq!(s.means, vec![5.0, 2.0]);
        assert!((s.stds[1] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn feature_table_csv_round_trip() {
        let t = table(
            &[("a", vec![0.1, 1.0 / 3.0, 1e-300]), ("b", vec![f64::MAX, -0.0, 123456789.123456789])],
            vec![0, 1, 1],
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        t.write_csv(&p).unwrap();
        let back = FeatureTable::read_csv(&p).unwrap();
        assert_eq!(back.names, t.names);
        assert_eq!(back.labels, t.labels);
        for (a, b) in back.rows.iter().flatten().zip(t.rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
