mod common;

use std::collections::HashMap;

use chrono::NaiveDate;
use rand::Rng;
use spamdetect::embed::EmbeddingMatrix;
use spamdetect::graph::{build_graph, CentralityTable};
use spamdetect::metadata::MetadataFeatures;
use spamdetect::model::{Dataset, Label, SpamLexicon, UserRecord};
use spamdetect::models::{train_gbdt, TrainConfig};
use spamdetect::select::{
    assemble, build_feature_table, correlation_select, mean_abs_shap, select_features, shap_select, tree_shap,
    FeatureTable, SelectError, Standardizer, FEATURE_NAMES, PAPER_FEATURES,
};
use spamdetect::text::TextFeatures;

fn user(id: &str, label: Label) -> UserRecord {
    UserRecord {
        id: id.into(),
        user_name: "Ann Lee".into(),
        screen_name: "annlee".into(),
        statuses_count: 10,
        followers_count: 3,
        friends_count: 4,
        favourites_count: 5,
        verified: true,
        geo_enabled: false,
        profile_use_background_image: true,
        profile_background_tile: false,
        default_profile: false,
        description: "hi there".into(),
        created_at: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        label: Some(label),
    }
}

fn small_dataset() -> (Dataset, CentralityTable, HashMap<String, MetadataFeatures>, HashMap<String, TextFeatures>) {
    let snapshot = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let d = Dataset {
        users: vec![user("a", Label::Genuine), user("b", Label::Spam)],
        tweets: [("a".to_string(), vec!["hello world".to_string()])].into_iter().collect(),
        edges: vec![("a".into(), "b".into()), ("b".into(), "c".into()), ("c".into(), "a".into())],
        snapshot_date: snapshot,
        lexicon: SpamLexicon::default(),
    };
    let cent = CentralityTable::compute(&build_graph(&d.edges)).unwrap();
    let meta = d.users.iter().map(|u| (u.id.clone(), MetadataFeatures::extract(u, snapshot).unwrap())).collect();
    let text = d
        .users
        .iter()
        .map(|u| (u.id.clone(), TextFeatures::extract(d.tweets.get(&u.id).map(Vec::as_slice).unwrap_or(&[]), &d.lexicon)))
        .collect();
    (d, cent, meta, text)
}

#[test]
fn table_has_one_row_per_labeled_user() {
    let (d, cent, meta, text) = small_dataset();
    let t = build_feature_table(&d, &cent, &meta, &text).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.names, FEATURE_NAMES);
    assert_eq!(t.labels, Some(vec![0, 1]));
    let v = t.column_index("verified").unwrap();
    let g = t.column_index("geo_enabled").unwrap();
    assert_eq!((t.rows[0][v], t.rows[0][g]), (1.0, 0.0));
    assert!(PAPER_FEATURES.iter().all(|n| t.column_index(n).is_some()));
}

#[test]
fn missing_centrality_is_reported() {
    let (d, mut cent, meta, text) = small_dataset();
    let keep: Vec<usize> = (0..cent.len()).filter(|&i| cent.ids[i] != "b").collect();
    let pick = |v: &Vec<f64>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    cent = CentralityTable {
        ids: keep.iter().map(|&i| cent.ids[i].clone()).collect(),
        degree: pick(&cent.degree),
        betweenness: pick(&cent.betweenness),
        in_eigenvector: pick(&cent.in_eigenvector),
        out_eigenvector: pick(&cent.out_eigenvector),
        pagerank: pick(&cent.pagerank),
    };
    assert!(matches!(
        build_feature_table(&d, &cent, &meta, &text),
        Err(SelectError::MissingUser { id, block: "centrality" }) if id == "b"
    ));
}

fn random_table(seed: u64, n: usize, d: usize, label_from: impl Fn(&[f64]) -> bool) -> FeatureTable {
    let mut rng = common::rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let labels = rows.iter().map(|r| label_from(r) as u8).collect();
    FeatureTable {
        names: (0..d).map(|j| format!("f{j}")).collect(),
        ids: (0..n).map(|i| format!("u{i}")).collect(),
        rows,
        labels: Some(labels),
    }
}

#[test]
fn planted_feature_ranks_first_and_matches_brute_force() {
    let t = random_table(5, 300, 4, |r| r[0] > 0.1);
    let m = train_gbdt(&t.rows, t.labels.as_ref().unwrap(), &TrainConfig { num_rounds: 30, max_depth: 3, ..Default::default() })
        .unwrap();
    let ranked = shap_select(&m, &t, 4).unwrap();
    assert_eq!(ranked[0], "f0");
    for row in t.rows.iter().take(20) {
        let (want, _) = common::brute_force_shapley(&m, row);
        let got = tree_shap(&m, row).unwrap();
        assert!(common::max_abs_diff(&got, &want) < 1e-9);
    }
}

#[test]
fn one_feature_model_and_large_k() {
    let t = random_table(8, 200, 5, |r| r[3] > 0.0);
    let m = train_gbdt(&t.rows, t.labels.as_ref().unwrap(), &TrainConfig { num_rounds: 10, max_depth: 1, ..Default::default() })
        .unwrap();
    let mean = mean_abs_shap(&m, &t).unwrap();
    assert!(mean.iter().enumerate().all(|(j, &v)| (j == 3) == (v > 0.0)));
    assert_eq!(shap_select(&m, &t, 1).unwrap(), vec!["f3"]);
    // zero-importance ties keep column order
    assert_eq!(shap_select(&m, &t, 99).unwrap(), vec!["f3", "f0", "f1", "f2", "f4"]);
}

#[test]
fn planted_correlations_select_in_order() {
    // columns built to have r = 0.5, 0.09 and -0.3 against a balanced label
    let n = 1000;
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let mut rng = common::rng(17);
    let noise: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let target: [f64; 3] = [0.5, 0.09, -0.3];
    let mut cols = Vec::new();
    let yc: Vec<f64> = y.iter().map(|&v| v as f64 - 0.5).collect();
    for (k, r) in target.iter().enumerate() {
        // make the noise orthogonal to the label, then mix
        let e = &noise[k];
        let proj = e.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / yc.iter().map(|b| b * b).sum::<f64>();
        let e: Vec<f64> = e.iter().zip(&yc).map(|(a, b)| a - proj * b).collect();
        let emean = e.iter().sum::<f64>() / n as f64;
        let e: Vec<f64> = e.iter().map(|v| v - emean).collect();
        let se = (e.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let sy = 0.5;
        let w = r / (1.0 - r * r).sqrt() * se / sy;
        cols.push(e.iter().zip(&yc).map(|(a, b)| a + w * b).collect::<Vec<f64>>());
    }
    let t = FeatureTable {
        names: vec!["a".into(), "b".into(), "c".into()],
        ids: (0..n).map(|i| i.to_string()).collect(),
        rows: (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
        labels: Some(y.clone()),
    };
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    for (k, r) in target.iter().enumerate() {
        let got = spamdetect::select::pearson_correlation(&cols[k], &yf).unwrap();
        assert!((got - r).abs() < 1e-9, "{got}");
    }
    assert_eq!(correlation_select(&t, 0.1).unwrap(), vec!["a", "c"]);
}

#[test]
fn selection_report_invariants() {
    let t = random_table(23, 250, 6, |r| r[0] + 0.5 * r[2] > 0.0);
    let m = train_gbdt(&t.rows, t.labels.as_ref().unwrap(), &TrainConfig { num_rounds: 20, ..Default::default() }).unwrap();
    let r = select_features(&m, &t, 3, 0.1, false).unwrap();
    assert_eq!(r.selected, r.intersection);
    assert!(r.selected.iter().all(|n| r.shap_set.contains(n) && r.correlation_set.contains(n)));
    assert!(r.selected.contains(&"f0".to_string()));
    assert_eq!(r.features.len(), 6);
    assert!(r.features.iter().all(|(n, s)| s.selected == r.selected.contains(n)));
}

#[test]
fn assembled_rows_are_standardized_and_concatenated() {
    let t = random_table(31, 120, 4, |r| r[1] > 0.0);
    let mut t = t;
    for (i, row) in t.rows.iter_mut().enumerate() {
        row[2] = row[2] * 1000.0 + 5e4;
        row[3] = (i % 3) as f64;
    }
    let dim = 3;
    let values: Vec<f64> = (0..t.ids.len() * dim).map(|k| k as f64 * 0.01).collect();
    let emb = EmbeddingMatrix::new(t.ids.clone(), dim, values);
    let selected = vec!["f2".to_string(), "f0".to_string(), "f3".to_string()];
    let std = Standardizer::fit(&t, &selected).unwrap();
    let a = assemble(&t, &std, &emb).unwrap();
    assert_eq!(a.width(), 6);
    for k in 0..3 {
        let col: Vec<f64> = a.rows.iter().map(|r| r[k]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-6, "{k}: {mean} {var}");
    }
    for (i, r) in a.rows.iter().enumerate() {
        assert_eq!(&r[3..], emb.row(i));
    }
    let none = Standardizer::fit(&t, &[]).unwrap();
    let b = assemble(&t, &none, &emb).unwrap();
    assert!(b.rows.iter().enumerate().all(|(i, r)| r.as_slice() == emb.row(i)));
    let short = EmbeddingMatrix::new(t.ids[1..].to_vec(), dim, vec![0.0; (t.ids.len() - 1) * dim]);
    assert!(matches!(assemble(&t, &std, &short), Err(SelectError::MissingEmbedding(id)) if id == "u0"));
}

#[test]
fn sixteen_plus_hundred_is_116() {
    let n = 10;
    let names: Vec<String> = PAPER_FEATURES.iter().map(|s| s.to_string()).collect();
    let t = FeatureTable {
        names: names.clone(),
        ids: (0..n).map(|i| format!("u{i}")).collect(),
        rows: (0..n).map(|i| (0..16).map(|j| (i * j) as f64).collect()).collect(),
        labels: None,
    };
    let emb = EmbeddingMatrix::new(t.ids.clone(), 100, vec![0.5; n * 100]);
    let a = assemble(&t, &Standardizer::fit(&t, &names).unwrap(), &emb).unwrap();
    assert!(a.rows.iter().all(|r| r.len() == 116));
}
