//! The staged pipeline behind the command-line tool: synth, featurize,
//! select-train-eval and score. Stages communicate through files in the
//! configured data and output directories.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{embed, EmbedError, EmbeddingMatrix, Node2VecConfig};
use crate::graph::{build_graph_with_nodes, SocialGraph, read_centralities_csv, write_centralities_csv, CentralityTable, GraphError};
use crate::metadata::MetadataFeatures;
use crate::model::{
    apply_labels, parse_edges_file, parse_labels_file, parse_lexicon_file, parse_tweets_file, parse_users_file,
    validate_dataset, Dataset, IngestError, SpamLexicon, UserRecord, ValidationIssue,
};
use crate::models::{
    evaluate, grid_search_cv, predict_gbdt, stratified_holdout, train_gbdt, CvResult, EvalReport, GBDTModel, Grid,
    ModelError, TrainConfig,
};
use crate::select::{
    assemble, build_feature_table, build_rows, select_features, FeatureTable, SelectError, SelectionReport,
    Standardizer,
};
use crate::synth::{self, SynthConfig, SynthError};
use crate::text::TextFeatures;

pub const FEATURES_FILE: &str = "features.csv";
pub const CENTRALITIES_FILE: &str = "centralities.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const SELECTION_FILE: &str = "selection.json";
pub const VECTORS_FILE: &str = "vectors.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const SCORES_FILE: &str = "scores.csv";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("numeric non-convergence: {0}")]
    NonConvergence(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("scoring: {0}")]
    Reference(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Input(_) => 2,
            PipelineError::NonConvergence(_) => 3,
            PipelineError::DegenerateLabels(_) => 4,
            PipelineError::Reference(_) => 5,
        }
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        PipelineError::Input(e.to_string())
    }
}

impl From<GraphError> for PipelineError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NotConverged { .. } => PipelineError::NonConvergence(e.to_string()),
            _ => PipelineError::Input(e.to_string()),
        }
    }
}

impl From<EmbedError> for PipelineError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::NonFinite { .. } => PipelineError::NonConvergence(e.to_string()),
            EmbedError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::SingleClass | ModelError::InsufficientClassCount { .. } | ModelError::DegenerateEval(_) => {
                PipelineError::DegenerateLabels(e.to_string())
            }
            ModelError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Input(e.to_string()),
        }
    }
}

impl From<SelectError> for PipelineError {
    fn from(e: SelectError) -> Self {
        match e {
            SelectError::Model(m) => m.into(),
            SelectError::NoLabels => PipelineError::DegenerateLabels(e.to_string()),
            _ => PipelineError::Input(e.to_string()),
        }
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::ConfigInvalid(_) => PipelineError::Config(e.to_string()),
            SynthError::Io(io) => io.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Holds users.jsonl, tweets.jsonl, edges.tsv, labels.csv and lexicon.txt.
    pub data_dir: PathBuf,
    /// Receives every derived artifact.
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data_dir: "data".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Size of the SHAP channel's top list.
    pub k: usize,
    /// Minimum `|r|` against the label for the correlation channel.
    pub threshold: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { k: 15, threshold: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Fraction of each class held out for the final test.
    pub test_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { test_fraction: 0.2 }
    }
}

/// Every knob of the pipeline. The top-level `seed` and `snapshot_date`
/// override the per-stage copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub snapshot_date: NaiveDate,
    /// Use the fixed 16-feature list instead of the data-driven intersection.
    pub paper_faithful_features: bool,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub node2vec: Node2VecConfig,
    pub train: TrainConfig,
    pub selection: SelectionConfig,
    pub grid: Grid,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            snapshot_date: NaiveDate::from_ymd_opt(2019, 6, 1).expect("valid date"),
            paper_faithful_features: true,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            node2vec: Node2VecConfig::default(),
            train: TrainConfig::default(),
            selection: SelectionConfig::default(),
            grid: Grid::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paper_mode: bool,
}

impl PipelineConfig {
    /// Defaults, then the TOML file (if any), then flags. Relative paths in
    /// the file are taken relative to the file's directory.
    pub fn load(path: Option<&Path>, ov: Overrides) -> Result<Self, PipelineError> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
                let mut cfg: PipelineConfig =
                    toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                cfg.paths.data_dir = base.join(&cfg.paths.data_dir);
                cfg.paths.out_dir = base.join(&cfg.paths.out_dir);
                cfg
            }
            None => PipelineConfig::default(),
        };
        if let Some(s) = ov.seed {
            cfg.seed = s;
        }
        if ov.paper_mode {
            cfg.apply_paper_mode();
        }
        cfg.propagate();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Depth 15 trees, top-15 SHAP list, correlation threshold 0.1.
    pub fn apply_paper_mode(&mut self) {
        self.train.max_depth = 15;
        self.grid.max_depth = vec![15];
        self.selection.k = 15;
        self.selection.threshold = 0.1;
    }

    /// Copies the global seed and snapshot date into every stage.
    pub fn propagate(&mut self) {
        self.synth.seed = self.seed;
        self.synth.snapshot_date = self.snapshot_date;
        self.node2vec.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.synth.validate()?;
        self.node2vec.validate()?;
        self.train.validate()?;
        if self.grid.folds < 2 || self.grid.learning_rate.is_empty() || self.grid.max_depth.is_empty() {
            return Err(PipelineError::Config("grid needs >= 2 folds and non-empty value lists".into()));
        }
        if !(self.eval.test_fraction > 0.0 && self.eval.test_fraction < 1.0) {
            return Err(PipelineError::Config("eval.test_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }

    fn data(&self, name: &str) -> PathBuf {
        self.paths.data_dir.join(name)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }
}

fn write_text(path: &Path, body: &str) -> Result<(), PipelineError> {
    fs::write(path, body).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn ensure_out_dir(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    fs::create_dir_all(&cfg.paths.out_dir)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", cfg.paths.out_dir.display())))
}

/// Generates a synthetic dataset into `paths.data_dir`, which must exist.
pub fn cmd_synth(cfg: &PipelineConfig) -> Result<Dataset, PipelineError> {
    let d = synth::generate(&cfg.synth)?;
    if !cfg.paths.data_dir.is_dir() {
        return Err(PipelineError::Config(format!(
            "output directory {} does not exist",
            cfg.paths.data_dir.display()
        )));
    }
    synth::write_dataset(&d, &cfg.paths.data_dir)?;
    Ok(d)
}

/// Reads the dataset files. labels.csv and lexicon.txt are optional.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset, PipelineError> {
    let mut users = parse_users_file(&cfg.data(synth::USERS_FILE), cfg.snapshot_date)?;
    let labels_path = cfg.data(synth::LABELS_FILE);
    if labels_path.exists() {
        apply_labels(&mut users, &parse_labels_file(&labels_path)?)?;
    }
    let lex_path = cfg.data(synth::LEXICON_FILE);
    let lexicon = if lex_path.exists() {
        parse_lexicon_file(&lex_path)?
    } else {
        SpamLexicon::default()
    };
    Ok(Dataset {
        users,
        tweets: parse_tweets_file(&cfg.data(synth::TWEETS_FILE))?,
        edges: parse_edges_file(&cfg.data(synth::EDGES_FILE))?,
        snapshot_date: cfg.snapshot_date,
        lexicon,
    })
}

type PerUser = (HashMap<String, MetadataFeatures>, HashMap<String, TextFeatures>);

fn per_user_features(d: &Dataset, users: &[&UserRecord]) -> Result<PerUser, PipelineError> {
    let empty: Vec<String> = Vec::new();
    let rows: Vec<(String, MetadataFeatures, TextFeatures)> = users
        .par_iter()
        .map(|u| {
            let m = MetadataFeatures::extract(u, d.snapshot_date)
                .map_err(|e| PipelineError::Input(format!("user {}: {e}", u.id)))?;
            let t = TextFeatures::extract(d.tweets.get(&u.id).unwrap_or(&empty), &d.lexicon);
            Ok((u.id.clone(), m, t))
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut meta = HashMap::with_capacity(rows.len());
    let mut text = HashMap::with_capacity(rows.len());
    for (id, m, t) in rows {
        meta.insert(id.clone(), m);
        text.insert(id, t);
    }
    Ok((meta, text))
}

/// Graph over every account (edgeless ones included), its centralities, and
/// the full feature table of the labeled accounts.
pub fn feature_table(d: &Dataset) -> Result<(FeatureTable, CentralityTable, SocialGraph), PipelineError> {
    let g = build_graph_with_nodes(&d.edges, d.users.iter().map(|u| u.id.as_str()));
    let centralities = CentralityTable::compute(&g)?;
    let users: Vec<&UserRecord> = d.labeled_users().collect();
    let (meta, text) = per_user_features(d, &users)?;
    let table = build_feature_table(d, &centralities, &meta, &text)?;
    Ok((table, centralities, g))
}

#[derive(Debug, Clone)]
pub struct Featurized {
    pub table: FeatureTable,
    pub centralities: CentralityTable,
    pub embeddings: EmbeddingMatrix,
    pub warnings: Vec<String>,
}

/// Writes features.csv (labeled users), centralities.csv and embeddings.txt.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<Featurized, PipelineError> {
    let d = load_dataset(cfg)?;
    let report = validate_dataset(&d);
    if !report.accepted() {
        let first = report
            .issues
            .iter()
            .find_map(|i| match i {
                ValidationIssue::UnknownTweetUser(id) => Some(id.as_str()),
                _ => None,
            })
            .unwrap_or_default();
        return Err(PipelineError::Input(format!("tweets reference unknown user {first:?}")));
    }
    let warnings: Vec<String> = report
        .issues
        .iter()
        .map(|i| match i {
            ValidationIssue::LabeledUserNotInGraph(id) => format!("labeled user {id} has no edges"),
            ValidationIssue::UnknownTweetUser(id) => format!("tweets for unknown user {id}"),
        })
        .collect();
    ensure_out_dir(cfg)?;
    let (table, centralities, g) = feature_table(&d)?;
    let embeddings = embed(&g, &cfg.node2vec)?;
    table.write_csv(&cfg.out(FEATURES_FILE))?;
    write_centralities_csv(&cfg.out(CENTRALITIES_FILE), &centralities)?;
    embeddings.write(&cfg.out(EMBEDDINGS_FILE))?;
    Ok(Featurized {
        table,
        centralities,
        embeddings,
        warnings,
    })
}

/// Everything needed to score new accounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: GBDTModel,
    pub config: TrainConfig,
    pub selected: Vec<String>,
    pub standardizer: Standardizer,
    pub embedding_dim: usize,
    pub vector_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Held-out test split.
    #[serde(flatten)]
    pub test: EvalReport,
    pub train: EvalReport,
    pub cv_best_score: f64,
    pub cv: CvResult,
    pub vector_length: usize,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub selection: SelectionReport,
    pub model: ModelFile,
    pub metrics: Metrics,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn predict_labels(m: &GBDTModel, rows: &[Vec<f64>]) -> Result<Vec<u8>, ModelError> {
    rows.iter().map(|r| predict_gbdt(m, r).map(|p| (p >= 0.5) as u8)).collect()
}

/// Selection, assembly, grid search, final training and held-out evaluation.
pub fn cmd_select_train_eval(cfg: &PipelineConfig) -> Result<TrainOutcome, PipelineError> {
    let table = FeatureTable::read_csv(&cfg.out(FEATURES_FILE))?;
    let emb = EmbeddingMatrix::read(&cfg.out(EMBEDDINGS_FILE))?;
    let y = table
        .labels
        .clone()
        .ok_or_else(|| PipelineError::DegenerateLabels("features.csv has no label column".into()))?;
    let (train_idx, test_idx) = stratified_holdout(&y, cfg.eval.test_fraction, cfg.seed)?;
    let train_t = table.subset(&train_idx);
    let test_t = table.subset(&test_idx);
    let y_train = train_t.labels.clone().expect("labels");
    let y_test = test_t.labels.clone().expect("labels");

    // SHAP channel explains a model fitted to the raw training features
    let pre = train_gbdt(&train_t.rows, &y_train, &cfg.train)?;
    let selection = select_features(
        &pre,
        &train_t,
        cfg.selection.k,
        cfg.selection.threshold,
        cfg.paper_faithful_features,
    )?;
    let standardizer = Standardizer::fit(&train_t, &selection.selected)?;
    let train_v = assemble(&train_t, &standardizer, &emb)?;
    let test_v = assemble(&test_t, &standardizer, &emb)?;

    let cv = grid_search_cv(&train_v.rows, &y_train, &cfg.grid, &cfg.train, cfg.seed)?;
    let model = train_gbdt(&train_v.rows, &y_train, &cv.best)?;
    let test = evaluate(&y_test, &predict_labels(&model, &test_v.rows)?)?;
    let train = evaluate(&y_train, &predict_labels(&model, &train_v.rows)?)?;

    let all_v = assemble(&table, &standardizer, &emb)?;
    all_v.write_csv(&cfg.out(VECTORS_FILE))?;
    let mut split = String::from("id,split\n");
    for i in 0..table.ids.len() {
        let tag = if test_idx.binary_search(&i).is_ok() { "test" } else { "train" };
        split.push_str(&format!("{},{tag}\n", table.ids[i]));
    }
    write_text(&cfg.out(SPLIT_FILE), &split)?;

    let model_file = ModelFile {
        model,
        config: cv.best.clone(),
        selected: selection.selected.clone(),
        standardizer,
        embedding_dim: emb.dim(),
        vector_length: all_v.width(),
    };
    let metrics = Metrics {
        test,
        train,
        cv_best_score: cv.best_score,
        cv,
        vector_length: all_v.width(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
    };
    write_text(&cfg.out(SELECTION_FILE), &to_json(&selection))?;
    write_text(&cfg.out(MODEL_FILE), &to_json(&model_file))?;
    write_text(&cfg.out(METRICS_FILE), &to_json(&metrics))?;
    Ok(TrainOutcome {
        selection,
        model: model_file,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub id: String,
    pub probability_spam: f64,
    pub predicted_label: u8,
}

/// Scores the given accounts with the stored model and writes scores.csv.
/// Every account must appear in users.jsonl and in the embedding and
/// centrality files written by featurize.
pub fn cmd_score(cfg: &PipelineConfig, ids: &[String]) -> Result<Vec<Score>, PipelineError> {
    let mf: ModelFile = serde_json::from_str(&read_text(&cfg.out(MODEL_FILE))?)
        .map_err(|e| PipelineError::Input(format!("{MODEL_FILE}: {e}")))?;
    let emb = EmbeddingMatrix::read(&cfg.out(EMBEDDINGS_FILE))?;
    if emb.dim() != mf.embedding_dim {
        return Err(PipelineError::Reference(format!(
            "embeddings have {} dimensions, model expects {}",
            emb.dim(),
            mf.embedding_dim
        )));
    }
    let cent = read_centralities_csv(&cfg.out(CENTRALITIES_FILE))?;
    let d = load_dataset(cfg)?;
    let by_id: HashMap<&str, &UserRecord> = d.users.iter().map(|u| (u.id.as_str(), u)).collect();
    let mut users = Vec::with_capacity(ids.len());
    for id in ids {
        let u = by_id
            .get(id.as_str())
            .ok_or_else(|| PipelineError::Reference(format!("unknown user {id}")))?;
        if emb.get(id).is_none() || !cent.ids.iter().any(|c| c == id) {
            return Err(PipelineError::Reference(format!("user {id} has no graph presence")));
        }
        users.push(*u);
    }
    let (meta, text) = per_user_features(&d, &users)?;
    let table = build_rows(&users, &cent, &meta, &text).map_err(|e| PipelineError::Reference(e.to_string()))?;
    let vectors = assemble(&table, &mf.standardizer, &emb).map_err(|e| PipelineError::Reference(e.to_string()))?;
    let mut out = String::from("id,probability_spam,predicted_label\n");
    let mut scores = Vec::with_capacity(ids.len());
    for (id, row) in ids.iter().zip(&vectors.rows) {
        let p = predict_gbdt(&mf.model, row)?;
        let label = (p >= 0.5) as u8;
        out.push_str(&format!("{id},{p:?},{label}\n"));
        scores.push(Score {
            id: id.clone(),
            probability_spam: p,
            predicted_label: label,
        });
    }
    ensure_out_dir(cfg)?;
    write_text(&cfg.out(SCORES_FILE), &out)?;
    Ok(scores)
}

/// Reads one account id per line; blank lines and `#` comments are skipped.
pub fn read_id_list(path: &Path) -> Result<Vec<String>, PipelineError> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
