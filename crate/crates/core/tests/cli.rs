//! End-to-end runs of the command-line tool on small synthetic datasets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spamdetect::select::PAPER_FEATURES;

const SMALL: &str = r#"
seed = 11
paper_faithful_features = true
[paths]
data_dir = "data"
out_dir = "out"
[synth]
n_genuine = 150
n_spam = 60
n_unlabeled = 10
tweets_per_user = [5, 12]
spam_community_count = 3
[node2vec]
dimensions = 16
walk_length = 10
walks_per_node = 4
window = 4
epochs = 2
[train]
num_rounds = 30
[grid]
learning_rate = [0.1, 0.3]
max_depth = [3]
folds = 3
"#;

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        fs::create_dir(root.join("data")).unwrap();
        fs::write(root.join("config.toml"), config).unwrap();
        Workspace { _dir: dir, root }
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_spamdetect"))
            .arg("--config")
            .arg(self.root.join("config.toml"))
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap()
    }

    fn full_run(&self) {
        self.ok(&["synth"]);
        self.ok(&["featurize"]);
        self.ok(&["select-train-eval"]);
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_pipeline_and_scoring() {
    let ws = Workspace::new(SMALL);
    ws.full_run();

    let features = ws.read("out/features.csv");
    assert_eq!(features.lines().count() - 1, 210);

    let metrics = json(&ws.path("out/metrics.json"));
    for key in ["recall_class0", "recall_class1", "average_accuracy", "macro_f1"] {
        assert!(metrics[key].is_f64(), "{key}");
    }
    assert_eq!(metrics["vector_length"], 16 + 16);

    let selection = json(&ws.path("out/selection.json"));
    let selected: Vec<&str> = selection["selected"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(selected, PAPER_FEATURES);

    let vectors = ws.read("out/vectors.csv");
    let header: Vec<&str> = vectors.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 16 + 16 + 1);
    assert_eq!((header[1], header[17], header[33]), ("f1", "v1", "label"));

    // scoring the held-out users reproduces the reported confusion matrix
    let split = ws.read("out/split.csv");
    let test_ids: Vec<&str> = split.lines().skip(1).filter(|l| l.ends_with(",test")).map(|l| l.split(',').next().unwrap()).collect();
    fs::write(ws.path("ids.txt"), test_ids.join("\n")).unwrap();
    ws.ok(&["score", "--users", ws.path("ids.txt").to_str().unwrap()]);
    let labels: std::collections::HashMap<String, u8> = ws
        .read("data/labels.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let (id, y) = l.split_once(',').unwrap();
            (id.to_string(), y.parse().unwrap())
        })
        .collect();
    let mut confusion = [[0u64; 2]; 2];
    let scores = ws.read("out/scores.csv");
    assert_eq!(scores.lines().next(), Some("id,probability_spam,predicted_label"));
    for line in scores.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let p: f64 = f[1].parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
        let pred: usize = f[2].parse().unwrap();
        confusion[labels[f[0]] as usize][pred] += 1;
    }
    let reported: Vec<Vec<u64>> = serde_json::from_value(metrics["confusion"].clone()).unwrap();
    assert_eq!(reported, vec![confusion[0].to_vec(), confusion[1].to_vec()]);

    // unlabeled accounts can be scored too; unknown ones cannot
    let users = ws.read("data/users.jsonl");
    let unlabeled = users
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .find(|id| !labels.contains_key(id))
        .unwrap();
    fs::write(ws.path("ids.txt"), &unlabeled).unwrap();
    ws.ok(&["score", "--users", ws.path("ids.txt").to_str().unwrap()]);
    fs::write(ws.path("ids.txt"), "nobody\n").unwrap();
    let o = ws.run(&["score", "--users", ws.path("ids.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn reruns_are_byte_identical() {
    let a = Workspace::new(SMALL);
    let b = Workspace::new(SMALL);
    a.full_run();
    b.full_run();
    a.ok(&["featurize"]);
    for f in [
        "data/users.jsonl",
        "data/tweets.jsonl",
        "data/edges.tsv",
        "data/labels.csv",
        "data/lexicon.txt",
        "out/features.csv",
        "out/centralities.csv",
        "out/embeddings.txt",
        "out/selection.json",
        "out/vectors.csv",
        "out/split.csv",
        "out/model.json",
        "out/metrics.json",
    ] {
        assert_eq!(fs::read(a.path(f)).unwrap(), fs::read(b.path(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_data_directory_is_a_config_error() {
    let ws = Workspace::new(SMALL);
    fs::remove_dir(ws.path("data")).unwrap();
    let o = ws.run(&["synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn corrupt_edges_report_the_line() {
    let ws = Workspace::new(SMALL);
    ws.ok(&["synth"]);
    let mut edges = ws.read("data/edges.tsv");
    edges.push_str("lonely\n");
    fs::write(ws.path("data/edges.tsv"), edges.clone()).unwrap();
    let o = ws.run(&["featurize"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("line {}", edges.lines().count())), "{err}");
}

#[test]
fn single_class_labels_exit_4() {
    let ws = Workspace::new(SMALL);
    ws.ok(&["synth"]);
    let labels = ws.read("data/labels.csv").replace(",1\n", ",0\n");
    fs::write(ws.path("data/labels.csv"), labels).unwrap();
    ws.ok(&["featurize"]);
    assert_eq!(ws.run(&["select-train-eval"]).status.code(), Some(4));
}

#[test]
fn paper_mode_and_seed_flags() {
    let ws = Workspace::new(SMALL);
    ws.ok(&["--seed", "3", "synth"]);
    ws.ok(&["--seed", "3", "featurize"]);
    ws.ok(&["--seed", "3", "--paper-mode", "select-train-eval"]);
    let model = json(&ws.path("out/model.json"));
    assert_eq!(model["config"]["max_depth"], 15);
    assert_eq!(model["config"]["seed"], 3);
}
