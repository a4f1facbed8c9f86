//! All four stages end to end on a reduced dataset, the same path the CLI
//! takes: synth, featurize, select-train-eval, score.

use spamdetect::pipeline::{cmd_featurize, cmd_score, cmd_select_train_eval, cmd_synth, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("spamdetect-example");
    let mut cfg = PipelineConfig::default();
    cfg.paths.data_dir = root.join("data");
    cfg.paths.out_dir = root.join("out");
    std::fs::create_dir_all(&cfg.paths.data_dir)?;
    cfg.synth.n_genuine = 300;
    cfg.synth.n_spam = 100;
    cfg.synth.n_unlabeled = 20;
    cfg.node2vec.walks_per_node = 5;
    cfg.node2vec.epochs = 1;
    cfg.train.num_rounds = 50;
    cfg.grid.learning_rate = vec![0.1];
    cfg.grid.max_depth = vec![4];
    cfg.propagate();

    let d = cmd_synth(&cfg)?;
    println!("synth: {} users", d.users.len());
    let f = cmd_featurize(&cfg)?;
    println!("featurize: {} x {} features, {}-d embeddings", f.table.rows.len(), f.table.names.len(), f.embeddings.dim());
    let out = cmd_select_train_eval(&cfg)?;
    println!("selected {} features, vector length {}", out.model.selected.len(), out.metrics.vector_length);
    println!(
        "test average accuracy {:.4} (cv {:.4})",
        out.metrics.test.average_accuracy, out.metrics.cv_best_score
    );

    // unlabeled accounts are in the graph but not in labels.csv
    let labeled: std::collections::HashSet<&str> = f.table.ids.iter().map(String::as_str).collect();
    let ids: Vec<String> = d.users.iter().map(|u| u.id.clone()).filter(|id| !labeled.contains(id.as_str())).take(5).collect();
    for s in cmd_score(&cfg, &ids)? {
        println!("{} p(spam)={:.3} -> {}", s.id, s.probability_spam, s.predicted_label);
    }
    println!("artifacts in {}", cfg.paths.out_dir.display());
    Ok(())
}
