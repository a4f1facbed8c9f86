//! Grid search with stratified cross-validation, then a held-out evaluation.

use spamdetect::models::{evaluate, grid_search_cv, predict_gbdt, stratified_holdout, train_gbdt, Grid, TrainConfig};
use spamdetect::pipeline::feature_table;
use spamdetect::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = generate(&SynthConfig {
        n_genuine: 300,
        n_spam: 100,
        n_unlabeled: 0,
        ..Default::default()
    })?;
    let (table, _, _) = feature_table(&d)?;
    let y = table.labels.clone().unwrap();
    let (train_idx, test_idx) = stratified_holdout(&y, 0.2, 1)?;
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (idx.iter().map(|&i| table.rows[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (xtr, ytr) = pick(&train_idx);
    let (xte, yte) = pick(&test_idx);

    let grid = Grid {
        learning_rate: vec![0.1, 0.3],
        max_depth: vec![2, 4],
        folds: 5,
    };
    let base = TrainConfig { num_rounds: 50, ..Default::default() };
    let cv = grid_search_cv(&xtr, &ytr, &grid, &base, 1)?;
    for c in &cv.cells {
        println!("lr {:<4} depth {}  mean {:.4}", c.learning_rate, c.max_depth, c.mean_average_accuracy);
    }
    println!("best: lr {} depth {}", cv.best.learning_rate, cv.best.max_depth);

    let model = train_gbdt(&xtr, &ytr, &cv.best)?;
    let pred = xte
        .iter()
        .map(|r| predict_gbdt(&model, r).map(|p| (p >= 0.5) as u8))
        .collect::<Result<Vec<_>, _>>()?;
    let r = evaluate(&yte, &pred)?;
    println!("test: confusion {:?}", r.confusion);
    println!(
        "recall genuine {:.4}, recall spam {:.4}, average {:.4}, macro F1 {:.4}",
        r.recall_class0, r.recall_class1, r.average_accuracy, r.macro_f1
    );
    Ok(())
}
