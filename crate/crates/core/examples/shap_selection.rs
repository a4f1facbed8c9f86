//! Train a boosted model on raw features, then pick features by mean |SHAP|
//! and by label correlation.

use spamdetect::models::{train_gbdt, TrainConfig};
use spamdetect::pipeline::feature_table;
use spamdetect::select::{select_features, tree_shap};
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
    let model = train_gbdt(&table.rows, &y, &TrainConfig { num_rounds: 50, max_depth: 4, ..Default::default() })?;

    let phi = tree_shap(&model, &table.rows[0])?;
    let mut top: Vec<(usize, f64)> = phi.iter().copied().enumerate().collect();
    top.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("largest contributions for {} (label {}):", table.ids[0], y[0]);
    for (j, v) in top.iter().take(5) {
        println!("  {:<28} {v:+.4}", table.names[*j]);
    }

    let report = select_features(&model, &table, 15, 0.1, false)?;
    println!("\n{:<28} {:>10} {:>8}", "feature", "mean|shap|", "r");
    for name in &report.shap_set {
        let s = &report.features[name];
        println!("{name:<28} {:10.4} {:+8.3}", s.mean_abs_shap, s.pearson_r);
    }
    println!("\ncorrelation set: {}", report.correlation_set.len());
    println!("intersection ({}): {:?}", report.intersection.len(), report.intersection);
    Ok(())
}
