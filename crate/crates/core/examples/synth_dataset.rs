//! Generate a small synthetic dataset and write the five input files.
//!
//! cargo run --example synth_dataset [out_dir]

use std::path::PathBuf;

use spamdetect::synth::{class_counts, generate, write_dataset, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spamdetect-synth"));
    std::fs::create_dir_all(&dir)?;

    let cfg = SynthConfig {
        n_genuine: 150,
        n_spam: 50,
        n_unlabeled: 10,
        ..Default::default()
    };
    let d = generate(&cfg)?;
    write_dataset(&d, &dir)?;

    let tweets: usize = d.tweets.values().map(Vec::len).sum();
    println!("{} users, {} tweets, {} follow edges", d.users.len(), tweets, d.edges.len());
    for (label, n) in class_counts(&d) {
        println!("label {label}: {n}");
    }
    let spam = d.users.iter().find(|u| u.label.map(|l| l.as_u8()) == Some(1)).unwrap();
    println!("sample spam account {} (@{}):", spam.user_name, spam.screen_name);
    for t in d.tweets[&spam.id].iter().take(3) {
        println!("  {t}");
    }
    println!("written to {}", dir.display());
    Ok(())
}
