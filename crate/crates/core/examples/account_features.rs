//! Profile and tweet features for a few synthetic accounts.

use spamdetect::metadata::MetadataFeatures;
use spamdetect::synth::{generate, SynthConfig};
use spamdetect::text::TextFeatures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = generate(&SynthConfig {
        n_genuine: 30,
        n_spam: 10,
        n_unlabeled: 0,
        ..Default::default()
    })?;

    for label in [0, 1] {
        let u = d.users.iter().find(|u| u.label.map(|l| l.as_u8()) == Some(label)).unwrap();
        let meta = MetadataFeatures::extract(u, d.snapshot_date)?;
        let text = TextFeatures::extract(&d.tweets[&u.id], &d.lexicon);
        println!("{} label={label} name={:?} screen={:?}", u.id, u.user_name, u.screen_name);
        println!("  {meta:?}");
        println!("  {text:?}");
    }
    Ok(())
}
