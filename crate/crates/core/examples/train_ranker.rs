//! Trains the source/target scorer on generated fixtures and reports how
//! often the rank sign picks the right side.
//!
//! cargo run --release --example train_ranker

use cmfd::pipeline::checks::training_sample;
use cmfd::ranking::{discrimination_accuracy, rank_map, score_map, train_scorer, ScorerParams, TrainConfig, FEATURE_DEPTH};
use cmfd::synthgen::{fixture_dirs, generate_set, FixtureKind};

fn main() -> cmfd::Result<()> {
    let root = std::env::temp_dir().join("cmfd_train_example");
    generate_set(&root, 12, 5, 192, 192, &[FixtureKind::Translation, FixtureKind::RotatedScaled])?;
    let mut samples = Vec::new();
    for dir in fixture_dirs(&root)? {
        samples.extend(training_sample(&dir)?);
    }
    let held_out = samples.split_off(8);
    let cfg = TrainConfig::default();
    let out = train_scorer(&samples, ScorerParams::zeros(FEATURE_DEPTH), &cfg)?;
    println!("loss {:.4} -> {:.4} over {} epochs", out.losses[0], out.losses.last().unwrap(), out.losses.len());
    for s in &held_out {
        let sr = rank_map(&score_map(&s.features, &out.params)?, &s.fused)?;
        println!("held-out accuracy {:.3}", discrimination_accuracy(&sr, &s.gt3)?);
    }
    let path = root.join("scorer.tensor");
    out.params.save(&path)?;
    println!("parameters saved to {}", path.display());
    Ok(())
}
