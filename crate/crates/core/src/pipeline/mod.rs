//! End-to-end detection, evaluation, fixture generation and training.

pub mod checks;
mod config;
mod detect;
pub mod metrics;

use std::path::Path;

pub use config::PipelineConfig;
pub use detect::{collect_images, detect_batch, detect_image, detect_in_memory, image_name, Detection, DetectionReport, OutputPaths, StageTiming};
pub use metrics::{evaluate_dirs, EvaluationSummary, Prf};

use crate::error::{Error, Result};
use crate::ranking::{train_scorer, ScorerParams, TrainConfig, TrainOutcome, FEATURE_DEPTH};
use crate::synthgen::{fixture_dirs, generate_set, FixtureKind, FixtureRecord};

/// Runs `f` on a pool of `threads` workers, or on the global pool when
/// `threads` is 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Writes `count` fixtures cycling through every family.
pub fn gen_fixtures(out: &Path, count: usize, seed: u64, height: usize, width: usize) -> Result<Vec<FixtureRecord>> {
    generate_set(out, count, seed, height, width, &FixtureKind::ALL)
}

/// Trains the scorer on every forged fixture listed under `root`.
pub fn train_on_fixtures(root: &Path, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut samples = Vec::new();
    for dir in fixture_dirs(root)? {
        if let Some(s) = checks::training_sample(&dir)? {
            samples.push(s);
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!("no forged fixtures under {}", root.display())));
    }
    train_scorer(&samples, ScorerParams::zeros(FEATURE_DEPTH), cfg)
}
