//! Randomized gradient checks and fixture-to-training-sample conversion.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dlf::DlfErrorMaps;
use crate::error::{Error, Result};
use crate::imagecore::{load_image, FeatureMap, ScalarMap};
use crate::losses::{dice_raw, discrimination_loss, grad_check, make_weight, DEFAULT_TAU};
use crate::patchmatch::{evaluate, soft_backward, CandidateSet, Level, LevelSet, MatchMode, OffsetField, PMConfig, NUM_CANDIDATES};
use crate::predictor::{BinMask, ProbMask};
use crate::ranking::{batch_objective, build_features, FusedOffsets, Label, ScorerParams, ThreeChannelMask, TrainingSample};
use crate::synthgen::{read_three_channel, FixtureRecord};

/// Worst relative error of each analytic gradient over all random points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub points: usize,
    pub soft_evaluate: f64,
    pub dice: f64,
    pub discrimination: f64,
    pub scorer: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.soft_evaluate.max(self.dice).max(self.discrimination).max(self.scorer)
    }
}

const STEP: f64 = 1e-6;
const MAX_REDRAWS: usize = 50;

/// True when central differences at `h` and `h / 2` agree on every
/// coordinate, i.e. no kink of a piecewise-smooth `f` lies within `h` of `x`.
/// Says nothing about the analytic gradient.
fn smooth_at<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(f: &mut F, x: &[f64], h: f64) -> bool {
    let mut probe = x.to_vec();
    let mut fd = |probe: &mut Vec<f64>, k: usize, h: f64| {
        probe[k] = x[k] + h;
        let plus = f(probe).0;
        probe[k] = x[k] - h;
        let minus = f(probe).0;
        probe[k] = x[k];
        (plus - minus) / (2.0 * h)
    };
    (0..x.len()).all(|k| {
        let (a, b) = (fd(&mut probe, k, h), fd(&mut probe, k, h / 2.0));
        (a - b).abs() <= 1e-3 * a.abs().max(b.abs()).max(1e-8)
    })
}

/// Soft evaluation on an 8x8 two-level instance, differentiated with
/// respect to every feature entry. The upstream gradient is kept small so
/// rounding in the forward sum stays well below the checker's 1e-8 floor.
/// The layer has kinks (L1 terms, best level pair), so a point whose
/// stencil straddles one is redrawn.
pub fn check_soft_evaluate(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, d) = (8, 8, 3);
    let (h2, w2) = (6, 6);
    let cfg = PMConfig {
        beta: 1.0,
        exclusion_radius: 2,
        mode: MatchMode::Soft,
        ..PMConfig::default()
    };
    let cands = CandidateSet::new(
        (0..NUM_CANDIDATES)
            .map(|_| OffsetField::from_fn(h, w, |_, _| (rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0))))
            .collect(),
    )?;
    let upstream = OffsetField::from_fn(h, w, |_, _| (rng.gen_range(-1e-5..1e-5), rng.gen_range(-1e-5..1e-5)));
    let n1 = h * w * d;
    let mut f = |x: &[f64]| {
        let a = FeatureMap::from_vec(h, w, d, x[..n1].to_vec()).expect("sizes fixed");
        let b = FeatureMap::from_vec(h2, w2, d, x[n1..].to_vec()).expect("sizes fixed");
        let levels = LevelSet::new(vec![Level { map: &a, scale: 1.0 }, Level { map: &b, scale: 0.75 }]).expect("valid levels");
        let res = evaluate(&cands, &levels, &cfg);
        let mut value = 0.0;
        for i in 0..h {
            for j in 0..w {
                let (ox, oy) = res.offsets.get(i, j);
                let (ux, uy) = upstream.get(i, j);
                value += ux * ox + uy * oy;
            }
        }
        let grads = soft_backward(&cands, &levels, &cfg, &upstream);
        let flat: Vec<f64> = grads.iter().flat_map(|g| g.data().iter().copied()).collect();
        (value, flat)
    };
    for _ in 0..MAX_REDRAWS {
        let x: Vec<f64> = (0..n1 + h2 * w2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if smooth_at(&mut f, &x, STEP) {
            return grad_check(f, &x, STEP);
        }
    }
    Err(Error::NonFinite("no smooth point found for the soft evaluation check".into()))
}

fn random_gt(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ThreeChannelMask {
    ThreeChannelMask::from_fn(h, w, |_, _| match rng.gen_range(0..3) {
        0 => Label::Background,
        1 => Label::Source,
        _ => Label::Target,
    })
}

pub fn check_dice(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (8, 8);
    let gt = BinMask::from_fn(h, w, |_, _| rng.gen_bool(0.4));
    let x: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..1.0)).collect();
    grad_check(
        |x| {
            let l = dice_raw(&ScalarMap::from_vec(h, w, x.to_vec()).expect("sizes fixed"), &gt).expect("sizes fixed");
            (l.value, l.grad.into_data())
        },
        &x,
        STEP,
    )
}

pub fn check_discrimination(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (8, 8);
    let gt3 = random_gt(&mut rng, h, w);
    let wm = make_weight(&gt3);
    let gt = gt3.foreground();
    let x: Vec<f64> = (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
    grad_check(
        |x| {
            let sr = ScalarMap::from_vec(h, w, x.to_vec()).expect("sizes fixed");
            let l = discrimination_loss(&sr, &wm, &gt, DEFAULT_TAU).expect("sizes fixed");
            (l.value, l.grad.into_data())
        },
        &x,
        STEP,
    )
}

/// Discrimination loss through rank and score maps, differentiated with
/// respect to the scorer parameters.
pub fn check_scorer(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, d) = (8, 8, 4);
    let features = FeatureMap::from_vec(h, w, d, (0..h * w * d).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let fused = FusedOffsets {
        field: OffsetField::from_fn_clamped(h, w, |_, _| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))),
    };
    let sample = TrainingSample {
        features,
        fused,
        gt3: random_gt(&mut rng, h, w),
    };
    let x: Vec<f64> = (0..=d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let samples = [sample];
    grad_check(
        |x| {
            let p = ScorerParams::from_flat(x).expect("finite");
            let (v, g) = batch_objective(&samples, &p, DEFAULT_TAU).expect("sizes fixed");
            (v, g.to_flat())
        },
        &x,
        STEP,
    )
}

/// Runs every check at `points` random points.
pub fn run_grad_checks(points: usize, seed: u64) -> Result<GradCheckReport> {
    let mut r = GradCheckReport {
        points,
        soft_evaluate: 0.0,
        dice: 0.0,
        discrimination: 0.0,
        scorer: 0.0,
    };
    for k in 0..points as u64 {
        let s = seed.wrapping_mul(7919).wrapping_add(k);
        r.soft_evaluate = r.soft_evaluate.max(check_soft_evaluate(s)?);
        r.dice = r.dice.max(check_dice(s)?);
        r.discrimination = r.discrimination.max(check_discrimination(s)?);
        r.scorer = r.scorer.max(check_scorer(s)?);
    }
    Ok(r)
}

/// Builds scorer training data from a fixture folder using its exact
/// ground-truth correspondences in place of detected ones.
pub fn training_sample(dir: &Path) -> Result<Option<TrainingSample>> {
    let record: FixtureRecord = serde_json::from_str(&std::fs::read_to_string(dir.join("spec.json"))?)?;
    let Some(spec) = record.forgery else {
        return Ok(None);
    };
    let img = load_image(dir.join("image.png"))?;
    let gt3 = read_three_channel(&dir.join("mc_gt.png"))?;
    let (h, w) = gt3.dims();
    if (img.height(), img.width()) != (h, w) {
        return Err(Error::ShapeMismatch(format!("fixture {} has mismatched files", dir.display())));
    }
    let field = OffsetField::from_fn_clamped(h, w, |i, j| {
        let p = (j as f64, i as f64);
        let q = match gt3.label(i, j) {
            Label::Source => spec.forward(p),
            Label::Target => spec.inverse(p),
            Label::Background => p,
        };
        (q.0 - p.0, q.1 - p.1)
    });
    let fused = FusedOffsets { field };
    let zero = ScalarMap::filled(h, w, 0.0);
    let dlf = DlfErrorMaps {
        eps1: zero.clone(),
        eps2: zero.clone(),
        eps3: zero,
    };
    let m = ProbMask::new(gt3.foreground().to_scalar())?;
    let features = build_features(&img, &dlf, &fused, &m, 0.5)?;
    Ok(Some(TrainingSample { features, fused, gt3 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_at_a_few_points() {
        let r = run_grad_checks(3, 11).unwrap();
        assert!(r.worst() <= 1e-4, "{r:?}");
    }
}
