mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cmfd::imagecore::{FeatureMap, ScalarMap};
use cmfd::losses::{dice_loss, discrimination_loss, fused_loss, grad_check, make_weight, DEFAULT_TAU};
use cmfd::patchmatch::OffsetField;
use cmfd::predictor::{BinMask, ProbMask};
use cmfd::ranking::{
    discrimination_accuracy, rank_backward, rank_map, score_backward, score_map, three_channel, train_scorer, FusedOffsets, Label, ScorerParams,
    ThreeChannelMask, TrainConfig,
};

use common::separable_sample;

#[test]
fn scorer_generalizes_on_separable_cues() {
    let train: Vec<_> = (0..6).map(separable_sample).collect();
    let held_out: Vec<_> = (100..104).map(separable_sample).collect();
    let cfg = TrainConfig { epochs: 150, ..TrainConfig::default() };
    let out = train_scorer(&train, ScorerParams::zeros(4), &cfg).unwrap();
    assert!(out.losses.last() < out.losses.first());
    for s in &held_out {
        let sr = rank_map(&score_map(&s.features, &out.params).unwrap(), &s.fused).unwrap();
        let acc = discrimination_accuracy(&sr, &s.gt3).unwrap();
        assert!(acc >= 0.9, "held-out accuracy {acc}");
    }
}

#[test]
fn satisfied_margins_cost_nothing() {
    let gt3 = ThreeChannelMask::from_fn(4, 4, |i, _| match i {
        0 => Label::Source,
        1 => Label::Target,
        _ => Label::Background,
    });
    let sr = ScalarMap::from_fn(4, 4, |i, j| match i {
        0 => 0.05 + j as f64,
        1 => -0.05 - j as f64,
        _ => 7.0 * (j as f64 - 1.5),
    });
    let l = discrimination_loss(&sr, &make_weight(&gt3), &gt3.foreground(), DEFAULT_TAU).unwrap();
    assert_eq!(l.value, 0.0);
    assert!(l.grad.data().iter().all(|g| *g == 0.0));
    // One violated source pixel costs exactly its shortfall.
    let mut bad = sr.clone();
    bad.set(0, 2, -0.25);
    let l = discrimination_loss(&bad, &make_weight(&gt3), &gt3.foreground(), DEFAULT_TAU).unwrap();
    assert!((l.value - 0.30).abs() < 1e-15);
}

#[test]
fn positive_rank_means_source() {
    let sr = ScalarMap::from_vec(1, 5, vec![2.0, 1e-9, 0.0, -1e-9, -3.0]).unwrap();
    let mb = BinMask::from_vec(1, 5, vec![true, true, true, true, false]).unwrap();
    let m = three_channel(&sr, &mb).unwrap();
    assert_eq!(m.labels(), &[Label::Source, Label::Source, Label::Target, Label::Target, Label::Background]);
}

#[test]
fn dice_identities_and_fused_sum() {
    let gt = BinMask::from_fn(16, 16, |i, j| (i * j) % 5 == 1);
    let same = ProbMask::new(gt.to_scalar()).unwrap();
    let flipped = ProbMask::new(gt.to_scalar().map(|v| 1.0 - v)).unwrap();
    assert!(dice_loss(&same, &gt).unwrap().value <= 1e-5);
    assert!(dice_loss(&flipped, &gt).unwrap().value >= 1.0 - 1e-5);
    assert_eq!(fused_loss(0.25, 0.5, 0.125), 0.875);
}

#[test]
fn rank_and_score_gradients_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (h, w) = (9, 7);
    let fused = FusedOffsets {
        field: OffsetField::from_fn_clamped(h, w, |_, _| (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0))),
    };
    let up = ScalarMap::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0));
    let x: Vec<f64> = (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let err = grad_check(
        |x| {
            let sf = ScalarMap::from_vec(h, w, x.to_vec()).unwrap();
            let sr = rank_map(&sf, &fused).unwrap();
            let v = sr.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
            (v, rank_backward(&fused, &up).into_data())
        },
        &x,
        1e-6,
    )
    .unwrap();
    assert!(err <= 1e-6, "rank {err}");

    let feats = FeatureMap::from_vec(h, w, 3, (0..h * w * 3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let p0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let err = grad_check(
        |p| {
            let params = ScorerParams::from_flat(p).unwrap();
            let sf = score_map(&feats, &params).unwrap();
            let v = sf.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
            (v, score_backward(&feats, &sf, &up).to_flat())
        },
        &p0,
        1e-6,
    )
    .unwrap();
    assert!(err <= 1e-6, "score {err}");
}
