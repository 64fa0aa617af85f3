use rayon::prelude::*;

use super::field::OffsetField;
use super::{CandidateSet, LevelSet, MatchMode, MatchResult, PMConfig, CARRY, NUM_CANDIDATES};
use crate::imagecore::{level_coord, sample_bilinear, BilinearTap, FeatureMap, ScalarMap};

/// Per-pixel scoring of all candidates.
struct PixelScores {
    scores: [f64; NUM_CANDIDATES],
    pairs: [(u8, u8); NUM_CANDIDATES],
}

/// Reusable sampling buffers for one worker.
struct Scratch {
    src: Vec<f64>,
    tgt: Vec<f64>,
    src_taps: Vec<BilinearTap>,
    tgt_taps: Vec<BilinearTap>,
}

impl Scratch {
    fn new(levels: &LevelSet<'_>) -> Self {
        let n = levels.levels().len();
        let d = levels.depth();
        let dummy = BilinearTap::new(1, 1, 0.0, 0.0);
        Self {
            src: vec![0.0; n * d],
            tgt: vec![0.0; n * d],
            src_taps: vec![dummy; n],
            tgt_taps: vec![dummy; n],
        }
    }
}

/// L1 distance, or `None` once the running sum exceeds `bound`. Four
/// interleaved partial sums keep the adds independent; every lane only
/// grows, so an abandoned sum could never have come in under `bound`.
#[inline]
fn l1_bounded(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += (x[l] - y[l]).abs();
        }
        if (acc[0] + acc[1]) + (acc[2] + acc[3]) > bound {
            return None;
        }
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        acc[0] += (x - y).abs();
    }
    let total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    (total <= bound).then_some(total)
}

/// Hints that `block` will be read soon.
#[inline]
fn prefetch(block: &[f64]) {
    #[cfg(target_arch = "x86_64")]
    for line in block.chunks(8) {
        // SAFETY: prefetching is a hint and never faults.
        unsafe { std::arch::x86_64::_mm_prefetch(line.as_ptr() as *const i8, std::arch::x86_64::_MM_HINT_T0) };
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = block;
}

/// Prefetches the target blocks of every candidate at `(i, j)`.
#[inline]
fn prefetch_pixel(cands: &CandidateSet, levels: &LevelSet<'_>, i: usize, j: usize) {
    let (h, w) = levels.dims();
    for field in cands.fields() {
        let off = field.get(i, j);
        let (tx, ty) = (j as f64 + off.0, i as f64 + off.1);
        if tx >= 0.0 && ty >= 0.0 && (tx as usize) < w && (ty as usize) < h {
            prefetch(levels.block(ty as usize, tx as usize));
        }
    }
}

/// Samples every level at base-grid position `(x, y)` into `buf`.
#[inline]
pub(super) fn sample_levels(levels: &LevelSet<'_>, x: f64, y: f64, buf: &mut [f64], taps: &mut [BilinearTap]) {
    let d = levels.depth();
    for (n, level) in levels.levels().iter().enumerate() {
        let (lx, ly) = if level.scale == 1.0 {
            (x, y)
        } else {
            (level_coord(x, level.scale), level_coord(y, level.scale))
        };
        taps[n] = sample_bilinear(level.map, lx, ly, &mut buf[n * d..(n + 1) * d]);
    }
}

/// Scores every candidate at `(i, j)`. With `prune` set, a candidate that
/// provably cannot become the strict argmax is abandoned early and left at
/// negative infinity; the winner, its score and its level pair are the
/// same as without pruning. `known` holds the carry candidate's score and
/// level pair when they are already known from the previous round.
#[allow(clippy::too_many_arguments)]
fn score_pixel(
    cands: &CandidateSet,
    levels: &LevelSet<'_>,
    cfg: &PMConfig,
    i: usize,
    j: usize,
    prune: bool,
    known: Option<(f64, (u8, u8))>,
    scratch: &mut Scratch,
) -> PixelScores {
    let (h, w) = levels.dims();
    let d = levels.depth();
    let nlev = levels.levels().len();
    let src = levels.block(i, j);
    let mut out = PixelScores {
        scores: [f64::NEG_INFINITY; NUM_CANDIDATES],
        pairs: [(0, 0); NUM_CANDIDATES],
    };
    let mut offs = [(0.0, 0.0); NUM_CANDIDATES];
    prefetch_pixel(cands, levels, i, j);
    // Smallest distance of any earlier candidate.
    let mut leader = f64::INFINITY;
    'cand: for (k, field) in cands.fields().iter().enumerate() {
        let off = field.get(i, j);
        offs[k] = off;
        if cfg.excluded(off) {
            continue;
        }
        if let (CARRY, Some((score, pair))) = (k, known) {
            out.scores[k] = score;
            out.pairs[k] = pair;
            leader = -score;
            continue;
        }
        // Propagation often repeats an offset; reuse its score.
        for e in 0..k {
            if offs[e] == off {
                out.scores[k] = out.scores[e];
                out.pairs[k] = out.pairs[e];
                continue 'cand;
            }
        }
        let (tx, ty) = (j as f64 + off.0, i as f64 + off.1);
        let tgt: &[f64] = if tx.fract() == 0.0 && ty.fract() == 0.0 && tx >= 0.0 && ty >= 0.0 && (tx as usize) < w && (ty as usize) < h {
            levels.block(ty as usize, tx as usize)
        } else {
            sample_levels(levels, tx, ty, &mut scratch.tgt, &mut scratch.tgt_taps);
            &scratch.tgt
        };
        let mut best = f64::INFINITY;
        let mut pair = (0u8, 0u8);
        for n in 0..nlev {
            let a = &src[n * d..(n + 1) * d];
            for m in 0..nlev {
                let bound = if prune { best.min(leader) } else { f64::INFINITY };
                if let Some(dist) = l1_bounded(a, &tgt[m * d..(m + 1) * d], bound) {
                    if dist < best {
                        best = dist;
                        pair = (n as u8, m as u8);
                    }
                }
            }
        }
        if best < f64::INFINITY {
            out.scores[k] = -best;
            out.pairs[k] = pair;
            leader = leader.min(best);
        }
    }
    out
}

/// Index of the best score; ties go to the lowest index.
#[inline]
fn argmax(scores: &[f64; NUM_CANDIDATES]) -> usize {
    let mut best = CARRY;
    for k in 1..NUM_CANDIDATES {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    best
}

/// Softmax weights of `beta * scores`; excluded candidates get weight 0.
#[inline]
fn softmax(scores: &[f64; NUM_CANDIDATES], beta: f64) -> Option<[f64; NUM_CANDIDATES]> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut w = [0.0; NUM_CANDIDATES];
    let mut total = 0.0;
    for k in 0..NUM_CANDIDATES {
        if scores[k] > f64::NEG_INFINITY {
            w[k] = (beta * (scores[k] - max)).exp();
            total += w[k];
        }
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    Some(w)
}

/// Scores all candidates and selects per pixel (round 0 temperature).
pub fn evaluate(cands: &CandidateSet, levels: &LevelSet<'_>, cfg: &PMConfig) -> MatchResult {
    evaluate_round(cands, levels, cfg, 0, None)
}

/// One round of evaluation. In hard mode, `previous` must be the result
/// whose offsets form the carry candidate; its scores are reused instead
/// of being recomputed.
pub(crate) fn evaluate_round(
    cands: &CandidateSet,
    levels: &LevelSet<'_>,
    cfg: &PMConfig,
    round: usize,
    previous: Option<&MatchResult>,
) -> MatchResult {
    let (h, w) = cands.dims();
    assert_eq!((h, w), levels.dims(), "candidates and features disagree in size");
    let beta = cfg.beta_at(round);
    let rows: Vec<Vec<((f64, f64), f64, u8, (u8, u8))>> = (0..h)
        .into_par_iter()
        .map_init(
            || Scratch::new(levels),
            |scratch, i| {
                (0..w)
                    .map(|j| {
                        let hard = cfg.mode == MatchMode::Hard;
                        let known = previous
                            .filter(|_| hard)
                            .map(|p| (p.scores.get(i, j), p.scale_pair[i * w + j]))
                            .filter(|(s, _)| s.is_finite());
                        let ps = score_pixel(cands, levels, cfg, i, j, hard, known, scratch);
                        let k = argmax(&ps.scores);
                        let offset = match cfg.mode {
                            MatchMode::Hard => cands.fields()[k].get(i, j),
                            MatchMode::Soft => match softmax(&ps.scores, beta) {
                                Some(wts) => {
                                    let mut acc = (0.0, 0.0);
                                    for (c, &wk) in wts.iter().enumerate() {
                                        if wk > 0.0 {
                                            let d = cands.fields()[c].get(i, j);
                                            acc.0 += wk * d.0;
                                            acc.1 += wk * d.1;
                                        }
                                    }
                                    acc
                                }
                                None => cands.fields()[CARRY].get(i, j),
                            },
                        };
                        (offset, ps.scores[k], k as u8, ps.pairs[k])
                    })
                    .collect()
            },
        )
        .collect();

    let mut offsets = OffsetField::zeros(h, w);
    let mut scores = Vec::with_capacity(h * w);
    let mut winner = Vec::with_capacity(h * w);
    let mut scale_pair = Vec::with_capacity(h * w);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, (off, s, k, pair)) in row.into_iter().enumerate() {
            offsets.set(i, j, off);
            scores.push(s);
            winner.push(k);
            scale_pair.push(pair);
        }
    }
    MatchResult {
        offsets,
        scores: ScalarMap::from_vec(h, w, scores).expect("shape preserved"),
        winner,
        scale_pair,
    }
}

/// Gradient of `sum_p upstream(p) . soft_offset(p)` with respect to every
/// feature entry of every level, for the soft evaluation at round-0
/// temperature. Candidates are treated as constants.
pub fn soft_backward(
    cands: &CandidateSet,
    levels: &LevelSet<'_>,
    cfg: &PMConfig,
    upstream: &OffsetField,
) -> Vec<FeatureMap> {
    let (h, w) = cands.dims();
    let d = levels.depth();
    let beta = cfg.beta_at(0);
    let mut grads: Vec<FeatureMap> = levels
        .levels()
        .iter()
        .map(|l| FeatureMap::zeros(l.map.height(), l.map.width(), d))
        .collect();
    let mut scratch = Scratch::new(levels);
    let mut sign = vec![0.0; d];
    for i in 0..h {
        for j in 0..w {
            let ps = score_pixel(cands, levels, cfg, i, j, false, None, &mut scratch);
            let Some(wts) = softmax(&ps.scores, beta) else { continue };
            let g = upstream.get(i, j);
            let proj: Vec<f64> = cands
                .fields()
                .iter()
                .map(|f| {
                    let o = f.get(i, j);
                    g.0 * o.0 + g.1 * o.1
                })
                .collect();
            let mean: f64 = wts.iter().zip(&proj).map(|(a, b)| a * b).sum();
            // Source samples are shared by all candidates of this pixel.
            sample_levels(levels, j as f64, i as f64, &mut scratch.src, &mut scratch.src_taps);
            let src_taps = scratch.src_taps.clone();
            let src = scratch.src.clone();
            for k in 0..NUM_CANDIDATES {
                if wts[k] == 0.0 {
                    continue;
                }
                let dl_ds = beta * wts[k] * (proj[k] - mean);
                let off = cands.fields()[k].get(i, j);
                sample_levels(levels, j as f64 + off.0, i as f64 + off.1, &mut scratch.tgt, &mut scratch.tgt_taps);
                let (n, m) = (ps.pairs[k].0 as usize, ps.pairs[k].1 as usize);
                for c in 0..d {
                    let diff = src[n * d + c] - scratch.tgt[m * d + c];
                    sign[c] = if diff > 0.0 {
                        1.0
                    } else if diff < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
                // S = -sum |src - tgt|: dS/dsrc = -sign, dS/dtgt = +sign.
                scatter(&mut grads[n], &src_taps[n], &sign, -dl_ds);
                let tgt_tap = scratch.tgt_taps[m];
                scatter(&mut grads[m], &tgt_tap, &sign, dl_ds);
            }
        }
    }
    grads
}

fn scatter(grad: &mut FeatureMap, tap: &BilinearTap, dir: &[f64], coef: f64) {
    let d = grad.depth();
    let data = grad.data_mut();
    for (&idx, &wt) in tap.indices.iter().zip(&tap.weights) {
        if wt == 0.0 {
            continue;
        }
        for c in 0..d {
            data[idx * d + c] += coef * wt * dir[c];
        }
    }
}
