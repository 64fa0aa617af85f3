//! Source/target discrimination by pairwise ranking.
//!
//! Each copy-move pixel is scored with a linear-sigmoid model over local
//! cues of itself and of its matched partner. The sign of the difference
//! between the two scores decides which side of the pair is the clone.

use std::path::Path;

use rayon::prelude::*;

use crate::dlf::DlfErrorMaps;
use crate::error::{Error, Result};
use crate::imagecore::{read_tensor, sample_bilinear, sample_scalar, to_grayscale, write_tensor, BilinearTap, FeatureMap, Image, ScalarMap, Tensor};
use crate::losses::{discrimination_loss, make_weight};
use crate::morphology::distance_to_background;
use crate::patchmatch::OffsetField;
use crate::predictor::{binarize, BinMask, ProbMask};

/// Number of hand-crafted cues per pixel before concatenation.
pub const BASE_FEATURES: usize = 4;
/// Depth of [`build_features`] output: own cues followed by partner cues.
pub const FEATURE_DEPTH: usize = 2 * BASE_FEATURES;

/// The fused offset field used for ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedOffsets {
    pub field: OffsetField,
}

/// Takes the first field where the pixel and its first-field partner are
/// both inside the mask, and the second field elsewhere.
pub fn fuse_offsets(d1: &OffsetField, d2: &OffsetField, mb: &BinMask) -> Result<FusedOffsets> {
    if d1.dims() != d2.dims() || d1.dims() != mb.dims() {
        return Err(Error::ShapeMismatch("fusion inputs disagree in size".into()));
    }
    let (h, w) = d1.dims();
    let field = OffsetField::from_fn(h, w, |i, j| {
        let (ti, tj) = d1.nearest_target(i, j);
        if mb.get(i, j) && mb.get(ti, tj) {
            d1.get(i, j)
        } else {
            d2.get(i, j)
        }
    });
    Ok(FusedOffsets { field })
}

/// Samples `fd` at every pixel's matched location.
pub fn warp_features(fd: &FeatureMap, field: &OffsetField) -> Result<FeatureMap> {
    if (fd.height(), fd.width()) != field.dims() {
        return Err(Error::ShapeMismatch("feature map and field disagree in size".into()));
    }
    let (h, w, depth) = (fd.height(), fd.width(), fd.depth());
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = vec![0.0; w * depth];
            for j in 0..w {
                let (dx, dy) = field.get(i, j);
                sample_bilinear(fd, j as f64 + dx, i as f64 + dy, &mut out[j * depth..(j + 1) * depth]);
            }
            out
        })
        .collect();
    FeatureMap::from_vec(h, w, depth, data)
}

/// Luminance variance (5x5), squared Laplacian (3x3), `ln(1 + min DLF
/// residual)` and distance to the mask boundary, without gating.
pub fn base_features(img: &Image, dlf: &DlfErrorMaps, mb: &BinMask) -> Result<FeatureMap> {
    let (h, w) = (img.height(), img.width());
    if dlf.eps1.dims() != (h, w) || mb.dims() != (h, w) {
        return Err(Error::ShapeMismatch("feature inputs disagree in size".into()));
    }
    let luma = to_grayscale(img);
    let y = luma.data();
    let at = |i: isize, j: isize| {
        let i = i.clamp(0, h as isize - 1) as usize;
        let j = j.clamp(0, w as isize - 1) as usize;
        y[i * w + j]
    };
    let dmin = dlf.min_map();
    let dist = distance_to_background(mb.data(), h, w);
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row = Vec::with_capacity(w * BASE_FEATURES);
            for j in 0..w {
                let (lo_i, hi_i) = (i.saturating_sub(2), (i + 2).min(h - 1));
                let (lo_j, hi_j) = (j.saturating_sub(2), (j + 2).min(w - 1));
                let mut s = 0.0;
                let mut s2 = 0.0;
                for a in lo_i..=hi_i {
                    for b in lo_j..=hi_j {
                        s += y[a * w + b];
                        s2 += y[a * w + b] * y[a * w + b];
                    }
                }
                let n = ((hi_i - lo_i + 1) * (hi_j - lo_j + 1)) as f64;
                let mean = s / n;
                let var = (s2 / n - mean * mean).max(0.0);
                let (ii, jj) = (i as isize, j as isize);
                let lap = 4.0 * at(ii, jj) - at(ii - 1, jj) - at(ii + 1, jj) - at(ii, jj - 1) - at(ii, jj + 1);
                row.extend_from_slice(&[var, lap * lap, dmin.get(i, j).ln_1p(), dist[i * w + j]]);
            }
            row
        })
        .collect();
    FeatureMap::from_vec(h, w, BASE_FEATURES, data)
}

/// Own cues concatenated with partner cues under the fused field, gated by
/// the probability mask.
pub fn build_features(img: &Image, dlf: &DlfErrorMaps, d_f: &FusedOffsets, m: &ProbMask, threshold: f64) -> Result<FeatureMap> {
    let (h, w) = (img.height(), img.width());
    if m.dims() != (h, w) || d_f.field.dims() != (h, w) {
        return Err(Error::ShapeMismatch("feature inputs disagree in size".into()));
    }
    let base = base_features(img, dlf, &binarize(m, threshold))?;
    let warped = warp_features(&base, &d_f.field)?;
    let mut data = Vec::with_capacity(h * w * FEATURE_DEPTH);
    for i in 0..h {
        for j in 0..w {
            let g = m.get(i, j);
            data.extend(base.vector(i, j).iter().map(|v| v * g));
            data.extend(warped.vector(i, j).iter().map(|v| v * g));
        }
    }
    FeatureMap::from_vec(h, w, FEATURE_DEPTH, data)
}

/// Weights and bias of the linear-sigmoid scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ScorerParams {
    pub fn zeros(n: usize) -> Self {
        Self {
            weights: vec![0.0; n],
            bias: 0.0,
        }
    }

    /// Weights followed by the bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        let (bias, weights) = v
            .split_last()
            .ok_or_else(|| Error::InvalidArgument("scorer parameters need at least a bias".into()))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("scorer parameters".into()));
        }
        Ok(Self {
            weights: weights.to_vec(),
            bias: *bias,
        })
    }

    /// Rank-1 tensor `[weights..., bias]`.
    pub fn to_tensor(&self) -> Result<Tensor> {
        let flat = self.to_flat();
        Tensor::from_f64(vec![flat.len()], &flat)
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.dims.len() != 1 {
            return Err(Error::ShapeMismatch(format!("scorer tensor must be rank 1, got {:?}", t.dims)));
        }
        Self::from_flat(&t.to_f64())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_tensor(&self.to_tensor()?, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor(&read_tensor(path)?)
    }
}

impl Default for ScorerParams {
    /// Prefers the pixel whose interpolation-sensitive cues (variance and
    /// Laplacian energy) are higher than its partner's, since resampling a
    /// pasted copy smooths it.
    fn default() -> Self {
        Self {
            weights: vec![20.0, 200.0, 0.0, 0.0, -20.0, -200.0, 0.0, 0.0],
            bias: 0.0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_params(feats: &FeatureMap, p: &ScorerParams) -> Result<()> {
    if p.weights.len() != feats.depth() {
        return Err(Error::ShapeMismatch(format!(
            "{} scorer weights for {} feature channels",
            p.weights.len(),
            feats.depth()
        )));
    }
    Ok(())
}

/// Per-pixel `sigmoid(w . x + b)`.
pub fn score_map(feats: &FeatureMap, p: &ScorerParams) -> Result<ScalarMap> {
    check_params(feats, p)?;
    let data = feats
        .data()
        .par_chunks_exact(feats.depth())
        .map(|x| sigmoid(x.iter().zip(&p.weights).map(|(a, b)| a * b).sum::<f64>() + p.bias))
        .collect();
    ScalarMap::from_vec(feats.height(), feats.width(), data)
}

/// Gradient with respect to the scorer parameters of a loss whose gradient
/// with respect to the score map is `upstream`. `sf` is the forward output.
pub fn score_backward(feats: &FeatureMap, sf: &ScalarMap, upstream: &ScalarMap) -> ScorerParams {
    let depth = feats.depth();
    let mut g = ScorerParams::zeros(depth);
    for (k, x) in feats.data().chunks_exact(depth).enumerate() {
        let s = sf.data()[k];
        let dz = upstream.data()[k] * s * (1.0 - s);
        if dz == 0.0 {
            continue;
        }
        for (gw, xv) in g.weights.iter_mut().zip(x) {
            *gw += dz * xv;
        }
        g.bias += dz;
    }
    g
}

/// `S_rank(p) = S_f(p) - S_f(p + delta_f(p))`, with bilinear lookup.
pub fn rank_map(sf: &ScalarMap, d_f: &FusedOffsets) -> Result<ScalarMap> {
    if sf.dims() != d_f.field.dims() {
        return Err(Error::ShapeMismatch("score map and field disagree in size".into()));
    }
    let (h, w) = sf.dims();
    Ok(ScalarMap::from_fn(h, w, |i, j| {
        let (dx, dy) = d_f.field.get(i, j);
        sf.get(i, j) - sample_scalar(sf, j as f64 + dx, i as f64 + dy)
    }))
}

/// Gradient with respect to the score map of a loss whose gradient with
/// respect to the rank map is `upstream`.
pub fn rank_backward(d_f: &FusedOffsets, upstream: &ScalarMap) -> ScalarMap {
    let (h, w) = d_f.field.dims();
    let mut g = upstream.clone();
    for i in 0..h {
        for j in 0..w {
            let u = upstream.get(i, j);
            if u == 0.0 {
                continue;
            }
            let (dx, dy) = d_f.field.get(i, j);
            let tap = BilinearTap::new(h, w, j as f64 + dx, i as f64 + dy);
            for (&idx, &wt) in tap.indices.iter().zip(&tap.weights) {
                g.data_mut()[idx] -= u * wt;
            }
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Background,
    Source,
    Target,
}

impl Label {
    /// Render color: background blue, source green, target red.
    pub fn color(self) -> [f64; 3] {
        match self {
            Label::Background => [0.0, 0.0, 1.0],
            Label::Source => [0.0, 1.0, 0.0],
            Label::Target => [1.0, 0.0, 0.0],
        }
    }

    /// Classifies a rendered color by its dominant channel.
    pub fn from_color(rgb: [f64; 3]) -> Label {
        if rgb[1] > rgb[0] && rgb[1] > rgb[2] {
            Label::Source
        } else if rgb[0] > rgb[1] && rgb[0] > rgb[2] {
            Label::Target
        } else {
            Label::Background
        }
    }
}

/// One label per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeChannelMask {
    height: usize,
    width: usize,
    labels: Vec<Label>,
}

impl ThreeChannelMask {
    pub fn from_labels(height: usize, width: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::ShapeMismatch(format!("{} labels for {height}x{width}", labels.len())));
        }
        Ok(Self { height, width, labels })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Label) -> Self {
        let labels = (0..height * width).map(|k| f(k / width, k % width)).collect();
        Self { height, width, labels }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[i * self.width + j]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Pixels labeled `label`.
    pub fn channel(&self, label: Label) -> BinMask {
        BinMask::from_fn(self.height, self.width, |i, j| self.label(i, j) == label)
    }

    /// Source or target pixels.
    pub fn foreground(&self) -> BinMask {
        BinMask::from_fn(self.height, self.width, |i, j| self.label(i, j) != Label::Background)
    }

    pub fn to_image(&self) -> Image {
        let data = self.labels.iter().flat_map(|l| l.color()).collect();
        Image::from_vec(self.height, self.width, 3, data).expect("three channels per label")
    }

    pub fn from_image(img: &Image) -> Self {
        let rgb = img.to_rgb();
        Self::from_fn(rgb.height(), rgb.width(), |i, j| {
            let p = rgb.pixel(i, j);
            Label::from_color([p[0], p[1], p[2]])
        })
    }
}

/// Background outside the mask; inside, source where the rank is positive
/// and target otherwise (a zero rank counts as target).
pub fn three_channel(sr: &ScalarMap, mb: &BinMask) -> Result<ThreeChannelMask> {
    if sr.dims() != mb.dims() {
        return Err(Error::ShapeMismatch("rank map and mask disagree in size".into()));
    }
    let (h, w) = sr.dims();
    Ok(ThreeChannelMask::from_fn(h, w, |i, j| {
        if !mb.get(i, j) {
            Label::Background
        } else if sr.get(i, j) > 0.0 {
            Label::Source
        } else {
            Label::Target
        }
    }))
}

/// Fraction of ground-truth copy-move pixels whose predicted side matches.
pub fn discrimination_accuracy(sr: &ScalarMap, gt3: &ThreeChannelMask) -> Result<f64> {
    let fg = gt3.foreground();
    let pred = three_channel(sr, &fg)?;
    let total = fg.count();
    if total == 0 {
        return Ok(1.0);
    }
    let hits = pred.labels().iter().zip(gt3.labels()).filter(|(p, g)| **g != Label::Background && p == g).count();
    Ok(hits as f64 / total as f64)
}

/// One labeled training instance.
#[derive(Clone, Debug)]
pub struct TrainingSample {
    pub features: FeatureMap,
    pub fused: FusedOffsets,
    pub gt3: ThreeChannelMask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub tau: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 200,
            tau: crate::losses::DEFAULT_TAU,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    /// Objective before each update, one entry per epoch.
    pub losses: Vec<f64>,
}

/// Discrimination loss of a whole batch, normalized by the number of
/// ground-truth copy-move pixels, with its parameter gradient.
pub fn batch_objective(samples: &[TrainingSample], p: &ScorerParams, tau: f64) -> Result<(f64, ScorerParams)> {
    let parts: Vec<(f64, ScorerParams, usize)> = samples
        .par_iter()
        .map(|s| {
            let sf = score_map(&s.features, p)?;
            let sr = rank_map(&sf, &s.fused)?;
            let gt = s.gt3.foreground();
            let l = discrimination_loss(&sr, &make_weight(&s.gt3), &gt, tau)?;
            let g_sf = rank_backward(&s.fused, &l.grad);
            Ok((l.value, score_backward(&s.features, &sf, &g_sf), gt.count()))
        })
        .collect::<Result<_>>()?;
    let pixels: usize = parts.iter().map(|p| p.2).sum::<usize>().max(1);
    let norm = 1.0 / pixels as f64;
    let mut grad = ScorerParams::zeros(p.weights.len());
    let mut loss = 0.0;
    for (l, g, _) in &parts {
        loss += l * norm;
        for (a, b) in grad.weights.iter_mut().zip(&g.weights) {
            *a += b * norm;
        }
        grad.bias += g.bias * norm;
    }
    Ok((loss, grad))
}

/// Plain gradient descent with a fixed step on the batch objective.
pub fn train_scorer(samples: &[TrainingSample], init: ScorerParams, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !(cfg.learning_rate >= 0.0) {
        return Err(Error::InvalidArgument("learning rate must be non-negative".into()));
    }
    let mut params = init;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, grad) = batch_objective(samples, &params, cfg.tau)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        losses.push(loss);
        if cfg.learning_rate == 0.0 {
            continue;
        }
        for (w, g) in params.weights.iter_mut().zip(&grad.weights) {
            *w -= cfg.learning_rate * g;
        }
        params.bias -= cfg.learning_rate * grad.bias;
        if params.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
    }
    Ok(TrainOutcome { params, losses })
}
