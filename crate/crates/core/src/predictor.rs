//! Deterministic copy-move mask prediction from DLF residuals and offsets.
//!
//! The evidence at a pixel is the smallest affine-fit residual over every
//! window that covers it, across both offset fields and all window sizes.
//! A field only contributes where its match is forward-backward consistent.
//! Evidence is mapped through a decreasing sigmoid, and small regions and
//! small holes are cleaned up afterwards.

use rayon::prelude::*;

use crate::dlf::{DlfErrorMaps, DLF_SIZES};
use crate::error::{Error, Result};
use crate::imagecore::ScalarMap;
use crate::morphology::{min_filter, remove_small_regions, small_holes};
use crate::patchmatch::{MatchResult, OffsetField};

/// Per-pixel probability mask with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMask(ScalarMap);

impl ProbMask {
    pub fn new(map: ScalarMap) -> Result<Self> {
        if map.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("probability mask values must lie in [0, 1]".into()));
        }
        Ok(Self(map))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(ScalarMap::filled(height, width, 0.0))
    }

    pub fn map(&self) -> &ScalarMap {
        &self.0
    }

    pub fn into_map(self) -> ScalarMap {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }
}

/// Binary mask stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinMask {
    pub fn from_vec(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} mask values for a {height}x{width} mask",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let data = (0..height * width).map(|k| f(k / width, k % width)).collect();
        Self { height, width, data }
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.width + j] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// 0.0 / 1.0 values, for losses and PNG output.
    pub fn to_scalar(&self) -> ScalarMap {
        ScalarMap::from_vec(self.height, self.width, self.data.iter().map(|&v| f64::from(u8::from(v))).collect())
            .expect("shape preserved")
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PredictorConfig {
    /// Residual at which the probability crosses 0.5.
    pub error_scale: f64,
    /// Sigmoid slope.
    pub sharpness: f64,
    pub min_region_area: usize,
    /// Maximum forward-backward round-trip distance in pixels.
    pub consistency_tol: f64,
    pub binarize_threshold: f64,
    /// Matches whose L1 feature distance exceeds this never count as
    /// evidence. Infinite disables the gate.
    pub max_match_cost: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            error_scale: 0.5,
            sharpness: 8.0,
            min_region_area: 64,
            consistency_tol: 2.0,
            binarize_threshold: 0.5,
            max_match_cost: f64::INFINITY,
        }
    }
}

impl PredictorConfig {
    /// Thresholds tuned on the synthetic fixtures. Integer offsets leave a
    /// rounding residual of roughly `(n - 3) / 6` per window on rotated or
    /// rescaled clones, which the stock 0.5 scale rejects.
    pub fn tuned() -> Self {
        Self {
            error_scale: 120.0,
            sharpness: 0.5,
            min_region_area: 256,
            consistency_tol: 4.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.error_scale, self.sharpness, self.consistency_tol, self.binarize_threshold, self.max_match_cost];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) || self.min_region_area == 0 {
            return Err(Error::Config("predictor parameters must be positive".into()));
        }
        if self.binarize_threshold > 1.0 {
            return Err(Error::Config("binarize threshold must not exceed 1".into()));
        }
        Ok(())
    }
}

/// Whether following `field` from `(i, j)` and back lands within `tol`.
pub fn consistent(field: &OffsetField, i: usize, j: usize, tol: f64) -> bool {
    let (ti, tj) = field.nearest_target(i, j);
    let (bi, bj) = field.nearest_target(ti, tj);
    let di = bi as f64 - i as f64;
    let dj = bj as f64 - j as f64;
    (di * di + dj * dj).sqrt() <= tol
}

/// Evidence map of a single field: covered-window minimum residual,
/// infinite where the match is inconsistent or too costly.
fn field_evidence(dlf: &DlfErrorMaps, m: &MatchResult, cfg: &PredictorConfig) -> Vec<f64> {
    let (h, w) = m.offsets.dims();
    let covered: Vec<Vec<f64>> = dlf
        .maps()
        .iter()
        .zip(DLF_SIZES)
        .map(|(map, rho)| min_filter(map.data(), h, w, rho / 2))
        .collect();
    (0..h * w)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / w, k % w);
            let cost = -m.scores.data()[k];
            if !(cost <= cfg.max_match_cost) || !consistent(&m.offsets, i, j, cfg.consistency_tol) {
                return f64::INFINITY;
            }
            covered.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn sigmoid_prob(e: f64, cfg: &PredictorConfig) -> f64 {
    1.0 / (1.0 + (cfg.sharpness * (e - cfg.error_scale)).exp())
}

/// Raw probability before cleanup.
pub fn raw_probability(dlf: &[DlfErrorMaps; 2], matches: [&MatchResult; 2], cfg: &PredictorConfig) -> Result<ProbMask> {
    cfg.validate()?;
    let dims = matches[0].offsets.dims();
    if matches[1].offsets.dims() != dims || dlf.iter().any(|d| d.eps1.dims() != dims) {
        return Err(Error::ShapeMismatch("predictor inputs disagree in size".into()));
    }
    let e1 = field_evidence(&dlf[0], matches[0], cfg);
    let e2 = field_evidence(&dlf[1], matches[1], cfg);
    let data = e1.iter().zip(&e2).map(|(a, b)| sigmoid_prob(a.min(*b), cfg)).collect();
    ProbMask::new(ScalarMap::from_vec(dims.0, dims.1, data)?)
}

/// Zeroes everything outside kept foreground regions and raises enclosed
/// small holes to the threshold.
pub fn cleanup(m: &ProbMask, cfg: &PredictorConfig) -> ProbMask {
    let (h, w) = m.dims();
    let fg: Vec<bool> = m.data().iter().map(|&v| v >= cfg.binarize_threshold).collect();
    let kept = remove_small_regions(&fg, h, w, cfg.min_region_area);
    let holes = small_holes(&kept, h, w, cfg.min_region_area);
    let data = (0..h * w)
        .map(|k| {
            if kept[k] {
                m.data()[k]
            } else if holes[k] {
                m.data()[k].max(cfg.binarize_threshold)
            } else {
                0.0
            }
        })
        .collect();
    ProbMask(ScalarMap::from_vec(h, w, data).expect("shape preserved"))
}

/// Copy-move probability from the DLF maps of both fields and the matches
/// that produced them.
pub fn predict(dlf: &[DlfErrorMaps; 2], matches: [&MatchResult; 2], cfg: &PredictorConfig) -> Result<ProbMask> {
    Ok(cleanup(&raw_probability(dlf, matches, cfg)?, cfg))
}

pub fn refine_max(m1: &ProbMask, m2: &ProbMask) -> Result<ProbMask> {
    if m1.dims() != m2.dims() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", m1.dims(), m2.dims())));
    }
    let (h, w) = m1.dims();
    let data = m1.data().iter().zip(m2.data()).map(|(a, b)| a.max(*b)).collect();
    Ok(ProbMask(ScalarMap::from_vec(h, w, data)?))
}

/// Values at or above `threshold` become foreground.
pub fn binarize(m: &ProbMask, threshold: f64) -> BinMask {
    let (h, w) = m.dims();
    BinMask {
        height: h,
        width: w,
        data: m.data().iter().map(|&v| v >= threshold).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prob(h: usize, w: usize, v: Vec<f64>) -> ProbMask {
        ProbMask::new(ScalarMap::from_vec(h, w, v).unwrap()).unwrap()
    }

    fn result(field: OffsetField) -> MatchResult {
        let (h, w) = field.dims();
        MatchResult {
            offsets: field,
            scores: ScalarMap::filled(h, w, 0.0),
            winner: vec![0; h * w],
            scale_pair: vec![(0, 0); h * w],
        }
    }

    #[test]
    fn binarize_ties_go_up() {
        let m = prob(1, 3, vec![0.49, 0.51, 0.5]);
        assert_eq!(binarize(&m, 0.5).data(), &[false, true, true]);
        let b = binarize(&m, 0.5);
        assert_eq!(binarize(&ProbMask::new(b.to_scalar()).unwrap(), 0.5), b);
        assert_eq!(binarize(&ProbMask::zeros(3, 3), 0.5).count(), 0);
    }

    #[test]
    fn refine_max_cases() {
        let a = prob(1, 3, vec![0.2, 0.9, 0.0]);
        assert_eq!(refine_max(&a, &ProbMask::zeros(1, 3)).unwrap(), a);
        assert_eq!(refine_max(&a, &a).unwrap(), a);
        let u = refine_max(&prob(1, 2, vec![1.0, 0.0]), &prob(1, 2, vec![0.0, 1.0])).unwrap();
        assert_eq!(u.data(), &[1.0, 1.0]);
        assert!(refine_max(&a, &ProbMask::zeros(3, 1)).is_err());
    }

    #[test]
    fn sigmoid_center_is_half() {
        let cfg = PredictorConfig::default();
        assert_eq!(sigmoid_prob(cfg.error_scale, &cfg), 0.5);
        // A perfectly consistent field whose residual equals the scale everywhere.
        let (h, w) = (12, 12);
        let field = OffsetField::from_fn(h, w, |_, j| (if j < 6 { 6.0 } else { -6.0 }, 0.0));
        let flat = ScalarMap::filled(h, w, cfg.error_scale);
        let dlf = DlfErrorMaps {
            eps1: flat.clone(),
            eps2: flat.clone(),
            eps3: flat,
        };
        let r = result(field);
        let m = predict(&[dlf.clone(), dlf], [&r, &r], &cfg).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn inconsistent_matches_give_zero() {
        let (h, w) = (16, 16);
        // Every pixel points to column 0 of its row, which matches itself.
        let field = OffsetField::from_fn(h, w, |_, j| (-(j as f64), 0.0));
        let zero = ScalarMap::filled(h, w, 0.0);
        let dlf = DlfErrorMaps {
            eps1: zero.clone(),
            eps2: zero.clone(),
            eps3: zero,
        };
        let r = result(field);
        let raw = raw_probability(&[dlf.clone(), dlf], [&r, &r], &PredictorConfig::default()).unwrap();
        for i in 0..h {
            for j in 3..w {
                assert_eq!(raw.get(i, j), 0.0, "pixel ({i}, {j})");
            }
        }
    }

    #[test]
    fn cleanup_drops_specks_and_fills_holes() {
        let (h, w) = (20, 20);
        let mut v = vec![0.0; h * w];
        for i in 2..14 {
            for j in 2..14 {
                v[i * w + j] = 0.9;
            }
        }
        v[7 * w + 7] = 0.1;
        v[18 * w + 18] = 1.0;
        let cfg = PredictorConfig::default();
        let out = cleanup(&prob(h, w, v), &cfg);
        assert_eq!(out.get(7, 7), 0.5);
        assert_eq!(out.get(18, 18), 0.0);
        assert_eq!(out.get(3, 3), 0.9);
        assert_eq!(binarize(&out, 0.5).count(), 144);
    }

    fn random_masks() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (proptest::collection::vec(0.0f64..1.0, 100), proptest::collection::vec(0.0f64..1.0, 100))
    }

    proptest! {
        #[test]
        fn refine_max_lattice((a, b) in random_masks(), c in proptest::collection::vec(0.0f64..1.0, 100)) {
            let (a, b, c) = (prob(10, 10, a), prob(10, 10, b), prob(10, 10, c));
            prop_assert_eq!(refine_max(&a, &b).unwrap(), refine_max(&b, &a).unwrap());
            prop_assert_eq!(
                refine_max(&refine_max(&a, &b).unwrap(), &c).unwrap(),
                refine_max(&a, &refine_max(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(refine_max(&a, &a).unwrap(), a);
        }

        #[test]
        fn predict_is_monotone(e in proptest::collection::vec(0.0f64..3.0, 256), shrink in proptest::collection::vec(0.0f64..1.0, 256)) {
            let (h, w) = (16, 16);
            let field = OffsetField::from_fn(h, w, |_, j| (if j < 8 { 8.0 } else { -8.0 }, 0.0));
            let r = result(field);
            let maps = |v: Vec<f64>| {
                let m = ScalarMap::from_vec(h, w, v).unwrap();
                DlfErrorMaps { eps1: m.clone(), eps2: m.clone(), eps3: m }
            };
            let smaller: Vec<f64> = e.iter().zip(&shrink).map(|(a, s)| a * s).collect();
            let cfg = PredictorConfig { min_region_area: 6, ..PredictorConfig::default() };
            let big = maps(e);
            let small = maps(smaller);
            let m_big = predict(&[big.clone(), big], [&r, &r], &cfg).unwrap();
            let m_small = predict(&[small.clone(), small], [&r, &r], &cfg).unwrap();
            for (a, b) in m_small.data().iter().zip(m_big.data()) {
                prop_assert!(a >= b, "{a} < {b}");
            }
        }

        #[test]
        fn cleanup_adds_nothing_outside_holes(v in proptest::collection::vec(0.0f64..1.0, 144)) {
            let (h, w) = (12, 12);
            let cfg = PredictorConfig { min_region_area: 5, ..PredictorConfig::default() };
            let m = prob(h, w, v);
            let out = cleanup(&m, &cfg);
            let fg: Vec<bool> = m.data().iter().map(|&x| x >= 0.5).collect();
            let holes = small_holes(&remove_small_regions(&fg, h, w, 5), h, w, 5);
            for k in 0..h * w {
                if !fg[k] && !holes[k] {
                    prop_assert_eq!(out.data()[k], 0.0);
                }
                prop_assert!(out.data()[k] >= 0.0 && out.data()[k] <= 1.0);
            }
        }
    }
}
