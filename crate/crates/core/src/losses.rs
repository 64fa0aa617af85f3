//! Training losses with analytic gradients and a central-difference checker.

use crate::error::{Error, Result};
use crate::imagecore::ScalarMap;
use crate::predictor::{BinMask, ProbMask};
use crate::ranking::{Label, ThreeChannelMask};

/// Smoothing term added to both sides of the dice ratio.
pub const DICE_EPS: f64 = 1e-6;
/// Margin of the discrimination hinge.
pub const DEFAULT_TAU: f64 = -0.05;

/// A scalar loss together with its gradient with respect to the input map.
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub value: f64,
    pub grad: ScalarMap,
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// `1 - (2 sum(gt m) + eps) / (sum(gt) + sum(m) + eps)`.
pub fn dice_loss(m: &ProbMask, gt: &BinMask) -> Result<LossGrad> {
    dice_raw(m.map(), gt)
}

/// Dice on an unconstrained map, used when checking gradients at points
/// that need not be valid probabilities.
pub fn dice_raw(m: &ScalarMap, gt: &BinMask) -> Result<LossGrad> {
    check_dims(m.dims(), gt.dims())?;
    let mut inter = 0.0;
    let mut total = 0.0;
    for (&v, &g) in m.data().iter().zip(gt.data()) {
        let g = f64::from(u8::from(g));
        inter += g * v;
        total += g + v;
    }
    let num = 2.0 * inter + DICE_EPS;
    let den = total + DICE_EPS;
    let (h, w) = m.dims();
    let grad = gt
        .data()
        .iter()
        .map(|&g| -(2.0 * f64::from(u8::from(g)) * den - num) / (den * den))
        .collect();
    Ok(LossGrad {
        value: 1.0 - num / den,
        grad: ScalarMap::from_vec(h, w, grad)?,
    })
}

/// Per-pixel sign weights: -1 source, +1 target, 0 background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMatrix {
    height: usize,
    width: usize,
    data: Vec<i8>,
}

impl WeightMatrix {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.width + j]
    }
}

pub fn make_weight(gt3: &ThreeChannelMask) -> WeightMatrix {
    let (height, width) = gt3.dims();
    let data = gt3
        .labels()
        .iter()
        .map(|l| match l {
            Label::Background => 0,
            Label::Source => -1,
            Label::Target => 1,
        })
        .collect();
    WeightMatrix { height, width, data }
}

/// Hinge `max(0, sr * w - tau)` summed over ground-truth copy-move pixels.
pub fn discrimination_loss(sr: &ScalarMap, w: &WeightMatrix, gt_single: &BinMask, tau: f64) -> Result<LossGrad> {
    check_dims(sr.dims(), w.dims())?;
    check_dims(sr.dims(), gt_single.dims())?;
    let mut value = 0.0;
    let mut grad = vec![0.0; sr.data().len()];
    for k in 0..grad.len() {
        if !gt_single.data()[k] {
            continue;
        }
        let wk = f64::from(w.data[k]);
        let margin = sr.data()[k] * wk - tau;
        if margin > 0.0 {
            value += margin;
            grad[k] = wk;
        }
    }
    let (h, wd) = sr.dims();
    Ok(LossGrad {
        value,
        grad: ScalarMap::from_vec(h, wd, grad)?,
    })
}

/// Unweighted sum of the three training terms.
pub fn fused_loss(l_dfm: f64, l_mrd: f64, l_dis: f64) -> f64 {
    l_dfm + l_mrd + l_dis
}

/// Largest relative disagreement between the analytic gradient returned by
/// `f` at `x` and central differences with step `h`.
pub fn grad_check<F>(mut f: F, x: &[f64], h: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let (v0, analytic) = f(x);
    if analytic.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            x.len()
        )));
    }
    if !v0.is_finite() || analytic.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("function value or gradient at the base point".into()));
    }
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let plus = f(&probe).0;
        probe[k] = x[k] - h;
        let minus = f(&probe).0;
        probe[k] = x[k];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("function value near coordinate {k}")));
        }
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((analytic[k] - fd).abs() / fd.abs().max(1e-8));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt_block(h: usize, w: usize) -> BinMask {
        BinMask::from_fn(h, w, |i, j| i >= 2 && i < 6 && j >= 1 && j < 5)
    }

    #[test]
    fn dice_extremes() {
        let gt = gt_block(8, 8);
        let same = ProbMask::new(gt.to_scalar()).unwrap();
        assert!(dice_loss(&same, &gt).unwrap().value <= 1e-5);
        let inv = ProbMask::new(gt.to_scalar().map(|v| 1.0 - v)).unwrap();
        assert!(dice_loss(&inv, &gt).unwrap().value >= 1.0 - 1e-5);
        // Both empty: the smoothing term makes the ratio exactly one.
        let empty = BinMask::filled(4, 4, false);
        assert_eq!(dice_loss(&ProbMask::zeros(4, 4), &empty).unwrap().value, 0.0);
    }

    #[test]
    fn quadratic_grad_check_is_tight() {
        let x = [0.3, -1.2, 2.5, 0.0];
        let err = grad_check(|x| (x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect()), &x, 1e-5).unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn grad_check_reports_non_finite() {
        let r = grad_check(|x| (1.0 / x[0], vec![-1.0 / (x[0] * x[0])]), &[0.0], 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn discrimination_cases() {
        let (h, w) = (2, 2);
        let gt3 = ThreeChannelMask::from_labels(h, w, vec![Label::Source, Label::Target, Label::Background, Label::Source])
            .unwrap();
        let wm = make_weight(&gt3);
        assert_eq!(wm.data(), &[-1, 1, 0, -1]);
        let gt = BinMask::from_fn(h, w, |i, j| gt3.label(i, j) != Label::Background);
        let sep = ScalarMap::from_vec(h, w, vec![1.0, -1.0, 7.0, 1.0]).unwrap();
        assert_eq!(discrimination_loss(&sep, &wm, &gt, DEFAULT_TAU).unwrap().value, 0.0);
        let wrong = ScalarMap::from_vec(h, w, vec![-0.5, -1.0, 0.0, 1.0]).unwrap();
        let l = discrimination_loss(&wrong, &wm, &gt, DEFAULT_TAU).unwrap();
        assert!((l.value - 0.55).abs() < 1e-12);
        assert_eq!(l.grad.data(), &[-1.0, 0.0, 0.0, 0.0]);
        let bg = BinMask::filled(h, w, false);
        assert_eq!(discrimination_loss(&wrong, &wm, &bg, DEFAULT_TAU).unwrap().value, 0.0);
    }

    #[test]
    fn fused_is_plain_sum() {
        assert_eq!(fused_loss(0.0, 0.0, 0.0), 0.0);
        assert_eq!(fused_loss(1.0, 2.0, 3.0), 6.0);
        assert_eq!(fused_loss(3.0, 1.0, 2.0), fused_loss(2.0, 3.0, 1.0));
    }

    #[test]
    fn target_refinement_loss_reuses_dice() {
        // The target-branch term compares a target-only prediction with the
        // target-only ground truth.
        let mt_gt = BinMask::from_fn(6, 6, |i, _| i < 2);
        let mt = ProbMask::new(ScalarMap::from_fn(6, 6, |i, _| if i < 2 { 0.8 } else { 0.1 })).unwrap();
        let l = dice_loss(&mt, &mt_gt).unwrap().value;
        let expected = 1.0 - (2.0 * 12.0 * 0.8 + DICE_EPS) / (12.0 + 12.0 * 0.8 + 24.0 * 0.1 + DICE_EPS);
        assert!((l - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dice_gradient_matches_fd(v in proptest::collection::vec(0.05f64..0.95, 64)) {
            let gt = gt_block(8, 8);
            let err = grad_check(
                |x| {
                    let m = ScalarMap::from_vec(8, 8, x.to_vec()).unwrap();
                    let l = dice_raw(&m, &gt).unwrap();
                    (l.value, l.grad.into_data())
                },
                &v,
                1e-6,
            ).unwrap();
            prop_assert!(err <= 1e-4, "{err}");
        }

        #[test]
        fn dice_in_unit_range(v in proptest::collection::vec(0.0f64..=1.0, 64)) {
            let l = dice_loss(&ProbMask::new(ScalarMap::from_vec(8, 8, v).unwrap()).unwrap(), &gt_block(8, 8)).unwrap();
            prop_assert!(l.value >= -1e-12 && l.value <= 1.0 + 1e-6);
        }

        #[test]
        fn discrimination_is_convex(a in proptest::collection::vec(-2.0f64..2.0, 4), b in proptest::collection::vec(-2.0f64..2.0, 4), t in 0.0f64..1.0) {
            let gt3 = ThreeChannelMask::from_labels(2, 2, vec![Label::Source, Label::Target, Label::Target, Label::Source]).unwrap();
            let wm = make_weight(&gt3);
            let gt = BinMask::filled(2, 2, true);
            let f = |v: &Vec<f64>| discrimination_loss(&ScalarMap::from_vec(2, 2, v.clone()).unwrap(), &wm, &gt, DEFAULT_TAU).unwrap().value;
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            prop_assert!(f(&mid) <= t * f(&a) + (1.0 - t) * f(&b) + 1e-12);
        }
    }
}
