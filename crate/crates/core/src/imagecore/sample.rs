use super::raster::{FeatureMap, ScalarMap};

/// Corner indices and weights of one bilinear lookup, plus the derivative
/// of each weight with respect to the continuous coordinates.
///
/// The sampled value is `sum_k weights[k] * grid[indices[k]]`; its partial
/// derivative with respect to the grid entry at `indices[k]` is
/// `weights[k]`, and with respect to `x` (resp. `y`) it is
/// `sum_k dw_dx[k] * grid[indices[k]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearTap {
    /// Flat pixel indices (`i * width + j`) of the four corners in the order
    /// top-left, top-right, bottom-left, bottom-right.
    pub indices: [usize; 4],
    pub weights: [f64; 4],
    pub dw_dx: [f64; 4],
    pub dw_dy: [f64; 4],
}

impl BilinearTap {
    /// Builds the lookup for a `height x width` grid. Out-of-range
    /// coordinates clamp to the border, where the coordinate derivative is
    /// zero.
    #[inline]
    pub fn new(height: usize, width: usize, x: f64, y: f64) -> Self {
        let (c0, c1, fx, gx) = axis(width, x);
        let (r0, r1, fy, gy) = axis(height, y);
        let weights = [
            (1.0 - fx) * (1.0 - fy),
            fx * (1.0 - fy),
            (1.0 - fx) * fy,
            fx * fy,
        ];
        let dw_dx = [-(1.0 - fy) * gx, (1.0 - fy) * gx, -fy * gx, fy * gx];
        let dw_dy = [-(1.0 - fx) * gy, -fx * gy, (1.0 - fx) * gy, fx * gy];
        Self {
            indices: [r0 * width + c0, r0 * width + c1, r1 * width + c0, r1 * width + c1],
            weights,
            dw_dx,
            dw_dy,
        }
    }
}

/// Returns `(lower index, upper index, fraction, d fraction / d coord)`.
#[inline]
fn axis(len: usize, t: f64) -> (usize, usize, f64, f64) {
    if len == 1 {
        return (0, 0, 0.0, 0.0);
    }
    let max = (len - 1) as f64;
    let (tc, slope) = if t < 0.0 {
        (0.0, 0.0)
    } else if t > max {
        (max, 0.0)
    } else {
        (t, 1.0)
    };
    let lo = (tc.floor() as usize).min(len - 2);
    (lo, lo + 1, tc - lo as f64, slope)
}

/// Samples the feature vector at continuous column `x`, row `y` into `out`
/// and returns the tap used, so callers can form derivatives.
#[inline]
pub fn sample_bilinear(fm: &FeatureMap, x: f64, y: f64, out: &mut [f64]) -> BilinearTap {
    let tap = BilinearTap::new(fm.height(), fm.width(), x, y);
    let d = fm.depth();
    debug_assert_eq!(out.len(), d);
    let data = fm.data();
    let [i0, i1, i2, i3] = tap.indices;
    let [w0, w1, w2, w3] = tap.weights;
    let (a, b, c, e) = (
        &data[i0 * d..i0 * d + d],
        &data[i1 * d..i1 * d + d],
        &data[i2 * d..i2 * d + d],
        &data[i3 * d..i3 * d + d],
    );
    for k in 0..d {
        out[k] = w0 * a[k] + w1 * b[k] + w2 * c[k] + w3 * e[k];
    }
    tap
}

/// Scalar lookup on a single-channel map.
#[inline]
pub fn sample_scalar(map: &ScalarMap, x: f64, y: f64) -> f64 {
    let tap = BilinearTap::new(map.height(), map.width(), x, y);
    let data = map.data();
    tap.indices
        .iter()
        .zip(tap.weights.iter())
        .map(|(&i, &w)| w * data[i])
        .sum()
}
