//! Dense linear fitting of offset fields.
//!
//! For a `rho x rho` window, `P` stacks the homogeneous coordinates
//! `(column offset, row offset, 1)` of its `N = rho^2` pixels relative to the
//! window center. The least-squares residual of a local affine model is
//! `d^T d - sum_i (d^T q_i)^2` per offset component, with `Q = [q1 q2 q3]`
//! an orthonormal basis of `span(P)`.
//!
//! Windows near the border are shifted inward so they stay inside the field;
//! the residual of the shifted window is reported at the pixel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::ScalarMap;
use crate::patchmatch::OffsetField;

/// Window sides used by [`multiscale`].
pub const DLF_SIZES: [usize; 3] = [7, 9, 11];

#[derive(Clone, Debug)]
pub struct DlfBasis {
    rho: usize,
    /// Window pixel offsets `(row, column)` in row-major order.
    coords: Vec<(isize, isize)>,
    /// Columns of `Q`, each of length `N`.
    q: [Vec<f64>; 3],
}

impl DlfBasis {
    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.rho * self.rho
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.q[k]
    }

    /// The `N x 3` coordinate matrix, row-major.
    pub fn design_matrix(&self) -> Vec<[f64; 3]> {
        self.coords
            .iter()
            .map(|&(di, dj)| [dj as f64, di as f64, 1.0])
            .collect()
    }
}

/// Builds the orthonormal basis of the window's affine coordinate space by
/// modified Gram-Schmidt on the columns of `P`.
pub fn build_basis(rho: usize) -> Result<DlfBasis> {
    if rho < 3 || rho % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "fitting window side must be odd and at least 3, got {rho}"
        )));
    }
    let r = (rho / 2) as isize;
    let coords: Vec<(isize, isize)> = (-r..=r).flat_map(|di| (-r..=r).map(move |dj| (di, dj))).collect();
    let mut cols: [Vec<f64>; 3] = [
        coords.iter().map(|&(_, dj)| dj as f64).collect(),
        coords.iter().map(|&(di, _)| di as f64).collect(),
        vec![1.0; coords.len()],
    ];
    for k in 0..3 {
        for prev in 0..k {
            let dot: f64 = cols[k].iter().zip(&cols[prev]).map(|(a, b)| a * b).sum();
            let (done, rest) = cols.split_at_mut(k);
            for (v, b) in rest[0].iter_mut().zip(&done[prev]) {
                *v -= dot * b;
            }
        }
        let norm = cols[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in cols[k].iter_mut() {
            *v /= norm;
        }
    }
    Ok(DlfBasis { rho, coords, q: cols })
}

/// Residual of one component over the window whose top-left pixel is
/// `(top, left)`. Values are taken relative to the window's first entry,
/// which leaves the residual unchanged and avoids cancellation.
#[inline]
fn window_residual(values: &[f64], width: usize, top: usize, left: usize, basis: &DlfBasis) -> f64 {
    let rho = basis.rho;
    let origin = values[top * width + left];
    let mut ss = 0.0;
    let mut proj = [0.0; 3];
    let mut t = 0;
    for wi in 0..rho {
        let row = &values[(top + wi) * width + left..(top + wi) * width + left + rho];
        for &v in row {
            let d = v - origin;
            ss += d * d;
            proj[0] += d * basis.q[0][t];
            proj[1] += d * basis.q[1][t];
            proj[2] += d * basis.q[2][t];
            t += 1;
        }
    }
    ss - proj[0] * proj[0] - proj[1] * proj[1] - proj[2] * proj[2]
}

/// Per-pixel affine-fit residual `eps_x^2 + eps_y^2`, clamped at zero.
pub fn fitting_error(field: &OffsetField, basis: &DlfBasis) -> Result<ScalarMap> {
    let (h, w) = field.dims();
    let rho = basis.rho;
    if h < rho || w < rho {
        return Err(Error::ImageTooSmall(format!(
            "{h}x{w} offset field is smaller than the {rho}x{rho} fitting window"
        )));
    }
    let r = rho / 2;
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let top = i.saturating_sub(r).min(h - rho);
            (0..w).map(move |j| {
                let left = j.saturating_sub(r).min(w - rho);
                let e = window_residual(field.dx(), w, top, left, basis)
                    + window_residual(field.dy(), w, top, left, basis);
                e.max(0.0)
            })
        })
        .collect();
    ScalarMap::from_vec(h, w, data)
}

/// Residual maps at the three window sizes.
#[derive(Clone, Debug)]
pub struct DlfErrorMaps {
    pub eps1: ScalarMap,
    pub eps2: ScalarMap,
    pub eps3: ScalarMap,
}

impl DlfErrorMaps {
    pub fn maps(&self) -> [&ScalarMap; 3] {
        [&self.eps1, &self.eps2, &self.eps3]
    }

    /// Pointwise minimum over the three window sizes.
    pub fn min_map(&self) -> ScalarMap {
        let (h, w) = self.eps1.dims();
        let data = (0..h * w)
            .map(|k| self.eps1.data()[k].min(self.eps2.data()[k]).min(self.eps3.data()[k]))
            .collect();
        ScalarMap::from_vec(h, w, data).expect("shape preserved")
    }
}

pub fn multiscale(field: &OffsetField) -> Result<DlfErrorMaps> {
    let [a, b, c] = DLF_SIZES.map(|rho| build_basis(rho).and_then(|basis| fitting_error(field, &basis)));
    Ok(DlfErrorMaps {
        eps1: a?,
        eps2: b?,
        eps3: c?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_shape_and_orthonormality() {
        assert!(build_basis(4).is_err());
        assert!(build_basis(1).is_err());
        let b = build_basis(3).unwrap();
        assert_eq!(b.n(), 9);
        for a in 0..3 {
            for c in 0..3 {
                let dot: f64 = b.column(a).iter().zip(b.column(c)).map(|(x, y)| x * y).sum();
                let want = if a == c { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_vector_lies_in_span() {
        let b = build_basis(7).unwrap();
        let ones = vec![1.0; b.n()];
        let proj: f64 = (0..3)
            .map(|k| b.column(k).iter().zip(&ones).map(|(q, v)| q * v).sum::<f64>().powi(2))
            .sum();
        assert!((proj - b.n() as f64).abs() < 1e-10);
    }

    #[test]
    fn constant_field_has_zero_error() {
        let f = OffsetField::from_fn(20, 20, |_, _| (13.0, -40.0));
        for m in multiscale(&f).unwrap().maps() {
            assert!(m.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn field_smaller_than_window_is_rejected() {
        let f = OffsetField::zeros(6, 20);
        assert!(fitting_error(&f, &build_basis(7).unwrap()).is_err());
    }
}
