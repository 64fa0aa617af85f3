use std::convert::TryFrom;

use crate::error::{Error, Result};
use crate::imagecore::Tensor;

/// Dense displacement field: pixel `(i, j)` corresponds to the continuous
/// position `(row i + dy, column j + dx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetField {
    height: usize,
    width: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl OffsetField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            dx: vec![0.0; height * width],
            dy: vec![0.0; height * width],
        }
    }

    pub fn from_vecs(height: usize, width: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if dx.len() != height * width || dy.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} offset field needs {} entries per component",
                height * width
            )));
        }
        Ok(Self { height, width, dx, dy })
    }

    /// Builds a field from `f(i, j) -> (dx, dy)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let mut out = Self::zeros(height, width);
        for i in 0..height {
            for j in 0..width {
                let (x, y) = f(i, j);
                out.dx[i * width + j] = x;
                out.dy[i * width + j] = y;
            }
        }
        out
    }

    /// Builds a field and clamps every entry to validity.
    pub fn from_fn_clamped(height: usize, width: usize, f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let mut out = Self::from_fn(height, width, f);
        out.clamp_all();
        out
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

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = i * self.width + j;
        (self.dx[k], self.dy[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, d: (f64, f64)) {
        let k = i * self.width + j;
        self.dx[k] = d.0;
        self.dy[k] = d.1;
    }

    /// Clamps an offset so that the target of pixel `(i, j)` is inside the
    /// grid.
    #[inline]
    pub fn clamp_offset(&self, i: usize, j: usize, d: (f64, f64)) -> (f64, f64) {
        clamp_offset(self.height, self.width, i, j, d)
    }

    pub fn clamp_all(&mut self) {
        for i in 0..self.height {
            for j in 0..self.width {
                let d = self.clamp_offset(i, j, self.get(i, j));
                self.set(i, j, d);
            }
        }
    }

    /// Whether every target lies inside the grid.
    pub fn is_valid(&self) -> bool {
        (0..self.height).all(|i| {
            (0..self.width).all(|j| {
                let (dx, dy) = self.get(i, j);
                let (x, y) = (j as f64 + dx, i as f64 + dy);
                x >= 0.0 && x <= (self.width - 1) as f64 && y >= 0.0 && y <= (self.height - 1) as f64
            })
        })
    }

    /// Target of pixel `(i, j)` rounded to the nearest grid pixel.
    #[inline]
    pub fn nearest_target(&self, i: usize, j: usize) -> (usize, usize) {
        let (dx, dy) = self.get(i, j);
        let ti = (i as f64 + dy).round().clamp(0.0, (self.height - 1) as f64) as usize;
        let tj = (j as f64 + dx).round().clamp(0.0, (self.width - 1) as f64) as usize;
        (ti, tj)
    }

    /// Adds a constant displacement to every entry (no clamping).
    pub fn translated(&self, tx: f64, ty: f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            dx: self.dx.iter().map(|v| v + tx).collect(),
            dy: self.dy.iter().map(|v| v + ty).collect(),
        }
    }
}

#[inline]
pub(crate) fn clamp_offset(height: usize, width: usize, i: usize, j: usize, d: (f64, f64)) -> (f64, f64) {
    let x = (j as f64 + d.0).clamp(0.0, (width - 1) as f64);
    let y = (i as f64 + d.1).clamp(0.0, (height - 1) as f64);
    (x - j as f64, y - i as f64)
}

/// Serialized as `[H, W, 2]` with `(dx, dy)` interleaved.
impl From<&OffsetField> for Tensor {
    fn from(f: &OffsetField) -> Self {
        let data: Vec<f64> = f.dx.iter().zip(&f.dy).flat_map(|(&x, &y)| [x, y]).collect();
        Tensor::from_f64(vec![f.height, f.width, 2], &data).expect("offset field shape is consistent")
    }
}

impl TryFrom<&Tensor> for OffsetField {
    type Error = Error;

    fn try_from(t: &Tensor) -> Result<Self> {
        match t.dims[..] {
            [h, w, 2] => {
                let vals = t.to_f64();
                let dx = vals.iter().step_by(2).copied().collect();
                let dy = vals.iter().skip(1).step_by(2).copied().collect();
                OffsetField::from_vecs(h, w, dx, dy)
            }
            _ => Err(Error::ShapeMismatch(format!(
                "offset fields are [H, W, 2], tensor has dims {:?}",
                t.dims
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_keeps_targets_inside() {
        let f = OffsetField::from_fn_clamped(4, 5, |i, j| (10.0 - j as f64 * 7.0, -3.0 * i as f64 - 1.0));
        assert!(f.is_valid());
        assert_eq!(f.get(0, 0), (4.0, 0.0));
    }

    #[test]
    fn tensor_layout_interleaves_components() {
        let f = OffsetField::from_fn(1, 2, |_, j| (j as f64 + 1.0, -(j as f64)));
        let t = Tensor::from(&f);
        assert_eq!(t.data, vec![1.0, 0.0, 2.0, -1.0]);
        assert_eq!(OffsetField::try_from(&t).unwrap(), f);
    }
}
