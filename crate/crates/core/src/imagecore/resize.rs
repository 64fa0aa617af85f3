use super::raster::Image;
use crate::error::{Error, Result};

/// Downscale factor of the coarse pyramid level.
pub const SCALE_DOWN: f64 = 0.75;
/// Upscale factor of the fine pyramid level.
pub const SCALE_UP: f64 = 1.5;

/// Maps a continuous coordinate of the full-resolution level to the
/// equivalent coordinate of a level resized by `scale`, keeping pixel
/// centers aligned the same way `resize_bilinear` does.
#[inline]
pub fn level_coord(x: f64, scale: f64) -> f64 {
    (x + 0.5) * scale - 0.5
}

/// Per-axis interpolation taps for one output size.
fn axis_taps(len_in: usize, len_out: usize) -> Vec<(usize, usize, f64)> {
    let ratio = len_in as f64 / len_out as f64;
    let max = (len_in - 1) as f64;
    (0..len_out)
        .map(|d| {
            let s = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(len_in - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize with the align-corners-false convention and border
/// clamping.
pub fn resize_bilinear(img: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target {out_h}x{out_w} must be at least 1x1"
        )));
    }
    if out_h == img.height() && out_w == img.width() {
        return Ok(img.clone());
    }
    let c = img.channels();
    let rows = axis_taps(img.height(), out_h);
    let cols = axis_taps(img.width(), out_w);
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            for ch in 0..c {
                let top = (1.0 - fx) * img.get(r0, c0, ch) + fx * img.get(r0, c1, ch);
                let bottom = (1.0 - fx) * img.get(r1, c0, ch) + fx * img.get(r1, c1, ch);
                let v = (1.0 - fy) * top + fy * bottom;
                data.push(v.clamp(0.0, 1.0));
            }
        }
    }
    Image::from_vec(out_h, out_w, c, data)
}

/// Three-level pyramid: coarse (`SCALE_DOWN`), original, fine (`SCALE_UP`).
#[derive(Clone, Debug)]
pub struct ScalePyramid {
    pub level_b: Image,
    pub level_o: Image,
    pub level_u: Image,
}

impl ScalePyramid {
    pub const SCALES: [f64; 3] = [SCALE_UP, 1.0, SCALE_DOWN];

    /// Levels in the order fine, original, coarse, paired with their scale.
    pub fn levels(&self) -> [(&Image, f64); 3] {
        [
            (&self.level_u, SCALE_UP),
            (&self.level_o, 1.0),
            (&self.level_b, SCALE_DOWN),
        ]
    }
}

fn scaled_len(len: usize, scale: f64) -> usize {
    ((len as f64 * scale).round() as usize).max(1)
}

pub fn build_pyramid(img: &Image) -> Result<ScalePyramid> {
    let (h, w) = (img.height(), img.width());
    Ok(ScalePyramid {
        level_b: resize_bilinear(img, scaled_len(h, SCALE_DOWN), scaled_len(w, SCALE_DOWN))?,
        level_o: img.clone(),
        level_u: resize_bilinear(img, scaled_len(h, SCALE_UP), scaled_len(w, SCALE_UP))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Scalar bilinear evaluation written out per pixel, independent of the
    /// tap tables above.
    fn oracle(src: &[f64], h: usize, w: usize, oh: usize, ow: usize, i: usize, j: usize) -> f64 {
        let sy = ((i as f64 + 0.5) * h as f64 / oh as f64 - 0.5).max(0.0).min((h - 1) as f64);
        let sx = ((j as f64 + 0.5) * w as f64 / ow as f64 - 0.5).max(0.0).min((w - 1) as f64);
        let y0 = sy.floor();
        let x0 = sx.floor();
        let at = |y: f64, x: f64| {
            let y = (y as usize).min(h - 1);
            let x = (x as usize).min(w - 1);
            src[y * w + x]
        };
        let (dy, dx) = (sy - y0, sx - x0);
        at(y0, x0) * (1.0 - dy) * (1.0 - dx)
            + at(y0, x0 + 1.0) * (1.0 - dy) * dx
            + at(y0 + 1.0, x0) * dy * (1.0 - dx)
            + at(y0 + 1.0, x0 + 1.0) * dy * dx
    }

    #[test]
    fn ramp_downsize_matches_scalar_oracle() {
        let src: Vec<f64> = (0..16).map(|k| k as f64 / 15.0).collect();
        let img = Image::from_vec(4, 4, 1, src.clone()).unwrap();
        let out = resize_bilinear(&img, 2, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = oracle(&src, 4, 4, 2, 2, i, j);
                assert!((out.get(i, j, 0) - want).abs() < 1e-12);
            }
        }
        // (0.5, 0.5) in source coordinates is the mean of the top-left 2x2 block.
        assert!((out.get(0, 0, 0) - (0.0 + 1.0 + 4.0 + 5.0) / 4.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn identity_resize_is_bitwise_equal() {
        let img = Image::from_vec(2, 3, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(resize_bilinear(&img, 2, 3).unwrap(), img);
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }

    #[test]
    fn pyramid_dimensions() {
        let p = build_pyramid(&Image::filled(448, 448, 3, 0.25)).unwrap();
        assert_eq!((p.level_b.height(), p.level_b.width()), (336, 336));
        assert_eq!((p.level_o.height(), p.level_o.width()), (448, 448));
        assert_eq!((p.level_u.height(), p.level_u.width()), (672, 672));
        for (level, _) in p.levels() {
            assert!(level.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
        }
        let p = build_pyramid(&Image::filled(4, 4, 1, 0.5)).unwrap();
        assert_eq!(p.level_b.height(), 3);
        assert_eq!(p.level_u.width(), 6);
    }

    proptest! {
        #[test]
        fn resize_stays_within_input_bounds(
            vals in proptest::collection::vec(0.0f64..=1.0, 30),
            oh in 1usize..12, ow in 1usize..12,
        ) {
            let img = Image::from_vec(5, 6, 1, vals.clone()).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let out = resize_bilinear(&img, oh, ow).unwrap();
            for &v in out.data() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
