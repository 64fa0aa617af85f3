//! Zernike-moment kernels and dense per-pixel moment features.
//!
//! Kernels sample `R_{p,q}(rho) * exp(-j q theta)` at pixel centers of a
//! `d x d` window whose inscribed disk is the unit disk, with the factor
//! `(p + 1) / pi` and the pixel area element folded in. Center sampling on
//! a square lattice leaves a few percent of cross-talk between kernels of
//! equal repetition (and between repetitions `q` and `q + 4`), so the raw
//! kernels are Gram-Schmidt orthogonalized on the discrete disk in ascending
//! `(p, q)` order and rescaled to their sampled norm. Orthogonalization only
//! mixes kernels that transform identically under quarter-turn rotations of
//! the lattice, so quarter-turn invariance of the magnitudes stays exact.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{FeatureMap, Image};

/// Default dense-extraction window.
pub const DEFAULT_DIAMETER: usize = 17;
/// Default maximum moment order.
pub const DEFAULT_MAX_ORDER: u32 = 5;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Zernike radial polynomial `R_{p,q}(rho)` for `0 <= q <= p`, `p - q` even.
pub fn radial_poly(p: u32, q: u32, rho: f64) -> f64 {
    assert!(q <= p && (p - q) % 2 == 0, "invalid Zernike order ({p}, {q})");
    (0..=(p - q) / 2)
        .map(|s| {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(p - s)
                / (factorial(s) * factorial((p + q) / 2 - s) * factorial((p - q) / 2 - s))
                * rho.powi((p - 2 * s) as i32)
        })
        .sum()
}

/// All `(p, q)` with `0 <= q <= p <= max_order` and `p - q` even, in
/// ascending order of `p`, then `q`.
pub fn moment_orders(max_order: u32) -> Vec<(u32, u32)> {
    (0..=max_order)
        .flat_map(|p| (0..=p).filter(move |q| (p - q) % 2 == 0).map(move |q| (p, q)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ZernikeKernelStack {
    diameter: usize,
    orders: Vec<(u32, u32)>,
    /// One `diameter x diameter` row-major grid per order.
    kernels: Vec<Vec<Complex64>>,
    /// In-disk taps as `(row offset, column offset)`.
    taps: Vec<(isize, isize)>,
    /// Tap-major packed kernel values: for tap `t`, `2 * n` reals
    /// `(re_0, im_0, re_1, im_1, ...)`.
    packed: Vec<f64>,
}

impl ZernikeKernelStack {
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn orders(&self) -> &[(u32, u32)] {
        &self.orders
    }

    pub fn kernel(&self, k: usize) -> &[Complex64] {
        &self.kernels[k]
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Complex moments of a single `diameter x diameter` row-major window.
    pub fn moments(&self, window: &[f64]) -> Vec<Complex64> {
        assert_eq!(window.len(), self.diameter * self.diameter);
        self.kernels
            .iter()
            .map(|k| k.iter().zip(window).map(|(kv, &v)| kv * v).sum())
            .collect()
    }

    /// Kernel stack as a `[n, d, d, 2]` array of (real, imaginary) pairs,
    /// ready for the tensor file format.
    pub fn to_tensor(&self) -> crate::imagecore::Tensor {
        let data: Vec<f64> = self
            .kernels
            .iter()
            .flat_map(|k| k.iter().flat_map(|c| [c.re, c.im]))
            .collect();
        crate::imagecore::Tensor::from_f64(
            vec![self.len(), self.diameter, self.diameter, 2],
            &data,
        )
        .expect("kernel stack shape is consistent")
    }
}

pub fn make_kernels(max_order: u32, diameter: usize) -> Result<ZernikeKernelStack> {
    if diameter < 3 || diameter % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "Zernike window diameter must be odd and at least 3, got {diameter}"
        )));
    }
    let orders = moment_orders(max_order);
    let radius = diameter as f64 / 2.0;
    let center = ((diameter - 1) / 2) as isize;
    let area = 1.0 / (radius * radius);

    let mut taps = Vec::new();
    let mut polar = Vec::new();
    for di in -center..=center {
        for dj in -center..=center {
            let x = dj as f64 / radius;
            let y = -(di as f64) / radius;
            let rho = x.hypot(y);
            if rho <= 1.0 {
                taps.push((di, dj));
                polar.push(Some((rho, y.atan2(x))));
            } else {
                polar.push(None);
            }
        }
    }

    let raw: Vec<Vec<Complex64>> = orders
        .iter()
        .map(|&(p, q)| {
            let norm = f64::from(p + 1) / std::f64::consts::PI * area;
            polar
                .iter()
                .map(|pt| match pt {
                    Some((rho, theta)) => {
                        Complex64::from_polar(norm * radial_poly(p, q, *rho), -(q as f64) * theta)
                    }
                    None => Complex64::new(0.0, 0.0),
                })
                .collect()
        })
        .collect();

    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let mut kernels: Vec<Vec<Complex64>> = Vec::with_capacity(raw.len());
    for k in &raw {
        let mut v = k.clone();
        for b in &kernels {
            let coef = inner(b, &v) / inner(b, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= coef * bi;
            }
        }
        let scale = inner(k, k).re.sqrt() / inner(&v, &v).re.sqrt();
        for vi in v.iter_mut() {
            *vi *= scale;
        }
        kernels.push(v);
    }

    let n = orders.len();
    let mut packed = Vec::with_capacity(taps.len() * 2 * n);
    for &(di, dj) in &taps {
        let idx = ((di + center) as usize) * diameter + (dj + center) as usize;
        for k in &kernels {
            packed.push(k[idx].re);
            packed.push(k[idx].im);
        }
    }

    Ok(ZernikeKernelStack {
        diameter,
        orders,
        kernels,
        taps,
        packed,
    })
}

/// Dense moment features of one image.
#[derive(Clone, Debug)]
pub struct ZernikeFeatures {
    /// Depth `2n`: real and imaginary part of each moment, interleaved.
    pub complex_map: FeatureMap,
    /// Depth `n`: modulus of each moment.
    pub magnitude_map: FeatureMap,
}

#[inline]
fn reflect(t: isize, len: usize) -> usize {
    let len = len as isize;
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let mut t = t.rem_euclid(period);
    if t >= len {
        t = period - t;
    }
    t as usize
}

/// Dense moments by cross-correlating a one-channel image with every kernel,
/// reflect-padding the borders so the output keeps the input size.
pub fn extract(img: &Image, ks: &ZernikeKernelStack) -> Result<ZernikeFeatures> {
    if img.channels() != 1 {
        return Err(Error::InvalidArgument(
            "Zernike extraction expects a one-channel image".into(),
        ));
    }
    let (h, w) = (img.height(), img.width());
    let d = ks.diameter;
    if h < d || w < d {
        return Err(Error::ImageTooSmall(format!(
            "{h}x{w} image is smaller than the {d}x{d} Zernike window"
        )));
    }
    let r = (d / 2) as isize;
    let pw = w + 2 * r as usize;
    let ph = h + 2 * r as usize;
    let src = img.data();
    let mut padded = vec![0.0; ph * pw];
    for pi in 0..ph {
        let si = reflect(pi as isize - r, h);
        for pj in 0..pw {
            padded[pi * pw + pj] = src[si * w + reflect(pj as isize - r, w)];
        }
    }

    let n = ks.len();
    let depth = 2 * n;
    let offsets: Vec<usize> = ks
        .taps
        .iter()
        .map(|&(di, dj)| ((di + r) as usize) * pw + (dj + r) as usize)
        .collect();

    let mut complex = vec![0.0; h * w * depth];
    complex
        .par_chunks_mut(w * depth)
        .enumerate()
        .for_each(|(i, row)| {
            for j in 0..w {
                let acc = &mut row[j * depth..(j + 1) * depth];
                let base = i * pw + j;
                for (t, &off) in offsets.iter().enumerate() {
                    let v = padded[base + off];
                    let kv = &ks.packed[t * depth..(t + 1) * depth];
                    for (a, &k) in acc.iter_mut().zip(kv) {
                        *a += v * k;
                    }
                }
            }
        });
    let magnitude: Vec<f64> = complex
        .chunks_exact(2)
        .map(|c| c[0].hypot(c[1]))
        .collect();
    Ok(ZernikeFeatures {
        complex_map: FeatureMap::from_vec(h, w, depth, complex)?,
        magnitude_map: FeatureMap::from_vec(h, w, n, magnitude)?,
    })
}
