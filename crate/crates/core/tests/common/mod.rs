//! Oracles and instance builders shared by the integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cmfd::imagecore::FeatureMap;
use cmfd::patchmatch::{Level, LevelSet, OffsetField};
use cmfd::ranking::{FusedOffsets, Label, ThreeChannelMask, TrainingSample};
use cmfd::zernike::{make_kernels, DEFAULT_DIAMETER, DEFAULT_MAX_ORDER};

pub const D: usize = DEFAULT_DIAMETER;
pub const N: usize = 32;

/// Textbook bilinear sample with border clamping.
pub fn bilinear(fm: &FeatureMap, x: f64, y: f64) -> Vec<f64> {
    let (h, w) = (fm.height(), fm.width());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    (0..fm.depth())
        .map(|c| {
            let v = |i: usize, j: usize| fm.vector(i, j)[c];
            v(y0, x0) * (1.0 - fx) * (1.0 - fy) + v(y0, x1) * fx * (1.0 - fy) + v(y1, x0) * (1.0 - fx) * fy + v(y1, x1) * fx * fy
        })
        .collect()
}

/// Best cross-scale score of one offset at one pixel, by brute force.
pub fn oracle_score(levels: &[(FeatureMap, f64)], i: usize, j: usize, off: (f64, f64), excl: f64) -> f64 {
    if off.0.abs().max(off.1.abs()) < excl {
        return f64::NEG_INFINITY;
    }
    let at = |s: f64, x: f64| (x + 0.5) * s - 0.5;
    let mut best = f64::NEG_INFINITY;
    for (fa, sa) in levels {
        let a = bilinear(fa, at(*sa, j as f64), at(*sa, i as f64));
        for (fb, sb) in levels {
            let b = bilinear(fb, at(*sb, j as f64 + off.0), at(*sb, i as f64 + off.1));
            let s = -a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>();
            best = best.max(s);
        }
    }
    best
}

pub fn level_set(levels: &[(FeatureMap, f64)]) -> LevelSet<'_> {
    LevelSet::new(levels.iter().map(|(m, s)| Level { map: m, scale: *s }).collect()).unwrap()
}

pub fn random_levels(rng: &mut ChaCha8Rng, integer: bool) -> Vec<(FeatureMap, f64)> {
    let draw = |rng: &mut ChaCha8Rng, h: usize, w: usize| {
        let d = 3;
        let data = (0..h * w * d)
            .map(|_| if integer { rng.gen_range(0..3) as f64 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        FeatureMap::from_vec(h, w, d, data).unwrap()
    };
    let mut out = vec![(draw(rng, 8, 8), 1.0)];
    if rng.gen_bool(0.5) {
        out.push((draw(rng, 12, 12), 1.5));
        out.push((draw(rng, 6, 6), 0.75));
    }
    out
}

/// Smooth random feature map with one block copied elsewhere.
pub fn duplicated_block(seed: u64, n: usize, block: usize, src: (usize, usize), t: (isize, isize)) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 4;
    let waves: Vec<[f64; 4]> = (0..6 * d)
        .map(|_| [rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.6), rng.gen_range(0.0..6.3), rng.gen_range(0.5..1.0)])
        .collect();
    let mut data = vec![0.0; n * n * d];
    for i in 0..n {
        for j in 0..n {
            for c in 0..d {
                data[(i * n + j) * d + c] = waves[c * 6..(c + 1) * 6]
                    .iter()
                    .map(|[a, b, p, amp]| amp * (a * j as f64 + b * i as f64 + p).sin())
                    .sum();
            }
        }
    }
    for a in 0..block {
        for b in 0..block {
            let (si, sj) = (src.0 + a, src.1 + b);
            let (ti, tj) = ((si as isize + t.1) as usize, (sj as isize + t.0) as usize);
            for c in 0..d {
                data[(ti * n + tj) * d + c] = data[(si * n + sj) * d + c];
            }
        }
    }
    FeatureMap::from_vec(n, n, d, data).unwrap()
}

/// Residual sum of squares of the affine least-squares fit of both offset
/// components over one window, solved through the normal equations.
pub fn window_rss(field: &OffsetField, top: usize, left: usize, rho: usize) -> f64 {
    let n = rho * rho;
    let r = (rho / 2) as f64;
    let mut p = DMatrix::<f64>::zeros(n, 3);
    let mut dx = DVector::<f64>::zeros(n);
    let mut dy = DVector::<f64>::zeros(n);
    for a in 0..rho {
        for b in 0..rho {
            let t = a * rho + b;
            p[(t, 0)] = b as f64 - r;
            p[(t, 1)] = a as f64 - r;
            p[(t, 2)] = 1.0;
            let (x, y) = field.get(top + a, left + b);
            dx[t] = x;
            dy[t] = y;
        }
    }
    let normal = (p.transpose() * &p).cholesky().expect("full column rank");
    [dx, dy]
        .iter()
        .map(|d| {
            let beta = normal.solve(&(p.transpose() * d));
            (d - &p * beta).norm_squared()
        })
        .sum()
}

pub fn random_field(seed: u64, h: usize, w: usize) -> OffsetField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OffsetField::from_fn(h, w, |_, _| (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)))
}

/// Sum of Gaussian bumps; smooth enough that resampling on the pixel grid
/// is not the dominant error.
pub fn blobs(x: f64, y: f64) -> f64 {
    const B: [(f64, f64, f64, f64); 4] = [(2.5, -1.0, 3.0, 0.8), (-3.0, 2.0, 2.5, -0.5), (0.5, 4.0, 2.0, 0.6), (-1.5, -3.5, 3.5, 0.4)];
    B.iter()
        .map(|&(cx, cy, s, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
        .sum()
}

/// `D x D` window of `blobs` rotated by `deg` about the window center.
pub fn window(deg: f64) -> Vec<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    let r = (D / 2) as f64;
    let mut out = Vec::with_capacity(D * D);
    for i in 0..D {
        for j in 0..D {
            let (x, y) = (j as f64 - r, i as f64 - r);
            out.push(blobs(c * x + s * y, -s * x + c * y));
        }
    }
    out
}

pub fn magnitudes(win: &[f64]) -> Vec<f64> {
    let ks = make_kernels(DEFAULT_MAX_ORDER, D).unwrap();
    ks.moments(win).iter().map(|m| m.norm()).collect()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// A translated pair of 8x8 blocks whose first feature is higher on the
/// source side; the remaining features are noise.
pub fn separable_sample(seed: u64) -> TrainingSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (si, sj) = (rng.gen_range(0..4), rng.gen_range(0..8));
    let (ti, tj) = (si + 16 + rng.gen_range(0..4), sj + 12 + rng.gen_range(0..4));
    let (dy, dx) = (ti as f64 - si as f64, tj as f64 - sj as f64);
    let inside = |i: usize, j: usize, a: usize, b: usize| (a..a + 8).contains(&i) && (b..b + 8).contains(&j);
    let gt3 = ThreeChannelMask::from_fn(N, N, |i, j| {
        if inside(i, j, si, sj) {
            Label::Source
        } else if inside(i, j, ti, tj) {
            Label::Target
        } else {
            Label::Background
        }
    });
    let field = OffsetField::from_fn_clamped(N, N, |i, j| match gt3.label(i, j) {
        Label::Source => (dx, dy),
        Label::Target => (-dx, -dy),
        Label::Background => (0.0, 0.0),
    });
    let d = 4;
    let mut data = Vec::with_capacity(N * N * d);
    for i in 0..N {
        for j in 0..N {
            let cue = if gt3.label(i, j) == Label::Source { 1.0 } else { 0.0 };
            data.push(cue + rng.gen_range(-0.3..0.3));
            for _ in 1..d {
                data.push(rng.gen_range(-1.0..1.0));
            }
        }
    }
    TrainingSample {
        features: FeatureMap::from_vec(N, N, d, data).unwrap(),
        fused: FusedOffsets { field },
        gt3,
    }
}
