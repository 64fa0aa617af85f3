use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::field::{clamp_offset, OffsetField};
use super::PMConfig;
use crate::error::{Error, Result};

/// Stream reserved for initialization; random search in round `t` uses
/// stream `t + 1`.
const INIT_STREAM: u64 = 0;
/// Words of keystream reserved per pixel.
const WORDS_PER_PIXEL: u128 = 1 << 24;

/// Keystream positioned for one `(seed, stream, pixel)` triple.
fn pixel_rng(seed: u64, stream: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(pixel as u128 * WORDS_PER_PIXEL);
    rng
}

/// Whether pixel `(i, j)` has at least one in-bounds integer offset outside
/// the exclusion zone.
fn has_valid_offset(h: usize, w: usize, i: usize, j: usize, excl: usize) -> bool {
    i.max(h - 1 - i) >= excl || j.max(w - 1 - j) >= excl
}

/// Uniform draw from the valid integer offsets of pixel `(i, j)`, keyed by
/// `(cfg.seed, i, j)`.
pub fn init_offset_at(h: usize, w: usize, i: usize, j: usize, cfg: &PMConfig) -> Result<(f64, f64)> {
    let excl = cfg.exclusion_radius as usize;
    if !has_valid_offset(h, w, i, j, excl) {
        return Err(Error::ImageTooSmall(format!(
            "{h}x{w} grid leaves pixel ({i}, {j}) no offset outside exclusion radius {excl}"
        )));
    }
    let mut rng = pixel_rng(cfg.seed, INIT_STREAM, i * w + j);
    loop {
        let ti = rng.gen_range(0..h);
        let tj = rng.gen_range(0..w);
        let d = (tj as f64 - j as f64, ti as f64 - i as f64);
        if !cfg.excluded(d) {
            return Ok(d);
        }
    }
}

/// Random valid initial field with every offset outside the exclusion zone.
pub fn init_offsets(h: usize, w: usize, cfg: &PMConfig) -> Result<OffsetField> {
    if h < 2 || w < 2 {
        return Err(Error::ImageTooSmall(format!("{h}x{w} grid is below 2x2")));
    }
    let excl = cfg.exclusion_radius as usize;
    // The pixel nearest the center is the hardest to satisfy.
    let (ci, cj) = ((h - 1) / 2, (w - 1) / 2);
    if !has_valid_offset(h, w, ci, cj, excl) {
        return Err(Error::ImageTooSmall(format!(
            "{h}x{w} grid cannot satisfy exclusion radius {excl}"
        )));
    }
    let offsets: Vec<(f64, f64)> = (0..h * w)
        .into_par_iter()
        .map(|k| init_offset_at(h, w, k / w, k % w, cfg))
        .collect::<Result<_>>()?;
    let (dx, dy) = offsets.into_iter().unzip();
    OffsetField::from_vecs(h, w, dx, dy)
}

/// Four random-search candidates per pixel: the current offset plus an
/// integer perturbation drawn uniformly from the L-infinity ball of radius
/// `cfg.search_radius`, clamped to validity. Each row reads its own
/// keystream, so draws depend only on `(seed, round, i, j)`.
pub fn random_search(field: &OffsetField, cfg: &PMConfig, round: usize) -> Vec<OffsetField> {
    let (h, w) = field.dims();
    let r = cfg.search_radius as i64;
    let draws: Vec<[(f64, f64); 4]> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = pixel_rng(cfg.seed, round as u64 + 1, i * w);
            (0..w)
                .map(|j| {
                    let base = field.get(i, j);
                    let mut out = [(0.0, 0.0); 4];
                    for slot in out.iter_mut() {
                        let (px, py) = if r == 0 {
                            (0, 0)
                        } else {
                            (rng.gen_range(-r..=r), rng.gen_range(-r..=r))
                        };
                        *slot = clamp_offset(h, w, i, j, (base.0 + px as f64, base.1 + py as f64));
                    }
                    out
                })
                .collect::<Vec<_>>()
        })
        .collect();
    (0..4)
        .map(|c| {
            let (dx, dy) = draws.iter().map(|d| d[c]).unzip();
            OffsetField::from_vecs(h, w, dx, dy).expect("shape preserved")
        })
        .collect()
}
