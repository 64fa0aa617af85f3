//! Cross-scale PatchMatch on an image with a pasted block. The block's
//! pixels should end up pointing at the copy.
//!
//! cargo run --release --example patchmatch_duplicate

use cmfd::imagecore::{build_pyramid, to_grayscale};
use cmfd::patchmatch::{run, Level, LevelSet, MatchMode, PMConfig};
use cmfd::synthgen::base_texture;
use cmfd::zernike::{extract, make_kernels, DEFAULT_MAX_ORDER};

fn main() -> cmfd::Result<()> {
    let (n, side) = (160, 40);
    let (src, t) = ((20usize, 24usize), (70isize, 58isize));
    let mut img = base_texture(n, n, 11);
    let copy = img.clone();
    for i in 0..side {
        for j in 0..side {
            let (si, sj) = (src.0 + i, src.1 + j);
            let (ti, tj) = ((si as isize + t.1) as usize, (sj as isize + t.0) as usize);
            for c in 0..3 {
                img.set(ti, tj, c, copy.get(si, sj, c));
            }
        }
    }
    let pyramid = build_pyramid(&to_grayscale(&img))?;
    let kernels = make_kernels(DEFAULT_MAX_ORDER, 25)?;
    let feats = pyramid
        .levels()
        .iter()
        .map(|(level, _)| extract(level, &kernels))
        .collect::<cmfd::Result<Vec<_>>>()?;
    let levels = LevelSet::new(
        feats
            .iter()
            .zip(pyramid.levels())
            .map(|(f, (_, scale))| Level { map: &f.complex_map, scale })
            .collect(),
    )?;
    let cfg = PMConfig {
        iterations: 20,
        mode: MatchMode::Hard,
        ..PMConfig::default()
    };
    let res = run(levels, &cfg)?;
    let hits = (0..side * side)
        .filter(|k| res.offsets.get(src.0 + k / side, src.1 + k % side) == (t.0 as f64, t.1 as f64))
        .count();
    println!("{hits} of {} source pixels found offset {:?}", side * side, t);
    Ok(())
}
