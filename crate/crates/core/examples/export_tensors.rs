//! Runs PatchMatch on a small image and stores the offset and score maps
//! as tensor files that other tools can read back.
//!
//! cargo run --release --example export_tensors -- /tmp/match

use cmfd::imagecore::{read_tensor, to_grayscale, write_tensor, Tensor};
use cmfd::patchmatch::{run, LevelSet, MatchMode, PMConfig};
use cmfd::synthgen::base_texture;
use cmfd::zernike::{extract, make_kernels, DEFAULT_DIAMETER, DEFAULT_MAX_ORDER};

fn main() -> cmfd::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "match".into()));
    std::fs::create_dir_all(&out)?;
    let gray = to_grayscale(&base_texture(64, 64, 9));
    let feats = extract(&gray, &make_kernels(DEFAULT_MAX_ORDER, DEFAULT_DIAMETER)?)?;
    let cfg = PMConfig {
        mode: MatchMode::Hard,
        ..PMConfig::default()
    };
    let res = run(LevelSet::single(&feats.magnitude_map), &cfg)?;
    let (h, w) = res.offsets.dims();
    for (name, data) in [("dx", res.offsets.dx()), ("dy", res.offsets.dy()), ("scores", res.scores.data())] {
        let path = out.join(format!("{name}.tensor"));
        write_tensor(&Tensor::from_f64(vec![h, w], data)?, &path)?;
        let back = read_tensor(&path)?;
        println!("{}: dims {:?}", path.display(), back.dims);
    }
    Ok(())
}
