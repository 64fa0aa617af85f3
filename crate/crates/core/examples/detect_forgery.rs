//! End to end: generate a translated forgery, detect it, write the masks
//! and report, and score the binary mask.
//!
//! cargo run --release --example detect_forgery

use cmfd::pipeline::metrics::binary_prf;
use cmfd::pipeline::{detect_image, PipelineConfig};
use cmfd::synthgen::{generate_set, read_bin_mask, FixtureKind};

fn main() -> cmfd::Result<()> {
    let root = std::env::temp_dir().join("cmfd_detect_example");
    generate_set(&root, 1, 4, 448, 448, &[FixtureKind::Translation])?;
    let fixture = root.join("fixture_000");
    let report = detect_image(&fixture.join("image.png"), &root.join("out"), &PipelineConfig::default())?;
    for t in &report.timings {
        println!("{:>22} {:>8.0} ms", t.stage, t.ms);
    }
    let prf = binary_prf(&read_bin_mask(&report.outputs.m_b)?, &read_bin_mask(&fixture.join("m_gt.png"))?)?;
    println!(
        "{} source / {} target pixels; precision {:.3} recall {:.3} F1 {:.3}",
        report.source_pixels, report.target_pixels, prf.precision, prf.recall, prf.f1
    );
    println!("masks and report in {}", report.outputs.report.parent().unwrap().display());
    Ok(())
}
