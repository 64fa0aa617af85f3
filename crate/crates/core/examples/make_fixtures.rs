//! Writes a few synthetic forgeries with their ground-truth masks.
//!
//! cargo run --release --example make_fixtures -- /tmp/fixtures

use cmfd::synthgen::{generate_set, FixtureKind};

fn main() -> cmfd::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let records = generate_set(out.as_ref(), 5, 1, 256, 256, &FixtureKind::ALL)?;
    for r in &records {
        let kind = serde_json::to_value(r.kind)?;
        println!("{}: {kind} source {} px, target {} px", r.name, r.source_pixels, r.target_pixels);
    }
    println!("wrote {} fixtures to {out}", records.len());
    Ok(())
}
