//! Scores one mask folder against another. With no arguments it scores a
//! generated fixture set against itself.
//!
//! cargo run --release --example evaluate_masks -- <pred dir> <gt dir>

use cmfd::pipeline::{evaluate_dirs, gen_fixtures};

fn main() -> cmfd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (pred, gt) = match args.as_slice() {
        [p, g] => (p.into(), g.into()),
        _ => {
            let dir = std::env::temp_dir().join("cmfd_eval_example");
            gen_fixtures(&dir, 4, 2, 128, 128)?;
            (dir.clone(), dir)
        }
    };
    let summary = evaluate_dirs(&pred, &gt)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
