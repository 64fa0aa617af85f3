//! Finite-difference checks of every analytic gradient.
//!
//! cargo run --release --example gradient_checks -- 20

use cmfd::pipeline::checks::run_grad_checks;

fn main() -> cmfd::Result<()> {
    let points = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(10);
    let r = run_grad_checks(points, 0)?;
    println!("worst relative error over {points} points");
    println!("  soft evaluation  {:.2e}", r.soft_evaluate);
    println!("  dice             {:.2e}", r.dice);
    println!("  discrimination   {:.2e}", r.discrimination);
    println!("  scorer           {:.2e}", r.scorer);
    Ok(())
}
