//! Minimum KL divergence from one regression model to the span of another.
//!
//! The minimum is zero whenever the source model is nested in the target;
//! for non-nested pairs it is the squared norm of the part of the source
//! mean that the target design cannot reproduce.
//!
//! ```text
//! cargo run --example verify_kl -- [trials] [seed]
//! ```

use lossprior::kl::{check_gradients, verify_min_kl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let seed: u64 = std::env::args().nth(2).map_or(Ok(0), |s| s.parse())?;
    let report = verify_min_kl(trials, 20, 6, seed, 1e-8, &[])?;

    println!("{}/{} trials reach min-KL < 1e-8", report.below_tolerance, report.trials);
    println!("nested pairs: {} (all zero: {})", report.nested_pairs, report.nested_pairs == report.nested_below_tolerance);
    println!("largest minimum: {:.3}", report.max_min_kl);
    for o in report.outcomes.iter().filter(|o| !o.nested).take(5) {
        println!("  {} -> {}: {:.4}", o.from, o.to, o.min_kl.unwrap_or(f64::NAN));
    }

    let g = check_gradients(50, 20, 6, seed)?;
    println!("gradient vs finite differences over {} instances: max relative error {:.1e}", g.instances, g.max_relative_error);
    Ok(())
}
