//! One cell of the simulation study.
//!
//! ```text
//! cargo run --release --example simulation_case -- [n] [d] [omega] [replicates] [seed]
//! ```

use lossprior::sim::{run_case, SimCase, SimConfig, DESK_REPLICATES};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = SimCase::new(arg(1, 30), arg(2, 5), arg(3, 0.15), arg(4, DESK_REPLICATES), arg(5, 1))?;
    let start = std::time::Instant::now();
    let result = run_case(&case, &SimConfig::default())?;
    println!(
        "n = {}, d = {}, omega = {}, {} replicates ({:.1} s)",
        case.n,
        case.d,
        case.omega,
        case.replicates,
        start.elapsed().as_secs_f64()
    );
    println!("{:<14} {:>17} {:>17} {:>17}", "prior", "coverage", "MSE mean", "MSE median");
    for m in &result.metrics {
        println!(
            "{:<14} {:>8.3} ± {:<6.3} {:>8.3} ± {:<6.3} {:>8.3} ± {:<6.3}",
            m.prior.to_string(),
            m.coverage,
            m.se_coverage,
            m.mse_mean,
            m.se_mse_mean,
            m.mse_median,
            m.se_mse_median
        );
    }
    Ok(())
}
