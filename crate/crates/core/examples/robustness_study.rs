//! Subsampling study on a packaged dataset.
//!
//! ```text
//! cargo run --release --example robustness_study -- [hald|uscrime] [replicates]
//! ```

use lossprior::robustness::{run_robustness, summarize, RobustnessConfig, SubsampleSize};
use lossprior::{builtin, compute_posterior, PriorSpec, QuadratureConfig, RobustPrior};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "hald".into());
    let reps: usize = std::env::args().nth(2).map_or(Ok(500), |s| s.parse())?;
    let data = builtin(&name)?;
    let rows = if name == "hald" { 10 } else { 40 };
    let cfg = RobustnessConfig {
        size: SubsampleSize::Count(rows),
        replicates: reps,
        seed: 2024,
        ..RobustnessConfig::default()
    };
    let run = run_robustness(&data.x, &data.y, &cfg)?;
    let summaries = summarize(&run)?;

    println!("{name}: {reps} subsamples of {rows} rows\n");
    println!("{:<14} {:>9} {:>8} {:>8} {:>8} {:>8}", "prior", "full data", "q1", "median", "q3", "max");
    for s in &summaries {
        let full = compute_posterior(&data.x, &data.y, s.prior, &RobustPrior::default(), &QuadratureConfig::default())?
            .size_posterior()
            .mean;
        let f = s.mean_size;
        println!(
            "{:<14} {:>9.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            s.prior.to_string(),
            full,
            f.q1,
            f.median,
            f.q3,
            f.max
        );
    }

    let loss = summaries.iter().find(|s| s.prior == PriorSpec::Loss { c: 1.0 }).expect("configured");
    println!("\nInclusion probabilities under loss(c=1): quartiles over subsamples");
    for (name, f) in data.covariate_names.iter().zip(&loss.inclusion) {
        println!("{name:<45} {:.2}  {:.2}  {:.2}", f.q1, f.median, f.q3);
    }
    Ok(())
}
