//! US crime data (47 states, 15 covariates, 32768 models).
//!
//! ```text
//! cargo run --release --example uscrime_analysis [uscrime|uscrime-log]
//! ```

use lossprior::report::Analysis;
use lossprior::{builtin, ModelScores, PriorSpec, QuadratureConfig, RobustPrior};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "uscrime".into());
    let data = builtin(&name)?;
    let robust = RobustPrior::default();
    let q = QuadratureConfig::default();

    let start = std::time::Instant::now();
    let scores = ModelScores::compute(&data.x, &data.y, &robust, &q)?;
    println!("{}: scored {} models in {:.2} s\n", name, scores.log_bf.len(), start.elapsed().as_secs_f64());

    let priors = [PriorSpec::Uniform, PriorSpec::ScottBerger, PriorSpec::loss(1.0)?];
    let analyses: Vec<Analysis> = priors
        .iter()
        .map(|&p| Analysis::from_scores(&data, &scores, p, &robust, &q, 3))
        .collect::<Result<_, _>>()?;

    println!("{:<14} {:>6} {:>6} {:>6} {:>8} {:>4} {:>4}", "prior", "mean", "median", "sd", "95% CI", "HPM", "MPM");
    for a in &analyses {
        let s = &a.summary;
        println!(
            "{:<14} {:>6.2} {:>6} {:>6.2} {:>8} {:>4} {:>4}",
            a.prior.to_string(),
            s.size.mean,
            s.size.median,
            s.size.sd,
            format!("({},{})", s.size.ci95.0, s.size.ci95.1),
            s.hpm.size(),
            s.mpm.size()
        );
    }

    println!("\n{:<45} {:>8} {:>8} {:>8}", "covariate", "uniform", "S&B", "c = 1");
    for (j, cov) in data.covariate_names.iter().enumerate() {
        let w: Vec<f64> = analyses.iter().map(|a| a.summary.inclusion[j]).collect();
        let mark = if w[2] > 0.5 { " *" } else { "" };
        println!("{:<45} {:>8.2} {:>8.2} {:>8.2}{mark}", cov, w[0], w[1], w[2]);
    }
    Ok(())
}
