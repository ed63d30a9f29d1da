//! Hald cement data under every model prior.
//!
//! All 16 models are scored once; each prior then reuses the Bayes factors.
//!
//! ```text
//! cargo run --release --example hald_analysis
//! ```

use lossprior::report::Analysis;
use lossprior::{builtin, ModelScores, PriorSpec, QuadratureConfig, RobustPrior};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hald = builtin("hald")?;
    let robust = RobustPrior::default();
    let q = QuadratureConfig::default();
    let scores = ModelScores::compute(&hald.x, &hald.y, &robust, &q)?;

    let priors = [
        PriorSpec::Uniform,
        PriorSpec::ScottBerger,
        PriorSpec::loss(0.5)?,
        PriorSpec::loss(1.0)?,
        PriorSpec::loss(1.5)?,
        PriorSpec::loss(2.0)?,
    ];

    println!("Posterior of the model size");
    println!("{:<14} {:>6} {:>6} {:>6} {:>8} {:>4} {:>4} {:>8}", "prior", "mean", "median", "sd", "95% CI", "HPM", "MPM", "P(HPM)");
    let mut analyses = Vec::new();
    for p in priors {
        let a = Analysis::from_scores(&hald, &scores, p, &robust, &q, 5)?;
        let s = &a.summary;
        println!(
            "{:<14} {:>6.2} {:>6} {:>6.2} {:>8} {:>4} {:>4} {:>8.3}",
            p.to_string(),
            s.size.mean,
            s.size.median,
            s.size.sd,
            format!("({},{})", s.size.ci95.0, s.size.ci95.1),
            s.hpm.size(),
            s.mpm.size(),
            s.hpm_prob
        );
        analyses.push(a);
    }

    println!("\nPosterior inclusion probabilities");
    print!("{:<30}", "covariate");
    for a in &analyses {
        print!(" {:>10}", a.prior.to_string());
    }
    println!();
    for (j, name) in hald.covariate_names.iter().enumerate() {
        print!("{name:<30}");
        for a in &analyses {
            print!(" {:>10.2}", a.summary.inclusion[j]);
        }
        println!();
    }

    println!("\nTop models under loss(c=1)");
    for m in &analyses[3].top_models {
        println!("{:>2}  {:<12} R² = {:.4}  posterior = {:.4}", m.rank, m.model.to_string(), m.r2, m.posterior);
    }
    Ok(())
}
