//! Prior mass of a single model as a function of its size.
//!
//! ```text
//! cargo run --example prior_curve [d] [c]
//! ```

use lossprior::PriorSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d: usize = std::env::args().nth(1).map_or(Ok(30), |s| s.parse())?;
    let c: f64 = std::env::args().nth(2).map_or(Ok(1.0), |s| s.parse())?;
    let priors = [PriorSpec::Uniform, PriorSpec::ScottBerger, PriorSpec::loss(c)?];

    println!("{:>3} {:>14} {:>14} {:>14}", "k", "uniform", "scott-berger", format!("loss(c={c})"));
    let curves: Vec<Vec<(usize, f64)>> = priors.iter().map(|p| p.prior_curve(d)).collect::<Result<_, _>>()?;
    for (k, ((_, u), ((_, sb), (_, l)))) in curves[0].iter().zip(curves[1].iter().zip(&curves[2])).enumerate() {
        println!("{:>3} {:>14.6e} {:>14.6e} {:>14.6e}", k, u.exp(), sb.exp(), l.exp());
    }
    let loss = priors[2];
    println!("\nprior inclusion probability under {loss}: {:.4}", loss.prior_inclusion()?);
    let sizes = loss.size_prior(d)?;
    let mean: f64 = sizes.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    println!("expected model size under {loss}: {mean:.3}");
    Ok(())
}
