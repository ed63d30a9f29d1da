//! The robust Bayes factor for a single model, three ways.
//!
//! ```text
//! cargo run --release --example bayes_factor -- [n] [k] [r2]
//! ```

use rand::{Rng, SeedableRng};

use lossprior::{conditional_log_bf, robust_log_bf, sample_g, QuadratureConfig, RobustPrior, SufficientStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(30), |s| s.parse())?;
    let k: usize = args.next().map_or(Ok(3), |s| s.parse())?;
    let r2: f64 = args.next().map_or(Ok(0.6), |s| s.parse())?;

    let stats = SufficientStats::from_r2(n, k, r2)?;
    let h = RobustPrior::default().bind(n, k, k)?;
    println!("n = {n}, k = {k}, R² = {r2}; g > {:.4}", h.lower_bound());

    let fine = robust_log_bf(&stats, &h, &QuadratureConfig::default())?;
    let coarse = robust_log_bf(
        &stats,
        &h,
        &QuadratureConfig {
            nodes: 24,
            ..QuadratureConfig::default()
        },
    )?;
    println!("log BF, 201-node rule:  {fine:.12}");
    println!("log BF, 24-node rule:   {coarse:.12}");

    let draws = 1_000_000;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
    let values: Vec<f64> = (0..draws)
        .map(|_| {
            let g = sample_g(rng.gen_range(f64::MIN_POSITIVE..1.0), &h).expect("u in (0, 1)");
            conditional_log_bf(&stats, g).exp()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / draws as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
    println!(
        "Monte Carlo ({draws} draws): {:.6} ± {:.6} (BF {:.6} by quadrature)",
        mean,
        sd / (draws as f64).sqrt(),
        fine.exp()
    );
    Ok(())
}
