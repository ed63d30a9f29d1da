//! Loading a user CSV file, with and without a log transform.
//!
//! ```text
//! cargo run --example custom_dataset -- path/to/file.csv response_column
//! ```
//!
//! Without arguments a small synthetic file is written to a temporary folder.

use lossprior::{compute_posterior, load_csv, PriorSpec, QuadratureConfig, RobustPrior, Transform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (path, response) = match (args.next(), args.next()) {
        (Some(p), Some(r)) => (std::path::PathBuf::from(p), r),
        _ => {
            let path = std::env::temp_dir().join("lossprior_example.csv");
            let mut text = String::from("x1,x2,x3,y\n");
            for i in 1..=25 {
                let t = i as f64;
                let (x1, x2, x3) = (t.sqrt(), (t * 0.7).sin() + 2.0, (t * 1.3).cos() + 3.0);
                let y = (1.0 + 0.8 * x1.ln() + 0.05 * (t * 2.1).sin()).exp();
                text.push_str(&format!("{x1},{x2},{x3},{y}\n"));
            }
            std::fs::write(&path, text)?;
            (path, "y".to_string())
        }
    };

    for transform in [Transform::None, Transform::LogAll] {
        let ds = load_csv(&path, &response, transform)?;
        let post = compute_posterior(&ds.x, &ds.y, PriorSpec::loss(1.0)?, &RobustPrior::default(), &QuadratureConfig::default())?;
        let s = post.summary();
        println!("transform {transform}: n = {}, d = {}", ds.n(), ds.d());
        for (name, w) in ds.covariate_names.iter().zip(&s.inclusion) {
            println!("  {name:<10} {w:.3}");
        }
        println!("  HPM {} with probability {:.3}", s.hpm, s.hpm_prob);
    }
    Ok(())
}
