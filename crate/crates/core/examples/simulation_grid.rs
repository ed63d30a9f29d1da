//! The full 36-case simulation grid, written as CSV.
//!
//! ```text
//! cargo run --release --example simulation_grid -- [replicates] [seed] [out.csv]
//! ```

use lossprior::sim::{standard_grid, run_grid, table_csv, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(Ok(200), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let out = args.next().unwrap_or_else(|| "simulation_table.csv".into());

    let cases = standard_grid(reps, seed);
    let start = std::time::Instant::now();
    let results = run_grid(&cases, &SimConfig::default(), |r| {
        let line: Vec<String> = r
            .metrics
            .iter()
            .map(|m| format!("{} {:.3}/{:.3}", m.prior, m.coverage, m.mse_mean))
            .collect();
        eprintln!(
            "[{:>6.0} s] n={:<3} d={:<2} omega={:<4}  {}",
            start.elapsed().as_secs_f64(),
            r.case.n,
            r.case.d,
            r.case.omega,
            line.join("  ")
        );
    })?;
    std::fs::write(&out, table_csv(&results))?;
    println!("wrote {out}");
    Ok(())
}
