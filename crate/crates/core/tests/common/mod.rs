//! Reference computations written independently of the library internals.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use quadrature::double_exponential;

/// Log Bayes factor at fixed `g`, straight from the closed form.
pub fn log_bf_given_g(n: usize, k: usize, r2: f64, g: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    0.5 * (n - 1.0 - k) * (1.0 + g).ln() - 0.5 * (n - 1.0) * (1.0 + g * (1.0 - r2)).ln()
}

/// Robust-prior log density of `g` with `ρ = 1/(k+1)`.
pub fn log_density(n: usize, k: usize, a: f64, b: f64, g: f64) -> f64 {
    let scale = (b + n as f64) / (k as f64 + 1.0);
    a.ln() + a * scale.ln() - (a + 1.0) * (g + b).ln()
}

pub fn lower_bound(n: usize, k: usize, b: f64) -> f64 {
    (b + n as f64) / (k as f64 + 1.0) - b
}

/// `ln ∫ exp(log_f(g)) dg` over `(lo, ∞)` with `g = lo + e^t`, split into
/// half-unit pieces each handled by tanh-sinh quadrature.
pub fn integrate_above(lo: f64, log_f: impl Fn(f64) -> f64) -> f64 {
    let (t0, t1) = (-80.0, 160.0);
    let h = |t: f64| log_f(lo + f64::exp(t)) + t;
    let mut shift = f64::NEG_INFINITY;
    let mut t = t0;
    while t <= t1 {
        shift = shift.max(h(t));
        t += 0.005;
    }
    let pieces = ((t1 - t0) / 0.5) as usize;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = t0 + 0.5 * i as f64;
        let r = double_exponential::integrate(|t| (h(t) - shift).exp(), a, a + 0.5, 1e-16);
        total += r.integral;
    }
    shift + total.ln()
}

/// Adaptive-quadrature reference for the robust log Bayes factor.
pub fn oracle_log_bf(n: usize, k: usize, r2: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (a, b) = (0.5, 1.0);
    integrate_above(lower_bound(n, k, b), |g| {
        log_bf_given_g(n, k, r2, g) + log_density(n, k, a, b, g)
    })
}

/// R² of the intercept-augmented regression on `cols`, by normal equations.
pub fn r2_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> f64 {
    let n = y.len();
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if cols.is_empty() {
        return 0.0;
    }
    let z = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { x[(i, cols[j - 1])] });
    let ztz = z.transpose() * &z;
    let zty = z.transpose() * y;
    let beta = ztz.lu().solve(&zty).expect("full rank");
    let resid = y - z * beta;
    1.0 - resid.norm_squared() / sst
}

/// Deterministic design matrix and response from a linear congruential
/// sequence, so that these helpers do not share the library's RNG plumbing.
pub fn lcg_data(n: usize, d: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let x = DMatrix::from_fn(n, d, |_, _| next());
    let noise: Vec<f64> = (0..n).map(|_| next()).collect();
    let y = DVector::from_fn(n, |i, _| {
        let signal: f64 = (0..d).map(|j| x[(i, j)] * if j % 2 == 0 { 1.5 } else { 0.0 }).sum();
        signal + noise[i]
    });
    (x, y)
}
