//! Library results against independently computed references.

mod common;

use common::*;
use lossprior::marginal::MIN_RESIDUAL;
use lossprior::{
    all_subset_stats, compute_posterior, conditional_log_bf, enumerate_models, fit_submodel, g_log_density,
    robust_log_bf, sample_g, ModelScores, PriorSpec, QuadratureConfig, RobustPrior, SufficientStats,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn instances(count: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(15..=100), rng.gen_range(0..=10), rng.gen_range(0.0..=0.99)))
        .collect()
}

fn robust(n: usize, k: usize, r2: f64) -> f64 {
    let stats = SufficientStats::from_r2(n, k, r2).unwrap();
    let h = RobustPrior::default().bind(n, k, k).unwrap();
    robust_log_bf(&stats, &h, &QuadratureConfig::default()).unwrap()
}

#[test]
fn r2_matches_normal_equations_for_every_subset() {
    let (x, y) = lcg_data(25, 6, 3);
    let walker = all_subset_stats(&x, &y).unwrap();
    for gamma in enumerate_models(6).unwrap() {
        let cols = gamma.to_vec();
        let want = r2_normal_equations(&x, &y, &cols);
        let qr = fit_submodel(&x, &y, gamma).unwrap();
        assert!((qr.r2 - want).abs() < 1e-12, "{gamma}: qr {} vs {want}", qr.r2);
        assert!((walker[gamma.index()].r2 - want).abs() < 1e-12, "{gamma}: walker");
        assert_eq!(walker[gamma.index()].k, cols.len());
    }
}

#[test]
fn single_covariate_r2_is_squared_correlation() {
    let (x, y) = lcg_data(40, 3, 11);
    let stats = all_subset_stats(&x, &y).unwrap();
    for j in 0..3 {
        let c = x.column(j);
        let (mx, my) = (c.mean(), y.mean());
        let sxy: f64 = c.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = c.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let r2 = sxy * sxy / (sxx * syy);
        assert!((stats[1 << j].r2 - r2).abs() < 1e-13);
    }
}

#[test]
fn conditional_bf_matches_closed_form() {
    for &(n, k, r2) in &instances(50, 1) {
        let stats = SufficientStats::from_r2(n, k, r2).unwrap();
        for g in [0.01, 1.0, 37.5, 1e6] {
            let want = if k == 0 { 0.0 } else { log_bf_given_g(n, k, r2, g) };
            assert!((conditional_log_bf(&stats, g) - want).abs() < 1e-10);
        }
    }
}

#[test]
fn small_case_matches_direct_integration() {
    // n = 6, k = 1: the whole integrand is elementary
    let n = 6;
    for r2 in [0.0, 0.3, 0.8, 0.95] {
        let got = robust(n, 1, r2);
        let want = oracle_log_bf(n, 1, r2);
        assert!(((got - want).exp() - 1.0).abs() < 1e-10, "R² {r2}: {got} vs {want}");
    }
}

#[test]
fn robust_bf_matches_adaptive_oracle() {
    for &(n, k, r2) in &instances(100, 2) {
        let got = robust(n, k, r2);
        let want = oracle_log_bf(n, k, r2);
        let rel = ((got - want).exp() - 1.0).abs();
        assert!(rel < 1e-8, "n {n} k {k} R² {r2}: {got} vs {want}");
    }
}

#[test]
fn robust_bf_matches_monte_carlo() {
    let draws = 1_000_000;
    for (i, (n, k, r2)) in [(30, 3, 0.6), (15, 10, 0.9), (100, 1, 0.05), (60, 5, 0.99)].into_iter().enumerate() {
        let got = robust(n, k, r2);
        let scale = (1.0 + n as f64) / (k as f64 + 1.0);
        let mut rng = ChaCha20Rng::seed_from_u64(100 + i as u64);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..draws {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let g = scale * u.powf(-2.0) - 1.0;
            let v = (log_bf_given_g(n, k, r2, g) - got).exp();
            sum += v;
            sq += v * v;
        }
        let mean = sum / draws as f64;
        let se = ((sq / draws as f64 - mean * mean) / (draws - 1) as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "n {n} k {k} R² {r2}: ratio {mean} ± {se}");
    }
}

#[test]
fn result_never_exceeds_the_conditional_maximum() {
    for &(n, k, r2) in &instances(100, 3) {
        let stats = SufficientStats::from_r2(n, k, r2).unwrap();
        let lo = lower_bound(n, k, 1.0);
        let peak = if k == 0 {
            0.0
        } else {
            let resid = (1.0 - r2).max(MIN_RESIDUAL);
            let g_star = ((n as f64 - 1.0) * r2 - k as f64) / (k as f64 * resid);
            conditional_log_bf(&stats, g_star.max(lo))
        };
        assert!(robust(n, k, r2) <= peak + 1e-12);
    }
}

#[test]
fn sample_g_passes_kolmogorov_smirnov() {
    let (n, k) = (30, 3);
    let h = RobustPrior::default().bind(n, k, k).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut g: Vec<f64> = (0..100_000)
        .map(|_| sample_g(rng.gen_range(f64::MIN_POSITIVE..1.0), &h).unwrap())
        .collect();
    g.sort_by(f64::total_cmp);
    let scale = (1.0 + n as f64) / (k as f64 + 1.0);
    let cdf = |v: f64| 1.0 - (scale / (v + 1.0)).sqrt();
    let m = g.len() as f64;
    let ks = g
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS distance {ks}");
    assert!(g[0] >= lower_bound(n, k, 1.0));
}

#[test]
fn g_density_integrates_to_one() {
    for (n, k) in [(13, 1), (30, 3), (47, 15), (100, 10)] {
        let h = RobustPrior::default().bind(n, k, k).unwrap();
        let log_mass = integrate_above(h.lower_bound(), |g| g_log_density(g, &h));
        assert!(log_mass.abs() < 1e-9, "n {n} k {k}: {log_mass}");
        let g = h.lower_bound() + 1.0;
        assert!((g_log_density(g, &h) - log_density(n, k, 0.5, 1.0, g)).abs() < 1e-13);
        assert_eq!(g_log_density(h.lower_bound() - 1e-9, &h), f64::NEG_INFINITY);
    }
}

#[test]
fn two_model_posterior_by_hand() {
    let (x, y) = lcg_data(20, 1, 8);
    let r2 = r2_normal_equations(&x, &y, &[0]);
    let log_bf = oracle_log_bf(20, 1, r2);
    for (prior, odds) in [
        (PriorSpec::Uniform, 1.0),
        (PriorSpec::ScottBerger, 1.0),
        (PriorSpec::Loss { c: 1.0 }, (-1.0f64).exp()),
    ] {
        let want = log_bf.exp() * odds / (1.0 + log_bf.exp() * odds);
        let post = compute_posterior(&x, &y, prior, &RobustPrior::default(), &QuadratureConfig::default()).unwrap();
        let got = post.inclusion_probabilities()[0];
        assert!((got - want).abs() < 1e-10, "{prior}: {got} vs {want}");
    }
}

#[test]
fn four_model_posterior_by_hand() {
    let (x, y) = lcg_data(30, 2, 21);
    let bf: Vec<f64> = [vec![], vec![0], vec![1], vec![0, 1]]
        .iter()
        .map(|cols| oracle_log_bf(30, cols.len(), r2_normal_equations(&x, &y, cols)).exp())
        .collect();
    let c: f64 = 0.7;
    // prior masses up to a constant: uniform 1, Scott-Berger 1/C(2,k), loss e^{-ck}
    let cases = [
        (PriorSpec::Uniform, [1.0, 1.0, 1.0, 1.0]),
        (PriorSpec::ScottBerger, [1.0, 0.5, 0.5, 1.0]),
        (PriorSpec::Loss { c }, [1.0, (-c).exp(), (-c).exp(), (-2.0 * c).exp()]),
    ];
    for (prior, mass) in cases {
        let w: Vec<f64> = bf.iter().zip(mass).map(|(b, m)| b * m).collect();
        let z: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|v| v / z).collect();
        let post = compute_posterior(&x, &y, prior, &RobustPrior::default(), &QuadratureConfig::default()).unwrap();
        for (i, want) in p.iter().enumerate() {
            assert!((post.prob(i) - want).abs() < 1e-10, "{prior} model {i}");
        }
        let incl = post.inclusion_probabilities();
        assert!((incl[0] - (p[1] + p[3])).abs() < 1e-10);
        assert!((incl[1] - (p[2] + p[3])).abs() < 1e-10);
        let size = post.size_posterior();
        assert!((size.mean - (p[1] + p[2] + 2.0 * p[3])).abs() < 1e-10);
    }
}

#[test]
fn doubling_nodes_is_stable_on_packaged_data() {
    let fine = QuadratureConfig {
        nodes: 402,
        ..QuadratureConfig::default()
    };
    for name in lossprior::data::BUILTINS {
        let ds = lossprior::builtin(name).unwrap();
        let a = ModelScores::compute(&ds.x, &ds.y, &RobustPrior::default(), &QuadratureConfig::default()).unwrap();
        let b = ModelScores::compute(&ds.x, &ds.y, &RobustPrior::default(), &fine).unwrap();
        let worst = a
            .log_bf
            .iter()
            .zip(&b.log_bf)
            .map(|(u, v)| ((u - v).exp() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{name}: {worst}");
    }
}
