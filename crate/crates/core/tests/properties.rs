//! Invariants over randomly generated inputs.

mod common;

use lossprior::data::parse_csv;
use lossprior::sim::{generate_replicate, SimCase};
use lossprior::{
    compute_posterior, robust_log_bf, Gamma, ModelPosterior, PriorSpec, QuadratureConfig, RobustPrior,
    SizePosterior, SufficientStats, Transform,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn prior_strategy() -> impl Strategy<Value = PriorSpec> {
    prop_oneof![
        Just(PriorSpec::Uniform),
        Just(PriorSpec::ScottBerger),
        (0.01f64..5.0).prop_map(|c| PriorSpec::Loss { c }),
    ]
}

fn log_bf_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|d| (Just(d), prop::collection::vec(-30.0f64..30.0, 1 << d)))
}

fn log_bf(n: usize, k: usize, r2: f64) -> f64 {
    let stats = SufficientStats::from_r2(n, k, r2).unwrap();
    let h = RobustPrior::default().bind(n, k, k).unwrap();
    robust_log_bf(&stats, &h, &QuadratureConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_mass_sums_to_one(d in 1usize..=15, prior in prior_strategy()) {
        let total: f64 = (0..=d)
            .map(|k| prior.log_prior_size(d, k).unwrap().exp() * lossprior::priors::binomial(d, k) as f64)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let sizes: f64 = prior.size_prior(d).unwrap().iter().sum();
        prop_assert!((sizes - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loss_size_prior_is_binomial(d in 1usize..=15, c in 0.01f64..5.0) {
        let w = 1.0 / (c.exp() + 1.0);
        let sizes = PriorSpec::Loss { c }.size_prior(d).unwrap();
        for (k, p) in sizes.iter().enumerate() {
            let want = lossprior::priors::binomial(d, k) as f64 * w.powi(k as i32) * (1.0 - w).powi((d - k) as i32);
            prop_assert!((p - want).abs() < 1e-13 * want.max(1e-300) + 1e-300, "k {}: {} vs {}", k, p, want);
        }
    }

    #[test]
    fn posterior_is_normalized((d, bf) in log_bf_strategy(), prior in prior_strategy()) {
        let post = ModelPosterior::new(&bf, d, prior).unwrap();
        let total: f64 = (0..post.len()).map(|i| post.prob(i)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let incl = post.inclusion_probabilities();
        prop_assert!(incl.iter().all(|w| (-1e-15..=1.0 + 1e-12).contains(w)));
        let size = post.size_posterior();
        prop_assert!((size.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // expected size equals the sum of inclusion probabilities
        prop_assert!((size.mean - incl.iter().sum::<f64>()).abs() < 1e-10);
        prop_assert!(size.ci95.0 <= size.median && size.median <= size.ci95.1);
        let (hpm, p) = post.hpm();
        prop_assert!((0..post.len()).all(|i| post.prob(i) <= p));
        prop_assert_eq!(post.prob(hpm.index()), p);
    }

    #[test]
    fn mpm_thresholds_inclusion((d, bf) in log_bf_strategy(), prior in prior_strategy()) {
        let post = ModelPosterior::new(&bf, d, prior).unwrap();
        let incl = post.inclusion_probabilities();
        let mpm = post.mpm(&incl);
        for (j, w) in incl.iter().enumerate() {
            prop_assert_eq!(mpm.contains(j), *w >= 0.5);
        }
    }

    #[test]
    fn size_quantiles_follow_the_cdf(pmf in prop::collection::vec(0.0f64..1.0, 1..16)) {
        prop_assume!(pmf.iter().sum::<f64>() > 1e-6);
        let z: f64 = pmf.iter().sum();
        let pmf: Vec<f64> = pmf.iter().map(|p| p / z).collect();
        let s = SizePosterior::from_pmf(pmf.clone());
        let cdf = |k: usize| pmf[..=k].iter().sum::<f64>();
        for (level, q) in [(0.025, s.ci95.0), (0.5, s.median), (0.975, s.ci95.1)] {
            prop_assert!(cdf(q) >= level - 1e-12);
            prop_assert!(q == 0 || cdf(q - 1) < level + 1e-12);
        }
    }

    #[test]
    fn bayes_factor_increases_with_fit(n in 15usize..100, k in 1usize..=10, r2 in 0.0f64..0.98, step in 0.001f64..0.01) {
        prop_assert!(log_bf(n, k, r2 + step) > log_bf(n, k, r2));
    }

    #[test]
    fn useless_covariates_are_penalized(n in 15usize..100, k in 1usize..=10) {
        prop_assert!(log_bf(n, k, 0.0) < 0.0);
    }

    #[test]
    fn gamma_round_trips(d in 1usize..=30, bits in any::<u32>()) {
        let bits = bits & ((1u32 << d) - 1);
        let g = Gamma::from_bits(bits, d).unwrap();
        prop_assert_eq!(Gamma::from_indices(&g.to_vec(), d).unwrap(), g);
        prop_assert_eq!(g.size(), bits.count_ones() as usize);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_exact(n in 8usize..30, d in 1usize..5, seed in any::<u64>()) {
        let (x, y) = common::lcg_data(n, d, seed);
        let y = y.map(|v| v + 10.0);
        let mut text = (0..d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",") + ",y\n";
        for i in 0..n {
            let row: Vec<String> = (0..d).map(|j| x[(i, j)].to_string()).chain([y[i].to_string()]).collect();
            text += &(row.join(",") + "\n");
        }
        let ds = parse_csv(text.as_bytes(), "generated", "generated", "y", Transform::None).unwrap();
        let again = parse_csv(ds.to_csv().as_bytes(), "again", "again", "y", Transform::None).unwrap();
        prop_assert_eq!(&ds.x, &x);
        prop_assert_eq!(&again.x, &ds.x);
        prop_assert_eq!(&again.y, &ds.y);
        prop_assert_eq!(again.covariate_names, ds.covariate_names);
    }

    #[test]
    fn reordering_columns_permutes_inclusion(seed in any::<u64>(), prior in prior_strategy(), rot in 1usize..4) {
        let (x, y) = common::lcg_data(25, 4, seed);
        let perm: Vec<usize> = (0..4).map(|j| (j + rot) % 4).collect();
        let xp = DMatrix::from_fn(25, 4, |i, j| x[(i, perm[j])]);
        let q = QuadratureConfig::default();
        let a = compute_posterior(&x, &y, prior, &RobustPrior::default(), &q).unwrap().inclusion_probabilities();
        let b = compute_posterior(&xp, &y, prior, &RobustPrior::default(), &q).unwrap().inclusion_probabilities();
        for j in 0..4 {
            prop_assert!((b[j] - a[perm[j]]).abs() < 1e-10);
        }
    }

    #[test]
    fn replicates_are_pure_functions_of_their_index(seed in any::<u64>(), rep in 0usize..50) {
        let case = SimCase::new(30, 5, 0.5, 50, seed).unwrap();
        let a = generate_replicate(&case, &RobustPrior::default(), rep).unwrap();
        let b = generate_replicate(&case, &RobustPrior::default(), rep).unwrap();
        prop_assert_eq!(&a.x, &b.x);
        prop_assert_eq!(&a.y, &b.y);
        prop_assert_eq!(a.truth, b.truth);
        let other = generate_replicate(&case, &RobustPrior::default(), (rep + 1) % 50).unwrap();
        prop_assert_ne!(&a.y, &other.y);
    }
}
