//! Model posterior over the full model space and its summaries.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::{RobustBayesFactor, RobustPrior};
use crate::model_space::{all_subset_stats, Gamma, SufficientStats};
use crate::priors::PriorSpec;
use crate::quadrature::{log_sum_exp, QuadratureConfig};

/// Log Bayes factors against the null for every model, prior-free.
///
/// Scoring is the expensive step; applying a model prior to it is cheap, so
/// one `ModelScores` is shared across all priors being compared.
#[derive(Debug, Clone)]
pub struct ModelScores {
    pub n: usize,
    pub d: usize,
    pub stats: Vec<SufficientStats>,
    pub log_bf: Vec<f64>,
}

impl ModelScores {
    /// Fits and scores all `2^d` models. Model scoring runs on the rayon pool;
    /// results land in enumeration order whatever the thread count.
    pub fn compute(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        prior: &RobustPrior,
        q: &QuadratureConfig,
    ) -> Result<Self> {
        let stats = all_subset_stats(x, y)?;
        let evaluator = RobustBayesFactor::new(y.len(), x.ncols(), *prior, *q)?;
        Self::from_stats(stats, &evaluator)
    }

    pub fn from_stats(stats: Vec<SufficientStats>, evaluator: &RobustBayesFactor) -> Result<Self> {
        let d = evaluator.d();
        if stats.len() != 1usize << d {
            return Err(Error::invalid(
                "model scores",
                format!("expected {} models, got {}", 1usize << d, stats.len()),
            ));
        }
        let log_bf = stats
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                evaluator.log_bf(s).map_err(|e| match e {
                    Error::QuadratureFailure { previous, last, .. } => Error::QuadratureFailure {
                        gamma: Some(Gamma::from_bits(i as u32, d).expect("index in range")),
                        previous,
                        last,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ModelScores {
            n: evaluator.n(),
            d,
            stats,
            log_bf,
        })
    }
}

/// Normalized posterior over the `2^d` models, indexed by enumeration order.
#[derive(Debug, Clone, Serialize)]
pub struct ModelPosterior {
    pub d: usize,
    pub prior: PriorSpec,
    pub log_bf: Vec<f64>,
    pub log_prior: Vec<f64>,
    pub log_post: Vec<f64>,
}

/// Discrete posterior of the model size with the usual summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizePosterior {
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub median: usize,
    pub sd: f64,
    pub ci95: (usize, usize),
}

/// Everything reported for one analysis.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub prior: PriorSpec,
    pub inclusion: Vec<f64>,
    pub hpm: Gamma,
    pub hpm_prob: f64,
    pub mpm: Gamma,
    pub size: SizePosterior,
}

/// One model's line in a top-K table.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRecord {
    pub rank: usize,
    pub model: Gamma,
    pub size: usize,
    pub r2: f64,
    pub log_bf: f64,
    pub log_prior: f64,
    pub posterior: f64,
}

/// Scores every model and applies `spec`.
pub fn compute_posterior(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: PriorSpec,
    prior: &RobustPrior,
    q: &QuadratureConfig,
) -> Result<ModelPosterior> {
    spec.validate()?;
    let scores = ModelScores::compute(x, y, prior, q)?;
    ModelPosterior::new(&scores.log_bf, scores.d, spec)
}

impl ModelPosterior {
    /// Combines Bayes factors (in enumeration order) with a model prior.
    pub fn new(log_bf: &[f64], d: usize, spec: PriorSpec) -> Result<Self> {
        spec.validate()?;
        if log_bf.len() != 1usize << d {
            return Err(Error::invalid(
                "posterior",
                format!("expected {} Bayes factors, got {}", 1usize << d, log_bf.len()),
            ));
        }
        let by_size: Vec<f64> = (0..=d)
            .map(|k| spec.log_prior_size(d, k))
            .collect::<Result<_>>()?;
        let log_prior: Vec<f64> = (0..log_bf.len())
            .map(|i| by_size[(i as u32).count_ones() as usize])
            .collect();
        let joint: Vec<f64> = log_bf.iter().zip(&log_prior).map(|(b, p)| b + p).collect();
        let norm = log_sum_exp(&joint);
        let log_post = joint.iter().map(|v| v - norm).collect();
        Ok(ModelPosterior {
            d,
            prior: spec,
            log_bf: log_bf.to_vec(),
            log_prior,
            log_post,
        })
    }

    pub fn len(&self) -> usize {
        self.log_post.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_post.is_empty()
    }

    pub fn model(&self, index: usize) -> Gamma {
        Gamma::from_bits(index as u32, self.d).expect("index within model space")
    }

    /// The models in enumeration order.
    pub fn models(&self) -> impl Iterator<Item = Gamma> + '_ {
        (0..self.len()).map(|i| self.model(i))
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.log_post[index].exp()
    }

    /// `Pr(γ_j = 1 | y)` for each covariate.
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        let mut incl = vec![0.0; self.d];
        for (i, lp) in self.log_post.iter().enumerate() {
            let p = lp.exp();
            let mut bits = i;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                incl[j] += p;
                bits &= bits - 1;
            }
        }
        incl.iter_mut().for_each(|v| *v = v.min(1.0));
        incl
    }

    /// Highest-probability model. Ties go to the smaller model, then to the
    /// lower enumeration index.
    pub fn hpm(&self) -> (Gamma, f64) {
        let mut best = 0usize;
        for i in 1..self.len() {
            let (a, b) = (self.log_post[i], self.log_post[best]);
            let smaller = (i.count_ones()) < (best.count_ones());
            if a > b || (a == b && smaller) {
                best = i;
            }
        }
        (self.model(best), self.prob(best))
    }

    /// Median-probability model: every covariate with inclusion at least 1/2.
    pub fn mpm(&self, inclusion: &[f64]) -> Gamma {
        let idx: Vec<usize> = inclusion
            .iter()
            .enumerate()
            .filter(|(_, &w)| w >= 0.5)
            .map(|(j, _)| j)
            .collect();
        Gamma::from_indices(&idx, self.d).expect("indices within d")
    }

    pub fn size_posterior(&self) -> SizePosterior {
        let mut pmf = vec![0.0; self.d + 1];
        for (i, lp) in self.log_post.iter().enumerate() {
            pmf[(i as u32).count_ones() as usize] += lp.exp();
        }
        SizePosterior::from_pmf(pmf)
    }

    pub fn summary(&self) -> PosteriorSummary {
        let inclusion = self.inclusion_probabilities();
        let (hpm, hpm_prob) = self.hpm();
        let mpm = self.mpm(&inclusion);
        PosteriorSummary {
            prior: self.prior,
            inclusion,
            hpm,
            hpm_prob,
            mpm,
            size: self.size_posterior(),
        }
    }

    /// The `k` most probable models, ties broken by enumeration index.
    pub fn top_models(&self, k: usize, stats: Option<&[SufficientStats]>) -> Vec<ModelRecord> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.log_post[b]
                .partial_cmp(&self.log_post[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(rank, i)| ModelRecord {
                rank: rank + 1,
                model: self.model(i),
                size: (i as u32).count_ones() as usize,
                r2: stats.map_or(f64::NAN, |s| s[i].r2),
                log_bf: self.log_bf[i],
                log_prior: self.log_prior[i],
                posterior: self.prob(i),
            })
            .collect()
    }
}

impl SizePosterior {
    /// Summaries of a size distribution. The median and interval ends are the
    /// smallest sizes whose CDF reaches 0.5, 0.025 and 0.975.
    pub fn from_pmf(pmf: Vec<f64>) -> Self {
        let total: f64 = pmf.iter().sum();
        let pmf: Vec<f64> = pmf.iter().map(|p| p / total).collect();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        let sd = (second - mean * mean).max(0.0).sqrt();
        let quantile = |level: f64| {
            let mut cdf = 0.0;
            for (k, p) in pmf.iter().enumerate() {
                cdf += p;
                if cdf >= level {
                    return k;
                }
            }
            pmf.len() - 1
        };
        SizePosterior {
            mean,
            median: quantile(0.5),
            sd,
            ci95: (quantile(0.025), quantile(0.975)),
            pmf,
        }
    }

    /// Point mass at size `k` among sizes `0..=d`.
    pub fn point_mass(k: usize, d: usize) -> Self {
        let mut pmf = vec![0.0; d + 1];
        pmf[k] = 1.0;
        SizePosterior::from_pmf(pmf)
    }

    pub fn covers(&self, k: usize) -> bool {
        self.ci95.0 <= k && k <= self.ci95.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_normalizes_and_decomposes() {
        let log_bf = vec![0.0, 1.5, -0.3, 2.2];
        let mp = ModelPosterior::new(&log_bf, 2, PriorSpec::Loss { c: 1.0 }).unwrap();
        let total: f64 = mp.log_post.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let joint: Vec<f64> = log_bf.iter().zip(&mp.log_prior).map(|(a, b)| a + b).collect();
        let norm = log_sum_exp(&joint);
        for (post, joint) in mp.log_post.iter().zip(&joint) {
            assert!((post - (joint - norm)).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_prior_preserves_bf_ranking() {
        let log_bf = vec![0.0, 3.1, -0.3, 2.2, 0.7, 5.0, -1.0, 4.4];
        let mp = ModelPosterior::new(&log_bf, 3, PriorSpec::Uniform).unwrap();
        let rank = |v: &[f64]| {
            let mut o: Vec<usize> = (0..v.len()).collect();
            o.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap());
            o
        };
        assert_eq!(rank(&log_bf), rank(&mp.log_post));
    }

    #[test]
    fn full_model_point_mass() {
        let mut log_bf = vec![-800.0; 8];
        log_bf[7] = 0.0;
        let mp = ModelPosterior::new(&log_bf, 3, PriorSpec::Uniform).unwrap();
        for w in mp.inclusion_probabilities() {
            assert!((w - 1.0).abs() < 1e-15);
        }
        let s = mp.summary();
        assert_eq!(s.hpm, Gamma::full(3));
        assert_eq!(s.mpm, Gamma::full(3));
    }

    #[test]
    fn hpm_tie_breaks_toward_smaller_models() {
        // {0,1} (index 3) and {2} (index 4) tie
        let log_bf = vec![-5.0, -5.0, -5.0, 1.0, 1.0, -5.0, -5.0, -5.0];
        let mp = ModelPosterior::new(&log_bf, 3, PriorSpec::Uniform).unwrap();
        assert_eq!(mp.hpm().0.to_vec(), vec![2]);
        // same size: lowest index wins
        let log_bf = vec![-5.0, 1.0, 1.0, -5.0];
        let mp = ModelPosterior::new(&log_bf, 2, PriorSpec::Uniform).unwrap();
        assert_eq!(mp.hpm().0.to_vec(), vec![0]);
    }

    #[test]
    fn mpm_boundary_is_inclusive() {
        let log_bf = vec![0.0, 0.0];
        let mp = ModelPosterior::new(&log_bf, 1, PriorSpec::Uniform).unwrap();
        let incl = mp.inclusion_probabilities();
        assert!((incl[0] - 0.5).abs() < 1e-15);
        assert_eq!(mp.mpm(&[0.5]).to_vec(), vec![0]);
        assert_eq!(mp.mpm(&[0.4999]).size(), 0);
    }

    #[test]
    fn size_summaries() {
        let s = SizePosterior::point_mass(2, 4);
        assert_eq!((s.mean, s.sd, s.median, s.ci95), (2.0, 0.0, 2, (2, 2)));
        let s = SizePosterior::from_pmf(vec![0.02, 0.5, 0.3, 0.18]);
        assert_eq!(s.median, 1);
        assert_eq!(s.ci95, (1, 3));
        assert!((s.mean - 1.64).abs() < 1e-12);
        assert_eq!(SizePosterior::from_pmf(vec![0.03, 0.5, 0.3, 0.17]).ci95, (0, 3));
        let var: f64 = s.pmf.iter().enumerate().map(|(k, p)| (k as f64 - s.mean).powi(2) * p).sum();
        assert!((s.sd - var.sqrt()).abs() < 1e-12);
        assert!(!s.covers(0) && s.covers(3));
    }

    #[test]
    fn top_models_are_sorted() {
        let log_bf = vec![0.0, 3.1, -0.3, 2.2];
        let mp = ModelPosterior::new(&log_bf, 2, PriorSpec::Uniform).unwrap();
        let top = mp.top_models(3, None);
        assert_eq!(top.len(), 3);
        assert_eq!(top[0].model.to_vec(), vec![0]);
        assert!(top.windows(2).all(|w| w[0].posterior >= w[1].posterior));
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(ModelPosterior::new(&[0.0, 1.0, 2.0], 2, PriorSpec::Uniform).is_err());
    }
}
