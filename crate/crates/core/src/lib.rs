//! Exact-enumeration Bayesian variable selection for normal linear regression.
//!
//! Every one of the `2^d` submodels is fitted and scored against the
//! intercept-only model with the robust mixture-of-g-priors Bayes factor. The
//! scores are combined with one of three objective model priors (uniform,
//! Scott-Berger, or the loss-based `exp(-c·|γ|)` prior) to give the model
//! posterior, inclusion probabilities, the highest and median probability
//! models, and the posterior of the model size.
//!
//! Around the engine sit a frequentist simulation harness, a subsampling
//! robustness study, and a numerical check of the KL projection between
//! linear models that underpins the loss-based prior.
//!
//! ```no_run
//! use lossprior::{builtin, compute_posterior, PriorSpec, QuadratureConfig, RobustPrior};
//!
//! let hald = builtin("hald").unwrap();
//! let post = compute_posterior(
//!     &hald.x,
//!     &hald.y,
//!     PriorSpec::loss(1.0).unwrap(),
//!     &RobustPrior::default(),
//!     &QuadratureConfig::default(),
//! )
//! .unwrap();
//! println!("{:?}", post.summary().inclusion);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod kl;
pub mod marginal;
pub mod model_space;
pub mod posterior;
pub mod priors;
pub mod quadrature;
pub mod report;
pub mod robustness;
pub mod rng;
pub mod sim;

pub use data::{builtin, load_csv, Dataset, Transform};
pub use error::{Error, Result};
pub use marginal::{
    conditional_log_bf, g_log_density, robust_log_bf, sample_g, RhoRule, RobustBayesFactor,
    RobustHyper, RobustPrior,
};
pub use model_space::{all_subset_stats, enumerate_models, fit_submodel, Gamma, SufficientStats};
pub use posterior::{compute_posterior, ModelPosterior, ModelScores, PosteriorSummary, SizePosterior};
pub use priors::PriorSpec;
pub use quadrature::QuadratureConfig;
