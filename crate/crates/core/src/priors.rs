//! Prior distributions over the model space.
//!
//! Three priors are supported. All three depend on a model only through its
//! size, and all are normalized analytically:
//!
//! * uniform: `p(γ) = 2^{-d}`
//! * Scott-Berger: `p(γ) = [(d+1)·C(d,|γ|)]^{-1}`, a Beta(1,1) mixture over the
//!   common inclusion probability, which spreads mass evenly over sizes
//! * loss-based: `p(γ) ∝ exp(-c·|γ|)`, normalized by `(1 + e^{-c})^d`, which
//!   makes the size prior Binomial(d, 1/(e^c + 1))

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::{Gamma, MAX_COVARIATES};

/// Which model prior to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSpec {
    Uniform,
    ScottBerger,
    /// Loss-based prior with complexity constant `c > 0`.
    Loss { c: f64 },
}

impl PriorSpec {
    /// Loss-based prior; `c` must be a positive finite number.
    pub fn loss(c: f64) -> Result<Self> {
        let spec = PriorSpec::Loss { c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Loss { c } if !(c > 0.0 && c.is_finite()) => Err(Error::invalid(
                "prior",
                format!("loss prior needs c > 0 (got {c}); use the uniform prior for the c -> 0 limit"),
            )),
            _ => Ok(()),
        }
    }

    /// Short machine name: `uniform`, `scott-berger` or `loss`.
    pub fn kind(&self) -> &'static str {
        match self {
            PriorSpec::Uniform => "uniform",
            PriorSpec::ScottBerger => "scott-berger",
            PriorSpec::Loss { .. } => "loss",
        }
    }

    /// The loss constant, if any.
    pub fn c(&self) -> Option<f64> {
        match *self {
            PriorSpec::Loss { c } => Some(c),
            _ => None,
        }
    }

    /// Normalized log prior mass of model `γ`.
    pub fn log_prior(&self, gamma: Gamma) -> Result<f64> {
        self.log_prior_size(gamma.d(), gamma.size())
    }

    /// Normalized log prior mass of any single model of size `k` out of `d`.
    pub fn log_prior_size(&self, d: usize, k: usize) -> Result<f64> {
        self.validate()?;
        check_d(d)?;
        if k > d {
            return Err(Error::invalid("model size", format!("k = {k} exceeds d = {d}")));
        }
        Ok(match *self {
            PriorSpec::Uniform => -(d as f64) * std::f64::consts::LN_2,
            PriorSpec::ScottBerger => -((d + 1) as f64).ln() - ln_binomial(d, k),
            PriorSpec::Loss { c } => -c * k as f64 - d as f64 * (-c).exp().ln_1p(),
        })
    }

    /// Prior probability of each model size `k = 0..=d`.
    pub fn size_prior(&self, d: usize) -> Result<Vec<f64>> {
        (0..=d)
            .map(|k| Ok((ln_binomial(d, k) + self.log_prior_size(d, k)?).exp()))
            .collect()
    }

    /// Marginal prior probability that any one covariate is included.
    pub fn prior_inclusion(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            PriorSpec::Uniform | PriorSpec::ScottBerger => 0.5,
            // 1 / (e^c + 1), written to stay finite for large c
            PriorSpec::Loss { c } => (-c).exp() / (1.0 + (-c).exp()),
        })
    }

    /// Per-model log prior mass at each size `k = 0..=d`.
    ///
    /// Every model of a given size carries the same mass, so one value per size
    /// describes the whole prior.
    pub fn prior_curve(&self, d: usize) -> Result<Vec<(usize, f64)>> {
        if d == 0 {
            return Err(Error::invalid("prior curve", "needs d >= 1"));
        }
        (0..=d).map(|k| Ok((k, self.log_prior_size(d, k)?))).collect()
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Loss { c } => write!(f, "loss(c={c})"),
            other => f.write_str(other.kind()),
        }
    }
}

fn check_d(d: usize) -> Result<()> {
    if d > MAX_COVARIATES {
        return Err(Error::Capacity {
            d,
            cap: MAX_COVARIATES,
        });
    }
    Ok(())
}

/// Exact binomial coefficient; `d` is bounded by the enumeration cap so the
/// running product stays within `u64`.
pub fn binomial(d: usize, k: usize) -> u64 {
    if k > d {
        return 0;
    }
    let k = k.min(d - k);
    (0..k).fold(1u64, |acc, i| acc * (d - i) as u64 / (i + 1) as u64)
}

pub fn ln_binomial(d: usize, k: usize) -> f64 {
    (binomial(d, k) as f64).ln()
}
