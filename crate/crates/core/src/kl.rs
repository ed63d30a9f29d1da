//! Kullback-Leibler divergence between normal linear regression models and
//! its minimizer over the second model's coefficients.
//!
//! For two models with a common precision `φ` and mean vectors `μ_p = X̃_p β̃_p`
//! and `μ_q = X̃_q β̃_q`, the divergence reduces to `(φ/2)·‖μ_p − μ_q‖²`. It is
//! minimized over `β̃_q` by the least-squares projection
//! `β̃_q = (X̃_qᵀX̃_q)⁻¹ X̃_qᵀ μ_p`, at which point it equals
//! `(φ/2)·‖(I − P_q) μ_p‖²`: zero exactly when `μ_p` lies in the column space
//! of `X̃_q`, for instance when the `p` model is nested in the `q` model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::Gamma;
use crate::rng::substream;

const RANK_TOL: f64 = 1e-10;

/// A fully specified regression distribution `N(X̃β̃, I/φ)`.
#[derive(Debug, Clone)]
pub struct RegressionSpec {
    /// Intercept-augmented design: a column of ones followed by covariates.
    pub design: DMatrix<f64>,
    /// Coefficients with the intercept first.
    pub coef: DVector<f64>,
    pub phi: f64,
}

impl RegressionSpec {
    pub fn new(design: DMatrix<f64>, coef: DVector<f64>, phi: f64) -> Result<Self> {
        if design.ncols() != coef.len() {
            return Err(Error::Contract(format!(
                "design has {} columns but {} coefficients were given",
                design.ncols(),
                coef.len()
            )));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::Contract(format!("precision must be positive, got {phi}")));
        }
        check_full_rank(&design)?;
        Ok(RegressionSpec { design, coef, phi })
    }

    /// Builds the spec of model `γ` from the raw covariate matrix.
    pub fn from_model(x: &DMatrix<f64>, gamma: Gamma, coef: DVector<f64>, phi: f64) -> Result<Self> {
        RegressionSpec::new(augmented_design(x, gamma), coef, phi)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn mean(&self) -> DVector<f64> {
        &self.design * &self.coef
    }
}

/// `[1, X_γ]`.
pub fn augmented_design(x: &DMatrix<f64>, gamma: Gamma) -> DMatrix<f64> {
    let n = x.nrows();
    let cols: Vec<usize> = gamma.to_vec();
    DMatrix::from_fn(n, cols.len() + 1, |i, c| if c == 0 { 1.0 } else { x[(i, cols[c - 1])] })
}

fn check_full_rank(design: &DMatrix<f64>) -> Result<()> {
    if design.nrows() < design.ncols() {
        return Err(Error::Singular);
    }
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let r = design.clone().qr().r();
    for (c, norm) in norms.iter().enumerate() {
        if !(r[(c, c)].abs() > RANK_TOL * norm.max(f64::MIN_POSITIVE)) {
            return Err(Error::Singular);
        }
    }
    Ok(())
}

fn check_pair(p: &RegressionSpec, q: &RegressionSpec) -> Result<()> {
    if p.n() != q.n() {
        return Err(Error::Contract(format!("sample sizes differ: {} vs {}", p.n(), q.n())));
    }
    if (p.phi - q.phi).abs() > 1e-12 * p.phi.max(q.phi) {
        return Err(Error::Contract(format!("precisions differ: {} vs {}", p.phi, q.phi)));
    }
    Ok(())
}

/// `D_KL(p ‖ q)` for models sharing `n` and `φ`.
pub fn kl_divergence(p: &RegressionSpec, q: &RegressionSpec) -> Result<f64> {
    check_pair(p, q)?;
    Ok(0.5 * p.phi * (p.mean() - q.mean()).norm_squared())
}

/// Gradient of `D_KL(p ‖ q)` with respect to `q`'s coefficients.
pub fn kl_gradient(p: &RegressionSpec, q: &RegressionSpec) -> Result<DVector<f64>> {
    check_pair(p, q)?;
    Ok(q.design.transpose() * (q.mean() - p.mean()) * p.phi)
}

/// Coefficients for design `xq` that minimize `D_KL(p ‖ ·)`.
pub fn kl_minimizer(p: &RegressionSpec, xq: &DMatrix<f64>) -> Result<DVector<f64>> {
    if xq.nrows() != p.n() {
        return Err(Error::Contract(format!(
            "design has {} rows, model has n = {}",
            xq.nrows(),
            p.n()
        )));
    }
    check_full_rank(xq)?;
    let gram = xq.transpose() * xq;
    let chol = gram.cholesky().ok_or(Error::Singular)?;
    Ok(chol.solve(&(xq.transpose() * p.mean())))
}

/// Smallest divergence from `p` to any model with design `xq`.
pub fn min_kl(p: &RegressionSpec, xq: &DMatrix<f64>) -> Result<f64> {
    let coef = kl_minimizer(p, xq)?;
    let q = RegressionSpec::new(xq.clone(), coef, p.phi)?;
    kl_divergence(p, &q)
}

/// One random `(X, γ, γ′, β̃)` instance.
#[derive(Debug, Clone)]
pub struct KlTrial {
    pub x: DMatrix<f64>,
    pub from: Gamma,
    pub to: Gamma,
    pub coef: DVector<f64>,
}

impl KlTrial {
    /// Standard normal `X` (n×d) and coefficients; `γ ≠ γ′` drawn uniformly.
    pub fn random(n: usize, d: usize, seed: u64, index: u64) -> Result<Self> {
        if d == 0 || d > 30 {
            return Err(Error::invalid("KL trial", format!("need 1 <= d <= 30, got {d}")));
        }
        if n < d + 2 {
            return Err(Error::invalid("KL trial", format!("need n > d + 1, got n = {n}, d = {d}")));
        }
        let mut rng = substream(seed, 0x4b4c, index);
        let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let space = 1u32 << d;
        let from = rng.gen_range(0..space);
        let mut to = rng.gen_range(0..space - 1);
        if to >= from {
            to += 1;
        }
        let from = Gamma::from_bits(from, d)?;
        let to = Gamma::from_bits(to, d)?;
        let coef = DVector::from_fn(from.size() + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(KlTrial { x, from, to, coef })
    }

    pub fn source(&self) -> Result<RegressionSpec> {
        RegressionSpec::from_model(&self.x, self.from, self.coef.clone(), 1.0)
    }

    pub fn target_design(&self) -> DMatrix<f64> {
        augmented_design(&self.x, self.to)
    }
}

/// Outcome of a single projection check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KlOutcome {
    pub from: Gamma,
    pub to: Gamma,
    pub nested: bool,
    /// `None` when the target design violated the full-rank hypothesis.
    pub min_kl: Option<f64>,
}

/// Aggregate of a batch of projection checks.
#[derive(Debug, Clone, Serialize)]
pub struct KlReport {
    pub trials: usize,
    pub tolerance: f64,
    pub below_tolerance: usize,
    pub above_tolerance: usize,
    pub hypothesis_violations: usize,
    pub nested_pairs: usize,
    pub nested_below_tolerance: usize,
    pub max_min_kl: f64,
    pub outcomes: Vec<KlOutcome>,
}

impl KlReport {
    /// Whether every admissible trial reached a zero minimum.
    pub fn all_zero(&self) -> bool {
        self.above_tolerance == 0
    }
}

/// Runs `trials` random projection checks. Trial indices listed in
/// `rank_deficient` get a singular target design.
pub fn verify_min_kl(
    trials: usize,
    n: usize,
    d: usize,
    seed: u64,
    tolerance: f64,
    rank_deficient: &[usize],
) -> Result<KlReport> {
    let mut outcomes = Vec::with_capacity(trials);
    for i in 0..trials {
        let trial = KlTrial::random(n, d, seed, i as u64)?;
        let p = trial.source()?;
        let mut xq = trial.target_design();
        if rank_deficient.contains(&i) {
            // a second intercept column
            let cols = xq.ncols();
            xq = xq.insert_column(cols, 1.0);
        }
        let value = match min_kl(&p, &xq) {
            Ok(v) => Some(v),
            Err(Error::Singular) => None,
            Err(e) => return Err(e),
        };
        outcomes.push(KlOutcome {
            from: trial.from,
            to: trial.to,
            nested: trial.from.is_subset_of(&trial.to),
            min_kl: value,
        });
    }
    let admissible = || outcomes.iter().filter_map(|o| o.min_kl.map(|v| (o, v)));
    Ok(KlReport {
        trials,
        tolerance,
        below_tolerance: admissible().filter(|(_, v)| *v < tolerance).count(),
        above_tolerance: admissible().filter(|(_, v)| *v >= tolerance).count(),
        hypothesis_violations: outcomes.iter().filter(|o| o.min_kl.is_none()).count(),
        nested_pairs: outcomes.iter().filter(|o| o.nested).count(),
        nested_below_tolerance: admissible().filter(|(o, v)| o.nested && *v < tolerance).count(),
        max_min_kl: admissible().map(|(_, v)| v).fold(0.0, f64::max),
        outcomes,
    })
}

/// Largest relative gap between the analytic gradient and central finite
/// differences over a batch of random instances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientCheck {
    pub instances: usize,
    pub max_relative_error: f64,
}

pub fn check_gradients(instances: usize, n: usize, d: usize, seed: u64) -> Result<GradientCheck> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let trial = KlTrial::random(n, d, seed, i as u64)?;
        let p = trial.source()?;
        let xq = trial.target_design();
        let mut rng = substream(seed, 0x6772_6164, i as u64);
        let coef = DVector::from_fn(xq.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = RegressionSpec::new(xq, coef, p.phi)?;
        let analytic = kl_gradient(&p, &q)?;
        let mut numeric = DVector::zeros(q.coef.len());
        for j in 0..q.coef.len() {
            let h = 1e-5 * q.coef[j].abs().max(1.0);
            let mut up = q.clone();
            up.coef[j] += h;
            let mut down = q.clone();
            down.coef[j] -= h;
            numeric[j] = (kl_divergence(&p, &up)? - kl_divergence(&p, &down)?) / (2.0 * h);
        }
        let scale = analytic.amax().max(f64::MIN_POSITIVE);
        worst = worst.max((&numeric - &analytic).amax() / scale);
    }
    Ok(GradientCheck {
        instances,
        max_relative_error: worst,
    })
}
