//! Bayes factors against the null model under the robust parameter prior.
//!
//! Given the mixing parameter `g`, the coefficients get a `N(0, g·Σ_γ)` prior
//! with `Σ_γ` the MLE covariance on the centered design, and the Bayes factor
//! has the familiar g-prior form
//!
//! ```text
//! log BF(g) = (n-1-k)/2 · log(1+g) - (n-1)/2 · log(1 + g(1-R²))
//! ```
//!
//! The robust prior mixes over `g` with the shifted Pareto density
//! `a[ρ(b+n)]^a (g+b)^{-(a+1)}` on `g > ρ(b+n) - b`. Substituting
//! `s = [ρ(b+n)/(g+b)]^a`, which is the survival function of `g`, turns the
//! mixture into a plain integral over `s ∈ (0, 1)` with unit density:
//!
//! ```text
//! BF = ∫_0^1 exp(log BF(g(s))) ds,    g(s) = ρ(b+n)·s^{-1/a} - b
//! ```
//!
//! For `a = 1/2` this is the `t = s²` substitution. The integrand behaves
//! like `s^{k/(2a)}` at the origin, so an open Gauss-Legendre rule handles it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::SufficientStats;
use crate::quadrature::{converged, log_sum_exp, GaussLegendre, LogSumExp, QuadratureConfig};

/// How the robust prior's `ρ` is chosen for a model of size `k` among `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoRule {
    /// `ρ_γ = 1/(k+1)`, depending on the model's own size.
    ModelSize,
    /// `ρ = 1/(d+1)`, the same for every model.
    FullModel,
    /// A user-supplied constant.
    Fixed(f64),
}

/// Hyperparameters of the robust prior before they are bound to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustPrior {
    pub a: f64,
    pub b: f64,
    pub rho: RhoRule,
}

impl Default for RobustPrior {
    fn default() -> Self {
        RobustPrior {
            a: 0.5,
            b: 1.0,
            rho: RhoRule::ModelSize,
        }
    }
}

impl RobustPrior {
    /// Concrete hyperparameters for a model of size `k` in a problem with
    /// `n` observations and `d` candidate covariates.
    pub fn bind(&self, n: usize, d: usize, k: usize) -> Result<RobustHyper> {
        let rho = match self.rho {
            RhoRule::ModelSize => 1.0 / (k as f64 + 1.0),
            RhoRule::FullModel => 1.0 / (d as f64 + 1.0),
            RhoRule::Fixed(r) => r,
        };
        RobustHyper::new(self.a, self.b, rho, n)
    }
}

/// Robust-prior hyperparameters bound to a sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustHyper {
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub n: usize,
}

impl RobustHyper {
    pub fn new(a: f64, b: f64, rho: f64, n: usize) -> Result<Self> {
        let h = RobustHyper { a, b, rho, n };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.a) || !ok(self.b) {
            return Err(Error::invalid(
                "robust prior",
                format!("a and b must be positive, got a = {}, b = {}", self.a, self.b),
            ));
        }
        let min_rho = self.b / (self.b + self.n as f64);
        // small slack so that rho = b/(b+n) computed elsewhere is accepted
        if !(self.rho.is_finite() && self.rho >= min_rho * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "robust prior",
                format!("rho = {} must be at least b/(b+n) = {min_rho}", self.rho),
            ));
        }
        Ok(())
    }

    /// `ρ(b+n)`, the Pareto scale of `g + b`.
    pub fn scale(&self) -> f64 {
        self.rho * (self.b + self.n as f64)
    }

    /// Lower end of the support of `g`.
    pub fn lower_bound(&self) -> f64 {
        self.scale() - self.b
    }

    /// `g` as a function of its survival probability `s`.
    fn g_at(&self, s: f64) -> f64 {
        self.scale() * s.powf(-1.0 / self.a) - self.b
    }

    /// `P(G <= g)`.
    pub fn g_cdf(&self, g: f64) -> f64 {
        if g <= self.lower_bound() {
            0.0
        } else {
            1.0 - (self.scale() / (g + self.b)).powf(self.a)
        }
    }
}

/// Log density of the mixing parameter `g`; `-∞` below the support.
pub fn g_log_density(g: f64, h: &RobustHyper) -> f64 {
    if !(g >= h.lower_bound()) {
        return f64::NEG_INFINITY;
    }
    h.a.ln() + h.a * h.scale().ln() - (h.a + 1.0) * (g + h.b).ln()
}

/// Inverse-CDF draw of `g` from a uniform variate `u ∈ (0, 1)`.
pub fn sample_g(u: f64, h: &RobustHyper) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::invalid("uniform variate", format!("{u} not in (0, 1)")));
    }
    Ok(h.g_at(u))
}

/// Log Bayes factor against the null model at a fixed `g`.
pub fn conditional_log_bf(stats: &SufficientStats, g: f64) -> f64 {
    if stats.k == 0 {
        return 0.0;
    }
    log_bf_at(stats.n, stats.k, 1.0 - stats.r2, g)
}

fn log_bf_at(n: usize, k: usize, resid: f64, g: f64) -> f64 {
    let n1 = n as f64 - 1.0;
    0.5 * (n1 - k as f64) * g.ln_1p() - 0.5 * n1 * (g * resid).ln_1p()
}

/// Smallest residual share `1 - R²` used inside the integral. The mixture
/// diverges for a perfect fit, and shares below machine precision are
/// rounding noise anyway.
pub const MIN_RESIDUAL: f64 = f64::EPSILON;

/// When the integrand peaks at a survival probability below this, equal
/// panels in `s` cannot resolve it and the log-scale rule takes over.
const PEAK_SWITCH: f64 = 1.0 / 32.0;

fn residual(stats: &SufficientStats) -> f64 {
    (1.0 - stats.r2).max(MIN_RESIDUAL)
}

/// Survival probability `s` at which the conditional Bayes factor peaks, or
/// 1 when its maximizer lies at or below the support.
fn peak_survival(stats: &SufficientStats, h: &RobustHyper) -> f64 {
    let resid = residual(stats);
    let k = stats.k as f64;
    let g_star = ((stats.n as f64 - 1.0) * (1.0 - resid) - k) / (k * resid);
    if g_star <= h.lower_bound() {
        1.0
    } else {
        (h.scale() / (g_star + h.b)).powf(h.a)
    }
}

/// The same integral after `v = ln s`, split at the peak. Left of the peak
/// the log integrand falls at least at unit rate, so a window of
/// `40 + ln(1 + k/2a)` loses under 1e-16 of the mass.
fn log_scale_log_bf(stats: &SufficientStats, h: &RobustHyper, rule: &GaussLegendre, q: &QuadratureConfig) -> Result<f64> {
    let resid = residual(stats);
    let f = |v: f64| log_bf_at(stats.n, stats.k, resid, h.scale() * (-v / h.a).exp() - h.b) + v;
    let peak = peak_survival(stats, h).ln();
    let lo = peak - 40.0 - (1.0 + stats.k as f64 / (2.0 * h.a)).ln();
    let left = rule.log_integrate_span(lo, peak, 4.0, q, f)?;
    let right = rule.log_integrate_span(peak, 0.0, 4.0, q, f)?;
    Ok(log_sum_exp(&[left, right]))
}

/// Log Bayes factor against the null model, integrated over the robust prior
/// on `g`.
///
/// Builds a fresh Gauss-Legendre rule on each call; to score many models use
/// [`RobustBayesFactor`], which caches the rule and per-size tables.
pub fn robust_log_bf(stats: &SufficientStats, h: &RobustHyper, q: &QuadratureConfig) -> Result<f64> {
    h.validate()?;
    q.validate()?;
    if stats.k == 0 {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(q.nodes);
    if peak_survival(stats, h) < PEAK_SWITCH {
        return log_scale_log_bf(stats, h, &rule, q);
    }
    let resid = residual(stats);
    match rule.log_integrate_refined(q, |s| log_bf_at(stats.n, stats.k, resid, h.g_at(s))) {
        Err(Error::QuadratureFailure { .. }) => log_scale_log_bf(stats, h, &rule, q),
        other => other,
    }
}

/// Precomputed nodes at the two coarsest refinement levels for one model size.
#[derive(Debug, Clone)]
struct SizeTable {
    hyper: RobustHyper,
    /// `(log w, g, log(1+g))` per node, one vector per level.
    levels: [Vec<(f64, f64, f64)>; 2],
}

/// Scores many models that share `n`, `d` and the robust prior.
///
/// The first two refinement levels are tabulated once per model size, so a
/// converged model costs one `ln_1p` and one `exp` per node.
#[derive(Debug, Clone)]
pub struct RobustBayesFactor {
    n: usize,
    d: usize,
    prior: RobustPrior,
    cfg: QuadratureConfig,
    rule: GaussLegendre,
    tables: Vec<SizeTable>,
}

impl RobustBayesFactor {
    pub fn new(n: usize, d: usize, prior: RobustPrior, cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let rule = GaussLegendre::new(cfg.nodes);
        let mut tables = Vec::with_capacity(d + 1);
        for k in 0..=d {
            let hyper = prior.bind(n, d, k)?;
            let level = |panels: usize| -> Vec<(f64, f64, f64)> {
                rule.composite(panels)
                    .map(|(s, w)| {
                        let g = hyper.g_at(s);
                        (w.ln(), g, g.ln_1p())
                    })
                    .collect()
            };
            tables.push(SizeTable {
                hyper,
                levels: [level(1), level(2)],
            });
        }
        Ok(RobustBayesFactor {
            n,
            d,
            prior,
            cfg,
            rule,
            tables,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn prior(&self) -> &RobustPrior {
        &self.prior
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    /// Bound hyperparameters for models of size `k`.
    pub fn hyper(&self, k: usize) -> &RobustHyper {
        &self.tables[k].hyper
    }

    pub fn log_bf(&self, stats: &SufficientStats) -> Result<f64> {
        if stats.n != self.n || stats.k > self.d {
            return Err(Error::invalid(
                "sufficient statistics",
                format!(
                    "stats for n = {}, k = {} do not match evaluator n = {}, d = {}",
                    stats.n, stats.k, self.n, self.d
                ),
            ));
        }
        if stats.k == 0 {
            return Ok(0.0);
        }
        let table = &self.tables[stats.k];
        if peak_survival(stats, &table.hyper) < PEAK_SWITCH {
            return log_scale_log_bf(stats, &table.hyper, &self.rule, &self.cfg);
        }
        let half_big = 0.5 * (self.n as f64 - 1.0 - stats.k as f64);
        let half_n1 = 0.5 * (self.n as f64 - 1.0);
        let resid = residual(stats);
        let level_sum = |nodes: &[(f64, f64, f64)]| {
            let mut acc = LogSumExp::default();
            for &(lw, g, l1g) in nodes {
                acc.add(lw + half_big * l1g - half_n1 * (g * resid).ln_1p());
            }
            acc.value()
        };
        let mut prev = level_sum(&table.levels[0]);
        if !self.cfg.refine {
            return Ok(prev);
        }
        let mut next = level_sum(&table.levels[1]);
        let mut level = 1;
        while !converged(prev, next, self.cfg.rtol) {
            if level == QuadratureConfig::MAX_HALVINGS {
                return log_scale_log_bf(stats, &table.hyper, &self.rule, &self.cfg);
            }
            level += 1;
            prev = next;
            next = self
                .rule
                .log_integrate(1 << level, |s| log_bf_at(self.n, stats.k, resid, table.hyper.g_at(s)));
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(n: usize, d: usize) -> RobustHyper {
        RobustHyper::new(0.5, 1.0, 1.0 / (d as f64 + 1.0), n).unwrap()
    }

    #[test]
    fn support_edge() {
        let h = hyper(47, 15);
        assert!((h.lower_bound() - 2.0).abs() < 1e-12);
        let at = g_log_density(h.lower_bound(), &h);
        assert!((at - (h.a / h.scale()).ln()).abs() < 1e-12);
        assert_eq!(g_log_density(h.lower_bound() - 1e-9, &h), f64::NEG_INFINITY);
    }

    #[test]
    fn sampler_inverts_cdf() {
        let h = hyper(30, 4);
        for &u in &[1e-9, 0.01, 0.3, 0.5, 0.77, 0.999999] {
            let g = sample_g(u, &h).unwrap();
            assert!(g > h.lower_bound());
            assert!((h.g_cdf(g) - (1.0 - u)).abs() < 1e-12);
        }
        let half = sample_g(0.5, &h).unwrap();
        assert!((half - (4.0 * h.scale() - h.b)).abs() < 1e-10);
        let near_one = sample_g(1.0 - 1e-15, &h).unwrap();
        assert!((near_one - h.lower_bound()).abs() < 1e-10);
        assert!(sample_g(0.0, &h).is_err());
        assert!(sample_g(1.0, &h).is_err());
    }

    #[test]
    fn hyper_validation() {
        assert!(RobustHyper::new(0.0, 1.0, 0.5, 10).is_err());
        assert!(RobustHyper::new(0.5, -1.0, 0.5, 10).is_err());
        assert!(RobustHyper::new(0.5, 1.0, 0.05, 10).is_err());
        assert!(RobustHyper::new(0.5, 1.0, 1.0 / 11.0, 10).is_ok());
    }

    #[test]
    fn conditional_reference_values() {
        let null = SufficientStats::null(20, 3.0);
        assert_eq!(conditional_log_bf(&null, 7.0), 0.0);
        let flat = SufficientStats::from_r2(20, 2, 0.0).unwrap();
        assert!((conditional_log_bf(&flat, 3.0) + 4.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn null_model_is_exactly_zero() {
        let s = SufficientStats::null(13, 2.0);
        assert_eq!(robust_log_bf(&s, &hyper(13, 4), &QuadratureConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn evaluator_matches_one_shot() {
        let n = 40;
        let d = 6;
        let eval = RobustBayesFactor::new(n, d, RobustPrior::default(), QuadratureConfig::default()).unwrap();
        for k in 1..=d {
            for &r2 in &[0.0, 0.1, 0.5, 0.9, 0.999] {
                let s = SufficientStats::from_r2(n, k, r2).unwrap();
                let a = eval.log_bf(&s).unwrap();
                let b = robust_log_bf(&s, eval.hyper(k), &QuadratureConfig::default()).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "k={k} r2={r2}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn flat_fit_is_penalized_and_monotone_in_r2() {
        let h = hyper(30, 5);
        let q = QuadratureConfig::default();
        for k in 1..=5 {
            let mut last = f64::NEG_INFINITY;
            for i in 0..=20 {
                let r2 = i as f64 / 21.0;
                let v = robust_log_bf(&SufficientStats::from_r2(30, k, r2).unwrap(), &h, &q).unwrap();
                if i == 0 {
                    assert!(v < 0.0);
                }
                assert!(v > last);
                last = v;
            }
        }
    }

    #[test]
    fn rho_rules() {
        let p = RobustPrior::default();
        assert!((p.bind(13, 4, 2).unwrap().rho - 1.0 / 3.0).abs() < 1e-15);
        let full = RobustPrior {
            rho: RhoRule::FullModel,
            ..p
        };
        assert!((full.bind(13, 4, 2).unwrap().rho - 0.2).abs() < 1e-15);
        let fixed = RobustPrior {
            rho: RhoRule::Fixed(0.01),
            ..p
        };
        assert!(fixed.bind(13, 4, 2).is_err());
    }

    #[test]
    fn log_scale_rule_agrees_with_panels() {
        let q = QuadratureConfig::default();
        let rule = GaussLegendre::new(q.nodes);
        for &(n, k, r2) in &[(30, 3, 0.6), (13, 2, 0.95), (47, 6, 0.3), (100, 1, 0.0), (30, 5, 0.999)] {
            let stats = SufficientStats::from_r2(n, k, r2).unwrap();
            let h = RobustPrior::default().bind(n, 10, k).unwrap();
            let panels = rule
                .log_integrate_refined(&q, |s| conditional_log_bf(&stats, h.g_at(s)))
                .unwrap();
            let log_scale = log_scale_log_bf(&stats, &h, &rule, &q).unwrap();
            assert!((panels - log_scale).abs() < 1e-9 * panels.abs().max(1.0), "{n} {k} {r2}: {panels} {log_scale}");
        }
    }

    #[test]
    fn near_perfect_fits_stay_finite_and_ordered() {
        let q = QuadratureConfig {
            nodes: 24,
            ..QuadratureConfig::default()
        };
        let ev = RobustBayesFactor::new(30, 10, RobustPrior::default(), q).unwrap();
        let mut last = f64::NEG_INFINITY;
        for e in 1..=20 {
            let stats = SufficientStats::from_r2(30, 5, 1.0 - 10f64.powi(-e)).unwrap();
            let v = ev.log_bf(&stats).unwrap();
            assert!(v.is_finite() && v >= last);
            last = v;
        }
        let exact = ev.log_bf(&SufficientStats::from_r2(30, 5, 1.0).unwrap()).unwrap();
        assert!(exact.is_finite() && exact >= last);
    }
}
