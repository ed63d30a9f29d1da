//! Gauss-Legendre rules on the unit interval, evaluated in the log domain.

use crate::error::{Error, Result};

/// Tuning knobs for the Bayes-factor integral.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
    /// Keep halving panels until two successive estimates agree.
    pub refine: bool,
    /// Agreement threshold on the log of the integral, i.e. relative error.
    pub rtol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: 201,
            refine: true,
            rtol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub const MAX_HALVINGS: u32 = 12;

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 15 {
            return Err(Error::invalid(
                "quadrature",
                format!("need at least 15 nodes, got {}", self.nodes),
            ));
        }
        if !(self.rtol > 0.0) {
            return Err(Error::invalid(
                "quadrature",
                format!("rtol must be positive, got {}", self.rtol),
            ));
        }
        Ok(())
    }
}

/// An `n`-point Gauss-Legendre rule mapped onto `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes come from Newton iteration on the three-term Legendre recurrence,
    /// started from the Tricomi approximation of each root.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = theta.cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                deriv = dp;
                let step = p / dp;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                deriv = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights of the composite rule with `panels` equal panels.
    pub fn composite(&self, panels: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 1.0 / panels as f64;
        (0..panels).flat_map(move |p| {
            let left = p as f64 * h;
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(move |(&x, &w)| (left + h * x, h * w))
        })
    }

    /// `log ∫_0^1 exp(log_f(s)) ds` over `panels` equal panels.
    pub fn log_integrate(&self, panels: usize, log_f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = LogSumExp::default();
        for (s, w) in self.composite(panels) {
            acc.add(w.ln() + log_f(s));
        }
        acc.value()
    }

    /// Integrates with panel halving until successive log estimates differ by
    /// less than `cfg.rtol`.
    pub fn log_integrate_refined(
        &self,
        cfg: &QuadratureConfig,
        log_f: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        self.refine_from(1, cfg, log_f)
    }

    /// `log ∫_lo^hi exp(log_f(v)) dv`, starting with panels no wider than
    /// `max_width` and then halving as in [`Self::log_integrate_refined`].
    pub fn log_integrate_span(
        &self,
        lo: f64,
        hi: f64,
        max_width: f64,
        cfg: &QuadratureConfig,
        log_f: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let len = hi - lo;
        if !(len > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let panels = ((len / max_width).ceil() as usize).max(1).next_power_of_two();
        Ok(len.ln() + self.refine_from(panels, cfg, |t| log_f(lo + len * t))?)
    }

    fn refine_from(&self, panels: usize, cfg: &QuadratureConfig, log_f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut prev = self.log_integrate(panels, &log_f);
        if !cfg.refine {
            return Ok(prev);
        }
        for level in 1..=QuadratureConfig::MAX_HALVINGS {
            let next = self.log_integrate(panels << level, &log_f);
            if converged(prev, next, cfg.rtol) {
                return Ok(next);
            }
            if level == QuadratureConfig::MAX_HALVINGS {
                return Err(Error::QuadratureFailure {
                    gamma: None,
                    previous: prev,
                    last: next,
                });
            }
            prev = next;
        }
        unreachable!("loop returns at the last halving")
    }
}

pub(crate) fn converged(prev: f64, next: f64, rtol: f64) -> bool {
    (prev == next) || (prev.is_finite() && next.is_finite() && (next - prev).abs() < rtol)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Streaming log-sum-exp with a running max shift.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `log Σ exp(v)` over a slice, in slice order.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
