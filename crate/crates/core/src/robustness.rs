//! Variable selection on repeated random subsamples of one dataset.
//!
//! Every replicate draws rows without replacement, scores all models on the
//! subsample once and applies each model prior to the shared Bayes factors.
//! The records keep the posterior mean model size and the inclusion
//! probabilities; [`summarize`] turns them into histograms and box plots.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::{RobustBayesFactor, RobustPrior};
use crate::model_space::all_subset_stats;
use crate::posterior::{ModelPosterior, ModelScores};
use crate::priors::PriorSpec;
use crate::quadrature::QuadratureConfig;
use crate::rng::{label_key, substream};

/// Redraws allowed when a subsample has a rank-deficient design.
pub const MAX_REDRAWS: usize = 10;

/// How many rows each subsample keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleSize {
    /// `round(fraction · n)` rows.
    Fraction(f64),
    /// A fixed row count.
    Count(usize),
}

impl SubsampleSize {
    pub fn rows(&self, n: usize) -> usize {
        match *self {
            SubsampleSize::Fraction(f) => (f * n as f64).round() as usize,
            SubsampleSize::Count(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessConfig {
    pub size: SubsampleSize,
    pub replicates: usize,
    pub priors: Vec<PriorSpec>,
    pub seed: u64,
    pub robust: RobustPrior,
    pub quadrature: QuadratureConfig,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            size: SubsampleSize::Fraction(0.85),
            replicates: 500,
            priors: default_priors(),
            seed: 0,
            robust: RobustPrior::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Uniform, Scott-Berger and the loss prior at c = 0.5, 1, 1.5 and 2.
pub fn default_priors() -> Vec<PriorSpec> {
    let mut priors = vec![PriorSpec::Uniform, PriorSpec::ScottBerger];
    priors.extend([0.5, 1.0, 1.5, 2.0].map(|c| PriorSpec::Loss { c }));
    priors
}

impl RobustnessConfig {
    /// Checks the configuration against a dataset of `n` rows and `d` covariates.
    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if let SubsampleSize::Fraction(f) = self.size {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid("subsample fraction", format!("{f} not in (0, 1]")));
            }
        }
        let m = self.size.rows(n);
        if m > n {
            return Err(Error::invalid(
                "subsample size",
                format!("{m} rows requested from a dataset of {n}"),
            ));
        }
        if m <= d + 1 {
            return Err(Error::invalid(
                "subsample size",
                format!("{m} rows must exceed d + 1 = {}", d + 1),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        if self.priors.is_empty() {
            return Err(Error::invalid("priors", "at least one model prior is required"));
        }
        self.priors.iter().try_for_each(PriorSpec::validate)?;
        self.quadrature.validate()
    }
}

/// One replicate under one prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRecord {
    pub replicate: usize,
    pub prior: PriorSpec,
    pub mean_size: f64,
    pub inclusion: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessRun {
    pub subsample_size: usize,
    pub d: usize,
    pub priors: Vec<PriorSpec>,
    /// Ordered by replicate, then by prior in configuration order.
    pub records: Vec<RobustnessRecord>,
    /// Row indices (sorted) used by each replicate.
    pub rows: Vec<Vec<usize>>,
}

/// Runs the subsampling study.
pub fn run_robustness(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &RobustnessConfig) -> Result<RobustnessRun> {
    let (n, d) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::invalid(
            "data",
            format!("response has {} rows, design has {n}", y.len()),
        ));
    }
    cfg.validate(n, d)?;
    let m = cfg.size.rows(n);
    let evaluator = RobustBayesFactor::new(m, d, cfg.robust, cfg.quadrature)?;
    let domain = label_key("robustness");

    let per_rep: Vec<(Vec<usize>, Vec<RobustnessRecord>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(cfg.seed, domain, rep as u64);
            let mut attempt = 0;
            let (rows, stats) = loop {
                let mut rows = sample(&mut rng, n, m).into_vec();
                rows.sort_unstable();
                let xs = DMatrix::from_fn(m, d, |i, j| x[(rows[i], j)]);
                let ys = DVector::from_fn(m, |i, _| y[rows[i]]);
                match all_subset_stats(&xs, &ys) {
                    Ok(stats) => break (rows, stats),
                    Err(Error::SingularDesign { .. } | Error::DegenerateResponse) if attempt < MAX_REDRAWS => {
                        attempt += 1;
                    }
                    Err(e) => {
                        return Err(Error::Replicate {
                            replicate: rep,
                            source: Box::new(e),
                        })
                    }
                }
            };
            let scores = ModelScores::from_stats(stats, &evaluator).map_err(|e| Error::Replicate {
                replicate: rep,
                source: Box::new(e),
            })?;
            let records = cfg
                .priors
                .iter()
                .map(|&prior| {
                    let post = ModelPosterior::new(&scores.log_bf, d, prior)?;
                    Ok(RobustnessRecord {
                        replicate: rep,
                        prior,
                        mean_size: post.size_posterior().mean,
                        inclusion: post.inclusion_probabilities(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((rows, records))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(per_rep.len());
    let mut records = Vec::with_capacity(per_rep.len() * cfg.priors.len());
    for (r, recs) in per_rep {
        rows.push(r);
        records.extend(recs);
    }
    Ok(RobustnessRun {
        subsample_size: m,
        d,
        priors: cfg.priors.clone(),
        records,
        rows,
    })
}

/// Fixed-width histogram over `[0, d]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub prior: PriorSpec,
    pub bin_width: f64,
    /// Count per bin; bin `i` covers `[i·w, (i+1)·w)`, the last bin is closed.
    pub counts: Vec<usize>,
}

impl Histogram {
    pub const BIN_WIDTH: f64 = 0.25;

    pub fn new(prior: PriorSpec, d: usize, values: &[f64]) -> Self {
        let bins = ((d as f64 / Self::BIN_WIDTH).round() as usize).max(1);
        let mut counts = vec![0; bins];
        for &v in values {
            let i = ((v / Self::BIN_WIDTH).floor().max(0.0) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram {
            prior,
            bin_width: Self::BIN_WIDTH,
            counts,
        }
    }

    /// Lower edge of the bin holding the median observation.
    pub fn median_bin(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        let mut seen = 0;
        for (i, c) in self.counts.iter().enumerate() {
            seen += c;
            if 2 * seen >= total {
                return i as f64 * self.bin_width;
            }
        }
        0.0
    }
}

/// Box-plot statistics. Quartiles use linear interpolation between order
/// statistics; whiskers reach the most extreme points within 1.5 IQR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: usize,
}

impl FiveNumber {
    pub fn new(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        let (q1, q3) = (q(0.25), q(0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
        Some(FiveNumber {
            min: v[0],
            q1,
            median: q(0.5),
            q3,
            max: v[v.len() - 1],
            lower_whisker: inside.first().copied().unwrap_or(q1),
            upper_whisker: inside.last().copied().unwrap_or(q3),
            outliers: v.len() - inside.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PriorSummary {
    pub prior: PriorSpec,
    pub mean_size: FiveNumber,
    pub histogram: Histogram,
    /// One box plot per covariate.
    pub inclusion: Vec<FiveNumber>,
}

/// Per-prior histograms of the mean size and box plots of inclusion.
pub fn summarize(run: &RobustnessRun) -> Result<Vec<PriorSummary>> {
    run.priors
        .iter()
        .map(|&prior| {
            let recs: Vec<&RobustnessRecord> = run.records.iter().filter(|r| r.prior == prior).collect();
            let sizes: Vec<f64> = recs.iter().map(|r| r.mean_size).collect();
            let mean_size = FiveNumber::new(&sizes)
                .ok_or_else(|| Error::invalid("robustness summary", format!("no records for {prior}")))?;
            let inclusion = (0..run.d)
                .map(|j| {
                    let col: Vec<f64> = recs.iter().map(|r| r.inclusion[j]).collect();
                    FiveNumber::new(&col).expect("non-empty")
                })
                .collect();
            Ok(PriorSummary {
                prior,
                mean_size,
                histogram: Histogram::new(prior, run.d, &sizes),
                inclusion,
            })
        })
        .collect()
}

fn c_field(p: &PriorSpec) -> String {
    p.c().map(|c| c.to_string()).unwrap_or_default()
}

/// Raw records: `replicate,prior,c,mean_size,omega_1..omega_d`.
pub fn records_csv(run: &RobustnessRun) -> String {
    let mut out = String::from("replicate,prior,c,mean_size");
    for j in 1..=run.d {
        write!(out, ",omega_{j}").expect("write to string");
    }
    out.push('\n');
    for r in &run.records {
        write!(out, "{},{},{},{}", r.replicate, r.prior.kind(), c_field(&r.prior), r.mean_size).expect("write to string");
        for w in &r.inclusion {
            write!(out, ",{w}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn histogram_csv(summaries: &[PriorSummary]) -> String {
    let mut out = String::from("prior,c,bin_lower,bin_upper,count\n");
    for s in summaries {
        let h = &s.histogram;
        for (i, count) in h.counts.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.prior.kind(),
                c_field(&s.prior),
                i as f64 * h.bin_width,
                (i + 1) as f64 * h.bin_width,
                count
            )
            .expect("write to string");
        }
    }
    out
}

/// Box plots; `names` labels the covariates.
pub fn boxplot_csv(summaries: &[PriorSummary], names: &[String]) -> String {
    let mut out = String::from("prior,c,covariate,name,min,q1,median,q3,max,lower_whisker,upper_whisker,outliers\n");
    for s in summaries {
        for (j, f) in s.inclusion.iter().enumerate() {
            let name = names.get(j).map(String::as_str).unwrap_or("");
            writeln!(
                out,
                "{},{},{},\"{}\",{},{},{},{},{},{},{},{}",
                s.prior.kind(),
                c_field(&s.prior),
                j + 1,
                name.replace('"', "\"\""),
                f.min,
                f.q1,
                f.median,
                f.q3,
                f.max,
                f.lower_whisker,
                f.upper_whisker,
                f.outliers
            )
            .expect("write to string");
        }
    }
    out
}
