//! Machine-readable outputs shared by the command-line tool and the examples.
//!
//! JSON results travel inside an [`OutputEnvelope`] that records everything
//! needed to rerun the command. Numbers are written in shortest round-trip
//! form in both JSON and CSV, so the two formats parse to identical values.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::Result;
use crate::marginal::RobustPrior;
use crate::posterior::{ModelScores, PosteriorSummary, ModelPosterior, ModelRecord};
use crate::priors::PriorSpec;
use crate::quadrature::QuadratureConfig;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct OutputEnvelope<T> {
    pub tool: &'static str,
    pub version: &'static str,
    /// Normalized command line, thread count excluded.
    pub command: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetInfo>,
    pub results: T,
}

impl<T: Serialize> OutputEnvelope<T> {
    pub fn new(command: Vec<String>, seeds: Vec<u64>, dataset: Option<DatasetInfo>, results: T) -> Self {
        OutputEnvelope {
            tool: TOOL,
            version: VERSION,
            command,
            seeds,
            dataset,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize to JSON");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub sha256: String,
    pub n: usize,
    pub d: usize,
    pub response: String,
    pub covariates: Vec<String>,
    pub transform: crate::data::Transform,
}

impl From<&Dataset> for DatasetInfo {
    fn from(ds: &Dataset) -> Self {
        DatasetInfo {
            name: ds.name.clone(),
            sha256: ds.checksum.clone(),
            n: ds.n(),
            d: ds.d(),
            response: ds.response_name.clone(),
            covariates: ds.covariate_names.clone(),
            transform: ds.transform,
        }
    }
}

/// Full result of analysing one dataset under one model prior.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub prior: PriorSpec,
    pub robust: RobustPrior,
    pub quadrature: QuadratureConfig,
    pub covariates: Vec<String>,
    pub summary: PosteriorSummary,
    pub top_models: Vec<ModelRecord>,
}

impl Analysis {
    pub fn run(ds: &Dataset, prior: PriorSpec, robust: &RobustPrior, q: &QuadratureConfig, top: usize) -> Result<Self> {
        prior.validate()?;
        let scores = ModelScores::compute(&ds.x, &ds.y, robust, q)?;
        Self::from_scores(ds, &scores, prior, robust, q, top)
    }

    /// Applies `prior` to already computed scores.
    pub fn from_scores(
        ds: &Dataset,
        scores: &ModelScores,
        prior: PriorSpec,
        robust: &RobustPrior,
        q: &QuadratureConfig,
        top: usize,
    ) -> Result<Self> {
        let post = ModelPosterior::new(&scores.log_bf, scores.d, prior)?;
        Ok(Analysis {
            prior,
            robust: *robust,
            quadrature: *q,
            covariates: ds.covariate_names.clone(),
            summary: post.summary(),
            top_models: post.top_models(top, Some(&scores.stats)),
        })
    }

    /// Long-format CSV with columns `prior,c,section,key,value`.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["prior", "c", "section", "key", "value"]).expect("write to memory");
        let kind = self.prior.kind();
        let c = self.prior.c().map(|c| c.to_string()).unwrap_or_default();
        let mut row = |section: &str, key: &str, value: String| {
            w.write_record([kind, c.as_str(), section, key, value.as_str()])
                .expect("write to memory");
        };
        let s = &self.summary;
        row("size", "mean", s.size.mean.to_string());
        row("size", "median", s.size.median.to_string());
        row("size", "sd", s.size.sd.to_string());
        row("size", "ci95_lower", s.size.ci95.0.to_string());
        row("size", "ci95_upper", s.size.ci95.1.to_string());
        for (k, p) in s.size.pmf.iter().enumerate() {
            row("size_pmf", &k.to_string(), p.to_string());
        }
        for (name, w) in self.covariates.iter().zip(&s.inclusion) {
            row("inclusion", name, w.to_string());
        }
        row("hpm", "model", s.hpm.to_string());
        row("hpm", "size", s.hpm.size().to_string());
        row("hpm", "posterior", s.hpm_prob.to_string());
        row("mpm", "model", s.mpm.to_string());
        row("mpm", "size", s.mpm.size().to_string());
        for m in &self.top_models {
            let r = m.rank;
            row("top_model", &format!("{r}/model"), m.model.to_string());
            row("top_model", &format!("{r}/size"), m.size.to_string());
            row("top_model", &format!("{r}/r2"), m.r2.to_string());
            row("top_model", &format!("{r}/log_bf"), m.log_bf.to_string());
            row("top_model", &format!("{r}/log_prior"), m.log_prior.to_string());
            row("top_model", &format!("{r}/posterior"), m.posterior.to_string());
        }
        finish(w)
    }
}

/// Per-model log prior mass by size: `k,log_mass,kind,c`.
pub fn prior_curve_csv(d: usize, priors: &[PriorSpec]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["k", "log_mass", "kind", "c"]).expect("write to memory");
    for p in priors {
        let c = p.c().map(|c| c.to_string()).unwrap_or_default();
        for (k, lm) in p.prior_curve(d)? {
            w.write_record([k.to_string(), lm.to_string(), p.kind().to_string(), c.clone()])
                .expect("write to memory");
        }
    }
    Ok(finish(w))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::builtin;

    #[test]
    fn prior_curve_has_one_row_per_size_and_kind() {
        let csv = prior_curve_csv(30, &[PriorSpec::Uniform, PriorSpec::ScottBerger, PriorSpec::Loss { c: 1.0 }]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,log_mass,kind,c");
        assert_eq!(lines.len(), 1 + 3 * 31);
        assert!(lines.iter().filter(|l| l.ends_with(",loss,1")).count() == 31);
        assert!(prior_curve_csv(0, &[PriorSpec::Uniform]).is_err());
    }

    #[test]
    fn analysis_csv_mirrors_json() {
        let hald = builtin("hald").unwrap();
        let a = Analysis::run(&hald, PriorSpec::Loss { c: 1.0 }, &RobustPrior::default(), &QuadratureConfig::default(), 5)
            .unwrap();
        let json: serde_json::Value = serde_json::from_str(&to_json(&a)).unwrap();
        let csv = a.to_csv();
        let find = |section: &str, key: &str| -> String {
            let mut r = csv::Reader::from_reader(csv.as_bytes());
            r.records()
                .map(|r| r.unwrap())
                .find(|r| &r[2] == section && &r[3] == key)
                .map(|r| r[4].to_string())
                .unwrap()
        };
        let mean: f64 = find("size", "mean").parse().unwrap();
        assert_eq!(mean, json["summary"]["size"]["mean"].as_f64().unwrap());
        let w0: f64 = find("inclusion", "Tricalcium aluminate").parse().unwrap();
        assert_eq!(w0, json["summary"]["inclusion"][0].as_f64().unwrap());
        let p1: f64 = find("top_model", "1/posterior").parse().unwrap();
        assert_eq!(p1, json["top_models"][0]["posterior"].as_f64().unwrap());
        assert_eq!(find("hpm", "model"), "{0,1}");
    }

    #[test]
    fn envelope_fields() {
        let hald = builtin("hald").unwrap();
        let env = OutputEnvelope::new(vec!["analyze".into()], vec![], Some(DatasetInfo::from(&hald)), 1);
        let v: serde_json::Value = serde_json::from_str(&env.to_json()).unwrap();
        assert_eq!(v["tool"], TOOL);
        assert_eq!(v["dataset"]["n"], 13);
        assert_eq!(v["dataset"]["sha256"].as_str().unwrap().len(), 64);
    }
}
