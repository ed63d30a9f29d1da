//! The space of candidate regression models and their least-squares fits.
//!
//! A model is a subset of the `d` candidate covariates, stored as a bitmask
//! where bit `j` marks covariate `j` as included. The intercept is part of
//! every model. Enumeration follows the binary counter, so a model's position
//! in the enumeration is its bitmask.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard cap on the number of covariates an enumeration may span.
pub const MAX_COVARIATES: usize = 30;

/// Relative column norm below which a centered column is treated as lying in
/// the span of the columns already in the model.
const RANK_TOL: f64 = 1e-10;

/// A subset of the `d` candidate covariates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gamma {
    bits: u32,
    d: u8,
}

impl Gamma {
    /// The intercept-only model.
    pub fn null(d: usize) -> Self {
        assert!(d <= MAX_COVARIATES, "d = {d} above cap {MAX_COVARIATES}");
        Gamma { bits: 0, d: d as u8 }
    }

    /// The model containing every covariate.
    pub fn full(d: usize) -> Self {
        assert!(d <= MAX_COVARIATES, "d = {d} above cap {MAX_COVARIATES}");
        let bits = if d == 0 { 0 } else { u32::MAX >> (32 - d) };
        Gamma { bits, d: d as u8 }
    }

    /// Builds a model from its enumeration index (the inclusion bitmask).
    pub fn from_bits(bits: u32, d: usize) -> Result<Self> {
        if d > MAX_COVARIATES {
            return Err(Error::Capacity {
                d,
                cap: MAX_COVARIATES,
            });
        }
        if d < 32 && bits >> d != 0 {
            return Err(Error::invalid(
                "model",
                format!("bitmask {bits:#b} names covariates beyond d = {d}"),
            ));
        }
        Ok(Gamma { bits, d: d as u8 })
    }

    /// Builds a model from covariate indices. Duplicates are rejected.
    pub fn from_indices(indices: &[usize], d: usize) -> Result<Self> {
        if d > MAX_COVARIATES {
            return Err(Error::Capacity {
                d,
                cap: MAX_COVARIATES,
            });
        }
        let mut g = Gamma::null(d);
        for &j in indices {
            if j >= d {
                return Err(Error::invalid(
                    "model",
                    format!("covariate index {j} out of range for d = {d}"),
                ));
            }
            if g.contains(j) {
                return Err(Error::invalid(
                    "model",
                    format!("covariate index {j} listed twice"),
                ));
            }
            g.bits |= 1 << j;
        }
        Ok(g)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Position of this model in [`enumerate_models`] order.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    /// Number of included covariates, `|γ|`.
    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.d() && self.bits >> j & 1 == 1
    }

    pub fn is_subset_of(&self, other: &Gamma) -> bool {
        self.bits & !other.bits == 0
    }

    /// Included covariate indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.d()).filter(move |&j| self.contains(j))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }
}

impl fmt::Debug for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.indices().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.indices())
    }
}

/// All `2^d` models in binary-counter order; the first is the null model.
pub fn enumerate_models(d: usize) -> Result<Vec<Gamma>> {
    if d > MAX_COVARIATES {
        return Err(Error::Capacity {
            d,
            cap: MAX_COVARIATES,
        });
    }
    Ok((0..1u64 << d)
        .map(|bits| Gamma {
            bits: bits as u32,
            d: d as u8,
        })
        .collect())
}

/// Least-squares summary of one intercept-augmented submodel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientStats {
    pub n: usize,
    pub k: usize,
    pub sst: f64,
    pub sse: f64,
    pub r2: f64,
}

impl SufficientStats {
    /// Summary for the intercept-only model.
    pub fn null(n: usize, sst: f64) -> Self {
        SufficientStats {
            n,
            k: 0,
            sst,
            sse: sst,
            r2: 0.0,
        }
    }

    /// Builds a summary directly from `(n, k, R²)`, with `sst` normalized to 1.
    pub fn from_r2(n: usize, k: usize, r2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r2) {
            return Err(Error::invalid("R²", format!("{r2} not in [0, 1]")));
        }
        if n < k + 2 {
            return Err(Error::invalid(
                "sufficient statistics",
                format!("need n > k + 1, got n = {n}, k = {k}"),
            ));
        }
        Ok(SufficientStats {
            n,
            k,
            sst: 1.0,
            sse: 1.0 - r2,
            r2,
        })
    }

    fn from_sse(n: usize, k: usize, sst: f64, sse: f64) -> Self {
        let sse = sse.clamp(0.0, sst);
        SufficientStats {
            n,
            k,
            sst,
            sse,
            r2: (1.0 - sse / sst).clamp(0.0, 1.0),
        }
    }
}

fn centered(v: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let (sum, count) = v.clone().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    let mean = sum / count as f64;
    v.map(|x| x - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_shapes(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::invalid(
            "design",
            format!("X has {} rows but y has {} entries", x.nrows(), y.len()),
        ));
    }
    if x.ncols() > MAX_COVARIATES {
        return Err(Error::Capacity {
            d: x.ncols(),
            cap: MAX_COVARIATES,
        });
    }
    Ok(())
}

fn centered_response(y: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let yc = centered(y.iter().copied());
    let sst = dot(&yc, &yc);
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sst > 0.0) || sst <= (f64::EPSILON * scale).powi(2) * y.len() as f64 {
        return Err(Error::DegenerateResponse);
    }
    Ok((yc, sst))
}

/// Fits the submodel `γ` by least squares with an intercept.
///
/// Columns are centered, which absorbs the intercept, and the fit runs through
/// a fresh Householder QR of the centered submatrix.
pub fn fit_submodel(x: &DMatrix<f64>, y: &DVector<f64>, gamma: Gamma) -> Result<SufficientStats> {
    check_shapes(x, y)?;
    if gamma.d() != x.ncols() {
        return Err(Error::invalid(
            "model",
            format!("model spans d = {} but X has {} columns", gamma.d(), x.ncols()),
        ));
    }
    let n = y.len();
    let k = gamma.size();
    if n < k + 2 {
        return Err(Error::invalid(
            "design",
            format!("n = {n} must exceed model size + 1 = {}", k + 1),
        ));
    }
    let (yc, sst) = centered_response(y)?;
    if k == 0 {
        return Ok(SufficientStats::null(n, sst));
    }

    let cols: Vec<usize> = gamma.to_vec();
    let mut xs = DMatrix::<f64>::zeros(n, k);
    let mut norms = Vec::with_capacity(k);
    for (c, &j) in cols.iter().enumerate() {
        let col = centered(x.column(j).iter().copied());
        norms.push(dot(&col, &col).sqrt());
        xs.set_column(c, &DVector::from_vec(col));
    }

    let qr = xs.qr();
    let r = qr.r();
    // The diagonal of R only bounds the rank loosely, but an exactly dependent
    // column shows up as a zero pivot relative to its own norm.
    for c in 0..k {
        if !(r[(c, c)].abs() > RANK_TOL * norms[c].max(f64::MIN_POSITIVE)) {
            return Err(Error::SingularDesign { gamma });
        }
    }
    let q = qr.q();
    let yv = DVector::from_vec(yc);
    let coef = q.transpose() * &yv;
    let resid = &yv - &q * coef;
    Ok(SufficientStats::from_sse(n, k, sst, resid.norm_squared()))
}

/// Sufficient statistics for every model in enumeration order.
///
/// Walks the subset tree depth first, extending an orthonormal basis of the
/// centered columns one covariate at a time (classical Gram-Schmidt with one
/// reorthogonalization pass). Each node costs `O(n·k)`, against `O(n·k²)` for a
/// fresh factorization.
pub fn all_subset_stats(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<SufficientStats>> {
    check_shapes(x, y)?;
    let n = y.len();
    let d = x.ncols();
    if n < d + 2 {
        return Err(Error::invalid(
            "design",
            format!("n = {n} must exceed d + 1 = {}", d + 1),
        ));
    }
    let (yc, sst) = centered_response(y)?;
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| centered(x.column(j).iter().copied()))
        .collect();

    let mut out = vec![SufficientStats::null(n, sst); 1usize << d];
    let mut walker = SubsetWalker {
        columns: &columns,
        d,
        n,
        sst,
        basis: Vec::with_capacity(d),
        out: &mut out,
    };
    walker.descend(0, 0, &yc)?;
    Ok(out)
}

struct SubsetWalker<'a> {
    columns: &'a [Vec<f64>],
    d: usize,
    n: usize,
    sst: f64,
    basis: Vec<Vec<f64>>,
    out: &'a mut [SufficientStats],
}

impl SubsetWalker<'_> {
    fn descend(&mut self, bits: u32, start: usize, resid: &[f64]) -> Result<()> {
        for j in start..self.d {
            let child = bits | 1 << j;
            let src = &self.columns[j];
            let norm0 = dot(src, src).sqrt();
            let mut v = src.clone();
            for _ in 0..2 {
                for q in &self.basis {
                    let p = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= p * qi);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if !(norm > RANK_TOL * norm0.max(f64::MIN_POSITIVE)) {
                return Err(Error::SingularDesign {
                    gamma: Gamma {
                        bits: child,
                        d: self.d as u8,
                    },
                });
            }
            v.iter_mut().for_each(|vi| *vi /= norm);
            let p = dot(&v, resid);
            let next: Vec<f64> = resid.iter().zip(&v).map(|(r, q)| r - p * q).collect();
            let k = child.count_ones() as usize;
            self.out[child as usize] = SufficientStats::from_sse(self.n, k, self.sst, dot(&next, &next));
            self.basis.push(v);
            self.descend(child, j + 1, &next)?;
            self.basis.pop();
        }
        Ok(())
    }
}
