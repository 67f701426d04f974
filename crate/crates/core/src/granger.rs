//! Pairwise Granger causality by nested least-squares regressions.
//!
//! For target `x` and candidate source `y` at lag `L`, the restricted model
//! regresses `x_t` on an intercept and `x_{t−1..t−L}`; the unrestricted model
//! adds `y_{t−1..t−L}`. With `n` usable rows (`n = T − L`),
//!
//! `F = ((RSS_r − RSS_u) / L) / (RSS_u / (n − 2L − 1))`
//!
//! and the p-value is the upper tail of `F(L, n − 2L − 1)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::trace::RawSeries;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerResult {
    pub source: String,
    pub target: String,
    pub lag: usize,
    pub f: f64,
    pub p_value: f64,
    /// Numerator and denominator degrees of freedom.
    pub dof: (usize, usize),
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
}

/// Least-squares fit by Householder QR. Errors when the design is rank
/// deficient.
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
}

const RANK_TOL: f64 = 1e-10;

pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "{n} observations for {p} regressors"
        )));
    }
    // Column scaling keeps the rank test independent of units.
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|v| *v == 0.0) {
        return Err(Error::Collinear(format!("regressor {j} is identically zero")));
    }
    let scaled = DMatrix::from_fn(n, p, |i, j| x[(i, j)] / norms[j]);
    let qr = scaled.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..p).find(|&j| r[(j, j)].abs() <= RANK_TOL * diag_max) {
        return Err(Error::Collinear(format!(
            "design matrix is rank deficient at column {j}"
        )));
    }
    let qty = qr.q().transpose() * y;
    let scaled_coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Collinear("singular triangular factor".into()))?;
    let coefficients = DVector::from_fn(p, |j, _| scaled_coef[j] / norms[j]);
    let residuals = y - &scaled * &scaled_coef;
    let rss = residuals.norm_squared();
    Ok(OlsFit {
        coefficients,
        residuals,
        rss,
    })
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

fn lag_design(series: &[&[f64]], lag: usize) -> DMatrix<f64> {
    let n = series[0].len() - lag;
    let p = 1 + series.len() * lag;
    DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            1.0
        } else {
            let s = (j - 1) / lag;
            let k = (j - 1) % lag + 1;
            series[s][i + lag - k]
        }
    })
}

/// Upper tail of F(d1, d2) at `f`.
pub fn f_upper_tail(f: f64, d1: usize, d2: usize) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let dist = FisherSnedecor::new(d1 as f64, d2 as f64).expect("positive degrees of freedom");
    dist.sf(f).clamp(0.0, 1.0)
}

/// Does `source` Granger-cause `target` at lag `lag`?
pub fn granger_test(target: &RawSeries, source: &RawSeries, lag: usize) -> Result<GrangerResult> {
    if lag == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".into()));
    }
    let t = target.len();
    if source.len() != t {
        return Err(Error::Data(format!(
            "series `{}` and `{}` differ in length ({} vs {})",
            target.name,
            source.name,
            t,
            source.len()
        )));
    }
    let rows = t.saturating_sub(lag);
    if rows < 2 * lag + 2 {
        return Err(Error::InvalidArgument(format!(
            "series of length {t} too short for lag {lag}: need at least {}",
            3 * lag + 2
        )));
    }
    for s in [target, source] {
        if is_constant(&s.values) {
            return Err(Error::Data(format!("series `{}` is constant", s.name)));
        }
    }
    let x = &target.values[..];
    let y = &source.values[..];
    let response = DVector::from_iterator(rows, x[lag..].iter().copied());
    let restricted = ols(&lag_design(&[x], lag), &response)?;
    let unrestricted = ols(&lag_design(&[x, y], lag), &response).map_err(|e| match e {
        Error::Collinear(m) => Error::Collinear(format!(
            "`{}` on lags of `{}` and `{}`: {m}",
            target.name, target.name, source.name
        )),
        other => other,
    })?;
    let d2 = rows - 2 * lag - 1;
    let rss_r = restricted.rss;
    let rss_u = unrestricted.rss.min(rss_r);
    if rss_u <= 0.0 {
        return Err(Error::Collinear(format!(
            "`{}` is an exact linear function of the lagged regressors",
            target.name
        )));
    }
    let f = ((rss_r - rss_u) / lag as f64) / (rss_u / d2 as f64);
    Ok(GrangerResult {
        source: source.name.clone(),
        target: target.name.clone(),
        lag,
        f,
        p_value: f_upper_tail(f, lag, d2),
        dof: (lag, d2),
        rss_restricted: rss_r,
        rss_unrestricted: rss_u,
    })
}

/// Every ordered pair of distinct series, sorted by (source, target).
pub fn granger_all_pairs(series: &[RawSeries], lag: usize) -> Result<Vec<GrangerResult>> {
    let pairs: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|s| (0..series.len()).filter(move |&t| t != s).map(move |t| (s, t)))
        .collect();
    let mut out = pairs
        .par_iter()
        .map(|&(s, t)| granger_test(&series[t], &series[s], lag))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    Ok(out)
}

/// Run [`granger_all_pairs`] at each lag, concatenating in lag order.
pub fn granger_lags(series: &[RawSeries], lags: &[usize]) -> Result<Vec<GrangerResult>> {
    let mut out = Vec::new();
    for &l in lags {
        out.extend(granger_all_pairs(series, l)?);
    }
    Ok(out)
}

/// Stable identifier used in fdr reports.
pub fn result_id(r: &GrangerResult) -> String {
    format!("{}->{}@{}", r.source, r.target, r.lag)
}

pub fn write_results_csv<W: Write>(w: W, results: &[GrangerResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["source", "target", "lag", "F", "p"])?;
    for r in results {
        wtr.write_record([
            r.source.clone(),
            r.target.clone(),
            r.lag.to_string(),
            format!("{:?}", r.f),
            format!("{:?}", r.p_value),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
