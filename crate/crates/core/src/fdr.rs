//! Local false discovery rate with an empirical null.
//!
//! 1. Scores are standardized into z-values ([`to_zvalues`]).
//! 2. The mixture density `f` is estimated by Poisson regression of histogram
//!    counts on a polynomial basis ([`fit_mixture`]).
//! 3. The null density `f0 = N(δ, σ²)` is read off a quadratic fitted to
//!    `log f` around its mode (central matching, [`fit_empirical_null`]), or
//!    fixed to `N(0, 1)`.
//! 4. `fdr(z) = min(1, f0(z) / f(z))`; hypotheses with `fdr < threshold` are
//!    labeled significant ([`local_fdr`]).
//!
//! The null proportion `p0` is estimated and reported but is not part of the
//! fdr ratio, so the reported fdr is an upper bound on `p0 f0 / f`.

use std::io::Write;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::engine::CausalScore;
use crate::error::{Error, Result};
use crate::stats::{normal_pdf, p_to_z, population_sd, quantile_sorted};

/// Minimum number of scores for fitting an empirical null.
pub const MIN_EMPIRICAL_N: usize = 20;
pub const DEFAULT_BINS: usize = 120;
pub const DEFAULT_DEGREE: usize = 7;
pub const DEFAULT_THRESHOLD: f64 = 0.01;
/// Half-width of the central-matching window around the mode of `f`.
pub const CENTRAL_HALF_WIDTH: f64 = 1.5;
/// Above this estimated non-null proportion the empirical null is unreliable.
pub const MAX_NON_NULL_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZEntry {
    pub id: String,
    /// The untransformed score (ε_avg, or a p-value derived quantity).
    pub score: f64,
    pub z: f64,
}

/// `z = (score − center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Standardization {
    pub center: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization {
        center: 0.0,
        scale: 1.0,
    };

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.center
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZTable {
    pub entries: Vec<ZEntry>,
    pub transform: Standardization,
    /// Sample skewness of the scores, surfaced because the normal-null
    /// assumption degrades when it is large.
    pub skewness: f64,
}

impl ZTable {
    /// Standardize raw scores by their mean and population standard deviation.
    pub fn standardize(ids: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if ids.len() != scores.len() {
            return Err(Error::InvalidArgument("ids and scores differ in length".into()));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
        }
        let distinct = scores.iter().any(|s| *s != scores[0]);
        if scores.len() < 2 || !distinct {
            return Err(Error::InvalidArgument(
                "need at least two distinct scores to standardize".into(),
            ));
        }
        let center = crate::stats::mean(&scores);
        let scale = population_sd(&scores);
        let transform = Standardization { center, scale };
        let skewness = scores
            .iter()
            .map(|s| transform.apply(*s).powi(3))
            .sum::<f64>()
            / scores.len() as f64;
        let entries = ids
            .into_iter()
            .zip(scores)
            .map(|(id, score)| ZEntry {
                id,
                score,
                z: transform.apply(score),
            })
            .collect();
        Ok(ZTable {
            entries,
            transform,
            skewness,
        })
    }

    /// Use already-computed z-values as they are.
    pub fn from_z(ids: Vec<String>, z: Vec<f64>) -> Result<Self> {
        if ids.len() != z.len() {
            return Err(Error::InvalidArgument("ids and z differ in length".into()));
        }
        if let Some(bad) = z.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite z {bad}")));
        }
        let n = z.len().max(1) as f64;
        let skewness = if z.len() > 1 {
            let (m, sd) = (crate::stats::mean(&z), population_sd(&z));
            if sd > 0.0 {
                z.iter().map(|v| ((v - m) / sd).powi(3)).sum::<f64>() / n
            } else {
                0.0
            }
        } else {
            0.0
        };
        Ok(ZTable {
            entries: ids
                .into_iter()
                .zip(z)
                .map(|(id, z)| ZEntry { id, score: z, z })
                .collect(),
            transform: Standardization::IDENTITY,
            skewness,
        })
    }

    /// z = Φ⁻¹(1 − p) for upper-tail p-values.
    pub fn from_p_values(ids: Vec<String>, p: &[f64]) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("p-value {bad} outside [0,1]")));
        }
        let mut t = ZTable::from_z(ids, p.iter().map(|v| p_to_z(*v)).collect())?;
        for (e, pv) in t.entries.iter_mut().zip(p) {
            e.score = *pv;
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.z).collect()
    }
}

/// z-values from every score with a defined ε_avg.
pub fn to_zvalues(scores: &[CausalScore]) -> Result<ZTable> {
    let (ids, eps): (Vec<String>, Vec<f64>) = scores
        .iter()
        .filter_map(|s| s.epsilon_avg.map(|e| (s.hypothesis.id(), e)))
        .unzip();
    ZTable::standardize(ids, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    PoissonPolynomial,
    KernelFallback,
}

/// Estimated mixture density `f` on an equal-width grid.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureFit {
    pub method: DensityMethod,
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    /// Bin centers.
    pub grid: Vec<f64>,
    pub counts: Vec<usize>,
    /// Density at each bin center; sums to 1 when multiplied by `bin_width`.
    pub density: Vec<f64>,
    pub n: usize,
    /// Legendre coefficients of log expected count (Poisson fit only).
    coefficients: Vec<f64>,
    norm_log: f64,
    kernel: Option<(Vec<f64>, f64)>,
    pub warnings: Vec<String>,
}

fn legendre_row(x: f64, degree: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree >= 1 {
        p.push(x);
    }
    for k in 2..=degree {
        let kf = k as f64;
        let v = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        p.push(v);
    }
    p
}

impl MixtureFit {
    fn scaled(&self, z: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        (z - mid) / half
    }

    /// Density estimate at an arbitrary point inside the fitted range.
    pub fn density_at(&self, z: f64) -> f64 {
        match self.method {
            DensityMethod::PoissonPolynomial => {
                let x = self.scaled(z.clamp(self.lo, self.hi));
                let row = legendre_row(x, self.coefficients.len() - 1);
                let eta: f64 = row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
                (eta - self.norm_log).exp()
            }
            DensityMethod::KernelFallback => {
                let (data, h) = self.kernel.as_ref().expect("kernel data present");
                kde(data, *h, z) / self.kernel_norm()
            }
        }
    }

    fn kernel_norm(&self) -> f64 {
        // Grid density was normalized to integrate to one; keep point
        // evaluations consistent with it.
        let (data, h) = self.kernel.as_ref().expect("kernel data present");
        self.grid.iter().map(|&g| kde(data, *h, g)).sum::<f64>() * self.bin_width
    }

    /// Numerical integral of the grid density.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    pub fn mode(&self) -> f64 {
        self.mode_within(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Grid point of highest density inside `[lo, hi]`, or the global mode
    /// when no grid point falls in the interval.
    pub fn mode_within(&self, lo: f64, hi: f64) -> f64 {
        let best = self
            .grid
            .iter()
            .zip(&self.density)
            .filter(|(g, _)| **g >= lo && **g <= hi)
            .fold(None, |acc: Option<(f64, f64)>, (&g, &d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((g, d)),
            });
        match best {
            Some((g, _)) => g,
            None if lo.is_finite() || hi.is_finite() => self.mode(),
            None => self.grid[0],
        }
    }
}

fn kde(data: &[f64], h: f64, z: f64) -> f64 {
    data.iter().map(|x| normal_pdf(z, *x, h)).sum::<f64>() / data.len() as f64
}

/// Silverman's rule of thumb: 0.9 · min(sd, IQR/1.34) · n^(−1/5).
pub fn silverman_bandwidth(data: &[f64]) -> f64 {
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let sd = population_sd(data);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (data.len() as f64).powf(-0.2)
}

struct PoissonFit {
    beta: Vec<f64>,
    mu: Vec<f64>,
}

fn poisson_irls(x: &DMatrix<f64>, y: &[f64]) -> Option<PoissonFit> {
    let (n, p) = x.shape();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut beta = DVector::zeros(p);
    beta[0] = mean_y.max(1e-8).ln();
    let deviance = |mu: &DVector<f64>| -> f64 {
        2.0 * y
            .iter()
            .zip(mu.iter())
            .map(|(&yi, &mi)| {
                let t = if yi > 0.0 { yi * (yi / mi).ln() } else { 0.0 };
                t - (yi - mi)
            })
            .sum::<f64>()
    };
    let mut eta = x * &beta;
    let mut mu = eta.map(f64::exp);
    let mut dev = deviance(&mu);
    for _ in 0..200 {
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwz = DVector::zeros(p);
        for i in 0..n {
            let w = mu[i];
            let zi = eta[i] + (y[i] - mu[i]) / mu[i];
            let row = x.row(i);
            for a in 0..p {
                xtwz[a] += w * row[a] * zi;
                for b in 0..=a {
                    xtwx[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(b, a)] = xtwx[(a, b)];
            }
        }
        let chol = xtwx.cholesky()?;
        let target = chol.solve(&xtwz);
        let mut step = 1.0;
        let (new_beta, new_eta, new_mu, new_dev) = loop {
            let cand = &beta + (&target - &beta) * step;
            let cand_eta = x * &cand;
            if cand_eta.iter().any(|v| !v.is_finite() || *v > 700.0) {
                step *= 0.5;
            } else {
                let cand_mu = cand_eta.map(f64::exp);
                let d = deviance(&cand_mu);
                if d.is_finite() && d <= dev + 1e-12 * dev.abs().max(1.0) {
                    break (cand, cand_eta, cand_mu, d);
                }
                step *= 0.5;
            }
            if step < 1e-10 {
                return None;
            }
        };
        let converged = (dev - new_dev).abs() <= 1e-10 * (new_dev.abs() + 1.0);
        beta = new_beta;
        eta = new_eta;
        mu = new_mu;
        dev = new_dev;
        if converged {
            return Some(PoissonFit {
                beta: beta.iter().copied().collect(),
                mu: mu.iter().copied().collect(),
            });
        }
    }
    None
}

/// Estimate the mixture density of the z-values.
///
/// Counts in `bins` equal-width bins over `[min z − m, max z + m]` (m is 5% of
/// the range) are regressed on Legendre polynomials up to `degree` with a
/// Poisson likelihood. When the fit cannot be computed (too few occupied
/// bins, divergence) a Gaussian kernel estimate with Silverman's bandwidth
/// is used instead and a warning is recorded.
pub fn fit_mixture(z: &ZTable, bins: usize, degree: usize) -> Result<MixtureFit> {
    let values = z.z_values();
    if values.len() < MIN_EMPIRICAL_N {
        return Err(Error::InvalidArgument(format!(
            "mixture fit needs at least {MIN_EMPIRICAL_N} z-values, got {}",
            values.len()
        )));
    }
    fit_density(&values, bins, degree, false)
}

/// Kernel-only density estimate, usable for small samples.
pub fn fit_kernel(z: &ZTable, bins: usize) -> Result<MixtureFit> {
    fit_density(&z.z_values(), bins, 0, true)
}

fn fit_density(values: &[f64], bins: usize, degree: usize, kernel_only: bool) -> Result<MixtureFit> {
    if bins < 3 {
        return Err(Error::InvalidArgument("need at least 3 bins".into()));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(max > min) {
        return Err(Error::Numerical("degenerate z range: all values equal".into()));
    }
    let margin = 0.05 * (max - min);
    let (lo, hi) = (min - margin, max + margin);
    let width = (hi - lo) / bins as f64;
    let grid: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = values.len();
    let mut fit = MixtureFit {
        method: DensityMethod::PoissonPolynomial,
        lo,
        hi,
        bin_width: width,
        grid,
        counts,
        density: Vec::new(),
        n,
        coefficients: Vec::new(),
        norm_log: 0.0,
        kernel: None,
        warnings: Vec::new(),
    };

    let occupied = fit.counts.iter().filter(|c| **c > 0).count();
    let poisson = if kernel_only {
        None
    } else if occupied <= degree + 1 {
        fit.warnings.push(format!(
            "only {occupied} occupied bins for a degree-{degree} fit; using kernel density"
        ));
        None
    } else {
        let rows: Vec<Vec<f64>> = fit
            .grid
            .iter()
            .map(|&g| legendre_row(fit.scaled(g), degree))
            .collect();
        let x = DMatrix::from_fn(bins, degree + 1, |i, j| rows[i][j]);
        let y: Vec<f64> = fit.counts.iter().map(|&c| c as f64).collect();
        let r = poisson_irls(&x, &y);
        if r.is_none() {
            fit.warnings
                .push("Poisson regression did not converge; using kernel density".into());
        }
        r
    };

    match poisson {
        Some(p) => {
            let total: f64 = p.mu.iter().sum();
            fit.density = p.mu.iter().map(|m| m / (total * width)).collect();
            fit.norm_log = (total * width).ln();
            fit.coefficients = p.beta;
        }
        None => {
            let h = silverman_bandwidth(values);
            if !(h > 0.0) {
                return Err(Error::Numerical("kernel bandwidth is zero".into()));
            }
            fit.method = DensityMethod::KernelFallback;
            let raw: Vec<f64> = fit.grid.iter().map(|&g| kde(values, h, g)).collect();
            let norm = raw.iter().sum::<f64>() * width;
            fit.density = raw.iter().map(|d| d / norm).collect();
            fit.kernel = Some((values.to_vec(), h));
        }
    }
    for w in &fit.warnings {
        warn!("{w}");
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSource {
    Empirical,
    Theoretical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullFit {
    pub mean: f64,
    pub sd: f64,
    pub source: NullSource,
    /// Estimated proportion of null cases, clipped to [0, 1].
    pub p0: f64,
    pub warnings: Vec<String>,
}

impl NullFit {
    pub fn theoretical() -> Self {
        NullFit {
            mean: 0.0,
            sd: 1.0,
            source: NullSource::Theoretical,
            p0: 1.0,
            warnings: Vec::new(),
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        normal_pdf(z, self.mean, self.sd)
    }

    pub fn non_null_fraction(&self) -> f64 {
        1.0 - self.p0
    }

    /// The non-null proportion is above the level at which an empirical
    /// null can be trusted.
    pub fn unreliable(&self) -> bool {
        self.non_null_fraction() > MAX_NON_NULL_FRACTION
    }

    /// A requested empirical fit fell back to the theoretical null.
    pub fn fell_back(&self) -> bool {
        self.source == NullSource::Theoretical && !self.warnings.is_empty()
    }
}

/// p0 for a given null: mass of z inside the central window divided by the
/// null's probability of that window.
fn central_p0(z: &[f64], mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let inside = z.iter().filter(|v| **v >= lo && **v <= hi).count() as f64 / z.len() as f64;
    let null_mass = crate::stats::normal_cdf((hi - mean) / sd) - crate::stats::normal_cdf((lo - mean) / sd);
    if null_mass <= 0.0 {
        return 1.0;
    }
    (inside / null_mass).clamp(0.0, 1.0)
}

/// Central matching: a quadratic fitted to `log f` on `[mode − 1.5, mode + 1.5]`
/// (weighted by the expected bin counts) gives `δ` from its vertex and `σ`
/// from its curvature. A non-concave fit falls back to `N(0, 1)`.
pub fn fit_empirical_null(z: &ZTable, f: &MixtureFit) -> Result<NullFit> {
    let zs = z.z_values();
    // The mode is sought between the quartiles so that a pile of extreme
    // values (saturated p-values, for instance) cannot capture the null.
    let mut sorted = zs.clone();
    sorted.sort_by(f64::total_cmp);
    let mode = f.mode_within(quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75));
    let (wlo, whi) = (mode - CENTRAL_HALF_WIDTH, mode + CENTRAL_HALF_WIDTH);
    let pts: Vec<(f64, f64, f64)> = f
        .grid
        .iter()
        .zip(&f.density)
        .filter(|(g, d)| **g >= wlo && **g <= whi && **d > 0.0)
        .map(|(g, d)| (g - mode, d.ln(), d * f.bin_width * f.n as f64))
        .collect();

    let fallback = |reason: String| -> Result<NullFit> {
        warn!("{reason}; using the theoretical null");
        let mut nf = NullFit::theoretical();
        nf.p0 = central_p0(&zs, 0.0, 1.0, wlo, whi);
        nf.warnings.push(reason);
        Ok(nf)
    };

    let mut warnings = Vec::new();
    let inside = zs.iter().filter(|v| **v >= wlo && **v <= whi).count();
    if (inside as f64) < 0.5 * zs.len() as f64 {
        warnings.push(format!(
            "central window holds only {inside} of {} z-values",
            zs.len()
        ));
    }
    if pts.len() < 3 {
        return fallback("too few grid points in the central window".into());
    }

    let x = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32) * pts[i].2.sqrt());
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1 * p.2.sqrt()));
    let coef = match x.svd(true, true).solve(&y, 1e-12) {
        Ok(c) => c,
        Err(e) => return fallback(format!("central fit failed: {e}")),
    };
    let (b, c) = (coef[1], coef[2]);
    if !(c < 0.0) || !c.is_finite() || !b.is_finite() {
        return fallback("central log-density fit is not concave".into());
    }
    let sd = (-1.0 / (2.0 * c)).sqrt();
    let offset = -b / (2.0 * c);
    let mean = mode + offset;
    // log(p0 f0) matches the quadratic, so p0 = exp(q(vertex)) · √(2π) σ.
    let peak = coef[0] + b * offset + c * offset * offset;
    let p0_cm = (peak.exp() * (2.0 * std::f64::consts::PI).sqrt() * sd).clamp(0.0, 1.0);
    let p0 = p0_cm.min(central_p0(&zs, mean, sd, wlo, whi));
    let nf = NullFit {
        mean,
        sd,
        source: NullSource::Empirical,
        p0,
        warnings,
    };
    if nf.unreliable() {
        let msg = format!(
            "estimated non-null fraction {:.3} exceeds {MAX_NON_NULL_FRACTION}; the empirical null is unreliable",
            nf.non_null_fraction()
        );
        warn!("{msg}");
        let mut nf = nf;
        nf.warnings.push(msg);
        return Ok(nf);
    }
    Ok(nf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrEntry {
    pub id: String,
    pub score: f64,
    pub z: f64,
    /// min(1, f0/f) before tail monotonization.
    pub fdr_raw: f64,
    pub fdr: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub z: f64,
    pub count: usize,
    pub f: f64,
    pub f0: f64,
}

/// How significance was decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "cutoff")]
pub enum Labeling {
    /// fdr below the threshold.
    Fdr,
    /// |z| at or above a hand-chosen cutoff.
    ManualZ(f64),
    /// |score| at or above a hand-chosen cutoff.
    ManualScore(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct FdrReport {
    pub entries: Vec<FdrEntry>,
    pub null: NullFit,
    pub density_method: DensityMethod,
    pub threshold: f64,
    pub labeling: Labeling,
    pub transform: Standardization,
    pub skewness: f64,
    pub grid: Vec<GridPoint>,
    pub warnings: Vec<String>,
    /// Only entries above the null center can be significant.
    pub upper_tail_only: bool,
}

impl FdrReport {
    pub fn significant(&self) -> impl Iterator<Item = &FdrEntry> {
        self.entries.iter().filter(|e| e.significant)
    }

    pub fn n_significant(&self) -> usize {
        self.significant().count()
    }

    /// Any numerical fallback happened (kernel density or theoretical null
    /// substituted for a requested empirical one).
    pub fn used_fallback(&self) -> bool {
        self.density_method == DensityMethod::KernelFallback || self.null.fell_back()
    }

    /// Re-label with a manual cutoff on |z| or on |score|; fdr values are kept.
    pub fn relabel(&mut self, labeling: Labeling) {
        self.labeling = labeling;
        let center = self.null.mean;
        for e in &mut self.entries {
            let tail_ok = !self.upper_tail_only || e.z > center;
            e.significant = tail_ok
                && match labeling {
                    Labeling::Fdr => e.fdr < self.threshold,
                    Labeling::ManualZ(c) => e.z.abs() >= c,
                    Labeling::ManualScore(c) => e.score.abs() >= c,
                };
        }
    }
}

/// Make fdr non-increasing moving away from the null center in each tail:
/// each value becomes the minimum over itself and all less extreme entries
/// on the same side.
fn monotonize_tails(z: &[f64], fdr: &[f64], center: f64) -> Vec<f64> {
    let mut out = fdr.to_vec();
    let mut upper: Vec<usize> = (0..z.len()).filter(|&i| z[i] >= center).collect();
    upper.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let mut lower: Vec<usize> = (0..z.len()).filter(|&i| z[i] < center).collect();
    lower.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    for side in [upper, lower] {
        let mut running = f64::INFINITY;
        for i in side {
            running = running.min(fdr[i]);
            out[i] = running;
        }
    }
    out
}

/// Local fdr for every entry and the significance labels at `threshold`.
pub fn local_fdr(z: &ZTable, f: &MixtureFit, null: &NullFit, threshold: f64) -> Result<FdrReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fdr threshold must be in (0, 1], got {threshold}"
        )));
    }
    let zs = z.z_values();
    let raw: Vec<f64> = zs
        .iter()
        .map(|&v| {
            let fv = f.density_at(v);
            assert!(fv > 0.0, "fitted density vanished at observed z = {v}");
            (null.density(v) / fv).min(1.0)
        })
        .collect();
    let fdr = monotonize_tails(&zs, &raw, null.mean);
    let entries = z
        .entries
        .iter()
        .zip(raw.iter().zip(&fdr))
        .map(|(e, (&r, &q))| FdrEntry {
            id: e.id.clone(),
            score: e.score,
            z: e.z,
            fdr_raw: r,
            fdr: q,
            significant: q < threshold,
        })
        .collect();
    let grid = f
        .grid
        .iter()
        .zip(&f.counts)
        .zip(&f.density)
        .map(|((&g, &c), &d)| GridPoint {
            z: g,
            count: c,
            f: d,
            f0: null.density(g),
        })
        .collect();
    let mut warnings = f.warnings.clone();
    warnings.extend(null.warnings.iter().cloned());
    Ok(FdrReport {
        entries,
        null: null.clone(),
        density_method: f.method,
        threshold,
        labeling: Labeling::Fdr,
        transform: z.transform,
        skewness: z.skewness,
        grid,
        warnings,
        upper_tail_only: false,
    })
}

/// Which null density to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMode {
    Empirical,
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FdrConfig {
    pub bins: usize,
    pub degree: usize,
    pub threshold: f64,
    pub null_mode: NullMode,
    /// Ignore the lower tail, as for z derived from one-sided p-values.
    pub upper_tail_only: bool,
}

impl Default for FdrConfig {
    fn default() -> Self {
        FdrConfig {
            bins: DEFAULT_BINS,
            degree: DEFAULT_DEGREE,
            threshold: DEFAULT_THRESHOLD,
            null_mode: NullMode::Empirical,
            upper_tail_only: false,
        }
    }
}

/// The whole procedure: density, null, fdr, labels. Samples smaller than
/// [`MIN_EMPIRICAL_N`] are refused in empirical mode; in theoretical mode they
/// use a kernel density estimate.
pub fn analyze(z: &ZTable, config: FdrConfig) -> Result<FdrReport> {
    let mut report = analyze_two_sided(z, config)?;
    if config.upper_tail_only {
        report.upper_tail_only = true;
        report.relabel(Labeling::Fdr);
    }
    Ok(report)
}

fn analyze_two_sided(z: &ZTable, config: FdrConfig) -> Result<FdrReport> {
    match config.null_mode {
        NullMode::Empirical => {
            let f = fit_mixture(z, config.bins, config.degree)?;
            let null = fit_empirical_null(z, &f)?;
            local_fdr(z, &f, &null, config.threshold)
        }
        NullMode::Theoretical => {
            let f = if z.len() >= MIN_EMPIRICAL_N {
                fit_mixture(z, config.bins, config.degree)?
            } else {
                fit_kernel(z, config.bins)?
            };
            local_fdr(z, &f, &NullFit::theoretical(), config.threshold)
        }
    }
}

/// Smallest |score| among significant entries: the ε implied by the labeling.
pub fn threshold_from_fdr(report: &FdrReport) -> Option<f64> {
    report
        .significant()
        .map(|e| e.score.abs())
        .min_by(f64::total_cmp)
}

/// Per-entry CSV: id, score, z, fdr, label.
pub fn write_report_csv<W: Write>(w: W, report: &FdrReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["hypothesis_id", "epsilon_avg", "z", "fdr", "label"])?;
    for e in &report.entries {
        wtr.write_record([
            e.id.clone(),
            format!("{:?}", e.score),
            format!("{:?}", e.z),
            format!("{:?}", e.fdr),
            if e.significant { "significant" } else { "null" }.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Histogram and fitted curves: z, count, f, f0, and the curves scaled to
/// expected counts (`n·w·f`, `n·w·p0·f0`).
pub fn write_grid_csv<W: Write>(w: W, report: &FdrReport) -> Result<()> {
    let n: usize = report.grid.iter().map(|g| g.count).sum();
    let width = if report.grid.len() > 1 {
        report.grid[1].z - report.grid[0].z
    } else {
        1.0
    };
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["z", "count", "f", "f0", "expected_f", "expected_p0_f0"])?;
    for g in &report.grid {
        let scale = n as f64 * width;
        wtr.write_record([
            format!("{:?}", g.z),
            g.count.to_string(),
            format!("{:?}", g.f),
            format!("{:?}", g.f0),
            format!("{:?}", g.f * scale),
            format!("{:?}", g.f0 * scale * report.null.p0),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FdrSummary<'a> {
    pub n: usize,
    pub n_significant: usize,
    pub threshold: f64,
    pub labeling: Labeling,
    pub null: &'a NullFit,
    pub non_null_fraction: f64,
    pub null_unreliable: bool,
    pub density_method: DensityMethod,
    pub transform: Standardization,
    pub skewness: f64,
    pub epsilon: Option<f64>,
    pub warnings: &'a [String],
}

pub fn summary(report: &FdrReport) -> FdrSummary<'_> {
    FdrSummary {
        n: report.entries.len(),
        n_significant: report.n_significant(),
        threshold: report.threshold,
        labeling: report.labeling,
        null: &report.null,
        non_null_fraction: report.null.non_null_fraction(),
        null_unreliable: report.null.unreliable(),
        density_method: report.density_method,
        transform: report.transform,
        skewness: report.skewness,
        epsilon: threshold_from_fdr(report),
        warnings: &report.warnings,
    }
}
