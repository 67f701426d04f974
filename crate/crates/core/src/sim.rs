//! Synthetic factor-model returns with known lead/lag structure.
//!
//! `r[i][t] = Σ_j beta[i][j] · f[j][t − lag[i][j]] + e[i][t]`
//!
//! Portfolios that see a factor at a shorter lag than others act as proxies
//! for it and so appear to cause the slower ones. Scenarios D–F additionally
//! add `e_raw[k][t−1]` to the error of selected portfolios `i`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granger::ols;
use crate::trace::RawSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::A,
        Scenario::B,
        Scenario::C,
        Scenario::D,
        Scenario::E,
        Scenario::F,
    ];

    pub fn has_dependencies(self) -> bool {
        matches!(self, Scenario::D | Scenario::E | Scenario::F)
    }

    pub fn lag_pattern(self) -> LagPattern {
        match self {
            Scenario::A | Scenario::D => LagPattern::Uniform,
            Scenario::B | Scenario::E => LagPattern::HalfAlternate,
            Scenario::C | Scenario::F => LagPattern::HalfRandom,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Scenario::A),
            "B" => Ok(Scenario::B),
            "C" => Ok(Scenario::C),
            "D" => Ok(Scenario::D),
            "E" => Ok(Scenario::E),
            "F" => Ok(Scenario::F),
            other => Err(Error::InvalidSpec(format!(
                "unknown scenario `{other}` (expected one of A-F)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagPattern {
    /// Every portfolio sees every factor at `base_lag`.
    Uniform,
    /// The first half of the portfolios use `alt_lag`.
    HalfAlternate,
    /// The first half draw a lag per factor uniformly from `[0, random_lag_max]`.
    HalfRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    pub scenario: Scenario,
    pub n_portfolios: usize,
    pub n_days: usize,
    pub n_factors: usize,
    pub base_lag: usize,
    pub alt_lag: usize,
    pub random_lag_max: usize,
    pub n_dependencies: usize,
    /// Loadings on the first (market) factor are N(mean, sd).
    pub market_beta_mean: f64,
    pub market_beta_sd: f64,
    pub other_beta_mean: f64,
    pub other_beta_sd: f64,
    /// Disable the factor channel entirely.
    pub zero_betas: bool,
    pub residual_sd: f64,
    /// Pairwise correlation of the idiosyncratic errors.
    pub residual_corr: f64,
    /// Per-factor standard deviations; length must equal `n_factors`.
    pub factor_sds: Vec<f64>,
    /// Pairwise correlation between factors.
    pub factor_corr: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            scenario: Scenario::A,
            n_portfolios: 25,
            n_days: 3001,
            n_factors: 3,
            base_lag: 3,
            alt_lag: 1,
            random_lag_max: 3,
            n_dependencies: 3,
            market_beta_mean: 1.0,
            market_beta_sd: 0.2,
            other_beta_mean: 0.0,
            other_beta_sd: 0.3,
            zero_betas: false,
            residual_sd: 0.005,
            residual_corr: 0.1,
            factor_sds: vec![0.01, 0.005, 0.005],
            factor_corr: 0.1,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        SimSpec {
            scenario,
            seed,
            ..SimSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_portfolios < 2 {
            return bad("need at least 2 portfolios".into());
        }
        if self.n_factors == 0 {
            return bad("need at least 1 factor".into());
        }
        if self.factor_sds.len() != self.n_factors {
            return bad(format!(
                "{} factor standard deviations for {} factors",
                self.factor_sds.len(),
                self.n_factors
            ));
        }
        if self.alt_lag > self.base_lag {
            return bad(format!(
                "alt_lag {} exceeds base_lag {}",
                self.alt_lag, self.base_lag
            ));
        }
        if self.random_lag_max > self.base_lag {
            return bad(format!(
                "random lags up to {} exceed base_lag {}",
                self.random_lag_max, self.base_lag
            ));
        }
        if self.n_days <= self.base_lag + 1 {
            return bad(format!(
                "n_days {} must exceed base_lag + 1",
                self.n_days
            ));
        }
        let max_pairs = self.n_portfolios * (self.n_portfolios - 1);
        if self.scenario.has_dependencies() && self.n_dependencies > max_pairs {
            return bad(format!(
                "{} dependencies requested but only {max_pairs} ordered pairs exist",
                self.n_dependencies
            ));
        }
        for (name, v) in [
            ("market_beta_sd", self.market_beta_sd),
            ("other_beta_sd", self.other_beta_sd),
            ("residual_sd", self.residual_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number"));
            }
        }
        if self.factor_sds.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("factor standard deviations must be finite and non-negative".into());
        }
        for (name, v) in [
            ("residual_corr", self.residual_corr),
            ("factor_corr", self.factor_corr),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    /// Number of portfolios on the alternate or random lag schedule.
    pub fn designated(&self) -> usize {
        match self.scenario.lag_pattern() {
            LagPattern::Uniform => 0,
            _ => self.n_portfolios / 2,
        }
    }

    /// Factor history needed before day 0.
    fn burn_in(&self) -> usize {
        self.base_lag
    }
}

pub fn portfolio_name(i: usize) -> String {
    format!("P{:02}", i + 1)
}

pub fn factor_name(j: usize) -> String {
    format!("F{}", j + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    FactorProxy,
    Dependency,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrueRelation {
    pub source: String,
    pub target: String,
    pub delta: usize,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub relations: BTreeSet<TrueRelation>,
    /// Factor-proxy pairs whose shared factors imply more than one lag
    /// difference: the non-canonical differences, keyed by (source, target).
    pub alternates: BTreeMap<(String, String), Vec<usize>>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["source", "target", "delta", "kind"])?;
        for r in &self.relations {
            let kind = match r.kind {
                RelationKind::FactorProxy => "factor-proxy",
                RelationKind::Dependency => "dependency",
            };
            wtr.write_record([&r.source, &r.target, &r.delta.to_string(), kind])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_alternates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["source", "target", "delta"])?;
        for ((s, t), ds) in &self.alternates {
            for d in ds {
                wtr.write_record([s, t, &d.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The parts of a simulation shared by both periods of a pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Structure {
    pub betas: Vec<Vec<f64>>,
    pub lags: Vec<Vec<usize>>,
    /// Ordered (k, i): portfolio i's error includes k's raw error from the
    /// previous day.
    pub dependencies: Vec<(usize, usize)>,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub spec: SimSpec,
    pub names: Vec<String>,
    /// `returns[i][t]`.
    pub returns: Vec<Vec<f64>>,
    /// Idiosyncratic errors before dependency injection.
    pub errors_raw: Vec<Vec<f64>>,
    /// Errors as they enter the returns.
    pub errors: Vec<Vec<f64>>,
    /// `factors[j][t + burn_in]` is factor j on day t; the first `burn_in`
    /// entries precede day 0.
    pub factors: Vec<Vec<f64>>,
    pub burn_in: usize,
    pub betas: Vec<Vec<f64>>,
    pub lags: Vec<Vec<usize>>,
    pub dependencies: Vec<(usize, usize)>,
    pub ground_truth: GroundTruth,
}

impl SimOutput {
    /// Factor `j` on day `t`, where `t` may be as small as `−burn_in`.
    pub fn factor_at(&self, j: usize, t: isize) -> f64 {
        self.factors[j][(t + self.burn_in as isize) as usize]
    }

    pub fn return_series(&self) -> Vec<RawSeries> {
        self.series_of(&self.returns)
    }

    pub fn error_series(&self) -> Vec<RawSeries> {
        self.series_of(&self.errors)
    }

    fn series_of(&self, m: &[Vec<f64>]) -> Vec<RawSeries> {
        self.names
            .iter()
            .zip(m)
            .map(|(n, v)| RawSeries {
                name: n.clone(),
                values: v.clone(),
                timestamps: None,
            })
            .collect()
    }

    /// Largest deviation from the return identity over all (i, t).
    pub fn reconstruction_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.returns.len() {
            for t in 0..self.returns[i].len() {
                let mut v = self.errors[i][t];
                for j in 0..self.betas[i].len() {
                    v += self.betas[i][j] * self.factor_at(j, t as isize - self.lags[i][j] as isize);
                }
                worst = worst.max((self.returns[i][t] - v).abs());
            }
        }
        worst
    }

    fn header(&self) -> Vec<String> {
        vec![format!(
            "seed={} scenario={} portfolios={} days={}",
            self.spec.seed, self.spec.scenario, self.spec.n_portfolios, self.spec.n_days
        )]
    }

    pub fn write_returns_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix(w, &self.header(), &self.names, &self.returns, 0)
    }

    pub fn write_errors_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut names: Vec<String> = self.names.iter().map(|n| format!("{n}.raw")).collect();
        names.extend(self.names.iter().cloned());
        let mut cols = self.errors_raw.clone();
        cols.extend(self.errors.iter().cloned());
        write_matrix(w, &self.header(), &names, &cols, 0)
    }

    /// Factor series including the days before day 0 (negative `t`).
    pub fn write_factors_csv<W: Write>(&self, w: W) -> Result<()> {
        let names: Vec<String> = (0..self.factors.len()).map(factor_name).collect();
        write_matrix(w, &self.header(), &names, &self.factors, self.burn_in)
    }

    pub fn write_ground_truth_csv<W: Write>(&self, w: W) -> Result<()> {
        self.ground_truth.write_csv(w, &self.header())
    }

    /// Returns regressed on an intercept and the same-day factors; the
    /// residuals of each portfolio.
    pub fn residualize(&self) -> Result<Vec<Vec<f64>>> {
        let t = self.spec.n_days;
        let k = self.factors.len();
        let x = DMatrix::from_fn(t, k + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                self.factor_at(c - 1, r as isize)
            }
        });
        self.returns
            .iter()
            .map(|r| {
                let y = DVector::from_column_slice(r);
                Ok(ols(&x, &y)?.residuals.iter().copied().collect())
            })
            .collect()
    }
}

fn write_matrix<W: Write>(
    mut w: W,
    comments: &[String],
    names: &[String],
    cols: &[Vec<f64>],
    offset: usize,
) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    wtr.write_record(&header)?;
    let len = cols.first().map_or(0, Vec::len);
    for t in 0..len {
        let mut row = vec![(t as isize - offset as isize).to_string()];
        row.extend(cols.iter().map(|c| format!("{:?}", c[t])));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

const STRUCTURE_STREAM: u64 = 0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated standard deviation")
}

/// Draw betas, lags and dependency pairs, and derive the ground truth.
pub fn draw_structure(spec: &SimSpec) -> Result<Structure> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, STRUCTURE_STREAM);
    let (n, k) = (spec.n_portfolios, spec.n_factors);
    let market = normal(spec.market_beta_mean, spec.market_beta_sd);
    let other = normal(spec.other_beta_mean, spec.other_beta_sd);
    let betas: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|j| {
                    let b = if j == 0 {
                        market.sample(&mut rng)
                    } else {
                        other.sample(&mut rng)
                    };
                    if spec.zero_betas {
                        0.0
                    } else {
                        b
                    }
                })
                .collect()
        })
        .collect();
    let half = spec.designated();
    let lags: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..k)
                .map(|_| {
                    if i >= half {
                        return spec.base_lag;
                    }
                    match spec.scenario.lag_pattern() {
                        LagPattern::Uniform => spec.base_lag,
                        LagPattern::HalfAlternate => spec.alt_lag,
                        LagPattern::HalfRandom => rng.random_range(0..=spec.random_lag_max),
                    }
                })
                .collect()
        })
        .collect();
    let dependencies = if spec.scenario.has_dependencies() {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let mut picked: Vec<(usize, usize)> = sample(&mut rng, all.len(), spec.n_dependencies)
            .into_iter()
            .map(|i| all[i])
            .collect();
        picked.sort_unstable();
        picked
    } else {
        Vec::new()
    };
    let ground_truth = ground_truth(&betas, &lags, &dependencies);
    Ok(Structure {
        betas,
        lags,
        dependencies,
        ground_truth,
    })
}

/// Factor-proxy relations from the lag table, plus dependency relations.
pub fn ground_truth(betas: &[Vec<f64>], lags: &[Vec<usize>], deps: &[(usize, usize)]) -> GroundTruth {
    let mut gt = GroundTruth::default();
    let n = betas.len();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut diffs: Vec<usize> = (0..betas[a].len())
                .filter(|&j| betas[a][j] != 0.0 && betas[b][j] != 0.0 && lags[a][j] < lags[b][j])
                .map(|j| lags[b][j] - lags[a][j])
                .collect();
            diffs.sort_unstable();
            diffs.dedup();
            if let Some((&delta, rest)) = diffs.split_first() {
                gt.relations.insert(TrueRelation {
                    source: portfolio_name(a),
                    target: portfolio_name(b),
                    delta,
                    kind: RelationKind::FactorProxy,
                });
                if !rest.is_empty() {
                    gt.alternates
                        .insert((portfolio_name(a), portfolio_name(b)), rest.to_vec());
                }
            }
        }
    }
    for &(k, i) in deps {
        gt.relations.insert(TrueRelation {
            source: portfolio_name(k),
            target: portfolio_name(i),
            delta: 1,
            kind: RelationKind::Dependency,
        });
    }
    gt
}

/// Draw `rows × cols` equicorrelated normals with the given per-column sds.
fn equicorrelated(rng: &mut ChaCha8Rng, rows: usize, sds: &[f64], rho: f64) -> Vec<Vec<f64>> {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut out = vec![vec![0.0; rows]; sds.len()];
    for t in 0..rows {
        let common: f64 = StandardNormal.sample(rng);
        for (c, sd) in sds.iter().enumerate() {
            let own: f64 = StandardNormal.sample(rng);
            out[c][t] = sd * (a * common + b * own);
        }
    }
    out
}

/// Generate one period with a given structure, drawing factors and errors
/// from `stream` of the spec's seed.
pub fn simulate_period(spec: &SimSpec, structure: &Structure, stream: u64) -> Result<SimOutput> {
    let mut rng = rng_for(spec.seed, stream);
    let factors = equicorrelated(
        &mut rng,
        spec.n_days + spec.burn_in(),
        &spec.factor_sds,
        spec.factor_corr,
    );
    simulate_with(spec, structure, factors, &mut rng)
}

/// As [`simulate_period`] but with externally supplied factor series. Each
/// series must cover `n_days + base_lag` days, the first `base_lag` of which
/// precede day 0.
pub fn simulate_with_factors(
    spec: &SimSpec,
    structure: &Structure,
    factors: &[RawSeries],
    stream: u64,
) -> Result<SimOutput> {
    let need = spec.n_days + spec.burn_in();
    if factors.len() != spec.n_factors {
        return Err(Error::InvalidSpec(format!(
            "{} factor series supplied for {} factors",
            factors.len(),
            spec.n_factors
        )));
    }
    if let Some(s) = factors.iter().find(|s| s.len() < need) {
        return Err(Error::InvalidSpec(format!(
            "factor series `{}` has {} days, need {need}",
            s.name,
            s.len()
        )));
    }
    let mut rng = rng_for(spec.seed, stream);
    let cols = factors.iter().map(|s| s.values[..need].to_vec()).collect();
    simulate_with(spec, structure, cols, &mut rng)
}

fn simulate_with(
    spec: &SimSpec,
    structure: &Structure,
    factors: Vec<Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<SimOutput> {
    let (n, t_len, burn) = (spec.n_portfolios, spec.n_days, spec.burn_in());
    let errors_raw = equicorrelated(rng, t_len, &vec![spec.residual_sd; n], spec.residual_corr);
    let mut errors = errors_raw.clone();
    // Day 0 has no previous error to inherit.
    for &(k, i) in &structure.dependencies {
        for t in 1..t_len {
            errors[i][t] += errors_raw[k][t - 1];
        }
    }
    let mut returns = vec![vec![0.0; t_len]; n];
    for i in 0..n {
        for t in 0..t_len {
            let mut v = errors[i][t];
            for (j, f) in factors.iter().enumerate() {
                v += structure.betas[i][j] * f[t + burn - structure.lags[i][j]];
            }
            returns[i][t] = v;
        }
    }
    Ok(SimOutput {
        spec: spec.clone(),
        names: (0..n).map(portfolio_name).collect(),
        returns,
        errors_raw,
        errors,
        factors,
        burn_in: burn,
        betas: structure.betas.clone(),
        lags: structure.lags.clone(),
        dependencies: structure.dependencies.clone(),
        ground_truth: structure.ground_truth.clone(),
    })
}

/// One period. Identical to the first of [`two_periods`].
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    let s = draw_structure(spec)?;
    simulate_period(spec, &s, 1)
}

/// Two periods sharing betas, lags and dependencies, with independent
/// factor and error draws.
pub fn two_periods(spec: &SimSpec) -> Result<(SimOutput, SimOutput)> {
    let s = draw_structure(spec)?;
    Ok((simulate_period(spec, &s, 1)?, simulate_period(spec, &s, 2)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> SimSpec {
        SimSpec {
            n_portfolios: 6,
            n_days: 200,
            ..SimSpec::new(scenario, 42)
        }
    }

    #[test]
    fn scenario_a_has_no_truth() {
        let out = simulate(&small(Scenario::A)).unwrap();
        assert!(out.ground_truth.is_empty());
        assert!(out.lags.iter().flatten().all(|l| *l == 3));
        assert!(out.dependencies.is_empty());
    }

    #[test]
    fn scenario_b_four_portfolios() {
        let spec = SimSpec {
            n_portfolios: 4,
            ..small(Scenario::B)
        };
        let out = simulate(&spec).unwrap();
        let expect: BTreeSet<(String, String, usize)> = [(0, 2), (0, 3), (1, 2), (1, 3)]
            .iter()
            .map(|&(a, b)| (portfolio_name(a), portfolio_name(b), 2))
            .collect();
        let got: BTreeSet<(String, String, usize)> = out
            .ground_truth
            .relations
            .iter()
            .map(|r| (r.source.clone(), r.target.clone(), r.delta))
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn zero_betas_d_has_only_dependencies() {
        let spec = SimSpec {
            zero_betas: true,
            ..small(Scenario::D)
        };
        let out = simulate(&spec).unwrap();
        assert_eq!(out.ground_truth.len(), 3);
        assert!(out
            .ground_truth
            .relations
            .iter()
            .all(|r| r.delta == 1 && r.kind == RelationKind::Dependency));
    }

    #[test]
    fn identity_holds() {
        for sc in Scenario::ALL {
            let out = simulate(&small(sc)).unwrap();
            assert!(out.reconstruction_error() <= 1e-12, "{sc}");
        }
    }

    #[test]
    fn dependency_injection() {
        let out = simulate(&small(Scenario::E)).unwrap();
        let (k, i) = out.dependencies[0];
        let others: f64 = out
            .dependencies
            .iter()
            .filter(|(kk, ii)| *ii == i && *kk != k)
            .map(|(kk, _)| out.errors_raw[*kk][9])
            .sum();
        let expect = out.errors_raw[i][10] + out.errors_raw[k][9] + others;
        assert!((out.errors[i][10] - expect).abs() < 1e-15);
    }

    #[test]
    fn random_lags_in_range() {
        let spec = SimSpec {
            n_portfolios: 20,
            ..small(Scenario::F)
        };
        let out = simulate(&spec).unwrap();
        for (i, row) in out.lags.iter().enumerate() {
            for &l in row {
                if i >= 10 {
                    assert_eq!(l, 3);
                } else {
                    assert!(l <= 3);
                }
            }
        }
    }

    #[test]
    fn periods_share_structure() {
        let (a, b) = two_periods(&small(Scenario::C)).unwrap();
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_eq!(a.betas, b.betas);
        assert_ne!(a.returns, b.returns);
        let (a2, _) = two_periods(&small(Scenario::C)).unwrap();
        assert_eq!(a.returns, a2.returns);
        assert_eq!(simulate(&small(Scenario::C)).unwrap().returns, a.returns);
    }

    #[test]
    fn invalid_specs() {
        let mut s = small(Scenario::B);
        s.alt_lag = 4;
        assert!(simulate(&s).is_err());
        let mut s = small(Scenario::A);
        s.n_days = 4;
        assert!(simulate(&s).is_err());
        let mut s = small(Scenario::A);
        s.factor_sds = vec![0.01];
        assert!(simulate(&s).is_err());
        assert!("G".parse::<Scenario>().is_err());
        assert_eq!("e".parse::<Scenario>().unwrap(), Scenario::E);
    }

    #[test]
    fn residualize_shapes() {
        let out = simulate(&small(Scenario::A)).unwrap();
        let r = out.residualize().unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r[0].len(), 200);
    }
}
