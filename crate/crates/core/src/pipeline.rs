//! End-to-end runs: series in, significant relations out.

use serde::{Deserialize, Serialize};

use crate::engine::{generate_pairwise, score_hypotheses, CausalScore, EngineConfig, Hypothesis};
use crate::error::Result;
use crate::eval::{relation_from_hypothesis, Relation, RelationSet, Sign};
use crate::fdr::{
    analyze, to_zvalues, FdrConfig, FdrReport, Labeling, NullMode, ZTable, MIN_EMPIRICAL_N,
};
use crate::formula::WindowBound;
use crate::granger::{granger_lags, result_id, GrangerResult};
use crate::stats::benjamini_hochberg;
use crate::trace::{discretize, DiscretizationRule, RawSeries, Trace};

pub const DEFAULT_LAGS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferConfig {
    pub lags: Vec<usize>,
    pub threshold: f64,
    pub engine: EngineConfig,
    pub fdr: FdrConfig,
    /// Manual labeling instead of the fdr cut.
    pub manual: Option<Labeling>,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            lags: DEFAULT_LAGS.to_vec(),
            threshold: 0.0,
            engine: EngineConfig::default(),
            fdr: FdrConfig::default(),
            manual: None,
        }
    }
}

pub struct Inference {
    pub trace: Trace,
    pub hypotheses: Vec<Hypothesis>,
    pub scores: Vec<CausalScore>,
    pub z: ZTable,
    pub report: FdrReport,
    pub relations: RelationSet,
}

pub fn windows_for(lags: &[usize]) -> Vec<WindowBound> {
    lags.iter().map(|&l| WindowBound::exact(l)).collect()
}

/// Discretize, generate pairwise hypotheses, score, and label by fdr.
pub fn infer(series: &[RawSeries], config: &InferConfig) -> Result<Inference> {
    let trace = discretize(series, DiscretizationRule::new(config.threshold)?)?;
    infer_trace(trace, config)
}

/// Too few scores for an empirical null: use the theoretical one and say so.
fn analyze_or_fall_back(z: &ZTable, config: FdrConfig) -> Result<FdrReport> {
    if config.null_mode != NullMode::Empirical || z.len() >= MIN_EMPIRICAL_N {
        return analyze(z, config);
    }
    let msg = format!(
        "only {} scores, fewer than {MIN_EMPIRICAL_N} needed for an empirical null; using the theoretical null",
        z.len()
    );
    log::warn!("{msg}");
    let mut report = analyze(
        z,
        FdrConfig {
            null_mode: NullMode::Theoretical,
            ..config
        },
    )?;
    report.warnings.insert(0, msg);
    Ok(report)
}

pub fn infer_trace(trace: Trace, config: &InferConfig) -> Result<Inference> {
    let hypotheses = generate_pairwise(&trace, &windows_for(&config.lags))?;
    let scores = score_hypotheses(&trace, &hypotheses, config.engine)?;
    let z = to_zvalues(&scores)?;
    let mut report = analyze_or_fall_back(&z, config.fdr)?;
    if let Some(m) = config.manual {
        report.relabel(m);
    }
    let by_id: std::collections::HashMap<String, &Hypothesis> =
        scores.iter().map(|s| (s.hypothesis.id(), &s.hypothesis)).collect();
    let mut relations = RelationSet::new();
    for e in report.significant() {
        relations.insert(relation_from_hypothesis(&trace, by_id[&e.id])?);
    }
    Ok(Inference {
        trace,
        hypotheses,
        scores,
        z,
        report,
        relations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "level")]
pub enum GrangerSelection {
    /// Local fdr on z = Φ⁻¹(1 − p).
    LocalFdr,
    /// Benjamini–Hochberg at the given level.
    StepUp(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrangerConfig {
    pub lags: Vec<usize>,
    pub fdr: FdrConfig,
    pub selection: GrangerSelection,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig {
            lags: DEFAULT_LAGS.to_vec(),
            fdr: FdrConfig {
                upper_tail_only: true,
                ..FdrConfig::default()
            },
            selection: GrangerSelection::LocalFdr,
        }
    }
}

pub struct GrangerRun {
    pub results: Vec<GrangerResult>,
    pub report: FdrReport,
    /// Benjamini–Hochberg adjusted p-values, aligned with `results`.
    pub q_values: Vec<f64>,
    pub relations: RelationSet,
}

/// All pairwise tests at each lag; relations are sign-blind.
pub fn granger(series: &[RawSeries], config: &GrangerConfig) -> Result<GrangerRun> {
    let results = granger_lags(series, &config.lags)?;
    let ids: Vec<String> = results.iter().map(result_id).collect();
    let p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let z = ZTable::from_p_values(ids, &p)?;
    let report = analyze_or_fall_back(&z, config.fdr)?;
    let q_values = benjamini_hochberg(&p);
    let relations = results
        .iter()
        .enumerate()
        .filter(|(i, _)| match config.selection {
            GrangerSelection::LocalFdr => report.entries[*i].significant,
            GrangerSelection::StepUp(level) => q_values[*i] <= level,
        })
        .map(|(_, r)| Relation::new(&r.source, &r.target, r.lag, Sign::Any))
        .collect();
    Ok(GrangerRun {
        results,
        report,
        q_values,
        relations,
    })
}
