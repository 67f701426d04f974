//! Scoring discovered relations against ground truth.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::engine::Hypothesis;
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::sim::GroundTruth;
use crate::trace::{Trace, DOWN, UP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Positive,
    Negative,
    Any,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::Any => "any",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    pub delta: usize,
    pub sign: Sign,
}

impl Relation {
    pub fn new(source: impl Into<String>, target: impl Into<String>, delta: usize, sign: Sign) -> Self {
        Relation {
            source: source.into(),
            target: target.into(),
            delta,
            sign,
        }
    }

    /// (source, target, Δ): the part compared against ground truth.
    pub fn key(&self) -> (&str, &str, usize) {
        (&self.source, &self.target, self.delta)
    }
}

pub type RelationSet = BTreeSet<Relation>;

/// Drop signs, merging relations that differ only in sign.
pub fn unsigned(set: &RelationSet) -> RelationSet {
    set.iter()
        .map(|r| Relation {
            sign: Sign::Any,
            ..r.clone()
        })
        .collect()
}

pub fn truth_set(gt: &GroundTruth) -> RelationSet {
    gt.relations
        .iter()
        .map(|r| Relation::new(&r.source, &r.target, r.delta, Sign::Any))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fdr: f64,
    pub fnr: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let fdr = if tp + fp == 0 {
            0.0
        } else {
            fp as f64 / (tp + fp) as f64
        };
        let fnr = if tp + fn_ == 0 {
            0.0
        } else {
            fn_ as f64 / (tp + fn_) as f64
        };
        Metrics {
            tp,
            fp,
            fn_,
            fdr,
            fnr,
        }
    }

    /// Pool counts across datasets and recompute the rates.
    pub fn pooled<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Metrics {
        let (tp, fp, fn_) = items
            .into_iter()
            .fold((0, 0, 0), |(a, b, c), m| (a + m.tp, b + m.fp, c + m.fn_));
        Metrics::from_counts(tp, fp, fn_)
    }
}

/// Match on (source, target, Δ), ignoring sign.
pub fn score(found: &RelationSet, truth: &RelationSet) -> Metrics {
    let f: BTreeSet<_> = found.iter().map(Relation::key).collect();
    let t: BTreeSet<_> = truth.iter().map(Relation::key).collect();
    let tp = f.intersection(&t).count();
    Metrics::from_counts(tp, f.len() - tp, t.len() - tp)
}

/// Match on (source, target, Δ, sign). Truth entries with sign `Any` match
/// any sign.
pub fn score_signed(found: &RelationSet, truth: &RelationSet) -> Metrics {
    let matches = |r: &Relation| {
        truth
            .iter()
            .any(|t| t.key() == r.key() && (t.sign == Sign::Any || t.sign == r.sign))
    };
    let tp = found.iter().filter(|r| matches(r)).count();
    let fp = found.len() - tp;
    let hit: BTreeSet<_> = found.iter().filter(|r| matches(r)).map(Relation::key).collect();
    let fn_ = truth.iter().filter(|t| !hit.contains(&t.key())).count();
    Metrics::from_counts(tp, fp, fn_)
}

/// Jaccard overlap; 1.0 when both sets are empty.
pub fn intersection(a: &RelationSet, b: &RelationSet) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn consensus(a: &RelationSet, b: &RelationSet) -> RelationSet {
    a.intersection(b).cloned().collect()
}

/// Overlap expressed three ways: Jaccard and the share of each set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    pub jaccard: f64,
    pub of_first: f64,
    pub of_second: f64,
}

pub fn overlap(a: &RelationSet, b: &RelationSet) -> Overlap {
    let inter = a.intersection(b).count() as f64;
    let share = |n: usize| if n == 0 { 1.0 } else { inter / n as f64 };
    Overlap {
        jaccard: intersection(a, b),
        of_first: share(a.len()),
        of_second: share(b.len()),
    }
}

fn atom_parts<'a>(trace: &'a Trace, f: &Formula) -> Option<(&'a str, Option<&'static str>)> {
    let Formula::Atom(name) = f else {
        return None;
    };
    let idx = trace.atom_index(name)?;
    let var = trace.variable_of(idx);
    let dir = if name.ends_with(&format!(".{UP}")) {
        Some(UP)
    } else if name.ends_with(&format!(".{DOWN}")) {
        Some(DOWN)
    } else {
        None
    };
    Some((var, dir))
}

/// Map a pairwise hypothesis over single atoms to a relation between the
/// atoms' variables. Same direction on both sides is a positive relation,
/// opposite directions negative.
pub fn relation_from_hypothesis(trace: &Trace, h: &Hypothesis) -> Result<Relation> {
    let (Some((src, ds)), Some((dst, dt))) = (atom_parts(trace, &h.cause), atom_parts(trace, &h.effect))
    else {
        return Err(Error::InvalidArgument(format!(
            "hypothesis `{}` is not between two known atoms",
            h.id()
        )));
    };
    let sign = match (ds, dt) {
        (Some(a), Some(b)) if a == b => Sign::Positive,
        (Some(_), Some(_)) => Sign::Negative,
        _ => Sign::Any,
    };
    Ok(Relation::new(src, dst, h.window.lo, sign))
}

/// One line of a comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub method: String,
    pub scenario: String,
    pub period: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fdr: f64,
    pub fnr: f64,
    pub intersection: Option<f64>,
}

impl TableRow {
    pub fn new(method: &str, scenario: &str, period: &str, m: &Metrics, intersection: Option<f64>) -> Self {
        TableRow {
            method: method.into(),
            scenario: scenario.into(),
            period: period.into(),
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            fdr: m.fdr,
            fnr: m.fnr,
            intersection,
        }
    }
}

pub fn write_table_csv<W: Write>(w: W, rows: &[TableRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["method", "scenario", "period", "tp", "fp", "fn", "fdr", "fnr", "intersection"])?;
    for r in rows {
        wtr.write_record([
            r.method.clone(),
            r.scenario.clone(),
            r.period.clone(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            format!("{:?}", r.fdr),
            format!("{:?}", r.fnr),
            r.intersection.map_or(String::new(), |v| format!("{v:?}")),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Relations as CSV: source, target, delta, sign.
pub fn write_relations_csv<W: Write>(w: W, set: &RelationSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["source", "target", "delta", "sign"])?;
    for r in set {
        wtr.write_record([&r.source, &r.target, &r.delta.to_string(), &r.sign.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read relations written by [`write_relations_csv`] or a ground-truth CSV
/// (whose `kind` column is ignored). `#` lines are comments.
pub fn read_relations_csv<R: std::io::Read>(r: R) -> Result<RelationSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(s), Some(t), Some(d)) = (col("source"), col("target"), col("delta")) else {
        return Err(Error::Data(
            "relation file needs source, target and delta columns".into(),
        ));
    };
    let sign_col = col("sign");
    let mut out = RelationSet::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let delta: usize = rec[d].parse().map_err(|_| {
            Error::Data(format!("bad delta `{}` at row {}", &rec[d], row + 1))
        })?;
        if delta == 0 {
            return Err(Error::Data(format!("delta must be at least 1 at row {}", row + 1)));
        }
        let sign = match sign_col.map(|c| &rec[c]) {
            Some("+") => Sign::Positive,
            Some("-") => Sign::Negative,
            _ => Sign::Any,
        };
        out.insert(Relation::new(&rec[s], &rec[t], delta, sign));
    }
    Ok(out)
}
