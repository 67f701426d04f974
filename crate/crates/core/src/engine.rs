//! Hypothesis generation, the prima facie test and ε_avg scoring.
//!
//! A hypothesis `c ~>[lo,hi] e` is a prima facie cause when `c` occurs at all,
//! the leads-to probability is defined, and it exceeds the marginal frequency
//! of `e`. Every prima facie cause is then compared against every other prima
//! facie cause `x` of the same effect (and, by default, the same window):
//!
//! ```text
//! ε_x(c, e)   = P(e | c ∧ x) − P(e | ¬c ∧ x)
//! ε_avg(c, e) = mean of the defined ε_x over x ≠ c
//! ```
//!
//! Conditioning events are evaluated at the same time point `t`; "e" means
//! that `e` occurs inside `c`'s window after `t`. Points whose window start
//! falls past the end of the trace are excluded, as in the leads-to estimate.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::checker::{window_start_valid, Checker, ProbEstimate};
use crate::error::{Error, Result};
use crate::formula::{Formula, Horizon, WindowBound};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub cause: Formula,
    pub effect: Formula,
    pub window: WindowBound,
}

impl Hypothesis {
    pub fn new(cause: Formula, effect: Formula, window: WindowBound) -> Result<Self> {
        let h = Hypothesis {
            cause,
            effect,
            window,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.window.lo < 1 {
            return Err(Error::InvalidArgument(format!(
                "hypothesis window {} must start at 1 or later",
                self.window
            )));
        }
        for side in [&self.cause, &self.effect] {
            side.validate()?;
            if side.contains_leads_to() || side.contains_bound() {
                return Err(Error::InvalidFormula(format!(
                    "cause and effect must be plain state formulas: {side}"
                )));
            }
        }
        Ok(())
    }

    /// Interpret a top-level leads-to formula as a hypothesis. A probability
    /// bound on it is ignored: the engine measures the probability.
    pub fn from_formula(f: &Formula) -> Result<Self> {
        match f {
            Formula::LeadsTo {
                window,
                cause,
                effect,
                ..
            } => Hypothesis::new((**cause).clone(), (**effect).clone(), *window),
            other => Err(Error::InvalidFormula(format!(
                "hypotheses must be leads-to formulas, got `{other}`"
            ))),
        }
    }

    pub fn to_formula(&self) -> Formula {
        Formula::leads_to(self.window, self.cause.clone(), self.effect.clone())
    }

    /// Stable identifier, the canonical text of the leads-to formula.
    pub fn id(&self) -> String {
        self.to_formula().to_string()
    }

    fn sort_key(&self) -> (String, String, WindowBound) {
        (self.cause.to_string(), self.effect.to_string(), self.window)
    }
}

impl Eq for Hypothesis {}

impl Ord for Hypothesis {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Hypothesis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalScore {
    pub hypothesis: Hypothesis,
    /// Frequency of the cause over the whole trace.
    pub p_cause: ProbEstimate,
    pub p_leadsto: ProbEstimate,
    pub p_marginal: ProbEstimate,
    pub prima_facie: bool,
    pub epsilon_avg: Option<f64>,
    /// Number of defined ε_x terms averaged into `epsilon_avg`.
    pub n_covariates: usize,
    /// Size of the comparison set |X∖c|, including undefined terms.
    pub n_candidates: usize,
    /// P(e|c) − P(e|¬c), reported for prima facie causes without a defined ε_avg.
    pub fallback_score: Option<f64>,
}

impl CausalScore {
    pub fn is_sole_cause(&self) -> bool {
        self.prima_facie && self.n_candidates == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Minimum number of time points in each conditioning cell of ε_x.
    pub min_support: usize,
    /// Compare causes across all windows of an effect instead of per window.
    pub pool_windows: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            min_support: 5,
            pool_windows: false,
        }
    }
}

/// Every ordered pair of atoms from different variables, for every window.
pub fn generate_pairwise(trace: &Trace, windows: &[WindowBound]) -> Result<Vec<Hypothesis>> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("no windows given".into()));
    }
    for w in windows {
        w.validate()?;
        if w.lo < 1 {
            return Err(Error::InvalidArgument(format!(
                "window {w} must start at 1 or later"
            )));
        }
    }
    let atoms = trace.atoms();
    let mut out = Vec::new();
    for (i, cause) in atoms.iter().enumerate() {
        for (j, effect) in atoms.iter().enumerate() {
            if trace.variable_of(i) == trace.variable_of(j) {
                continue;
            }
            for &w in windows {
                out.push(Hypothesis {
                    cause: Formula::atom(cause.clone()),
                    effect: Formula::atom(effect.clone()),
                    window: w,
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

fn prima_facie_with(ck: &Checker<'_>, h: &Hypothesis) -> Result<CausalScore> {
    let p_cause = ck.estimate_prob(&h.cause)?;
    let p_marginal = ck.estimate_prob(&h.effect)?;
    let p_leadsto = ck.estimate_leadsto(&h.cause, &h.effect, h.window)?;
    let prima_facie =
        p_cause.numerator > 0 && p_leadsto.is_defined() && p_marginal.lt(&p_leadsto);
    Ok(CausalScore {
        hypothesis: h.clone(),
        p_cause,
        p_leadsto,
        p_marginal,
        prima_facie,
        epsilon_avg: None,
        n_covariates: 0,
        n_candidates: 0,
        fallback_score: None,
    })
}

/// Prima facie test; the ε fields of the returned score are left empty.
pub fn prima_facie_test(trace: &Trace, h: &Hypothesis) -> Result<CausalScore> {
    h.validate()?;
    prima_facie_with(&Checker::new(trace), h)
}

/// Bit vectors of a cause `c` needed to evaluate ε_x against many covariates.
struct CauseCells {
    c_valid: Bits,
    c_valid_hit: Bits,
    notc_valid: Bits,
    notc_valid_hit: Bits,
}

impl CauseCells {
    fn new(ck: &Checker<'_>, h: &Hypothesis) -> Result<Self> {
        let c = ck.sat(&h.cause)?;
        let hits = ck.occurs_within(&h.effect, h.window)?;
        let valid = window_start_valid(ck.trace().len(), h.window);
        let c_valid = c.and(&valid);
        let notc_valid = valid.and_not(&c);
        Ok(CauseCells {
            c_valid_hit: c_valid.and(&hits),
            notc_valid_hit: notc_valid.and(&hits),
            c_valid,
            notc_valid,
        })
    }

    fn epsilon_given(&self, x: &Bits, min_support: usize) -> Option<f64> {
        let n1 = self.c_valid.and_count(x);
        let n0 = self.notc_valid.and_count(x);
        if n1 == 0 || n0 == 0 || n1 < min_support || n0 < min_support {
            return None;
        }
        let k1 = self.c_valid_hit.and_count(x);
        let k0 = self.notc_valid_hit.and_count(x);
        Some(k1 as f64 / n1 as f64 - k0 as f64 / n0 as f64)
    }

    fn unconditional(&self) -> Option<f64> {
        let (n1, n0) = (self.c_valid.count_ones(), self.notc_valid.count_ones());
        if n1 == 0 || n0 == 0 {
            return None;
        }
        Some(
            self.c_valid_hit.count_ones() as f64 / n1 as f64
                - self.notc_valid_hit.count_ones() as f64 / n0 as f64,
        )
    }
}

fn check_same_effect(c: &Hypothesis, x: &Hypothesis) -> Result<()> {
    if c.effect != x.effect {
        return Err(Error::InvalidArgument(format!(
            "ε_x needs a shared effect: `{}` vs `{}`",
            c.effect, x.effect
        )));
    }
    Ok(())
}

/// ε_x(c, e) = P(e | c ∧ x) − P(e | ¬c ∧ x), or `None` when either
/// conditioning cell has fewer than `min_support` points (and always when empty).
pub fn epsilon_x(
    trace: &Trace,
    c: &Hypothesis,
    x: &Hypothesis,
    min_support: usize,
) -> Result<Option<f64>> {
    check_same_effect(c, x)?;
    let ck = Checker::new(trace);
    let cells = CauseCells::new(&ck, c)?;
    Ok(cells.epsilon_given(&*ck.sat(&x.cause)?, min_support))
}

/// Mean of the defined ε_x(c, e) over `x ∈ causes ∖ {c}`. Returns the mean
/// (if any term is defined), the number of defined terms and |X∖c|.
pub fn epsilon_avg(
    trace: &Trace,
    c: &Hypothesis,
    causes: &[Hypothesis],
    min_support: usize,
) -> Result<(Option<f64>, usize, usize)> {
    if !causes.contains(c) {
        return Err(Error::InvalidArgument(format!(
            "cause `{}` is not in its comparison set",
            c.id()
        )));
    }
    for x in causes {
        check_same_effect(c, x)?;
    }
    let ck = Checker::new(trace);
    epsilon_avg_with(&ck, c, causes.iter().filter(|x| *x != c), min_support)
}

fn epsilon_avg_with<'h>(
    ck: &Checker<'_>,
    c: &Hypothesis,
    others: impl Iterator<Item = &'h Hypothesis>,
    min_support: usize,
) -> Result<(Option<f64>, usize, usize)> {
    let cells = CauseCells::new(ck, c)?;
    let (mut sum, mut defined, mut candidates) = (0.0, 0usize, 0usize);
    for x in others {
        candidates += 1;
        if let Some(e) = cells.epsilon_given(&*ck.sat(&x.cause)?, min_support) {
            sum += e;
            defined += 1;
        }
    }
    Ok(((defined > 0).then(|| sum / defined as f64), defined, candidates))
}

/// Sole-cause fallback P(e|c) − P(e|¬c), using `c`'s window.
pub fn fallback_score(trace: &Trace, c: &Hypothesis) -> Result<Option<f64>> {
    Ok(CauseCells::new(&Checker::new(trace), c)?.unconditional())
}

fn group_key(h: &Hypothesis, pool_windows: bool) -> (String, Option<WindowBound>) {
    (
        h.effect.to_string(),
        (!pool_windows).then_some(h.window),
    )
}

/// Full scoring: prima facie test for every hypothesis, then ε_avg within
/// each (effect, window) group. Output is sorted by hypothesis.
pub fn score_hypotheses(
    trace: &Trace,
    hypotheses: &[Hypothesis],
    config: EngineConfig,
) -> Result<Vec<CausalScore>> {
    for h in hypotheses {
        h.validate()?;
    }
    let mut sorted: Vec<Hypothesis> = hypotheses.to_vec();
    sorted.sort();
    sorted.dedup();

    let ck = Checker::new(trace);
    let mut scores: Vec<CausalScore> = sorted
        .par_iter()
        .map(|h| prima_facie_with(&ck, h))
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<(String, Option<WindowBound>), Vec<usize>> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        if s.prima_facie {
            groups
                .entry(group_key(&s.hypothesis, config.pool_windows))
                .or_default()
                .push(i);
        }
    }

    let updates: Vec<(usize, Option<f64>, usize, usize, Option<f64>)> = groups
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map_iter(|members| {
            members.iter().map(|&i| {
                let c = &scores[i].hypothesis;
                let others = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| &scores[j].hypothesis);
                let (eps, defined, candidates) =
                    epsilon_avg_with(&ck, c, others, config.min_support)?;
                let fallback = match eps {
                    Some(_) => None,
                    None => CauseCells::new(&ck, c)?.unconditional(),
                };
                Ok((i, eps, defined, candidates, fallback))
            })
        })
        .collect::<Result<_>>()?;

    for (i, eps, defined, candidates, fallback) in updates {
        let s = &mut scores[i];
        s.epsilon_avg = eps;
        s.n_covariates = defined;
        s.n_candidates = candidates;
        s.fallback_score = fallback;
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification<'a> {
    pub significant: Vec<&'a CausalScore>,
    pub insignificant: Vec<&'a CausalScore>,
}

/// Split scored causes into ε-significant (|ε_avg| ≥ ε) and ε-insignificant.
/// Every score must carry a defined ε_avg.
pub fn classify(scores: &[CausalScore], epsilon: f64) -> Result<Classification<'_>> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let mut out = Classification {
        significant: Vec::new(),
        insignificant: Vec::new(),
    };
    for s in scores {
        let eps = s.epsilon_avg.ok_or_else(|| {
            Error::InvalidArgument(format!("`{}` has no ε_avg", s.hypothesis.id()))
        })?;
        if eps.abs() < epsilon {
            out.insignificant.push(s);
        } else {
            out.significant.push(s);
        }
    }
    Ok(out)
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn horizon_str(h: Horizon) -> String {
    h.to_string()
}

/// Score table: cause, effect, window_lo, window_hi, p_leadsto, p_marginal,
/// prima_facie, epsilon_avg, n_covariates, fallback_score.
pub fn write_scores_csv<W: Write>(w: W, scores: &[CausalScore]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "cause",
        "effect",
        "window_lo",
        "window_hi",
        "p_leadsto",
        "p_marginal",
        "prima_facie",
        "epsilon_avg",
        "n_covariates",
        "fallback_score",
    ])?;
    for s in scores {
        let h = &s.hypothesis;
        wtr.write_record([
            h.cause.to_string(),
            h.effect.to_string(),
            h.window.lo.to_string(),
            horizon_str(h.window.hi),
            opt_f64(s.p_leadsto.value()),
            opt_f64(s.p_marginal.value()),
            s.prima_facie.to_string(),
            opt_f64(s.epsilon_avg),
            s.n_covariates.to_string(),
            opt_f64(s.fallback_score),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
