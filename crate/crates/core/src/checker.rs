//! Frequency-based checking of formulas over a single trace.
//!
//! State formulas (everything except leads-to) are evaluated pointwise into a
//! [`SatVector`]. Windows that run past the end of the trace are truncated to
//! the available suffix. Leads-to is probabilistic and is estimated with
//! [`estimate_leadsto`]: among time points where the cause holds and the
//! window start is still inside the trace, the fraction at which the effect
//! occurs somewhere in the (truncated) window.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::formula::{Formula, WindowBound};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq)]
pub struct SatVector {
    pub formula: Formula,
    pub truth: Bits,
}

/// An exact count ratio. The value is undefined when nothing was counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbEstimate {
    pub numerator: usize,
    pub denominator: usize,
}

impl ProbEstimate {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        debug_assert!(numerator <= denominator);
        ProbEstimate {
            numerator,
            denominator,
        }
    }

    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    pub fn is_defined(&self) -> bool {
        self.denominator > 0
    }

    /// Exact comparison `self < other` by cross-multiplication. Both must be defined.
    pub fn lt(&self, other: &ProbEstimate) -> bool {
        (self.numerator as u128) * (other.denominator as u128)
            < (other.numerator as u128) * (self.denominator as u128)
    }
}

/// `next[s]` = smallest `u >= s` with `bits[u]`, or `len` if none. Has `len + 1` entries.
fn next_true(bits: &Bits) -> Vec<usize> {
    let len = bits.len();
    let mut next = vec![len; len + 1];
    for s in (0..len).rev() {
        next[s] = if bits.get(s) { s } else { next[s + 1] };
    }
    next
}

fn until_bits(left: &Bits, right: &Bits, window: WindowBound) -> Bits {
    let len = left.len();
    let next_r = next_true(right);
    let next_not_l = next_true(&left.not());
    Bits::from_bools((0..len).map(|t| {
        let start = t + window.lo;
        if start >= len {
            return false;
        }
        // u may not pass the first point where the left side fails.
        let end = window.hi.clamp_end(t, len).min(next_not_l[t]);
        next_r[start] <= end
    }))
}

/// Bit `t` is set iff `effect` holds somewhere in `[t+lo, min(t+hi, T-1)]`.
/// Points whose window start lies past the end are unset.
pub fn occurs_within(effect: &Bits, window: WindowBound) -> Bits {
    let len = effect.len();
    let next_e = next_true(effect);
    Bits::from_bools((0..len).map(|t| {
        let start = t + window.lo;
        start < len && next_e[start] <= window.hi.clamp_end(t, len)
    }))
}

/// Time points `t` with `t + lo <= T - 1`.
pub fn window_start_valid(len: usize, window: WindowBound) -> Bits {
    Bits::range(len, 0, len.saturating_sub(window.lo))
}

fn check_state_formula(f: &Formula) -> Result<()> {
    if f.contains_leads_to() {
        return Err(Error::InvalidFormula(format!(
            "leads-to cannot be evaluated pointwise: {f}"
        )));
    }
    if f.contains_bound() {
        return Err(Error::InvalidFormula(format!(
            "probability bounds cannot be evaluated pointwise: {f}"
        )));
    }
    Ok(())
}

fn eval(trace: &Trace, f: &Formula) -> Result<Bits> {
    Ok(match f {
        Formula::Atom(name) => trace.column_by_name(name)?.clone(),
        Formula::Not(g) => eval(trace, g)?.not(),
        Formula::And(a, b) => eval(trace, a)?.and(&eval(trace, b)?),
        Formula::Or(a, b) => eval(trace, a)?.or(&eval(trace, b)?),
        Formula::Until {
            window,
            left,
            right,
            ..
        } => until_bits(&eval(trace, left)?, &eval(trace, right)?, *window),
        Formula::Finally { hi, inner, .. } => until_bits(
            &Bits::ones(trace.len()),
            &eval(trace, inner)?,
            WindowBound { lo: 0, hi: *hi },
        ),
        Formula::LeadsTo { .. } => unreachable!("rejected by check_state_formula"),
    })
}

/// Pointwise satisfaction of a leads-to-free, bound-free formula.
pub fn sat(trace: &Trace, f: &Formula) -> Result<SatVector> {
    check_state_formula(f)?;
    Ok(SatVector {
        formula: f.clone(),
        truth: eval(trace, f)?,
    })
}

/// Fraction of time points at which `f` holds.
pub fn estimate_prob(trace: &Trace, f: &Formula) -> Result<ProbEstimate> {
    let s = sat(trace, f)?;
    Ok(ProbEstimate::new(s.truth.count_ones(), trace.len()))
}

fn check_leadsto_window(w: WindowBound) -> Result<()> {
    w.validate()?;
    if w.lo == 0 {
        return Err(Error::InvalidArgument(
            "leads-to window must start at 1 or later".into(),
        ));
    }
    Ok(())
}

/// Frequency estimate of `cause ~>[lo,hi] effect`.
pub fn estimate_leadsto(
    trace: &Trace,
    cause: &Formula,
    effect: &Formula,
    w: WindowBound,
) -> Result<ProbEstimate> {
    check_leadsto_window(w)?;
    let c = sat(trace, cause)?.truth;
    let e = sat(trace, effect)?.truth;
    Ok(leadsto_from_bits(&c, &e, w))
}

pub fn leadsto_from_bits(cause: &Bits, effect: &Bits, w: WindowBound) -> ProbEstimate {
    let valid = window_start_valid(cause.len(), w);
    let hits = occurs_within(effect, w);
    ProbEstimate::new(
        Bits::and3_count(cause, &valid, &hits),
        cause.and_count(&valid),
    )
}

/// Shared, memoizing checker over one trace. Safe to use from many threads.
#[derive(Debug)]
pub struct Checker<'a> {
    trace: &'a Trace,
    cache: RwLock<HashMap<String, Arc<Bits>>>,
    window_cache: RwLock<HashMap<(String, WindowBound), Arc<Bits>>>,
}

impl<'a> Checker<'a> {
    pub fn new(trace: &'a Trace) -> Self {
        Checker {
            trace,
            cache: RwLock::new(HashMap::new()),
            window_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn trace(&self) -> &'a Trace {
        self.trace
    }

    pub fn sat(&self, f: &Formula) -> Result<Arc<Bits>> {
        let key = f.to_string();
        if let Some(b) = self.cache.read().expect("cache poisoned").get(&key) {
            return Ok(b.clone());
        }
        let bits = Arc::new(sat(self.trace, f)?.truth);
        Ok(self
            .cache
            .write()
            .expect("cache poisoned")
            .entry(key)
            .or_insert(bits)
            .clone())
    }

    /// Memoized [`occurs_within`] for `effect`.
    pub fn occurs_within(&self, effect: &Formula, w: WindowBound) -> Result<Arc<Bits>> {
        let key = (effect.to_string(), w);
        if let Some(b) = self.window_cache.read().expect("cache poisoned").get(&key) {
            return Ok(b.clone());
        }
        let bits = Arc::new(occurs_within(&*self.sat(effect)?, w));
        Ok(self
            .window_cache
            .write()
            .expect("cache poisoned")
            .entry(key)
            .or_insert(bits)
            .clone())
    }

    pub fn estimate_prob(&self, f: &Formula) -> Result<ProbEstimate> {
        Ok(ProbEstimate::new(self.sat(f)?.count_ones(), self.trace.len()))
    }

    pub fn estimate_leadsto(
        &self,
        cause: &Formula,
        effect: &Formula,
        w: WindowBound,
    ) -> Result<ProbEstimate> {
        check_leadsto_window(w)?;
        let c = self.sat(cause)?;
        let hits = self.occurs_within(effect, w)?;
        let valid = window_start_valid(self.trace.len(), w);
        Ok(ProbEstimate::new(
            Bits::and3_count(&c, &valid, &hits),
            c.and_count(&valid),
        ))
    }
}

/// Debug dump: one 0/1 column per formula.
pub fn write_sat_csv<W: Write>(w: W, vectors: &[SatVector]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(vectors.iter().map(|v| v.formula.to_string()))?;
    let len = vectors.first().map_or(0, |v| v.truth.len());
    for t in 0..len {
        wtr.write_record(
            vectors
                .iter()
                .map(|v| if v.truth.get(t) { "1" } else { "0" }),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::formula::Horizon;

    fn trace(cols: &[(&str, &[usize])], len: usize) -> Trace {
        Trace::from_columns(
            cols.iter()
                .map(|(n, on)| (n.to_string(), (0..len).map(|t| on.contains(&t)).collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn until_hand_example() {
        let t = trace(&[("a", &[0, 1]), ("b", &[2])], 4);
        let s = sat(&t, &parse("a U[0,inf] b").unwrap()).unwrap();
        assert_eq!(s.truth.to_vec(), vec![true, true, true, false]);
    }

    #[test]
    fn until_with_false_left_side() {
        let t = trace(&[("a", &[]), ("b", &[1, 3])], 5);
        let s = sat(&t, &parse("a U[0,inf] b").unwrap()).unwrap();
        assert_eq!(s.truth, t.column_by_name("b").unwrap().clone());
    }

    #[test]
    fn finally_unbounded() {
        let t = trace(&[("g", &[2, 5])], 8);
        let s = sat(&t, &parse("F[inf] g").unwrap()).unwrap();
        let expect: Vec<bool> = (0..8).map(|t| t <= 5).collect();
        assert_eq!(s.truth.to_vec(), expect);
        let s2 = sat(&t, &parse("F[1] g").unwrap()).unwrap();
        let expect2: Vec<bool> = (0..8).map(|t| [1, 2, 4, 5].contains(&t)).collect();
        assert_eq!(s2.truth.to_vec(), expect2);
    }

    #[test]
    fn rejects_leads_to_and_bounds() {
        let t = trace(&[("a", &[0]), ("b", &[1])], 3);
        assert!(sat(&t, &parse("a ~>[1,1] b").unwrap()).is_err());
        assert!(sat(&t, &parse("F[2]{>=0.5} a").unwrap()).is_err());
        assert!(matches!(
            sat(&t, &parse("zz").unwrap()),
            Err(Error::UnknownAtom(_))
        ));
    }

    #[test]
    fn marginal_probabilities() {
        let t = trace(&[("f", &[1, 4, 7]), ("all", &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]), ("never", &[])], 10);
        let p = estimate_prob(&t, &parse("f").unwrap()).unwrap();
        assert_eq!((p.numerator, p.denominator), (3, 10));
        assert_eq!(estimate_prob(&t, &parse("all").unwrap()).unwrap().value(), Some(1.0));
        assert_eq!(estimate_prob(&t, &parse("never").unwrap()).unwrap().value(), Some(0.0));
    }

    #[test]
    fn leadsto_hand_example() {
        let t = trace(&[("c", &[0, 2]), ("e", &[1])], 5);
        let p = estimate_leadsto(&t, &parse("c").unwrap(), &parse("e").unwrap(), WindowBound::exact(1))
            .unwrap();
        assert_eq!((p.numerator, p.denominator), (1, 2));
        assert_eq!(p.value(), Some(0.5));
    }

    #[test]
    fn leadsto_effect_always_true() {
        let t = trace(&[("c", &[0, 3]), ("e", &[0, 1, 2, 3, 4, 5])], 6);
        let p = estimate_leadsto(&t, &parse("c").unwrap(), &parse("e").unwrap(), WindowBound::new(1, Horizon::Finite(2)).unwrap())
            .unwrap();
        assert_eq!(p.value(), Some(1.0));
    }

    #[test]
    fn leadsto_cause_only_at_end_is_undefined() {
        let t = trace(&[("c", &[4]), ("e", &[0])], 5);
        let p = estimate_leadsto(&t, &parse("c").unwrap(), &parse("e").unwrap(), WindowBound::exact(1))
            .unwrap();
        assert_eq!(p.denominator, 0);
        assert_eq!(p.value(), None);
        assert!(estimate_leadsto(&t, &parse("c").unwrap(), &parse("e").unwrap(), WindowBound::exact(0)).is_err());
    }

    #[test]
    fn cached_checker_agrees() {
        let t = trace(&[("c", &[0, 2, 5]), ("e", &[1, 3, 6])], 8);
        let ck = Checker::new(&t);
        let (c, e) = (parse("c").unwrap(), parse("e").unwrap());
        for w in [WindowBound::exact(1), WindowBound::unbounded(2)] {
            let a = ck.estimate_leadsto(&c, &e, w).unwrap();
            let b = estimate_leadsto(&t, &c, &e, w).unwrap();
            assert_eq!(a, b);
            assert_eq!(ck.estimate_leadsto(&c, &e, w).unwrap(), b);
        }
    }

    #[test]
    fn exact_rational_comparison() {
        assert!(ProbEstimate::new(1, 3).lt(&ProbEstimate::new(1, 2)));
        assert!(!ProbEstimate::new(2, 4).lt(&ProbEstimate::new(1, 2)));
    }
}
