//! Formula representation for causal hypotheses.
//!
//! A [`Formula`] is built from atomic propositions, boolean connectives and
//! three windowed temporal operators: bounded until, leads-to and finally.
//! Temporal operators may carry an optional probability bound; when the bound
//! is absent the checker measures the probability instead of asserting it.
//!
//! The concrete syntax is documented in [`crate::parser`]. `Display` produces
//! the canonical text form, and parsing that text gives back an equal AST.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of a time window. `Infinite` is distinct from every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    /// Last reachable index from `t` in a trace of length `len`, if any.
    pub fn clamp_end(self, t: usize, len: usize) -> usize {
        let last = len.saturating_sub(1);
        match self {
            Horizon::Finite(h) => t.saturating_add(h).min(last),
            Horizon::Infinite => last,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Horizon::Finite(_))
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(h) => write!(f, "{h}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

/// A `[lo, hi]` window of time units relative to the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowBound {
    pub lo: usize,
    pub hi: Horizon,
}

impl WindowBound {
    pub fn new(lo: usize, hi: Horizon) -> Result<Self> {
        let w = WindowBound { lo, hi };
        w.validate()?;
        Ok(w)
    }

    /// Window `[lag, lag]`.
    pub fn exact(lag: usize) -> Self {
        WindowBound {
            lo: lag,
            hi: Horizon::Finite(lag),
        }
    }

    pub fn unbounded(lo: usize) -> Self {
        WindowBound {
            lo,
            hi: Horizon::Infinite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.hi {
            Horizon::Finite(hi) if hi < self.lo => Err(Error::InvalidFormula(format!(
                "window lower bound {} exceeds upper bound {}",
                self.lo, hi
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.hi == Horizon::Finite(self.lo)
    }
}

impl fmt::Display for WindowBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Comparator {
    pub fn holds(self, value: f64, p: f64) -> bool {
        match self {
            Comparator::Ge => value >= p,
            Comparator::Gt => value > p,
            Comparator::Le => value <= p,
            Comparator::Lt => value < p,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Lt => "<",
        }
    }
}

/// Probability annotation `{>=p}` on a temporal operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbBound {
    pub cmp: Comparator,
    pub p: f64,
}

impl ProbBound {
    pub fn new(cmp: Comparator, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidFormula(format!(
                "probability bound {p} outside [0,1]"
            )));
        }
        Ok(ProbBound { cmp, p })
    }
}

impl fmt::Display for ProbBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}{}}}", self.cmp.symbol(), self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        window: WindowBound,
        left: Box<Formula>,
        right: Box<Formula>,
        bound: Option<ProbBound>,
    },
    LeadsTo {
        window: WindowBound,
        cause: Box<Formula>,
        effect: Box<Formula>,
        bound: Option<ProbBound>,
    },
    Finally {
        hi: Horizon,
        inner: Box<Formula>,
        bound: Option<ProbBound>,
    },
}

// Binding strength used by the printer; higher binds tighter.
// `F[..]` extends as far right as possible, so it is treated as loosest.
const PREC_LEADS: u8 = 0;
const PREC_UNTIL: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(window: WindowBound, left: Formula, right: Formula) -> Self {
        Formula::Until {
            window,
            left: Box::new(left),
            right: Box::new(right),
            bound: None,
        }
    }

    pub fn leads_to(window: WindowBound, cause: Formula, effect: Formula) -> Self {
        Formula::LeadsTo {
            window,
            cause: Box::new(cause),
            effect: Box::new(effect),
            bound: None,
        }
    }

    pub fn finally(hi: Horizon, inner: Formula) -> Self {
        Formula::Finally {
            hi,
            inner: Box::new(inner),
            bound: None,
        }
    }

    /// Attach a probability bound. Only temporal operators accept one.
    pub fn with_bound(mut self, pb: ProbBound) -> Result<Self> {
        match &mut self {
            Formula::Until { bound, .. }
            | Formula::LeadsTo { bound, .. }
            | Formula::Finally { bound, .. } => {
                *bound = Some(pb);
                Ok(self)
            }
            _ => Err(Error::InvalidFormula(
                "probability bounds are only allowed on temporal operators".into(),
            )),
        }
    }

    pub fn bound(&self) -> Option<ProbBound> {
        match self {
            Formula::Until { bound, .. }
            | Formula::LeadsTo { bound, .. }
            | Formula::Finally { bound, .. } => *bound,
            _ => None,
        }
    }

    /// Check window and probability invariants over the whole tree.
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bound() {
            ProbBound::new(b.cmp, b.p)?;
        }
        match self {
            Formula::Atom(name) => {
                if name.is_empty() {
                    return Err(Error::InvalidFormula("empty atom name".into()));
                }
                Ok(())
            }
            Formula::Not(f) => f.validate(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.validate()?;
                b.validate()
            }
            Formula::Until {
                window,
                left,
                right,
                ..
            } => {
                window.validate()?;
                left.validate()?;
                right.validate()
            }
            Formula::LeadsTo {
                window,
                cause,
                effect,
                ..
            } => {
                window.validate()?;
                if window.lo == 0 {
                    return Err(Error::InvalidFormula(
                        "leads-to window must start at 1 or later".into(),
                    ));
                }
                cause.validate()?;
                effect.validate()
            }
            Formula::Finally { inner, .. } => inner.validate(),
        }
    }

    pub fn contains_leads_to(&self) -> bool {
        match self {
            Formula::Atom(_) => false,
            Formula::LeadsTo { .. } => true,
            Formula::Not(f) | Formula::Finally { inner: f, .. } => f.contains_leads_to(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until {
                left: a, right: b, ..
            } => a.contains_leads_to() || b.contains_leads_to(),
        }
    }

    pub fn contains_bound(&self) -> bool {
        if self.bound().is_some() {
            return true;
        }
        match self {
            Formula::Atom(_) => false,
            Formula::Not(f) | Formula::Finally { inner: f, .. } => f.contains_bound(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until {
                left: a, right: b, ..
            }
            | Formula::LeadsTo {
                cause: a,
                effect: b,
                ..
            } => a.contains_bound() || b.contains_bound(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Atom(n) => {
                out.insert(n.as_str());
            }
            Formula::Not(f) | Formula::Finally { inner: f, .. } => f.collect_atoms(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until {
                left: a, right: b, ..
            }
            | Formula::LeadsTo {
                cause: a,
                effect: b,
                ..
            } => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Finally { inner: f, .. } => 1 + f.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until {
                left: a, right: b, ..
            }
            | Formula::LeadsTo {
                cause: a,
                effect: b,
                ..
            } => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Atom(_) => PREC_ATOM,
            Formula::Not(_) => PREC_UNARY,
            Formula::And(..) => PREC_AND,
            Formula::Or(..) => PREC_OR,
            Formula::Until { .. } => PREC_UNTIL,
            Formula::LeadsTo { .. } | Formula::Finally { .. } => PREC_LEADS,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn fmt_bound(f: &mut fmt::Formatter<'_>, bound: &Option<ProbBound>) -> fmt::Result {
    match bound {
        Some(b) => write!(f, "{b}"),
        None => Ok(()),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(n) => f.write_str(n),
            Formula::Not(inner) => {
                f.write_str("!")?;
                inner.fmt_child(f, PREC_UNARY)
            }
            // & and | are left-associative: a right child at the same level needs parens.
            Formula::And(a, b) => {
                a.fmt_child(f, PREC_AND)?;
                f.write_str(" & ")?;
                b.fmt_child(f, PREC_AND + 1)
            }
            Formula::Or(a, b) => {
                a.fmt_child(f, PREC_OR)?;
                f.write_str(" | ")?;
                b.fmt_child(f, PREC_OR + 1)
            }
            // Binary temporal operators are right-associative.
            Formula::Until {
                window,
                left,
                right,
                bound,
            } => {
                left.fmt_child(f, PREC_OR)?;
                write!(f, " U{window}")?;
                fmt_bound(f, bound)?;
                f.write_str(" ")?;
                right.fmt_child(f, PREC_UNTIL)
            }
            Formula::LeadsTo {
                window,
                cause,
                effect,
                bound,
            } => {
                cause.fmt_child(f, PREC_UNTIL)?;
                write!(f, " ~>{window}")?;
                fmt_bound(f, bound)?;
                f.write_str(" ")?;
                effect.fmt_child(f, PREC_LEADS)
            }
            Formula::Finally { hi, inner, bound } => {
                write!(f, "F[{hi}]")?;
                fmt_bound(f, bound)?;
                f.write_str(" ")?;
                inner.fmt_child(f, PREC_LEADS)
            }
        }
    }
}
