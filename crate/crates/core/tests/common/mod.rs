//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

pub mod f_table;

use leadsto_core::formula::{Formula, Horizon, WindowBound};
use leadsto_core::trace::Trace;
use rand::Rng;

/// Plain boolean table: `cols[atom][t]`.
pub struct Table {
    pub names: Vec<String>,
    pub cols: Vec<Vec<bool>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.cols[0].len()
    }

    pub fn to_trace(&self) -> Trace {
        Trace::from_columns(self.names.iter().cloned().zip(self.cols.iter().cloned()).collect())
            .unwrap()
    }

    fn col(&self, name: &str) -> &[bool] {
        let i = self.names.iter().position(|n| n == name).unwrap();
        &self.cols[i]
    }
}

fn last_index(t: usize, hi: Horizon, len: usize) -> usize {
    match hi {
        Horizon::Infinite => len - 1,
        Horizon::Finite(h) => (t + h).min(len - 1),
    }
}

/// Truth of a state formula at `t`, straight from the definitions.
pub fn holds(tab: &Table, f: &Formula, t: usize) -> bool {
    let len = tab.len();
    match f {
        Formula::Atom(n) => tab.col(n)[t],
        Formula::Not(g) => !holds(tab, g, t),
        Formula::And(a, b) => holds(tab, a, t) && holds(tab, b, t),
        Formula::Or(a, b) => holds(tab, a, t) || holds(tab, b, t),
        Formula::Until {
            window,
            left,
            right,
            ..
        } => {
            let end = last_index(t, window.hi, len);
            let start = t + window.lo;
            (start..=end).any(|u| holds(tab, right, u) && (t..u).all(|v| holds(tab, left, v)))
        }
        Formula::Finally { hi, inner, .. } => {
            let end = last_index(t, *hi, len);
            (t..=end).any(|u| holds(tab, inner, u))
        }
        Formula::LeadsTo { .. } => panic!("not a state formula"),
    }
}

pub fn brute_sat(tab: &Table, f: &Formula) -> Vec<bool> {
    (0..tab.len()).map(|t| holds(tab, f, t)).collect()
}

/// (numerator, denominator) of the leads-to frequency.
pub fn brute_leadsto(tab: &Table, c: &Formula, e: &Formula, w: WindowBound) -> (usize, usize) {
    let len = tab.len();
    let mut num = 0;
    let mut den = 0;
    for t in 0..len {
        if t + w.lo > len - 1 || !holds(tab, c, t) {
            continue;
        }
        den += 1;
        let end = last_index(t, w.hi, len);
        if (t + w.lo..=end).any(|u| holds(tab, e, u)) {
            num += 1;
        }
    }
    (num, den)
}

pub fn random_table<R: Rng>(rng: &mut R, max_len: usize, max_atoms: usize) -> Table {
    let len = rng.random_range(1..=max_len);
    let n = rng.random_range(1..=max_atoms);
    let density: f64 = rng.random_range(0.1..0.9);
    Table {
        names: (0..n).map(|i| format!("a{i}")).collect(),
        cols: (0..n)
            .map(|_| (0..len).map(|_| rng.random_bool(density)).collect())
            .collect(),
    }
}

pub fn random_window<R: Rng>(rng: &mut R, min_lo: usize) -> WindowBound {
    let lo = rng.random_range(min_lo..=min_lo + 4);
    let hi = if rng.random_bool(0.2) {
        Horizon::Infinite
    } else {
        Horizon::Finite(lo + rng.random_range(0..=5))
    };
    WindowBound::new(lo, hi).unwrap()
}

/// Random leads-to-free formula of depth at most `depth`.
pub fn random_state_formula<R: Rng>(rng: &mut R, names: &[String], depth: usize) -> Formula {
    let atom = |rng: &mut R| Formula::atom(names[rng.random_range(0..names.len())].clone());
    if depth <= 1 || rng.random_bool(0.25) {
        return atom(rng);
    }
    let d = depth - 1;
    match rng.random_range(0..5) {
        0 => Formula::not(random_state_formula(rng, names, d)),
        1 => Formula::and(
            random_state_formula(rng, names, d),
            random_state_formula(rng, names, d),
        ),
        2 => Formula::or(
            random_state_formula(rng, names, d),
            random_state_formula(rng, names, d),
        ),
        3 => Formula::until(
            random_window(rng, 0),
            random_state_formula(rng, names, d),
            random_state_formula(rng, names, d),
        ),
        _ => {
            let w = random_window(rng, 0);
            Formula::finally(w.hi, random_state_formula(rng, names, d))
        }
    }
}
