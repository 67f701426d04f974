//! Causal inference in multivariate time series from temporal-logic
//! hypotheses, with a local false discovery rate to separate significant
//! causes, a factor-model return simulator and a Granger-causality baseline.

pub mod bits;
pub mod checker;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fdr;
pub mod formula;
pub mod granger;
pub mod parser;
pub mod pipeline;
pub mod sim;
pub mod stats;
pub mod trace;

pub use error::{Error, ParseError, Result};
pub use formula::{Comparator, Formula, Horizon, ProbBound, WindowBound};
pub use parser::{parse, parse_hypothesis_file};
