//! Raw numeric series, their discretization into up/down propositions, and
//! the boolean observation matrix ([`Trace`]) that formulas are checked on.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Suffix of the atom asserting a value above the threshold.
pub const UP: &str = "up";
/// Suffix of the atom asserting a value below the negated threshold.
pub const DOWN: &str = "down";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
}

impl RawSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let s = RawSeries {
            name: name.into(),
            values,
            timestamps: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_timestamps(mut self, ts: Vec<String>) -> Result<Self> {
        self.timestamps = Some(ts);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Data(format!("series `{}` is empty", self.name)));
        }
        if let Some(ts) = &self.timestamps {
            if ts.len() != self.values.len() {
                return Err(Error::Data(format!(
                    "series `{}`: {} timestamps for {} values",
                    self.name,
                    ts.len(),
                    self.values.len()
                )));
            }
            if let Some(i) = (1..ts.len()).find(|&i| !label_lt(&ts[i - 1], &ts[i])) {
                return Err(Error::Data(format!(
                    "series `{}`: timestamps not strictly increasing at row {} (`{}` then `{}`)",
                    self.name,
                    i + 1,
                    ts[i - 1],
                    ts[i]
                )));
            }
        }
        Ok(())
    }
}

// Numeric labels compare numerically, anything else lexicographically
// (ISO dates sort correctly that way).
fn label_lt(a: &str, b: &str) -> bool {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x < y,
        _ => a < b,
    }
}

fn is_date_header(h: &str) -> bool {
    matches!(
        h.trim().to_ascii_lowercase().as_str(),
        "date" | "time" | "timestamp" | "datetime" | "day" | "period" | "index" | "t"
    )
}

/// Load a CSV of aligned columns. Lines starting with `#` are comments.
///
/// The first column is taken as a date label when its header looks like one
/// (`date`, `time`, `timestamp`, ...) or when its first cell is not numeric.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<RawSeries>> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Data(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RawSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Data("empty file: no header row".into()));
    }

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => Error::Data(format!(
                "ragged row {}: expected {expected_len} fields, found {len}",
                i + 1
            )),
            _ => Error::Data(format!("row {}: {e}", i + 1)),
        })?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(Error::Data("empty file: no data rows".into()));
    }

    let date_col = is_date_header(&headers[0])
        || (headers.len() > 1 && rows[0].get(0).is_some_and(|c| c.parse::<f64>().is_err()));
    let first_value_col = usize::from(date_col);
    if headers.len() <= first_value_col {
        return Err(Error::Data("no value columns".into()));
    }

    let mut seen = HashSet::new();
    for h in &headers[first_value_col..] {
        if h.is_empty() {
            return Err(Error::Data("empty column name in header".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::Data(format!("duplicate column `{h}`")));
        }
    }

    let mut out = Vec::with_capacity(headers.len() - first_value_col);
    for (col, name) in headers.iter().enumerate().skip(first_value_col) {
        let mut values = Vec::with_capacity(rows.len());
        for (r, rec) in rows.iter().enumerate() {
            let cell = rec.get(col).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Data(format!(
                    "missing value at row {}, column {name}",
                    r + 1
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "non-numeric value `{cell}` at row {}, column {name}",
                    r + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite value `{cell}` at row {}, column {name}",
                    r + 1
                )));
            }
            values.push(v);
        }
        let mut s = RawSeries {
            name: name.clone(),
            values,
            timestamps: None,
        };
        if date_col {
            s.timestamps = Some(rows.iter().map(|r| r.get(0).unwrap_or("").to_string()).collect());
        }
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

/// Write aligned series as CSV; timestamps of the first series become a `date` column.
pub fn write_series_csv<W: Write>(mut w: W, series: &[RawSeries], comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let len = check_aligned(series)?;
    let dates = series.first().and_then(|s| s.timestamps.as_ref());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = Vec::new();
    if dates.is_some() {
        header.push("date");
    }
    header.extend(series.iter().map(|s| s.name.as_str()));
    wtr.write_record(&header)?;
    for t in 0..len {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(d) = dates {
            row.push(d[t].clone());
        }
        row.extend(series.iter().map(|s| format!("{:?}", s.values[t])));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn check_aligned(series: &[RawSeries]) -> Result<usize> {
    let len = series.first().map_or(0, RawSeries::len);
    if let Some(s) = series.iter().find(|s| s.len() != len) {
        return Err(Error::Data(format!(
            "series `{}` has length {}, expected {len}",
            s.name,
            s.len()
        )));
    }
    Ok(len)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRule {
    /// Values in `[-threshold, threshold]` assert neither direction.
    pub threshold: f64,
}

impl Default for DiscretizationRule {
    fn default() -> Self {
        DiscretizationRule { threshold: 0.0 }
    }
}

impl DiscretizationRule {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "discretization threshold must be finite and >= 0, got {threshold}"
            )));
        }
        Ok(DiscretizationRule { threshold })
    }
}

/// Boolean observation matrix: one column of truth values per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    atoms: Vec<String>,
    /// Underlying variable of each atom (`X` for `X.up`).
    variables: Vec<String>,
    columns: Vec<Bits>,
    index: HashMap<String, usize>,
    len: usize,
}

impl Trace {
    /// Build a trace from named boolean columns. Each atom is its own variable.
    pub fn from_columns(columns: Vec<(String, Vec<bool>)>) -> Result<Self> {
        let with_vars = columns
            .into_iter()
            .map(|(name, col)| (name.clone(), name, Bits::from_bools(col)))
            .collect();
        Trace::build(with_vars)
    }

    fn build(cols: Vec<(String, String, Bits)>) -> Result<Self> {
        let len = cols.first().map_or(0, |c| c.2.len());
        if cols.is_empty() || len == 0 {
            return Err(Error::Data("trace needs at least one atom and one time step".into()));
        }
        let mut index = HashMap::with_capacity(cols.len());
        let mut atoms = Vec::with_capacity(cols.len());
        let mut variables = Vec::with_capacity(cols.len());
        let mut columns = Vec::with_capacity(cols.len());
        for (i, (atom, var, bits)) in cols.into_iter().enumerate() {
            if bits.len() != len {
                return Err(Error::Data(format!(
                    "atom `{atom}` has {} time steps, expected {len}",
                    bits.len()
                )));
            }
            if index.insert(atom.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate atom `{atom}`")));
            }
            atoms.push(atom);
            variables.push(var);
            columns.push(bits);
        }
        Ok(Trace {
            atoms,
            variables,
            columns,
            index,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn variable_of(&self, atom_idx: usize) -> &str {
        &self.variables[atom_idx]
    }

    /// Distinct underlying variables in first-appearance order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.variables
            .iter()
            .filter(|v| seen.insert(v.as_str()))
            .map(String::as_str)
            .collect()
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column(&self, atom_idx: usize) -> &Bits {
        &self.columns[atom_idx]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Bits> {
        self.atom_index(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::UnknownAtom(name.to_string()))
    }

    pub fn get(&self, t: usize, atom_idx: usize) -> bool {
        self.columns[atom_idx].get(t)
    }

    /// Rows `[from, to)` with the same atoms.
    pub fn slice(&self, from: usize, to: usize) -> Result<Trace> {
        if from >= to || to > self.len {
            return Err(Error::InvalidArgument(format!(
                "slice [{from}, {to}) out of range for trace of length {}",
                self.len
            )));
        }
        let cols = self
            .atoms
            .iter()
            .zip(&self.variables)
            .zip(&self.columns)
            .map(|((a, v), c)| (a.clone(), v.clone(), c.slice(from, to)))
            .collect();
        Trace::build(cols)
    }

    /// 0/1 CSV with one column per atom.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.atoms)?;
        for t in 0..self.len {
            wtr.write_record(self.columns.iter().map(|c| if c.get(t) { "1" } else { "0" }))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Turn each series `S` into atoms `S.up` (value > θ) and `S.down` (value < −θ).
pub fn discretize(series: &[RawSeries], rule: DiscretizationRule) -> Result<Trace> {
    let rule = DiscretizationRule::new(rule.threshold)?;
    check_aligned(series)?;
    let mut names = HashSet::new();
    let mut cols = Vec::with_capacity(series.len() * 2);
    for s in series {
        if !names.insert(s.name.as_str()) {
            return Err(Error::Data(format!("duplicate series name `{}`", s.name)));
        }
        let th = rule.threshold;
        cols.push((
            format!("{}.{UP}", s.name),
            s.name.clone(),
            Bits::from_bools(s.values.iter().map(|&v| v > th)),
        ));
        cols.push((
            format!("{}.{DOWN}", s.name),
            s.name.clone(),
            Bits::from_bools(s.values.iter().map(|&v| v < -th)),
        ));
    }
    Trace::build(cols)
}
