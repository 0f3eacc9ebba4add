//! Count tables and their delimited-text form.
//!
//! State tables have the header `setting,++,+-,-+,--` and one row per basis
//! pair (`xx`, `xy`, … `zz`); the sign pair gives the outcomes of atom 1 and
//! atom 2. Probe tables have the header `probe,AA,AD,DA,DD` and one row per
//! probe state, labelled `ux-dz` and so on (see [`super::ProbeSet`]).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::ProbeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Index of the matching Pauli matrix, 1 to 3.
    pub fn pauli_index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn from_letter(c: char) -> Option<Axis> {
        match c {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Outcome columns of a state table, atom 1 then atom 2.
pub const STATE_COLUMNS: [&str; 4] = ["++", "+-", "-+", "--"];
/// Outcome columns of a probe table.
pub const PROBE_COLUMNS: [&str; 4] = ["AA", "AD", "DA", "DD"];

/// Counts (or probabilities) per basis pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateCounts {
    pub settings: BTreeMap<(Axis, Axis), [f64; 4]>,
}

impl StateCounts {
    pub fn setting_label(a: Axis, b: Axis) -> String {
        format!("{}{}", a.letter(), b.letter())
    }

    pub fn get(&self, a: Axis, b: Axis) -> Result<&[f64; 4]> {
        self.settings
            .get(&(a, b))
            .ok_or_else(|| Error::MissingSetting(Self::setting_label(a, b)))
    }
}

/// Counts (or probabilities) `P(j | probe i)`, 36 rows in [`ProbeSet`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCounts {
    pub rows: Vec<[f64; 4]>,
}

impl ProbeCounts {
    /// Rows rescaled to sum to 1.
    pub fn probabilities(&self) -> Result<Vec<[f64; 4]>> {
        if self.rows.len() != 36 {
            return Err(Error::CountTable(format!("expected 36 probe rows, found {}", self.rows.len())));
        }
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::CountTable(format!("row {i} has a negative entry")));
                }
                let s: f64 = r.iter().sum();
                if !(s > 0.0) {
                    return Err(Error::CountTable(format!("row {i} has no counts")));
                }
                Ok([r[0] / s, r[1] / s, r[2] / s, r[3] / s])
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CountTable {
    State(StateCounts),
    Probe(ProbeCounts),
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl CountTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        match self {
            CountTable::State(t) => {
                out.write_record(std::iter::once("setting").chain(STATE_COLUMNS))?;
                for ((a, b), row) in &t.settings {
                    let mut rec = vec![StateCounts::setting_label(*a, *b)];
                    rec.extend(row.iter().map(|v| v.to_string()));
                    out.write_record(&rec)?;
                }
            }
            CountTable::Probe(t) => {
                out.write_record(std::iter::once("probe").chain(PROBE_COLUMNS))?;
                let labels = ProbeSet::canonical().labels();
                for (label, row) in labels.iter().zip(&t.rows) {
                    let mut rec = vec![label.clone()];
                    rec.extend(row.iter().map(|v| v.to_string()));
                    out.write_record(&rec)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let parse_row = |rec: &csv::StringRecord, line: usize| -> Result<[f64; 4]> {
            if rec.len() != 5 {
                return Err(Error::CountTable(format!("line {line}: expected 5 fields, found {}", rec.len())));
            }
            let mut row = [0.0; 4];
            for (k, v) in row.iter_mut().enumerate() {
                *v = rec[k + 1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::CountTable(format!("line {line}: `{}` is not a number", &rec[k + 1])))?;
                if *v < 0.0 {
                    return Err(Error::CountTable(format!("line {line}: negative count")));
                }
            }
            Ok(row)
        };
        match header.first().map(String::as_str) {
            Some("setting") if header[1..] == STATE_COLUMNS => {
                let mut t = StateCounts::default();
                for (i, rec) in rdr.records().enumerate() {
                    let rec = rec?;
                    let line = i + 2;
                    let mut chars = rec[0].trim().chars();
                    let (a, b) = match (chars.next().and_then(Axis::from_letter), chars.next().and_then(Axis::from_letter), chars.next()) {
                        (Some(a), Some(b), None) => (a, b),
                        _ => return Err(Error::CountTable(format!("line {line}: unknown setting `{}`", &rec[0]))),
                    };
                    t.settings.insert((a, b), parse_row(&rec, line)?);
                }
                Ok(CountTable::State(t))
            }
            Some("probe") if header[1..] == PROBE_COLUMNS => {
                let labels = ProbeSet::canonical().labels();
                let mut rows = vec![None; 36];
                for (i, rec) in rdr.records().enumerate() {
                    let rec = rec?;
                    let line = i + 2;
                    let idx = labels
                        .iter()
                        .position(|l| l == rec[0].trim())
                        .ok_or_else(|| Error::CountTable(format!("line {line}: unknown probe `{}`", &rec[0])))?;
                    rows[idx] = Some(parse_row(&rec, line)?);
                }
                let rows = rows
                    .into_iter()
                    .zip(&labels)
                    .map(|(r, l)| r.ok_or_else(|| Error::MissingSetting(l.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CountTable::Probe(ProbeCounts { rows }))
            }
            _ => Err(Error::CountTable(format!("unrecognised header `{}`", header.join(",")))),
        }
    }
}
