//! `history.csv`: one row per generation (or QAOA epoch).
//!
//! Multi-objective runs append `front_sizes` and `best_objectives`, each a
//! `;`-separated list. Optional values are written as empty fields.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::GenerationRecord;

pub const COLUMNS: [&str; 11] = [
    "generation",
    "best_fitness",
    "top5_mean",
    "pop_mean",
    "n_rot",
    "n_cnot",
    "n_gates",
    "n_species",
    "accuracy",
    "evals_cumulative",
    "seconds",
];
pub const MOO_COLUMNS: [&str; 2] = ["front_sizes", "best_objectives"];

fn header(moo: bool) -> Vec<&'static str> {
    let mut h = COLUMNS.to_vec();
    if moo {
        h.extend(MOO_COLUMNS);
    }
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join<T: ToString>(v: &Option<Vec<T>>) -> String {
    v.as_ref().map(|xs| xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")).unwrap_or_default()
}

fn fields(r: &GenerationRecord, moo: bool) -> Vec<String> {
    let mut f = vec![
        r.generation.to_string(),
        r.best_fitness.to_string(),
        r.top5_mean.to_string(),
        r.pop_mean.to_string(),
        r.n_rot.to_string(),
        r.n_cnot.to_string(),
        r.n_gates.to_string(),
        r.n_species.to_string(),
        opt(r.accuracy),
        r.evals_cumulative.to_string(),
        opt(r.seconds),
    ];
    if moo {
        f.push(join(&r.front_sizes));
        f.push(join(&r.best_objectives));
    }
    f
}

/// Appends rows and flushes after each one, so a crashed run keeps every
/// completed generation.
pub struct HistoryWriter<W: Write> {
    inner: csv::Writer<W>,
    moo: bool,
}

impl HistoryWriter<File> {
    pub fn create(path: impl AsRef<Path>, moo: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(file, moo)
    }
}

impl<W: Write> HistoryWriter<W> {
    pub fn new(writer: W, moo: bool) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(header(moo))?;
        inner.flush().map_err(|e| Error::io("history.csv", e))?;
        Ok(Self { inner, moo })
    }

    pub fn write(&mut self, record: &GenerationRecord) -> Result<()> {
        self.inner.write_record(fields(record, self.moo))?;
        self.inner.flush().map_err(|e| Error::io("history.csv", e))
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn write_history(path: impl AsRef<Path>, records: &[GenerationRecord], moo: bool) -> Result<()> {
    let mut w = HistoryWriter::create(path, moo)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, column: &str, row: usize) -> Result<T> {
    field.parse().map_err(|_| Error::Format(format!("row {row}: bad {column} value {field:?}")))
}

fn parse_opt<T: std::str::FromStr>(field: &str, column: &str, row: usize) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, column, row).map(Some)
    }
}

fn parse_list<T: std::str::FromStr>(field: &str, column: &str, row: usize) -> Result<Option<Vec<T>>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.split(';').map(|x| parse(x, column, row)).collect::<Result<Vec<_>>>().map(Some)
}

pub fn parse_history(text: &str) -> Result<Vec<GenerationRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let moo = if found == header(false) {
        false
    } else if found == header(true) {
        true
    } else {
        return Err(Error::Format(format!("unexpected history columns {found:?}")));
    };
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let f = |k: usize| row.get(k).unwrap_or("");
        out.push(GenerationRecord {
            generation: parse(f(0), COLUMNS[0], i)?,
            best_fitness: parse(f(1), COLUMNS[1], i)?,
            top5_mean: parse(f(2), COLUMNS[2], i)?,
            pop_mean: parse(f(3), COLUMNS[3], i)?,
            n_rot: parse(f(4), COLUMNS[4], i)?,
            n_cnot: parse(f(5), COLUMNS[5], i)?,
            n_gates: parse(f(6), COLUMNS[6], i)?,
            n_species: parse(f(7), COLUMNS[7], i)?,
            accuracy: parse_opt(f(8), COLUMNS[8], i)?,
            evals_cumulative: parse(f(9), COLUMNS[9], i)?,
            seconds: parse_opt(f(10), COLUMNS[10], i)?,
            front_sizes: if moo { parse_list(f(11), MOO_COLUMNS[0], i)? } else { None },
            best_objectives: if moo { parse_list(f(12), MOO_COLUMNS[1], i)? } else { None },
        });
    }
    Ok(out)
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<GenerationRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_history(&text)
}
