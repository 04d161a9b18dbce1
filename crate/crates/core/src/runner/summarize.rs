//! Side-by-side comparison of finished runs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::history::read_history;
use super::RunMeta;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub task: String,
    pub tag: String,
    pub generations: usize,
    pub best_fitness: f64,
    pub top5_mean: f64,
    pub accuracy: Option<f64>,
    pub n_rot: usize,
    pub n_cnot: usize,
    pub n_gates: usize,
    pub evals: u64,
    /// First generation whose top-5 mean reached the threshold.
    pub reached_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub threshold: Option<f64>,
    pub rows: Vec<SummaryRow>,
}

const HEADER: [&str; 12] = [
    "run",
    "task",
    "tag",
    "generations",
    "best_fitness",
    "top5_mean",
    "accuracy",
    "n_rot",
    "n_cnot",
    "n_gates",
    "evals",
    "reached_at",
];

/// Summarizes history files. A `meta.json` next to a history supplies its
/// task and algorithm tag.
pub fn summarize<P: AsRef<Path>>(histories: &[P], threshold: Option<f64>) -> Result<Summary> {
    if histories.is_empty() {
        return Err(Error::Config("summarize needs at least one history file".into()));
    }
    let mut rows = Vec::with_capacity(histories.len());
    for path in histories {
        let path = path.as_ref();
        let path = if path.is_dir() { path.join("history.csv") } else { path.to_path_buf() };
        let records = read_history(&path)?;
        let last = records.last().ok_or_else(|| Error::Format(format!("{} has no rows", path.display())))?;
        let meta_path = path.with_file_name("meta.json");
        let (task, tag) = match std::fs::read_to_string(&meta_path) {
            Ok(text) => {
                let meta: RunMeta = serde_json::from_str(&text)
                    .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
                (meta.config.experiment.task.to_string(), meta.tag)
            }
            Err(_) => (String::new(), String::new()),
        };
        rows.push(SummaryRow {
            run: path.parent().map(|p| p.display().to_string()).unwrap_or_default(),
            task,
            tag,
            generations: records.len(),
            best_fitness: last.best_fitness,
            top5_mean: last.top5_mean,
            accuracy: last.accuracy,
            n_rot: last.n_rot,
            n_cnot: last.n_cnot,
            n_gates: last.n_gates,
            evals: last.evals_cumulative,
            reached_at: threshold.and_then(|t| records.iter().find(|r| r.top5_mean >= t).map(|r| r.generation)),
        });
    }
    Ok(Summary { threshold, rows })
}

impl SummaryRow {
    fn cells(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.run.clone(),
            self.task.clone(),
            self.tag.clone(),
            self.generations.to_string(),
            format!("{:.4}", self.best_fitness),
            format!("{:.4}", self.top5_mean),
            opt(self.accuracy.map(|a| format!("{a:.2}"))),
            self.n_rot.to_string(),
            self.n_cnot.to_string(),
            self.n_gates.to_string(),
            self.evals.to_string(),
            opt(self.reached_at.map(|g| g.to_string())),
        ]
    }
}

impl Summary {
    /// Column-aligned table.
    pub fn to_text(&self) -> String {
        let table: Vec<Vec<String>> = std::iter::once(HEADER.iter().map(|s| s.to_string()).collect())
            .chain(self.rows.iter().map(SummaryRow::cells))
            .collect();
        let widths: Vec<usize> =
            (0..HEADER.len()).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER)?;
        for row in &self.rows {
            w.write_record(row.cells())?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?)
            .map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::GenerationRecord;
    use crate::runner::history::write_history;

    fn rec(g: u64, top5: f64) -> GenerationRecord {
        GenerationRecord {
            generation: g,
            best_fitness: top5 + 1.0,
            top5_mean: top5,
            pop_mean: top5 / 2.0,
            n_rot: 3,
            n_cnot: 2,
            n_gates: 5,
            n_species: 1,
            accuracy: None,
            evals_cumulative: 100 * (g + 1),
            seconds: None,
            front_sizes: None,
            best_objectives: None,
        }
    }

    #[test]
    fn threshold_scan_and_forms() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_history(&a, &[rec(0, 100.0), rec(1, 480.0), rec(2, 500.0)], false).unwrap();
        write_history(&b, &[rec(0, 10.0), rec(1, 20.0)], false).unwrap();
        let s = summarize(&[&a, &b], Some(475.0)).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].reached_at, Some(1));
        assert_eq!(s.rows[1].reached_at, None);
        assert_eq!(s.rows[0].generations, 3);

        let text = s.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let col = lines[0].find("generations").unwrap();
        assert!(lines[1..].iter().all(|l| l[col..].starts_with(|c: char| c.is_ascii_digit())));

        let csv = s.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("run,task,tag,generations,"));
    }

    #[test]
    fn single_and_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        write_history(&a, &[rec(0, 1.0)], false).unwrap();
        assert_eq!(summarize(&[&a], None).unwrap().rows.len(), 1);
        let empty: [&Path; 0] = [];
        assert!(summarize(&empty, None).is_err());
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "x,y\n1,2\n").unwrap();
        assert!(summarize(&[&bad], None).is_err());
    }
}
