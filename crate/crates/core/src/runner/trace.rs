//! Best-lineage traces and their ASCII rendering.
//!
//! Cells are three characters wide: `[E]` encoding, `[R]` rotation, `-@-`
//! CNOT control, `-X-` CNOT target, `-+-` a CNOT line crossing the wire and
//! `---` nothing. Layers are separated by `|`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::TraceStep;
use crate::genome::Genome;

pub const TRACE_DIR: &str = "trace";

enum Column {
    Cells(Vec<&'static str>),
    Delimiter,
}

fn cnot_column(n: usize, control: usize, target: usize) -> Vec<&'static str> {
    let (lo, hi) = (control.min(target), control.max(target));
    (0..n)
        .map(|w| {
            if w == control {
                "-@-"
            } else if w == target {
                "-X-"
            } else if lo < w && w < hi {
                "-+-"
            } else {
                "---"
            }
        })
        .collect()
}

/// One line per wire: the encoding column, then each layer's rotations and
/// CNOTs between delimiters.
pub fn render_circuit(genome: &Genome) -> String {
    let n = genome.n_wires();
    let mut columns = vec![Column::Cells(vec!["[E]"; n])];
    for layer in genome.layers() {
        columns.push(Column::Delimiter);
        if !layer.rots.is_empty() {
            let mut cells = vec!["---"; n];
            for &(wire, _) in &layer.rots {
                cells[wire] = "[R]";
            }
            columns.push(Column::Cells(cells));
        }
        for &(control, target) in &layer.cnots {
            columns.push(Column::Cells(cnot_column(n, control, target)));
        }
    }
    if columns.len() > 1 {
        columns.push(Column::Delimiter);
    }
    let width = (n.max(1) - 1).to_string().len();
    let mut out = String::new();
    for w in 0..n {
        let parts: Vec<&str> = columns
            .iter()
            .map(|c| match c {
                Column::Cells(cells) => cells[w],
                Column::Delimiter => "|",
            })
            .collect();
        let _ = writeln!(out, "q{w:<width$}: {}", parts.join("-"));
    }
    out
}

fn step_file(step: &TraceStep) -> String {
    format!("gen_{:05}_agent_{}.json", step.generation, step.agent_id)
}

/// Writes one JSON file per lineage step into `dir/trace`.
pub fn write_trace(dir: impl AsRef<Path>, steps: &[TraceStep]) -> Result<()> {
    let trace = dir.as_ref().join(TRACE_DIR);
    std::fs::create_dir_all(&trace).map_err(|e| Error::io(&trace, e))?;
    for step in steps {
        let path = trace.join(step_file(step));
        let json = serde_json::to_string_pretty(step)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads a trace back, in generation order.
pub fn read_trace(dir: impl AsRef<Path>) -> Result<Vec<TraceStep>> {
    let dir = dir.as_ref();
    let trace = if dir.join(TRACE_DIR).is_dir() { dir.join(TRACE_DIR) } else { dir.to_path_buf() };
    let entries = std::fs::read_dir(&trace).map_err(|e| Error::io(&trace, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&trace, e))?.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if name.starts_with("gen_") && name.ends_with(".json") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::Format(format!("no trace files in {}", trace.display())));
    }
    let mut steps = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let step: TraceStep = serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("corrupt trace file {}: {e}", p.display())))?;
            Ok(step)
        })
        .collect::<Result<Vec<_>>>()?;
    steps.sort_by_key(|s| (s.generation, s.agent_id));
    Ok(steps)
}

pub fn render_step(step: &TraceStep) -> String {
    let fitness = step.fitness.map_or_else(|| "-".to_string(), |f| format!("{f:.4}"));
    format!(
        "generation {}  agent {}  fitness {}  rot {}  cnot {}\n{}",
        step.generation,
        step.agent_id,
        fitness,
        step.genome.rot_count(),
        step.genome.cnot_count(),
        render_circuit(&step.genome)
    )
}

/// Renders every generation of a stored trace.
pub fn replay_trace(dir: impl AsRef<Path>) -> Result<String> {
    Ok(read_trace(dir)?.iter().map(render_step).collect::<Vec<_>>().join("\n"))
}
