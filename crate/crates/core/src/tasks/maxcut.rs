//! MaxCut on small undirected graphs.
//!
//! Node `i` is wire `i`, and a basis state is a bipartition: wire bit 0 puts
//! the node on one side, bit 1 on the other.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::error::Result;
use crate::genome::Genome;
use crate::sim::{Bitstring, Gate, Observable, Statevector, ZTerm};

/// Largest graph accepted by the exhaustive optimum search.
pub const MAX_BRUTE_FORCE_NODES: usize = 20;

/// Simple undirected graph. Edges are stored as `(u, v)` with `u < v`, in
/// input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRecord> for Graph {
    type Error = TaskError;

    fn try_from(r: GraphRecord) -> Result<Self, TaskError> {
        Graph::new(r.n_nodes, r.edges)
    }
}

impl From<Graph> for GraphRecord {
    fn from(g: Graph) -> Self {
        GraphRecord { n_nodes: g.n_nodes, edges: g.edges }
    }
}

impl Graph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TaskError> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(TaskError::InvalidGraph(format!("self-loop on node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(TaskError::InvalidGraph(format!("edge ({u}, {v}) outside {n_nodes} nodes")));
            }
            let e = (u.min(v), u.max(v));
            if out.contains(&e) {
                return Err(TaskError::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            out.push(e);
        }
        if out.is_empty() {
            return Err(TaskError::EmptyGraph);
        }
        Ok(Self { n_nodes, edges: out })
    }

    /// Text format: first non-comment line is the node count, then one
    /// `u v` pair per line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines.next().ok_or_else(|| TaskError::InvalidGraph("missing node count".into()))?;
        let n_nodes: usize =
            header.parse().map_err(|_| TaskError::InvalidGraph(format!("bad node count {header:?}")))?;
        let mut edges = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [u, v] => u.parse::<usize>().ok().zip(v.parse::<usize>().ok()),
                _ => None,
            };
            let edge = parsed.ok_or_else(|| TaskError::InvalidGraph(format!("line {}: expected `u v`", i + 1)))?;
            edges.push(edge);
        }
        Self::new(n_nodes, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of edges crossing the partition given by the bitstring.
    pub fn cut_value(&self, partition: &Bitstring) -> usize {
        self.edges.iter().filter(|&&(u, v)| partition.bit(u) != partition.bit(v)).count()
    }

    /// `Σ_edges ½(1 - Z_u Z_v)`, diagonal with the cut value as eigenvalue.
    pub fn observable(&self) -> Observable {
        Observable {
            offset: self.edges.len() as f64 / 2.0,
            terms: self.edges.iter().map(|&(u, v)| ZTerm { coefficient: -0.5, support: vec![u, v] }).collect(),
        }
    }

    /// Exhaustive optimum: the maximum cut and every partition achieving it.
    pub fn brute_force_maxcut(&self) -> Result<(usize, Vec<Bitstring>), TaskError> {
        if self.n_nodes > MAX_BRUTE_FORCE_NODES {
            return Err(TaskError::TooManyNodes(self.n_nodes));
        }
        let mut best = 0;
        let mut arg = Vec::new();
        for idx in 0..1usize << self.n_nodes {
            let b = Bitstring::new(idx, self.n_nodes);
            let c = self.cut_value(&b);
            if c > best {
                best = c;
                arg.clear();
            }
            if c == best {
                arg.push(b);
            }
        }
        Ok((best, arg))
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n_nodes)?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

/// The four eight-node benchmark graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkGraph {
    Random,
    Ladder,
    Barbell,
    Caveman,
}

impl BenchmarkGraph {
    pub const ALL: [BenchmarkGraph; 4] =
        [BenchmarkGraph::Random, BenchmarkGraph::Ladder, BenchmarkGraph::Barbell, BenchmarkGraph::Caveman];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkGraph::Random => "random",
            BenchmarkGraph::Ladder => "ladder",
            BenchmarkGraph::Barbell => "barbell",
            BenchmarkGraph::Caveman => "caveman",
        }
    }

    fn source(self) -> &'static str {
        match self {
            BenchmarkGraph::Random => include_str!("../../data/graphs/random.txt"),
            BenchmarkGraph::Ladder => include_str!("../../data/graphs/ladder.txt"),
            BenchmarkGraph::Barbell => include_str!("../../data/graphs/barbell.txt"),
            BenchmarkGraph::Caveman => include_str!("../../data/graphs/caveman.txt"),
        }
    }

    pub fn graph(self) -> Graph {
        Graph::parse(self.source()).expect("bundled graph files are valid")
    }
}

impl fmt::Display for BenchmarkGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkGraph {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, TaskError> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| TaskError::Invalid(format!("unknown benchmark graph {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutResult {
    pub expectation: f64,
    pub accuracy: f64,
    pub optimal_value: usize,
    pub optimal_cuts: Vec<Bitstring>,
    pub best_sampled_cut: usize,
    pub gate_count: usize,
}

/// A graph with its cost observable and exhaustive optimum cached.
#[derive(Debug, Clone)]
pub struct MaxCutProblem {
    graph: Graph,
    observable: Observable,
    optimum: usize,
    optimal_cuts: Vec<Bitstring>,
}

impl MaxCutProblem {
    pub fn new(graph: Graph) -> Result<Self, TaskError> {
        let (optimum, optimal_cuts) = graph.brute_force_maxcut()?;
        Ok(Self { observable: graph.observable(), graph, optimum, optimal_cuts })
    }

    pub fn benchmark(which: BenchmarkGraph) -> Self {
        Self::new(which.graph()).expect("bundled graphs are small")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn optimum(&self) -> usize {
        self.optimum
    }

    pub fn optimal_cuts(&self) -> &[Bitstring] {
        &self.optimal_cuts
    }

    pub fn n_qubits(&self) -> usize {
        self.graph.n_nodes
    }

    /// Hadamard on every wire, then the genome's circuit.
    pub fn state(&self, genome: &Genome) -> Result<Statevector> {
        if genome.n_wires() != self.n_qubits() {
            return Err(TaskError::WireMismatch { genome: genome.n_wires(), task: self.n_qubits() }.into());
        }
        let mut s = Statevector::new(self.n_qubits())?;
        for wire in 0..self.n_qubits() {
            s.apply(&Gate::H { wire })?;
        }
        s.apply_all(&genome.reconstruct_circuit())?;
        Ok(s)
    }

    /// `<H_C>` of the prepared state.
    pub fn fitness(&self, genome: &Genome) -> Result<f64> {
        Ok(self.state(genome)?.expectation(&self.observable)?)
    }

    /// Fraction of `shots` samples whose cut equals the optimum.
    pub fn accuracy<R: Rng + ?Sized>(&self, genome: &Genome, shots: usize, rng: &mut R) -> Result<f64> {
        Ok(self.evaluate(genome, shots, rng)?.accuracy)
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, genome: &Genome, shots: usize, rng: &mut R) -> Result<MaxCutResult> {
        self.evaluate_state(&self.state(genome)?, genome.gate_count(), shots, rng)
    }

    /// Expectation and sampled accuracy of an already prepared state.
    pub fn evaluate_state<R: Rng + ?Sized>(
        &self,
        state: &Statevector,
        gate_count: usize,
        shots: usize,
        rng: &mut R,
    ) -> Result<MaxCutResult> {
        if shots == 0 {
            return Err(TaskError::Invalid("at least one shot is required".into()).into());
        }
        if state.n_qubits() != self.n_qubits() {
            return Err(TaskError::WireMismatch { genome: state.n_qubits(), task: self.n_qubits() }.into());
        }
        let cuts: Vec<usize> = state.sample_many(shots, rng).iter().map(|b| self.graph.cut_value(b)).collect();
        let hits = cuts.iter().filter(|&&c| c == self.optimum).count();
        Ok(MaxCutResult {
            expectation: state.expectation(&self.observable)?,
            accuracy: hits as f64 / shots as f64,
            optimal_value: self.optimum,
            optimal_cuts: self.optimal_cuts.clone(),
            best_sampled_cut: cuts.iter().copied().max().unwrap_or(0),
            gate_count,
        })
    }
}
