//! Browser bindings: a QAOA energy landscape, gradient-trained QAOA, and a
//! small QNEAT run on the benchmark MaxCut graphs. Every export returns a JSON
//! string so the page needs no generated glue beyond `wasm-bindgen`'s own.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qneat::evolution::{evolve_with, EvolutionConfig, GenerationRecord};
use qneat::qaoa::{qaoa_expectation, qaoa_gate_count, qaoa_optimize_observed, QaoaParams};
use qneat::runner::render_circuit;
use qneat::seeding::{substream, Stream, TaskRng};
use qneat::tasks::{BenchmarkGraph, Graph, MaxCutProblem};
use qneat::Genome;

/// Upper bound on landscape resolution, to keep the page responsive.
const MAX_STEPS: usize = 96;
const MAX_GENERATIONS: usize = 200;
const MAX_POPULATION: usize = 400;

#[derive(Serialize)]
struct GraphView {
    name: String,
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    optimum: usize,
}

#[derive(Serialize)]
struct Landscape {
    steps: usize,
    gamma_max: f64,
    beta_max: f64,
    /// Row-major, `values[i * steps + j]` at `(gamma_i, beta_j)`.
    values: Vec<f64>,
    best: (f64, f64, f64),
}

#[derive(Serialize)]
struct QaoaCurve {
    expectations: Vec<f64>,
    gammas: Vec<f64>,
    betas: Vec<f64>,
    gate_count: usize,
    optimum: usize,
}

#[derive(Serialize)]
struct EvolutionView {
    history: Vec<GenerationRecord>,
    best_fitness: f64,
    gate_count: usize,
    accuracy: f64,
    optimum: usize,
    circuit: String,
}

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(err)
}

fn benchmark(name: &str) -> Result<Graph, JsValue> {
    let which: BenchmarkGraph = name.parse().map_err(err)?;
    Ok(which.graph())
}

/// Nodes, edges and optimal cut of a benchmark graph.
#[wasm_bindgen]
pub fn graph_info(name: &str) -> Result<String, JsValue> {
    let graph = benchmark(name)?;
    let (optimum, _) = graph.brute_force_maxcut().map_err(err)?;
    json(&GraphView { name: name.to_string(), n_nodes: graph.n_nodes(), edges: graph.edges().to_vec(), optimum })
}

/// Depth-one QAOA expectation over `gamma in [0, pi)`, `beta in [0, pi/2)`.
#[wasm_bindgen]
pub fn qaoa_landscape(name: &str, steps: usize) -> Result<String, JsValue> {
    let graph = benchmark(name)?;
    let steps = steps.clamp(2, MAX_STEPS);
    let (gamma_max, beta_max) = (std::f64::consts::PI, std::f64::consts::FRAC_PI_2);
    let mut values = Vec::with_capacity(steps * steps);
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..steps {
        let gamma = gamma_max * i as f64 / steps as f64;
        for j in 0..steps {
            let beta = beta_max * j as f64 / steps as f64;
            let params = QaoaParams::new(vec![gamma], vec![beta]).map_err(err)?;
            let v = qaoa_expectation(&graph, &params).map_err(err)?;
            if v > best.2 {
                best = (gamma, beta, v);
            }
            values.push(v);
        }
    }
    json(&Landscape { steps, gamma_max, beta_max, values, best })
}

/// Gradient ascent on depth-`p` QAOA from the linear-ramp start.
#[wasm_bindgen]
pub fn qaoa_train(name: &str, p: usize, learning_rate: f64, epochs: usize) -> Result<String, JsValue> {
    let graph = benchmark(name)?;
    let (optimum, _) = graph.brute_force_maxcut().map_err(err)?;
    let mut expectations = Vec::with_capacity(epochs);
    let run = qaoa_optimize_observed(&graph, QaoaParams::ramp(p).map_err(err)?, learning_rate, epochs, |ep| {
        expectations.push(ep.expectation);
        Ok(())
    })
    .map_err(err)?;
    json(&QaoaCurve {
        expectations,
        gammas: run.params.gammas.clone(),
        betas: run.params.betas.clone(),
        gate_count: qaoa_gate_count(&graph, p),
        optimum,
    })
}

/// Evolves circuits for MaxCut on a benchmark graph with the MaxCut preset.
#[wasm_bindgen]
pub fn evolve_maxcut(name: &str, seed: u64, generations: usize, population: usize) -> Result<String, JsValue> {
    let problem = MaxCutProblem::new(benchmark(name)?).map_err(err)?;
    let config = EvolutionConfig {
        seed,
        generations: generations.clamp(1, MAX_GENERATIONS),
        population_size: population.clamp(4, MAX_POPULATION),
        ..EvolutionConfig::maxcut()
    };
    let fitness = |g: &Genome, _: &mut TaskRng| problem.fitness(g);
    let outcome = evolve_with(&config, problem.n_qubits(), &fitness, |_, _| Ok(())).map_err(err)?;
    let best = &outcome.best;
    let mut rng = substream(seed, Stream::Report, 0, 0);
    let accuracy = problem.accuracy(&best.genome, 100, &mut rng).map_err(err)?;
    json(&EvolutionView {
        history: outcome.history,
        best_fitness: best.score().map_err(err)?,
        gate_count: best.genome.gate_count(),
        accuracy,
        optimum: problem.optimum(),
        circuit: render_circuit(&best.genome),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landscape_peak_beats_the_uniform_state() {
        let v: serde_json::Value = serde_json::from_str(&qaoa_landscape("ladder", 12).unwrap()).unwrap();
        assert_eq!(v["values"].as_array().unwrap().len(), 144);
        // gamma = beta = 0 leaves |+>^n, whose expectation is |E| / 2
        assert!((v["values"][0].as_f64().unwrap() - 5.0).abs() < 1e-9);
        assert!(v["best"][2].as_f64().unwrap() > 5.0);
    }

    #[test]
    fn evolution_and_training_report_json() {
        let e: serde_json::Value = serde_json::from_str(&evolve_maxcut("barbell", 1, 3, 12).unwrap()).unwrap();
        assert_eq!(e["history"].as_array().unwrap().len(), 3);
        assert!(e["circuit"].as_str().unwrap().starts_with("q0: [E]"));
        let q: serde_json::Value = serde_json::from_str(&qaoa_train("ladder", 1, 0.02, 4).unwrap()).unwrap();
        assert_eq!(q["expectations"].as_array().unwrap().len(), 4);
        assert_eq!(q["gate_count"], 38);
    }

    #[test]
    fn graph_info_lists_edges() {
        let g: serde_json::Value = serde_json::from_str(&graph_info("ladder").unwrap()).unwrap();
        assert_eq!(g["optimum"], 10);
        assert_eq!(g["edges"].as_array().unwrap().len(), 10);
    }
}
