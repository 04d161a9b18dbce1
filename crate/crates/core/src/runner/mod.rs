//! Running configured experiments and persisting their results.
//!
//! A run directory holds `meta.json` (resolved config, seed, version),
//! `history.csv`, `best_genome.json` and, for QNEAT runs, `trace/` with the
//! champion's ancestry. While a run is in progress, and after it fails, the
//! directory also holds an `INCOMPLETE` marker.

pub mod config;
pub mod history;
pub mod summarize;
pub mod trace;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{resolve_output_dir, Algo, ExperimentConfig, QaoaSettings, Task};
pub use history::{read_history, write_history, HistoryWriter};
pub use summarize::{summarize, Summary, SummaryRow};
pub use trace::{render_circuit, replay_trace};

use crate::error::{Error, Result};
use crate::evolution::{evolve_with, EvolutionConfig, Fitness, GenerationRecord, Population};
use crate::genome::Genome;
use crate::moo::evolve_moo_with;
use crate::qaoa::{qaoa_gate_count, qaoa_optimize_observed, qaoa_state, QaoaParams};
use crate::seeding::{substream, Stream, TaskRng};
use crate::tasks::{policy::rl_fitness, Graph, MaxCutProblem, MaxCutResult};

pub const INCOMPLETE: &str = "INCOMPLETE";
pub const HISTORY: &str = "history.csv";
pub const META: &str = "meta.json";
pub const BEST: &str = "best_genome.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tag: String,
    pub seed: u64,
    pub version: String,
    pub config: ExperimentConfig,
}

/// Contents of `best_genome.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub tag: String,
    pub fitness: f64,
    pub gate_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genome: Option<Genome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qaoa_params: Option<QaoaParams>,
    /// Mean return over the report episodes (RL tasks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reevaluated_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reevaluation_episodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxcut: Option<MaxCutResult>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub history: Vec<GenerationRecord>,
    pub best: BestRecord,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_meta(dir: impl AsRef<Path>) -> Result<RunMeta> {
    let path = dir.as_ref().join(META);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_best(dir: impl AsRef<Path>) -> Result<BestRecord> {
    let path = dir.as_ref().join(BEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Runs one experiment into `dir`, which must not already hold a run.
///
/// On failure the `INCOMPLETE` marker stays behind with the error message,
/// so partial output is never mistaken for a finished run.
pub fn run_experiment(config: &ExperimentConfig, dir: impl AsRef<Path>) -> Result<RunOutcome> {
    let dir = dir.as_ref();
    config.validate()?;
    if dir.join(HISTORY).exists() || dir.join(META).exists() {
        return Err(Error::Config(format!("{} already holds a run; choose another output directory", dir.display())));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join(INCOMPLETE);
    std::fs::write(&marker, "run in progress\n").map_err(|e| Error::io(&marker, e))?;

    let result = execute(config, dir);
    match &result {
        Ok(_) => std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?,
        Err(err) => {
            let _ = std::fs::write(&marker, format!("run failed: {err}\n"));
        }
    }
    result
}

fn execute(config: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let meta = RunMeta {
        tag: config.tag(),
        seed: config.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
    };
    write_json(&dir.join(META), &meta)?;
    let started = Instant::now();
    let seconds = || config.experiment.record_seconds.then(|| started.elapsed().as_secs_f64());
    let mut writer = HistoryWriter::create(dir.join(HISTORY), config.experiment.algo == Algo::QneatMoo)?;

    let (history, best) = match config.experiment.algo {
        Algo::Qaoa => run_qaoa(config, &mut writer, &seconds)?,
        Algo::Qneat | Algo::QneatMoo => run_qneat(config, dir, &mut writer, &seconds)?,
    };
    write_json(&dir.join(BEST), &best)?;
    Ok(RunOutcome { dir: dir.to_path_buf(), history, best })
}

type Seconds<'a> = dyn Fn() -> Option<f64> + 'a;

fn run_qneat(
    config: &ExperimentConfig,
    dir: &Path,
    writer: &mut HistoryWriter<std::fs::File>,
    seconds: &Seconds<'_>,
) -> Result<(Vec<GenerationRecord>, BestRecord)> {
    let evo: &EvolutionConfig = config.evolution.as_ref().ok_or_else(|| Error::Config("missing [evolution]".into()))?;
    let task = &config.experiment.task;
    let seed = config.seed();
    let samples = config.experiment.accuracy_samples;
    let problem = task.graph()?.map(MaxCutProblem::new).transpose()?;
    let env = task.environment();
    let episodes = evo.episodes_per_eval;

    let fitness: Box<dyn Fitness + '_> = match (&problem, env) {
        (Some(p), _) => Box::new(move |g: &Genome, _: &mut TaskRng| p.fitness(g)),
        (None, Some(env)) => Box::new(move |g: &Genome, rng: &mut TaskRng| rl_fitness(g, env, episodes, rng)),
        (None, None) => return Err(Error::Config(format!("task {task} has no fitness"))),
    };
    let observe = |pop: &Population, record: &mut GenerationRecord| -> Result<()> {
        if let Some(p) = &problem {
            let best = pop.current_best().ok_or_else(|| Error::Fitness("empty population".into()))?;
            let mut rng = substream(seed, Stream::Sampling, pop.generation(), 0);
            record.accuracy = Some(p.accuracy(&best.genome, samples, &mut rng)?);
        }
        record.seconds = seconds();
        writer.write(record)
    };
    let n_wires = task.n_wires()?;
    let outcome = match config.experiment.algo {
        Algo::QneatMoo => evolve_moo_with(evo, n_wires, fitness.as_ref(), observe)?,
        _ => evolve_with(evo, n_wires, fitness.as_ref(), observe)?,
    };

    trace::write_trace(dir, &outcome.population.lineage(outcome.best.id))?;
    let champion = &outcome.best;
    let mut rng = substream(seed, Stream::Report, 0, 0);
    let mut best = BestRecord {
        tag: config.tag(),
        fitness: champion.score()?,
        gate_count: champion.genome.gate_count(),
        agent_id: Some(champion.id),
        genome: Some(champion.genome.clone()),
        qaoa_params: None,
        reevaluated_mean: None,
        reevaluation_episodes: None,
        maxcut: None,
    };
    match (&problem, env) {
        (Some(p), _) => best.maxcut = Some(p.evaluate(&champion.genome, samples, &mut rng)?),
        (None, Some(env)) => {
            let n = config.experiment.report_episodes;
            best.reevaluated_mean = Some(rl_fitness(&champion.genome, env, n, &mut rng)?);
            best.reevaluation_episodes = Some(n);
        }
        (None, None) => {}
    }
    Ok((outcome.history, best))
}

fn run_qaoa(
    config: &ExperimentConfig,
    writer: &mut HistoryWriter<std::fs::File>,
    seconds: &Seconds<'_>,
) -> Result<(Vec<GenerationRecord>, BestRecord)> {
    let settings = config.qaoa.as_ref().ok_or_else(|| Error::Config("missing [qaoa]".into()))?;
    let graph: Graph = config.experiment.task.graph()?.ok_or_else(|| Error::Config("qaoa needs a graph".into()))?;
    let problem = MaxCutProblem::new(graph.clone())?;
    let seed = config.seed();
    let samples = config.experiment.accuracy_samples;
    let p = settings.p;
    let (edges, nodes) = (graph.edges().len(), graph.n_nodes());
    let gate_count = qaoa_gate_count(&graph, p);
    let mut history = Vec::with_capacity(settings.epochs);

    let run = qaoa_optimize_observed(&graph, QaoaParams::ramp(p)?, settings.learning_rate, settings.epochs, |ep| {
        let state = qaoa_state(&graph, ep.params)?;
        let mut rng = substream(seed, Stream::Sampling, ep.epoch as u64, 0);
        let accuracy = problem.evaluate_state(&state, gate_count, samples, &mut rng)?.accuracy;
        let record = GenerationRecord {
            generation: ep.epoch as u64,
            best_fitness: ep.expectation,
            top5_mean: ep.expectation,
            pop_mean: ep.expectation,
            n_rot: p * (edges + nodes),
            n_cnot: 2 * p * edges,
            n_gates: gate_count,
            n_species: 1,
            accuracy: Some(accuracy),
            evals_cumulative: ep.evaluations,
            seconds: seconds(),
            front_sizes: None,
            best_objectives: None,
        };
        writer.write(&record)?;
        history.push(record);
        Ok(())
    })?;

    let state = qaoa_state(&graph, &run.params)?;
    let mut rng = substream(seed, Stream::Report, 0, 0);
    let best = BestRecord {
        tag: config.tag(),
        fitness: run.final_expectation(),
        gate_count,
        agent_id: None,
        genome: None,
        maxcut: Some(problem.evaluate_state(&state, gate_count, samples, &mut rng)?),
        qaoa_params: Some(run.params),
        reevaluated_mean: None,
        reevaluation_episodes: None,
    };
    Ok((history, best))
}
