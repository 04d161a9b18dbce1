//! Experiment configuration files.
//!
//! A config is TOML with an `[experiment]` table and either an
//! `[evolution]` table (QNEAT algorithms) or a `[qaoa]` table. Evolution
//! keys not given fall back to the task's preset; `initial_layers` must be
//! given explicitly.
//!
//! ```toml
//! [experiment]
//! task = "maxcut:ladder"
//! algo = "qneat"
//! seed = 1
//!
//! [evolution]
//! initial_layers = 2
//! generations = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::qaoa::DEFAULT_LEARNING_RATE;
use crate::sim::MAX_QUBITS;
use crate::tasks::{BenchmarkGraph, Environment, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Task {
    CartPole,
    FrozenLake,
    /// A bundled benchmark name or a path to an edge-list file.
    MaxCut(String),
}

impl Task {
    pub fn environment(&self) -> Option<Environment> {
        match self {
            Task::CartPole => Some(Environment::CartPole),
            Task::FrozenLake => Some(Environment::FrozenLake),
            Task::MaxCut(_) => None,
        }
    }

    pub fn graph(&self) -> Result<Option<Graph>> {
        let Task::MaxCut(name) = self else { return Ok(None) };
        if let Ok(bench) = name.parse::<BenchmarkGraph>() {
            return Ok(Some(bench.graph()));
        }
        let text = std::fs::read_to_string(name).map_err(|e| Error::io(name, e))?;
        Ok(Some(Graph::parse(&text)?))
    }

    pub fn n_wires(&self) -> Result<usize> {
        match self {
            Task::MaxCut(_) => Ok(self.graph()?.map_or(0, |g| g.n_nodes())),
            _ => Ok(self.environment().map_or(0, |e| e.n_qubits())),
        }
    }

    /// Hyperparameter preset for the task.
    pub fn preset(&self) -> EvolutionConfig {
        match self {
            Task::MaxCut(_) => EvolutionConfig::maxcut(),
            _ => EvolutionConfig::reinforcement_learning(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::CartPole => f.write_str("cartpole"),
            Task::FrozenLake => f.write_str("frozenlake8x8"),
            Task::MaxCut(g) => write!(f, "maxcut:{g}"),
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(Task::CartPole),
            "frozenlake8x8" => Ok(Task::FrozenLake),
            _ => match s.strip_prefix("maxcut:") {
                Some(g) if !g.is_empty() => Ok(Task::MaxCut(g.to_string())),
                _ => Err(Error::Config(format!(
                    "unknown task {s:?} (expected cartpole, frozenlake8x8 or maxcut:<graph>)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for Task {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Task> for String {
    fn from(t: Task) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "qneat")]
    Qneat,
    #[serde(rename = "qneat-moo")]
    QneatMoo,
    #[serde(rename = "qaoa")]
    Qaoa,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Qneat => "qneat",
            Algo::QneatMoo => "qneat-moo",
            Algo::Qaoa => "qaoa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaSettings {
    pub p: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}

fn default_epochs() -> usize {
    500
}

fn default_report_episodes() -> usize {
    100
}

fn default_accuracy_samples() -> usize {
    100
}

/// `[experiment]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub task: Task,
    pub algo: Algo,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Fill the `seconds` column. Off by default so histories are
    /// byte-identical across reruns.
    #[serde(default)]
    pub record_seconds: bool,
    /// Episodes used to re-evaluate the final champion on RL tasks.
    #[serde(default = "default_report_episodes")]
    pub report_episodes: usize,
    /// Samples per MaxCut accuracy estimate.
    #[serde(default = "default_accuracy_samples")]
    pub accuracy_samples: usize,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qaoa: Option<QaoaSettings>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentSection,
    evolution: Option<toml::Table>,
    qaoa: Option<QaoaSettings>,
}

impl ExperimentConfig {
    /// Parses and validates a config, filling evolution defaults from the
    /// task preset.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let evolution = match raw.evolution {
            None => None,
            Some(table) => {
                if !table.contains_key("initial_layers") {
                    return Err(Error::Config("[evolution] must set initial_layers".into()));
                }
                if table.contains_key("seed") {
                    return Err(Error::Config("set the seed in [experiment], not [evolution]".into()));
                }
                let mut merged = toml::Table::try_from(raw.experiment.task.preset())
                    .map_err(|e| Error::Config(e.to_string()))?;
                merged.extend(table);
                let mut config: EvolutionConfig =
                    merged.try_into().map_err(|e: toml::de::Error| Error::Config(format!("[evolution]: {e}")))?;
                config.seed = raw.experiment.seed;
                Some(config)
            }
        };
        let config = Self { experiment: raw.experiment, evolution, qaoa: raw.qaoa };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Fully explicit TOML that parses back to an equal config.
    pub fn to_toml_string(&self) -> Result<String> {
        let mut copy = self.clone();
        let mut table = toml::Table::try_from(&copy.experiment).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = toml::Table::new();
        out.insert("experiment".into(), toml::Value::Table(std::mem::take(&mut table)));
        if let Some(evo) = copy.evolution.take() {
            let mut t = toml::Table::try_from(evo).map_err(|e| Error::Config(e.to_string()))?;
            t.remove("seed");
            out.insert("evolution".into(), toml::Value::Table(t));
        }
        if let Some(q) = copy.qaoa.take() {
            out.insert(
                "qaoa".into(),
                toml::Value::Table(toml::Table::try_from(q).map_err(|e| Error::Config(e.to_string()))?),
            );
        }
        toml::to_string(&out).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces the seed everywhere it is stored.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.seed = seed;
        if let Some(evo) = &mut self.evolution {
            evo.seed = seed;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed
    }

    /// `algo=<name>`, plus `,p=<k>` for QAOA.
    pub fn tag(&self) -> String {
        match (&self.experiment.algo, &self.qaoa) {
            (Algo::Qaoa, Some(q)) => format!("algo=qaoa,p={}", q.p),
            (algo, _) => format!("algo={algo}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        match e.algo {
            Algo::Qaoa => {
                if !matches!(e.task, Task::MaxCut(_)) {
                    return Err(Error::Config(format!("qaoa runs only on maxcut tasks, not {}", e.task)));
                }
                if self.evolution.is_some() {
                    return Err(Error::Config("qaoa runs take a [qaoa] table, not [evolution]".into()));
                }
                let q = self.qaoa.as_ref().ok_or_else(|| Error::Config("qaoa runs need a [qaoa] table".into()))?;
                if q.p == 0 || q.epochs == 0 {
                    return Err(Error::Config("qaoa needs p >= 1 and epochs >= 1".into()));
                }
                if !(q.learning_rate > 0.0 && q.learning_rate.is_finite()) {
                    return Err(Error::Config("qaoa learning_rate must be positive".into()));
                }
            }
            Algo::Qneat | Algo::QneatMoo => {
                if self.qaoa.is_some() {
                    return Err(Error::Config(format!("{} runs take an [evolution] table, not [qaoa]", e.algo)));
                }
                let evo = self
                    .evolution
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{} runs need an [evolution] table", e.algo)))?;
                evo.validate()?;
                if evo.seed != e.seed {
                    return Err(Error::Config("evolution seed differs from the experiment seed".into()));
                }
            }
        }
        if e.report_episodes == 0 || e.accuracy_samples == 0 {
            return Err(Error::Config("report_episodes and accuracy_samples must be at least 1".into()));
        }
        let n = e.task.n_wires()?;
        if n > MAX_QUBITS {
            return Err(Error::Config(format!("task needs {n} qubits; the simulator handles at most {MAX_QUBITS}")));
        }
        Ok(())
    }
}

/// Where a run writes its files. An explicit directory wins; otherwise the
/// config's `output_dir`, then `runs/<name>`. Relative paths are taken
/// against `root` (the output-root override) when given.
pub fn resolve_output_dir(
    explicit: Option<&Path>,
    config: &ExperimentConfig,
    root: Option<&Path>,
    name: &str,
) -> PathBuf {
    let chosen = explicit
        .map(Path::to_path_buf)
        .or_else(|| config.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(name));
    match root {
        Some(root) if chosen.is_relative() => root.join(chosen),
        _ => chosen,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LADDER: &str = r#"
[experiment]
task = "maxcut:ladder"
algo = "qneat"
seed = 4

[evolution]
initial_layers = 2
generations = 7
"#;

    #[test]
    fn preset_fills_missing_keys() {
        let c = ExperimentConfig::from_toml_str(LADDER).unwrap();
        let evo = c.evolution.unwrap();
        assert_eq!(evo.generations, 7);
        assert_eq!(evo.population_size, 200);
        assert_eq!(evo.p_weight, 0.6);
        assert_eq!(evo.compatibility_threshold, 0.45);
        assert_eq!(evo.seed, 4);
        assert_eq!(c.experiment.report_episodes, 100);
    }

    #[test]
    fn rl_preset() {
        let text = "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat-moo\"\n[evolution]\ninitial_layers = 0\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        let evo = c.evolution.unwrap();
        assert_eq!((evo.population_size, evo.sigma, evo.p_weight), (150, 0.01, 0.3));
        assert_eq!((evo.p_add_rot, evo.p_add_cnot, evo.compatibility_threshold), (0.5, 0.5, 1.0));
        assert_eq!(evo.generations, 50);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml_str(LADDER).unwrap();
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn rejections() {
        let bad = [
            // qaoa on an RL task
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qaoa\"\n[qaoa]\np = 1\n",
            // missing initial_layers
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat\"\n[evolution]\ngenerations = 3\n",
            // unknown key
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat\"\n[evolution]\ninitial_layers = 0\npopsize = 3\n",
            // unknown task
            "[experiment]\ntask = \"mountaincar\"\nalgo = \"qneat\"\n[evolution]\ninitial_layers = 0\n",
            // out-of-range probability
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat\"\n[evolution]\ninitial_layers = 0\np_weight = 1.5\n",
            // missing evolution table
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat\"\n",
            // wrong table for the algorithm
            "[experiment]\ntask = \"maxcut:ladder\"\nalgo = \"qaoa\"\n[evolution]\ninitial_layers = 0\n",
            "[experiment]\ntask = \"maxcut:ladder\"\nalgo = \"qaoa\"\n[qaoa]\np = 0\n",
            "[experiment]\ntask = \"maxcut:nope.txt\"\nalgo = \"qaoa\"\n[qaoa]\np = 1\n",
            "[experiment]\ntask = \"cartpole\"\nalgo = \"qneat\"\n[evolution]\ninitial_layers = 0\nseed = 3\n",
            "not toml at all [",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn qaoa_config_and_tag() {
        let text = "[experiment]\ntask = \"maxcut:barbell\"\nalgo = \"qaoa\"\n[qaoa]\np = 3\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.tag(), "algo=qaoa,p=3");
        assert_eq!(c.qaoa.as_ref().unwrap().epochs, 500);
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml_str(LADDER).unwrap().tag(), "algo=qneat");
    }

    #[test]
    fn graph_file_tasks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.txt");
        std::fs::write(&path, "3\n0 1\n1 2\n0 2\n").unwrap();
        let text = format!("[experiment]\ntask = \"maxcut:{}\"\nalgo = \"qaoa\"\n[qaoa]\np = 1\n", path.display());
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.experiment.task.n_wires().unwrap(), 3);
    }

    #[test]
    fn output_dir_precedence() {
        let mut c = ExperimentConfig::from_toml_str(LADDER).unwrap();
        let root = Path::new("/data");
        assert_eq!(resolve_output_dir(None, &c, None, "x"), PathBuf::from("runs/x"));
        assert_eq!(resolve_output_dir(None, &c, Some(root), "x"), PathBuf::from("/data/runs/x"));
        c.experiment.output_dir = Some("out/a".into());
        assert_eq!(resolve_output_dir(None, &c, Some(root), "x"), PathBuf::from("/data/out/a"));
        assert_eq!(resolve_output_dir(Some(Path::new("/tmp/b")), &c, Some(root), "x"), PathBuf::from("/tmp/b"));
    }
}
