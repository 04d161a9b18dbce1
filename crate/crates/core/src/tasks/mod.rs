//! Fitness backends: two reinforcement-learning environments driven by a
//! circuit policy, and MaxCut on small graphs.

pub mod cartpole;
pub mod frozenlake;
pub mod maxcut;
pub mod policy;

use thiserror::Error;

pub use cartpole::{CartPole, CartPoleState};
pub use frozenlake::{FrozenLake, FrozenLakeState};
pub use maxcut::{BenchmarkGraph, Graph, MaxCutProblem, MaxCutResult};
pub use policy::{encode_cartpole, encode_frozenlake, policy_action, rl_fitness, Environment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("episode already finished")]
    EpisodeDone,
    #[error("action {action} invalid for an environment with {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },
    #[error("square {0} outside the 8x8 board")]
    SquareOutOfRange(usize),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph with {0} nodes is too large for exhaustive search")]
    TooManyNodes(usize),
    #[error("genome has {genome} wires but the task needs {task}")]
    WireMismatch { genome: usize, task: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{0}")]
    Invalid(String),
}
