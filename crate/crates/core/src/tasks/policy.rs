//! Circuit policies for the RL environments.
//!
//! An observation is written into the register with `RX` rotations, the
//! evolved circuit runs, and the action is the index of the largest `<Z_i>`
//! among the first `n_actions` wires (lowest index on ties).

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cartpole::CartPole;
use super::frozenlake::{FrozenLake, N_SQUARES};
use super::TaskError;
use crate::error::Result;
use crate::genome::Genome;
use crate::sim::{Gate, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    CartPole,
    FrozenLake,
}

impl Environment {
    pub fn n_qubits(self) -> usize {
        match self {
            Environment::CartPole => 4,
            Environment::FrozenLake => 6,
        }
    }

    pub fn n_actions(self) -> usize {
        match self {
            Environment::CartPole => CartPole::N_ACTIONS,
            Environment::FrozenLake => FrozenLake::N_ACTIONS,
        }
    }
}

/// `RX(obs_i)` on wire `i`; values are used as radians without rescaling.
pub fn encode_cartpole(obs: &[f64; 4]) -> Vec<Gate> {
    obs.iter().enumerate().map(|(wire, &theta)| Gate::Rx { wire, theta }).collect()
}

/// Six-bit big-endian expansion of the square; wire `i` gets `RX(π·bit_i)`.
pub fn encode_frozenlake(square: usize) -> Result<Vec<Gate>, TaskError> {
    if square >= N_SQUARES {
        return Err(TaskError::SquareOutOfRange(square));
    }
    Ok((0..6)
        .map(|wire| {
            let bit = (square >> (5 - wire)) & 1;
            Gate::Rx { wire, theta: PI * bit as f64 }
        })
        .collect())
}

/// A genome compiled to a gate list, ready to act repeatedly.
#[derive(Debug, Clone)]
pub struct CircuitPolicy {
    circuit: Vec<Gate>,
    n_qubits: usize,
    n_actions: usize,
}

impl CircuitPolicy {
    pub fn new(genome: &Genome, n_actions: usize) -> Result<Self> {
        let n_qubits = genome.n_wires();
        if n_actions == 0 || n_actions > n_qubits {
            return Err(TaskError::Invalid(format!("{n_actions} actions cannot be read from {n_qubits} wires")).into());
        }
        Ok(Self { circuit: genome.reconstruct_circuit(), n_qubits, n_actions })
    }

    pub fn act(&self, encoding: &[Gate]) -> Result<usize> {
        let mut state = Statevector::new(self.n_qubits)?;
        state.apply_all(encoding)?;
        state.apply_all(&self.circuit)?;
        let mut best = (0, f64::NEG_INFINITY);
        for wire in 0..self.n_actions {
            let z = state.expectation_z(wire)?;
            if z > best.1 {
                best = (wire, z);
            }
        }
        Ok(best.0)
    }
}

pub fn policy_action(genome: &Genome, encoding: &[Gate], n_actions: usize) -> Result<usize> {
    CircuitPolicy::new(genome, n_actions)?.act(encoding)
}

fn check_wires(genome: &Genome, env: Environment) -> Result<(), TaskError> {
    if genome.n_wires() != env.n_qubits() {
        return Err(TaskError::WireMismatch { genome: genome.n_wires(), task: env.n_qubits() });
    }
    Ok(())
}

/// Undiscounted return of one greedy episode.
pub fn episode_return<R: Rng + ?Sized>(policy: &CircuitPolicy, env: Environment, rng: &mut R) -> Result<f64> {
    let mut total = 0.0;
    match env {
        Environment::CartPole => {
            let mut state = CartPole::reset(rng);
            loop {
                let action = policy.act(&encode_cartpole(&state.observation()))?;
                let (next, reward, done) = CartPole::step(&state, action)?;
                total += reward;
                state = next;
                if done {
                    break;
                }
            }
        }
        Environment::FrozenLake => {
            let mut state = FrozenLake::reset();
            loop {
                let action = policy.act(&encode_frozenlake(state.square)?)?;
                let (next, reward, done) = FrozenLake::step(&state, action)?;
                total += reward;
                state = next;
                if done {
                    break;
                }
            }
        }
    }
    Ok(total)
}

/// Mean undiscounted return of the greedy policy over `episodes` runs.
pub fn rl_fitness<R: Rng + ?Sized>(genome: &Genome, env: Environment, episodes: usize, rng: &mut R) -> Result<f64> {
    if episodes == 0 {
        return Err(TaskError::Invalid("at least one episode is required".into()).into());
    }
    check_wires(genome, env)?;
    let policy = CircuitPolicy::new(genome, env.n_actions())?;
    let mut total = 0.0;
    for _ in 0..episodes {
        total += episode_return(&policy, env, rng)?;
    }
    Ok(total / episodes as f64)
}
