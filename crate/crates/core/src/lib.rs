//! Neuroevolution of variational quantum circuits.
//!
//! A genome lists rotation and CNOT genes tagged with layer and innovation
//! numbers; populations are speciated and bred NEAT-style, either on a single
//! fitness or with NSGA-II over fitness and gate count. Circuits run on a small
//! dense statevector simulator.

pub mod error;
pub mod evolution;
pub mod genome;
pub mod moo;
pub mod qaoa;
pub mod runner;
pub mod seeding;
pub mod sim;
pub mod tasks;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolutionConfig, Population};
pub use genome::{Genome, InnovationRegistry};
pub use sim::{Gate, Observable, Statevector};
