//! QAOA baseline for MaxCut, trained by finite-difference gradient ascent.
//!
//! Layer `k` applies `exp(-iγ_k ½(1 - Z_u Z_v))` for every edge, built as
//! `CNOT(u,v) · RZ(-γ_k)_v · CNOT(u,v)` (equal up to a global phase),
//! followed by the mixer `RX(2β_k) = exp(-iβ_k X)` on every wire.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Gate, Statevector};
use crate::tasks::Graph;

/// Step of the central differences in [`qaoa_gradient`].
pub const FD_STEP: f64 = 1e-4;
pub const DEFAULT_LEARNING_RATE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let params = Self { gammas, betas };
        params.validate()?;
        Ok(params)
    }

    /// Linear ramp from mixer-dominated to cost-dominated layers.
    pub fn ramp(p: usize) -> Result<Self> {
        let t = |k: usize| (k as f64 + 0.5) / p as f64;
        Self::new((0..p).map(|k| 0.8 * t(k)).collect(), (0..p).map(|k| 0.4 * (1.0 - t(k))).collect())
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.gammas.len() != self.betas.len() {
            return Err(Error::Config(format!(
                "QAOA needs p >= 1 equal-length angle lists, got {} gammas and {} betas",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        Ok(())
    }

    /// Gammas followed by betas.
    pub fn to_vec(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    fn from_slice(values: &[f64]) -> Self {
        let p = values.len() / 2;
        Self { gammas: values[..p].to_vec(), betas: values[p..].to_vec() }
    }
}

/// Gates per layer: three per edge and one mixer per node. The initial
/// Hadamards are not counted.
pub fn qaoa_gate_count(graph: &Graph, p: usize) -> usize {
    p * (3 * graph.edges().len() + graph.n_nodes())
}

/// Full gate list including the initial Hadamard layer.
pub fn qaoa_circuit(graph: &Graph, params: &QaoaParams) -> Result<Vec<Gate>> {
    params.validate()?;
    let n = graph.n_nodes();
    let mut gates: Vec<Gate> = (0..n).map(|wire| Gate::H { wire }).collect();
    for (gamma, beta) in params.gammas.iter().zip(&params.betas) {
        for &(u, v) in graph.edges() {
            gates.push(Gate::Cnot { control: u, target: v });
            gates.push(Gate::Rz { wire: v, theta: -gamma });
            gates.push(Gate::Cnot { control: u, target: v });
        }
        gates.extend((0..n).map(|wire| Gate::Rx { wire, theta: 2.0 * beta }));
    }
    Ok(gates)
}

pub fn qaoa_state(graph: &Graph, params: &QaoaParams) -> Result<Statevector> {
    let mut state = Statevector::new(graph.n_nodes())?;
    state.apply_all(&qaoa_circuit(graph, params)?)?;
    Ok(state)
}

/// `<H_C>` of the QAOA state.
pub fn qaoa_expectation(graph: &Graph, params: &QaoaParams) -> Result<f64> {
    Ok(qaoa_state(graph, params)?.expectation(&graph.observable())?)
}

/// Central-difference gradient of `<H_C>`, gammas first then betas.
pub fn qaoa_gradient(graph: &Graph, params: &QaoaParams) -> Result<Vec<f64>> {
    qaoa_gradient_with_step(graph, params, FD_STEP)
}

pub fn qaoa_gradient_with_step(graph: &Graph, params: &QaoaParams, step: f64) -> Result<Vec<f64>> {
    params.validate()?;
    let x = params.to_vec();
    (0..x.len())
        .map(|i| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += step;
            minus[i] -= step;
            let hi = qaoa_expectation(graph, &QaoaParams::from_slice(&plus))?;
            let lo = qaoa_expectation(graph, &QaoaParams::from_slice(&minus))?;
            Ok((hi - lo) / (2.0 * step))
        })
        .collect()
}

/// A finished training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaRun {
    pub params: QaoaParams,
    /// `<H_C>` after each epoch.
    pub history: Vec<f64>,
    pub initial_expectation: f64,
    pub gate_count: usize,
    /// Circuit evaluations after each epoch, gradient probes included.
    pub evaluations: Vec<u64>,
}

impl QaoaRun {
    pub fn final_expectation(&self) -> f64 {
        self.history.last().copied().unwrap_or(self.initial_expectation)
    }
}

/// Plain gradient ascent on `<H_C>` from the ramp initialisation.
pub fn qaoa_optimize(graph: &Graph, p: usize, learning_rate: f64, epochs: usize) -> Result<QaoaRun> {
    qaoa_optimize_from(graph, QaoaParams::ramp(p)?, learning_rate, epochs)
}

pub fn qaoa_optimize_from(graph: &Graph, init: QaoaParams, learning_rate: f64, epochs: usize) -> Result<QaoaRun> {
    qaoa_optimize_observed(graph, init, learning_rate, epochs, |_| Ok(()))
}

/// State of training after one update.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaEpoch<'a> {
    pub epoch: usize,
    pub params: &'a QaoaParams,
    pub expectation: f64,
    /// Circuit evaluations so far, gradient probes included.
    pub evaluations: u64,
}

/// As [`qaoa_optimize_from`], calling `observe` after every update.
pub fn qaoa_optimize_observed<O>(
    graph: &Graph,
    init: QaoaParams,
    learning_rate: f64,
    epochs: usize,
    mut observe: O,
) -> Result<QaoaRun>
where
    O: FnMut(&QaoaEpoch<'_>) -> Result<()>,
{
    if epochs == 0 {
        return Err(Error::Config("QAOA needs at least one epoch".into()));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::Config(format!("learning rate {learning_rate} must be positive")));
    }
    init.validate()?;
    let per_epoch = 4 * init.p() as u64 + 1;
    let initial_expectation = qaoa_expectation(graph, &init)?;
    let mut x = init.to_vec();
    let mut history = Vec::with_capacity(epochs);
    let mut evaluations = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let grad = qaoa_gradient(graph, &QaoaParams::from_slice(&x))?;
        for (xi, g) in x.iter_mut().zip(grad) {
            *xi += learning_rate * g;
        }
        let value = qaoa_expectation(graph, &QaoaParams::from_slice(&x))?;
        if !value.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fitness(format!("QAOA diverged at epoch {epoch}")));
        }
        let evals = 1 + per_epoch * (epoch as u64 + 1);
        history.push(value);
        evaluations.push(evals);
        observe(&QaoaEpoch { epoch, params: &QaoaParams::from_slice(&x), expectation: value, evaluations: evals })?;
    }
    Ok(QaoaRun {
        gate_count: qaoa_gate_count(graph, init.p()),
        params: QaoaParams::from_slice(&x),
        history,
        initial_expectation,
        evaluations,
    })
}
