//! Dense statevector simulator.
//!
//! Wire 0 is the most significant bit of a basis-state index, so the basis
//! state `|q0 q1 ... q(n-1)>` has index `q0 * 2^(n-1) + ... + q(n-1)`.
//! Bitstrings are printed with wire 0 first.
//!
//! The three-angle `Rot` gate is `Rz(θz) · Ry(θy) · Rx(θx)`: the x rotation
//! is applied first.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// Tolerance used for norm checks.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("wire {wire} out of range for {n_qubits} qubits")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("CNOT control and target are both wire {0}")]
    SameWire(usize),
}

/// Gates understood by the simulator. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// General rotation `Rz(angles[2]) · Ry(angles[1]) · Rx(angles[0])`.
    Rot { wire: usize, angles: [f64; 3] },
    Cnot { control: usize, target: usize },
    Rx { wire: usize, theta: f64 },
    Rz { wire: usize, theta: f64 },
    H { wire: usize },
}

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

fn ry_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz_matrix(theta: f64) -> Mat2 {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Matrix of the three-angle rotation, x applied first.
pub fn rot_matrix(angles: [f64; 3]) -> [[Complex64; 2]; 2] {
    let [tx, ty, tz] = angles;
    matmul(&rz_matrix(tz), &matmul(&ry_matrix(ty), &rx_matrix(tx)))
}

impl Gate {
    /// Wires the gate touches.
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Rot { wire, .. } | Gate::Rx { wire, .. } | Gate::Rz { wire, .. } | Gate::H { wire } => {
                vec![wire]
            }
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        for wire in self.wires() {
            if wire >= n_qubits {
                return Err(SimError::WireOutOfRange { wire, n_qubits });
            }
        }
        if let Gate::Cnot { control, target } = *self {
            if control == target {
                return Err(SimError::SameWire(control));
            }
        }
        Ok(())
    }

    fn single_qubit_matrix(&self) -> Option<(usize, Mat2)> {
        match *self {
            Gate::Rot { wire, angles } => Some((wire, rot_matrix(angles))),
            Gate::Rx { wire, theta } => Some((wire, rx_matrix(theta))),
            Gate::Rz { wire, theta } => Some((wire, rz_matrix(theta))),
            Gate::H { wire } => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Some((wire, [[h, h], [h, -h]]))
            }
            Gate::Cnot { .. } => None,
        }
    }
}

/// A measured basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bitstring {
    index: usize,
    n_bits: usize,
}

impl Bitstring {
    pub fn new(index: usize, n_bits: usize) -> Self {
        debug_assert!(n_bits == 0 || index < 1 << n_bits);
        Self { index, n_bits }
    }

    /// Basis-state index (wire 0 is the most significant bit).
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.n_bits
    }

    pub fn is_empty(&self) -> bool {
        self.n_bits == 0
    }

    /// Value of the bit measured on `wire`.
    pub fn bit(&self, wire: usize) -> bool {
        (self.index >> (self.n_bits - 1 - wire)) & 1 == 1
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for wire in 0..self.n_bits {
            f.write_str(if self.bit(wire) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One `coefficient · Z_{w1} Z_{w2} ...` term. An empty support is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub coefficient: f64,
    pub support: Vec<usize>,
}

/// Diagonal observable `offset + Σ terms`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub offset: f64,
    pub terms: Vec<ZTerm>,
}

impl Observable {
    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        for term in &self.terms {
            for &wire in &term.support {
                if wire >= n_qubits {
                    return Err(SimError::WireOutOfRange { wire, n_qubits });
                }
            }
        }
        Ok(())
    }

    /// Eigenvalue of the observable on a computational basis state.
    pub fn eigenvalue(&self, basis_index: usize, n_qubits: usize) -> f64 {
        self.terms.iter().fold(self.offset, |acc, term| {
            let mask = support_mask(&term.support, n_qubits);
            let parity = (basis_index & mask).count_ones() & 1;
            acc + if parity == 0 { term.coefficient } else { -term.coefficient }
        })
    }
}

fn support_mask(support: &[usize], n_qubits: usize) -> usize {
    support.iter().fold(0, |m, &w| m ^ (1 << (n_qubits - 1 - w)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` wires.
    pub fn new(n_qubits: usize) -> Result<Self, SimError> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(SimError::QubitCount(n_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Builds a state from raw amplitudes, renormalizing them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::QubitCount(0));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(SimError::QubitCount(n_qubits));
        }
        let mut state = Self { n_qubits, amplitudes };
        let norm = state.norm();
        if norm > 0.0 {
            state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
        Ok(state)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        let mut state = Self::new(n_qubits)?;
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.n_qubits)?;
        match gate.single_qubit_matrix() {
            Some((wire, m)) => self.apply_single(wire, &m),
            None => {
                if let Gate::Cnot { control, target } = *gate {
                    self.apply_cnot(control, target);
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<(), SimError> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    /// Value-style application: consumes the state and returns the result.
    pub fn applied(mut self, gate: &Gate) -> Result<Self, SimError> {
        self.apply(gate)?;
        Ok(self)
    }

    fn bit_of(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    fn apply_single(&mut self, wire: usize, m: &Mat2) {
        let bit = self.bit_of(wire);
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let j = i | bit;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = self.bit_of(control);
        let tbit = self.bit_of(target);
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    /// `<Z_wire>`.
    pub fn expectation_z(&self, wire: usize) -> Result<f64, SimError> {
        if wire >= self.n_qubits {
            return Err(SimError::WireOutOfRange { wire, n_qubits: self.n_qubits });
        }
        let bit = self.bit_of(wire);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// Exact expectation of a diagonal observable.
    pub fn expectation(&self, observable: &Observable) -> Result<f64, SimError> {
        observable.validate(self.n_qubits)?;
        let masks: Vec<(f64, usize)> = observable
            .terms
            .iter()
            .map(|t| (t.coefficient, support_mask(&t.support, self.n_qubits)))
            .collect();
        let mut total = observable.offset * self.norm().powi(2);
        for &(coefficient, mask) in &masks {
            let z: f64 = self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if (i & mask).count_ones() & 1 == 0 {
                        a.norm_sqr()
                    } else {
                        -a.norm_sqr()
                    }
                })
                .sum();
            total += coefficient * z;
        }
        Ok(total)
    }

    /// Draws one bitstring from the Born distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Bitstring {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                acc += p;
                last_nonzero = i;
                if r < acc {
                    return Bitstring::new(i, self.n_qubits);
                }
            }
        }
        // rounding left r above the accumulated mass
        Bitstring::new(last_nonzero, self.n_qubits)
    }

    /// Draws `count` bitstrings, building the cumulative table once.
    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Bitstring> {
        let mut cdf = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        (0..count)
            .map(|_| {
                let r: f64 = rng.random::<f64>() * total;
                // first entry whose cumulative mass exceeds r; it always has nonzero mass
                let mut idx = cdf.partition_point(|&c| c <= r);
                if idx >= cdf.len() {
                    idx = (0..cdf.len()).rev().find(|&i| self.amplitudes[i].norm_sqr() > 0.0).unwrap_or(0);
                }
                Bitstring::new(idx, self.n_qubits)
            })
            .collect()
    }
}
