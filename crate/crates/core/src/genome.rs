//! Genetic encoding of a constrained-architecture circuit.
//!
//! A circuit is a stack of layers. Each layer holds at most one rotation per
//! wire, followed by CNOTs that always connect wire `w` to `(w + 1) mod m`.
//! A gene is therefore fully identified by its type and its `(layer, wire)`
//! slot. Layers are numbered from 1, wires from 0.
//!
//! Innovation numbers are minted per `(layer, wire)` slot and shared by the
//! two gene types, so the rotation and the CNOT sitting in the same slot carry
//! the same number. The two gene lists are always aligned separately.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Gate;

pub type Innovation = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenomeError {
    #[error("genomes have different wire counts ({0} vs {1})")]
    WireMismatch(usize, usize),
    #[error("invalid genome: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotGene {
    pub layer: u32,
    pub wire: usize,
    pub angles: [f64; 3],
    pub innovation: Innovation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CnotGene {
    pub layer: u32,
    pub wire_from: usize,
    pub innovation: Innovation,
}

impl CnotGene {
    /// Target wire, always the next wire around the ring.
    pub fn wire_to(&self, n_wires: usize) -> usize {
        (self.wire_from + 1) % n_wires
    }
}

trait Gene: Copy {
    fn innovation(&self) -> Innovation;
    fn slot(&self) -> (u32, usize);
}

impl Gene for RotGene {
    fn innovation(&self) -> Innovation {
        self.innovation
    }
    fn slot(&self) -> (u32, usize) {
        (self.layer, self.wire)
    }
}

impl Gene for CnotGene {
    fn innovation(&self) -> Innovation {
        self.innovation
    }
    fn slot(&self) -> (u32, usize) {
        (self.layer, self.wire_from)
    }
}

/// Maps `(layer, wire)` slots to innovation numbers.
///
/// Lookups are stable: asking for a known slot never mints a new number.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegistryRecord", into = "RegistryRecord")]
pub struct InnovationRegistry {
    slots: BTreeMap<(u32, usize), Innovation>,
    next: Innovation,
}

impl InnovationRegistry {
    pub fn new() -> Self {
        Self { slots: BTreeMap::new(), next: 1 }
    }

    /// Innovation number for a slot, minting one on first use.
    pub fn innovation(&mut self, layer: u32, wire: usize) -> Innovation {
        if self.next == 0 {
            self.next = 1;
        }
        let next = &mut self.next;
        *self.slots.entry((layer, wire)).or_insert_with(|| {
            let n = *next;
            *next += 1;
            n
        })
    }

    /// Existing number for a slot, if any.
    pub fn get(&self, layer: u32, wire: usize) -> Option<Innovation> {
        self.slots.get(&(layer, wire)).copied()
    }

    pub fn next_innovation(&self) -> Innovation {
        self.next.max(1)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryRecord {
    next_innovation: Innovation,
    /// `(layer, wire, innovation)` triples.
    slots: Vec<(u32, usize, Innovation)>,
}

impl From<InnovationRegistry> for RegistryRecord {
    fn from(r: InnovationRegistry) -> Self {
        Self {
            next_innovation: r.next_innovation(),
            slots: r.slots.iter().map(|(&(l, w), &i)| (l, w, i)).collect(),
        }
    }
}

impl TryFrom<RegistryRecord> for InnovationRegistry {
    type Error = GenomeError;

    fn try_from(rec: RegistryRecord) -> Result<Self, Self::Error> {
        let mut slots = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (l, w, i) in rec.slots {
            if i == 0 || i >= rec.next_innovation || !seen.insert(i) || slots.insert((l, w), i).is_some() {
                return Err(GenomeError::Invalid(format!("bad registry entry ({l}, {w}) -> {i}")));
            }
        }
        Ok(Self { slots, next: rec.next_innovation })
    }
}

/// One layer of a reconstructed circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLayer {
    pub layer: u32,
    /// `(wire, angles)` pairs.
    pub rots: Vec<(usize, [f64; 3])>,
    /// `(control, target)` pairs.
    pub cnots: Vec<(usize, usize)>,
}

impl CircuitLayer {
    fn new(layer: u32) -> Self {
        Self { layer, rots: Vec::new(), cnots: Vec::new() }
    }
}

/// Coefficients of the compatibility distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceCoefficients {
    /// Weight of excess genes.
    pub c1: f64,
    /// Weight of disjoint genes.
    pub c2: f64,
    /// Weight of the mean angle distance of matching rotations.
    pub c3: f64,
}

impl Default for DistanceCoefficients {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GenomeRecord", into = "GenomeRecord")]
pub struct Genome {
    n_wires: usize,
    rot_genes: Vec<RotGene>,
    cnot_genes: Vec<CnotGene>,
}

impl Genome {
    pub fn empty(n_wires: usize) -> Self {
        Self { n_wires, rot_genes: Vec::new(), cnot_genes: Vec::new() }
    }

    /// Builds a genome from gene lists, sorting them by innovation and
    /// checking the layout rules.
    pub fn new(n_wires: usize, mut rot_genes: Vec<RotGene>, mut cnot_genes: Vec<CnotGene>) -> Result<Self, GenomeError> {
        rot_genes.sort_by_key(|g| g.innovation);
        cnot_genes.sort_by_key(|g| g.innovation);
        let genome = Self { n_wires, rot_genes, cnot_genes };
        genome.validate()?;
        Ok(genome)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.n_wires == 0 {
            return Err(GenomeError::Invalid("zero wires".into()));
        }
        if !self.cnot_genes.is_empty() && self.n_wires < 2 {
            return Err(GenomeError::Invalid("CNOT genes need at least two wires".into()));
        }
        check_list(&self.rot_genes, self.n_wires, "ROT")?;
        check_list(&self.cnot_genes, self.n_wires, "CNOT")?;
        if self.rot_genes.iter().flat_map(|g| g.angles).any(|a| !a.is_finite()) {
            return Err(GenomeError::Invalid("non-finite angle".into()));
        }
        Ok(())
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn rot_genes(&self) -> &[RotGene] {
        &self.rot_genes
    }

    pub fn cnot_genes(&self) -> &[CnotGene] {
        &self.cnot_genes
    }

    pub fn rot_count(&self) -> usize {
        self.rot_genes.len()
    }

    pub fn cnot_count(&self) -> usize {
        self.cnot_genes.len()
    }

    pub fn gate_count(&self) -> usize {
        self.rot_genes.len() + self.cnot_genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gate_count() == 0
    }

    /// Deepest layer holding any gene, 0 for the empty genome.
    pub fn depth(&self) -> u32 {
        let rot = self.rot_genes.iter().map(|g| g.layer).max().unwrap_or(0);
        let cnot = self.cnot_genes.iter().map(|g| g.layer).max().unwrap_or(0);
        rot.max(cnot)
    }

    /// Non-empty layers in ascending order, each with its rotations sorted by
    /// wire and its CNOTs sorted by control wire.
    pub fn layers(&self) -> Vec<CircuitLayer> {
        let mut by_layer: BTreeMap<u32, CircuitLayer> = BTreeMap::new();
        for g in &self.rot_genes {
            by_layer.entry(g.layer).or_insert_with(|| CircuitLayer::new(g.layer)).rots.push((g.wire, g.angles));
        }
        for g in &self.cnot_genes {
            by_layer
                .entry(g.layer)
                .or_insert_with(|| CircuitLayer::new(g.layer))
                .cnots
                .push((g.wire_from, g.wire_to(self.n_wires)));
        }
        by_layer
            .into_values()
            .map(|mut l| {
                l.rots.sort_by_key(|r| r.0);
                l.cnots.sort_by_key(|c| c.0);
                l
            })
            .collect()
    }

    /// Gate sequence of the circuit: layer by layer, rotations by wire and
    /// then CNOTs by control wire.
    pub fn reconstruct_circuit(&self) -> Vec<Gate> {
        let mut gates = Vec::with_capacity(self.gate_count());
        for layer in self.layers() {
            gates.extend(layer.rots.iter().map(|&(wire, angles)| Gate::Rot { wire, angles }));
            gates.extend(layer.cnots.iter().map(|&(control, target)| Gate::Cnot { control, target }));
        }
        gates
    }

    /// `i_layers` full layers with random angles.
    pub fn init<R: Rng + ?Sized>(
        i_layers: u32,
        n_wires: usize,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> Self {
        let mut rot_genes = Vec::new();
        let mut cnot_genes = Vec::new();
        for layer in 1..=i_layers {
            for wire in 0..n_wires {
                rot_genes.push(RotGene {
                    layer,
                    wire,
                    angles: random_angles(rng),
                    innovation: registry.innovation(layer, wire),
                });
            }
            if n_wires >= 2 {
                for wire_from in 0..n_wires {
                    cnot_genes.push(CnotGene { layer, wire_from, innovation: registry.innovation(layer, wire_from) });
                }
            }
        }
        rot_genes.sort_by_key(|g| g.innovation);
        cnot_genes.sort_by_key(|g| g.innovation);
        Self { n_wires, rot_genes, cnot_genes }
    }

    /// NEAT crossover, run separately on the rotation and the CNOT lists.
    ///
    /// Matching genes come from either parent with probability ½. Genes
    /// present in only one parent are taken from the strictly fitter parent;
    /// on a tie each of them is kept with probability ½.
    pub fn crossover<R: Rng + ?Sized>(
        a: &Genome,
        b: &Genome,
        fitness_a: f64,
        fitness_b: f64,
        rng: &mut R,
    ) -> Result<Genome, GenomeError> {
        if a.n_wires != b.n_wires {
            return Err(GenomeError::WireMismatch(a.n_wires, b.n_wires));
        }
        let bias = if fitness_a > fitness_b {
            Fitter::A
        } else if fitness_b > fitness_a {
            Fitter::B
        } else {
            Fitter::Tie
        };
        Ok(Genome {
            n_wires: a.n_wires,
            rot_genes: cross_lists(&a.rot_genes, &b.rot_genes, bias, rng),
            cnot_genes: cross_lists(&a.cnot_genes, &b.cnot_genes, bias, rng),
        })
    }

    /// Perturbs each rotation with probability `p_w` by adding independent
    /// `Normal(0, sigma)` noise to its three angles.
    pub fn mutate_weights<R: Rng + ?Sized>(&self, sigma: f64, p_w: f64, rng: &mut R) -> Genome {
        let mut out = self.clone();
        for gene in &mut out.rot_genes {
            if rng.random_bool(p_w.clamp(0.0, 1.0)) {
                for angle in &mut gene.angles {
                    let z: f64 = rng.sample(StandardNormal);
                    *angle += sigma * z;
                }
            }
        }
        out
    }

    /// Adds one rotation in a uniformly chosen free slot.
    pub fn mutate_add_rot<R: Rng + ?Sized>(&self, registry: &mut InnovationRegistry, rng: &mut R) -> Genome {
        let occupied: BTreeSet<_> = self.rot_genes.iter().map(Gene::slot).collect();
        let (layer, wire) = pick_free_slot(&occupied, self.depth(), self.n_wires, rng);
        let mut out = self.clone();
        let gene = RotGene { layer, wire, angles: random_angles(rng), innovation: registry.innovation(layer, wire) };
        insert_sorted(&mut out.rot_genes, gene);
        out
    }

    /// Adds one CNOT in a uniformly chosen free slot. Single-wire genomes
    /// cannot hold CNOTs and are returned unchanged.
    pub fn mutate_add_cnot<R: Rng + ?Sized>(&self, registry: &mut InnovationRegistry, rng: &mut R) -> Genome {
        if self.n_wires < 2 {
            return self.clone();
        }
        let occupied: BTreeSet<_> = self.cnot_genes.iter().map(Gene::slot).collect();
        let (layer, wire_from) = pick_free_slot(&occupied, self.depth(), self.n_wires, rng);
        let mut out = self.clone();
        let gene = CnotGene { layer, wire_from, innovation: registry.innovation(layer, wire_from) };
        insert_sorted(&mut out.cnot_genes, gene);
        out
    }

    /// Compatibility distance `c1·E/N + c2·D/N + c3·W̄`.
    pub fn compatibility_distance(a: &Genome, b: &Genome, coeffs: DistanceCoefficients) -> f64 {
        let rot = align(&a.rot_genes, &b.rot_genes);
        let cnot = align(&a.cnot_genes, &b.cnot_genes);
        let excess = (rot.excess + cnot.excess) as f64;
        let disjoint = (rot.disjoint + cnot.disjoint) as f64;
        let n = a.gate_count().max(b.gate_count()).max(1) as f64;

        let mut total = 0.0;
        for &(i, j) in &rot.matches {
            let (x, y) = (a.rot_genes[i].angles, b.rot_genes[j].angles);
            total += x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        }
        let mean_angle = if rot.matches.is_empty() { 0.0 } else { total / rot.matches.len() as f64 };

        coeffs.c1 * excess / n + coeffs.c2 * disjoint / n + coeffs.c3 * mean_angle
    }
}

fn check_list<G: Gene>(genes: &[G], n_wires: usize, kind: &str) -> Result<(), GenomeError> {
    let mut slots = BTreeSet::new();
    for pair in genes.windows(2) {
        if pair[0].innovation() >= pair[1].innovation() {
            return Err(GenomeError::Invalid(format!("{kind} innovations not strictly increasing")));
        }
    }
    for g in genes {
        let (layer, wire) = g.slot();
        if layer == 0 || wire >= n_wires || g.innovation() == 0 {
            return Err(GenomeError::Invalid(format!("{kind} gene at ({layer}, {wire}) out of layout")));
        }
        if !slots.insert((layer, wire)) {
            return Err(GenomeError::Invalid(format!("duplicate {kind} gene at ({layer}, {wire})")));
        }
    }
    Ok(())
}

fn random_angles<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)]
}

fn pick_free_slot<R: Rng + ?Sized>(
    occupied: &BTreeSet<(u32, usize)>,
    depth: u32,
    n_wires: usize,
    rng: &mut R,
) -> (u32, usize) {
    let free: Vec<(u32, usize)> = (1..=depth + 1)
        .flat_map(|l| (0..n_wires).map(move |w| (l, w)))
        .filter(|s| !occupied.contains(s))
        .collect();
    free[rng.random_range(0..free.len())]
}

fn insert_sorted<G: Gene>(genes: &mut Vec<G>, gene: G) {
    let pos = genes.partition_point(|g| g.innovation() < gene.innovation());
    genes.insert(pos, gene);
}

#[derive(Clone, Copy)]
enum Fitter {
    A,
    B,
    Tie,
}

fn cross_lists<G: Gene, R: Rng + ?Sized>(a: &[G], b: &[G], bias: Fitter, rng: &mut R) -> Vec<G> {
    let mut child = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.innovation().cmp(&y.innovation()),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => unreachable!(),
        };
        match ord {
            std::cmp::Ordering::Equal => {
                child.push(if rng.random_bool(0.5) { a[i] } else { b[j] });
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                if keep_unmatched(bias, true, rng) {
                    child.push(a[i]);
                }
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if keep_unmatched(bias, false, rng) {
                    child.push(b[j]);
                }
                j += 1;
            }
        }
    }
    child
}

fn keep_unmatched<R: Rng + ?Sized>(bias: Fitter, from_a: bool, rng: &mut R) -> bool {
    match bias {
        Fitter::A => from_a,
        Fitter::B => !from_a,
        Fitter::Tie => rng.random_bool(0.5),
    }
}

struct Alignment {
    excess: usize,
    disjoint: usize,
    matches: Vec<(usize, usize)>,
}

fn align<G: Gene>(a: &[G], b: &[G]) -> Alignment {
    let max_a = a.last().map_or(0, Gene::innovation);
    let max_b = b.last().map_or(0, Gene::innovation);
    let mut out = Alignment { excess: 0, disjoint: 0, matches: Vec::new() };
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.innovation() == y.innovation() => {
                out.matches.push((i, j));
                i += 1;
                j += 1;
            }
            (Some(x), y) if y.is_none_or(|y| x.innovation() < y.innovation()) => {
                if x.innovation() > max_b {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                i += 1;
            }
            (_, Some(y)) => {
                if y.innovation() > max_a {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                j += 1;
            }
            _ => unreachable!(),
        }
    }
    out
}

/// On-disk form of a genome: one table per gate type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenomeRecord {
    pub n_wires: usize,
    pub rot: Vec<RotGene>,
    pub cnot: Vec<CnotRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnotRecord {
    pub layer: u32,
    pub wire_from: usize,
    /// Redundant with `wire_from`; checked on load.
    pub wire_to: usize,
    pub innovation: Innovation,
}

impl From<Genome> for GenomeRecord {
    fn from(g: Genome) -> Self {
        let n = g.n_wires;
        Self {
            n_wires: n,
            rot: g.rot_genes,
            cnot: g
                .cnot_genes
                .iter()
                .map(|c| CnotRecord {
                    layer: c.layer,
                    wire_from: c.wire_from,
                    wire_to: c.wire_to(n),
                    innovation: c.innovation,
                })
                .collect(),
        }
    }
}

impl TryFrom<GenomeRecord> for Genome {
    type Error = GenomeError;

    fn try_from(rec: GenomeRecord) -> Result<Self, Self::Error> {
        let n = rec.n_wires;
        let mut cnots = Vec::with_capacity(rec.cnot.len());
        for c in rec.cnot {
            if n == 0 || c.wire_to != (c.wire_from + 1) % n {
                return Err(GenomeError::Invalid(format!(
                    "CNOT {} -> {} does not follow the ring layout",
                    c.wire_from, c.wire_to
                )));
            }
            cnots.push(CnotGene { layer: c.layer, wire_from: c.wire_from, innovation: c.innovation });
        }
        Genome::new(n, rec.rot, cnots)
    }
}
