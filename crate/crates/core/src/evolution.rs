//! Speciated population management and the generational loop.
//!
//! One generation is: evaluate every pending agent, split the population
//! into species by compatibility distance, allocate offspring to each
//! species in proportion to its summed fitness, and breed the next
//! population inside each species.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{DistanceCoefficients, Genome, InnovationRegistry};
use crate::seeding::{substream, Stream, TaskRng};

/// A fitness function over genomes. Higher is better.
pub trait Fitness: Sync {
    fn evaluate(&self, genome: &Genome, rng: &mut TaskRng) -> Result<f64>;
}

impl<F> Fitness for F
where
    F: Fn(&Genome, &mut TaskRng) -> Result<f64> + Sync,
{
    fn evaluate(&self, genome: &Genome, rng: &mut TaskRng) -> Result<f64> {
        self(genome, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    /// Number of generations `N_g`.
    pub generations: usize,
    /// Population size `N`.
    pub population_size: usize,
    /// Standard deviation of angle perturbations.
    pub sigma: f64,
    /// Per-rotation probability of an angle perturbation.
    pub p_weight: f64,
    /// Per-child probability of adding a rotation.
    pub p_add_rot: f64,
    /// Per-child probability of adding a CNOT.
    pub p_add_cnot: f64,
    /// Compatibility threshold `δ0`.
    pub compatibility_threshold: f64,
    /// Number of full layers in the initial circuits.
    pub initial_layers: u32,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Fraction of each species kept as parents.
    pub survival_fraction: f64,
    /// Copy each species' champion unchanged into its offspring.
    pub elitism: bool,
    /// Episodes averaged per fitness evaluation on RL tasks.
    pub episodes_per_eval: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self::reinforcement_learning()
    }
}

impl EvolutionConfig {
    /// Hyperparameters used for CartPole and FrozenLake.
    pub fn reinforcement_learning() -> Self {
        Self {
            generations: 50,
            population_size: 150,
            sigma: 0.01,
            p_weight: 0.3,
            p_add_rot: 0.5,
            p_add_cnot: 0.5,
            compatibility_threshold: 1.0,
            initial_layers: 0,
            c1: 1.0,
            c2: 1.0,
            c3: 0.4,
            survival_fraction: 0.2,
            elitism: true,
            episodes_per_eval: 3,
            seed: 0,
        }
    }

    /// Hyperparameters used for MaxCut.
    pub fn maxcut() -> Self {
        Self {
            generations: 100,
            population_size: 200,
            p_weight: 0.6,
            p_add_rot: 0.3,
            p_add_cnot: 0.3,
            compatibility_threshold: 0.45,
            initial_layers: 2,
            ..Self::reinforcement_learning()
        }
    }

    pub fn distance(&self) -> DistanceCoefficients {
        DistanceCoefficients { c1: self.c1, c2: self.c2, c3: self.c3 }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p_weight", self.p_weight)?;
        prob("p_add_rot", self.p_add_rot)?;
        prob("p_add_cnot", self.p_add_cnot)?;
        if self.population_size < 2 {
            return Err(Error::Config(format!("population_size = {} must be at least 2", self.population_size)));
        }
        if self.compatibility_threshold.is_nan() || self.compatibility_threshold <= 0.0 {
            return Err(Error::Config("compatibility_threshold must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if !(self.survival_fraction > 0.0 && self.survival_fraction <= 1.0) {
            return Err(Error::Config("survival_fraction must be in (0, 1]".into()));
        }
        if self.episodes_per_eval == 0 {
            return Err(Error::Config("episodes_per_eval must be at least 1".into()));
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite nonnegative number")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u64,
    pub genome: Genome,
    pub fitness: Option<f64>,
    /// Fitter parent, or the elite this agent was copied from.
    pub parent: Option<u64>,
}

impl Agent {
    pub fn new(id: u64, genome: Genome, parent: Option<u64>) -> Self {
        Self { id, genome, fitness: None, parent }
    }

    /// Fitness, treating an unevaluated agent as an error.
    pub fn score(&self) -> Result<f64> {
        self.fitness.ok_or_else(|| Error::Fitness(format!("agent {} has not been evaluated", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub members: Vec<Agent>,
    pub representative: Genome,
}

impl Species {
    /// Best member (highest fitness, earliest on ties).
    pub fn champion(&self) -> &Agent {
        best_of(&self.members).expect("species are never empty")
    }
}

/// Metrics of one generation, written as one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub best_fitness: f64,
    pub top5_mean: f64,
    pub pop_mean: f64,
    pub n_rot: usize,
    pub n_cnot: usize,
    pub n_gates: usize,
    pub n_species: usize,
    /// Sampled MaxCut accuracy of the generation's best agent.
    pub accuracy: Option<f64>,
    pub evals_cumulative: u64,
    pub seconds: Option<f64>,
    /// Nondomination front sizes (multi-objective runs only).
    pub front_sizes: Option<Vec<usize>>,
    /// Objective vector of the best agent (multi-objective runs only).
    pub best_objectives: Option<Vec<f64>>,
}

/// Highest-fitness agent, earliest in order on ties. Unevaluated agents are skipped.
pub fn best_of(agents: &[Agent]) -> Option<&Agent> {
    let mut best: Option<&Agent> = None;
    for a in agents {
        if let Some(f) = a.fitness {
            if best.is_none_or(|b| f > b.fitness.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(a);
            }
        }
    }
    best
}

/// Assigns each agent to the first species whose representative lies
/// strictly closer than `threshold`, founding a new species otherwise.
/// Representatives without members are dropped.
pub fn speciate(
    agents: &[Agent],
    representatives: &[Genome],
    threshold: f64,
    coeffs: DistanceCoefficients,
) -> Vec<Species> {
    let mut species: Vec<Species> = representatives
        .iter()
        .map(|r| Species { members: Vec::new(), representative: r.clone() })
        .collect();
    for agent in agents {
        let home = species
            .iter()
            .position(|s| Genome::compatibility_distance(&agent.genome, &s.representative, coeffs) < threshold);
        match home {
            Some(i) => species[i].members.push(agent.clone()),
            None => species.push(Species { members: vec![agent.clone()], representative: agent.genome.clone() }),
        }
    }
    species.retain(|s| !s.members.is_empty());
    species
}

/// Offspring counts per species, proportional to summed fitness over the
/// population mean and rounded by largest remainder so they sum to `total`.
///
/// Negative fitness values are shifted by the population minimum first. If
/// every (shifted) fitness is zero the counts follow species sizes.
pub fn allocate_offspring(species: &[Species], total: usize) -> Result<Vec<usize>> {
    let fitness: Vec<Vec<f64>> = species
        .iter()
        .map(|s| s.members.iter().map(Agent::score).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let all: Vec<f64> = fitness.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::Fitness("cannot allocate offspring for an empty population".into()));
    }
    if let Some(bad) = all.iter().find(|f| !f.is_finite()) {
        return Err(Error::Fitness(format!("non-finite fitness {bad}")));
    }
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let mean = all.iter().map(|f| f + shift).sum::<f64>() / all.len() as f64;
    let quotas: Vec<f64> = if mean > 0.0 {
        fitness.iter().map(|fs| fs.iter().map(|f| (f + shift) / mean).sum::<f64>()).collect()
    } else {
        fitness.iter().map(|fs| fs.len() as f64).collect()
    };
    // Rescale so the quotas sum to the requested total.
    let quota_sum: f64 = quotas.iter().sum();
    let scaled: Vec<f64> = quotas.iter().map(|q| q * total as f64 / quota_sum).collect();
    Ok(largest_remainder(&scaled, total))
}

fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned <= total {
        for &i in order.iter().cycle().take(total - assigned) {
            counts[i] += 1;
        }
    } else {
        // floating error pushed the floors past the total
        let mut excess = assigned - total;
        for &i in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}

/// Crossover followed by the mutation pipeline.
pub fn breed<R: Rng + ?Sized>(
    a: &Agent,
    b: &Agent,
    config: &EvolutionConfig,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> Result<Genome> {
    let child = Genome::crossover(&a.genome, &b.genome, a.score()?, b.score()?, rng)?;
    Ok(mutate(&child, config, registry, rng))
}

pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    config: &EvolutionConfig,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> Genome {
    let mut child = genome.mutate_weights(config.sigma, config.p_weight, rng);
    if rng.random_bool(config.p_add_rot) {
        child = child.mutate_add_rot(registry, rng);
    }
    if rng.random_bool(config.p_add_cnot) {
        child = child.mutate_add_cnot(registry, rng);
    }
    child
}

/// Breeds `count` children inside one species.
///
/// Members are ranked by fitness and the top `ceil(survival_fraction · n)`
/// (at least one) become parents. With elitism the champion is copied
/// unchanged into the first slot. Every other child comes from two parents
/// drawn uniformly with replacement.
pub fn reproduce<R: Rng + ?Sized>(
    species: &Species,
    count: usize,
    config: &EvolutionConfig,
    registry: &mut InnovationRegistry,
    next_id: &mut u64,
    rng: &mut R,
) -> Result<Vec<Agent>> {
    if species.members.is_empty() {
        return Err(Error::Fitness("cannot reproduce an empty species".into()));
    }
    let mut ranked: Vec<&Agent> = species.members.iter().collect();
    for a in &ranked {
        a.score()?;
    }
    ranked.sort_by(|a, b| b.fitness.unwrap().total_cmp(&a.fitness.unwrap()));
    let survivors = ((config.survival_fraction * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len());
    let parents = &ranked[..survivors];

    let mut children = Vec::with_capacity(count);
    let mut fresh_id = || {
        let id = *next_id;
        *next_id += 1;
        id
    };
    if config.elitism && count > 0 {
        let elite = parents[0];
        children.push(Agent::new(fresh_id(), elite.genome.clone(), Some(elite.id)));
    }
    while children.len() < count {
        let a = parents[rng.random_range(0..parents.len())];
        let b = parents[rng.random_range(0..parents.len())];
        let genome = breed(a, b, config, registry, rng)?;
        let primary = if b.fitness > a.fitness { b } else { a };
        children.push(Agent::new(fresh_id(), genome, Some(primary.id)));
    }
    Ok(children)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LineageEntry {
    generation: u64,
    fitness: Option<f64>,
    genome: Genome,
    parent: Option<u64>,
}

/// A genome recorded along the ancestry of an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub generation: u64,
    pub agent_id: u64,
    pub fitness: Option<f64>,
    pub genome: Genome,
}

/// The evolving population together with everything needed to continue a
/// run: innovation registry, species representatives and counters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub(crate) config: EvolutionConfig,
    pub(crate) n_wires: usize,
    pub(crate) generation: u64,
    pub(crate) agents: Vec<Agent>,
    pub(crate) registry: InnovationRegistry,
    pub(crate) representatives: Vec<Genome>,
    pub(crate) next_id: u64,
    pub(crate) evaluations: u64,
    pub(crate) best: Option<Agent>,
    #[serde(skip)]
    pub(crate) species: Vec<Species>,
    #[serde(skip)]
    lineage: BTreeMap<u64, LineageEntry>,
}

impl Population {
    /// `N` copies of one random genome with `initial_layers` full layers,
    /// each copy given its own perturbation of every angle.
    pub fn new(config: EvolutionConfig, n_wires: usize) -> Result<Self> {
        config.validate()?;
        if n_wires == 0 {
            return Err(Error::Config("circuits need at least one wire".into()));
        }
        let mut registry = InnovationRegistry::new();
        let mut rng = substream(config.seed, Stream::Init, 0, 0);
        let founder = Genome::init(config.initial_layers, n_wires, &mut registry, &mut rng);
        let agents = (0..config.population_size)
            .map(|i| {
                let mut rng = substream(config.seed, Stream::Init, 1, i as u64);
                Agent::new(i as u64, founder.mutate_weights(config.sigma, 1.0, &mut rng), None)
            })
            .collect();
        Ok(Self {
            n_wires,
            generation: 0,
            agents,
            registry,
            representatives: Vec::new(),
            next_id: config.population_size as u64,
            evaluations: 0,
            best: None,
            species: Vec::new(),
            lineage: BTreeMap::new(),
            config,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    /// Index of the current generation (0 for the initial population).
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn registry(&self) -> &InnovationRegistry {
        &self.registry
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Best agent ever evaluated.
    pub fn best_ever(&self) -> Option<&Agent> {
        self.best.as_ref()
    }

    /// Best agent of the current population.
    pub fn current_best(&self) -> Option<&Agent> {
        best_of(&self.agents)
    }

    /// Evaluates every agent that has no fitness yet. Each agent draws from
    /// its own substream, so the result does not depend on scheduling.
    pub fn evaluate<F: Fitness + ?Sized>(&mut self, fitness: &F) -> Result<()> {
        let generation = self.generation;
        let seed = self.config.seed;
        let pending: Vec<usize> = (0..self.agents.len()).filter(|&i| self.agents[i].fitness.is_none()).collect();
        let scores = evaluate_genomes(
            pending.iter().map(|&i| (i as u64, &self.agents[i].genome)).collect(),
            fitness,
            |idx| substream(seed, Stream::Evaluate, generation, idx),
        )?;
        for (&i, score) in pending.iter().zip(scores) {
            self.agents[i].fitness = Some(score);
        }
        self.evaluations += pending.len() as u64;
        for &i in &pending {
            let agent = self.agents[i].clone();
            self.note_evaluated(&agent);
        }
        Ok(())
    }

    /// Updates the best-ever agent and the ancestry table.
    pub(crate) fn note_evaluated(&mut self, agent: &Agent) {
        if let Some(f) = agent.fitness {
            if self.best.as_ref().is_none_or(|b| f > b.fitness.unwrap_or(f64::NEG_INFINITY)) {
                self.best = Some(agent.clone());
            }
        }
        self.lineage.entry(agent.id).or_insert_with(|| LineageEntry {
            generation: self.generation,
            fitness: agent.fitness,
            genome: agent.genome.clone(),
            parent: agent.parent,
        });
    }

    /// Partitions the evaluated population into species and refreshes the
    /// representatives (each species' champion).
    pub fn speciate(&mut self) {
        self.species = speciate(
            &self.agents,
            &self.representatives,
            self.config.compatibility_threshold,
            self.config.distance(),
        );
        self.representatives = self.species.iter().map(|s| s.champion().genome.clone()).collect();
    }

    /// Evaluates pending agents, speciates and summarizes the generation.
    pub fn run_generation<F: Fitness + ?Sized>(&mut self, fitness: &F) -> Result<GenerationRecord> {
        self.evaluate(fitness)?;
        self.speciate();
        self.record()
    }

    pub fn record(&self) -> Result<GenerationRecord> {
        let mut scores: Vec<f64> = self.agents.iter().map(Agent::score).collect::<Result<_>>()?;
        let best = self.current_best().ok_or_else(|| Error::Fitness("empty population".into()))?;
        let pop_mean = scores.iter().sum::<f64>() / scores.len() as f64;
        scores.sort_by(|a, b| b.total_cmp(a));
        let top = &scores[..scores.len().min(5)];
        Ok(GenerationRecord {
            generation: self.generation,
            best_fitness: best.score()?,
            top5_mean: top.iter().sum::<f64>() / top.len() as f64,
            pop_mean,
            n_rot: best.genome.rot_count(),
            n_cnot: best.genome.cnot_count(),
            n_gates: best.genome.gate_count(),
            n_species: self.species.len(),
            accuracy: None,
            evals_cumulative: self.evaluations,
            seconds: None,
            front_sizes: None,
            best_objectives: None,
        })
    }

    /// Replaces the population with the offspring of the current species.
    pub fn advance(&mut self) -> Result<()> {
        if self.species.is_empty() {
            self.speciate();
        }
        let counts = allocate_offspring(&self.species, self.config.population_size)?;
        let mut next = Vec::with_capacity(self.config.population_size);
        for (j, (species, &count)) in self.species.iter().zip(&counts).enumerate() {
            let mut rng = substream(self.config.seed, Stream::Reproduce, self.generation, j as u64);
            next.extend(reproduce(species, count, &self.config, &mut self.registry, &mut self.next_id, &mut rng)?);
        }
        self.agents = next;
        self.species.clear();
        self.generation += 1;
        Ok(())
    }

    /// Ancestry of an agent, oldest generation first, following fitter
    /// parents and elite copies back to the initial population.
    pub fn lineage(&self, agent_id: u64) -> Vec<TraceStep> {
        let mut steps = Vec::new();
        let mut cursor = Some(agent_id);
        while let Some(id) = cursor {
            let Some(entry) = self.lineage.get(&id) else { break };
            steps.push(TraceStep {
                generation: entry.generation,
                agent_id: id,
                fitness: entry.fitness,
                genome: entry.genome.clone(),
            });
            cursor = entry.parent;
        }
        steps.reverse();
        steps
    }
}

/// Scores `(stream index, genome)` pairs, in parallel when enabled.
pub(crate) fn evaluate_genomes<F, S>(jobs: Vec<(u64, &Genome)>, fitness: &F, rng_for: S) -> Result<Vec<f64>>
where
    F: Fitness + ?Sized,
    S: Fn(u64) -> TaskRng + Sync,
{
    let run = |&(idx, genome): &(u64, &Genome)| -> Result<f64> {
        let mut rng = rng_for(idx);
        let score = fitness.evaluate(genome, &mut rng)?;
        if score.is_finite() {
            Ok(score)
        } else {
            Err(Error::Fitness(format!("non-finite fitness {score}")))
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: Agent,
    pub history: Vec<GenerationRecord>,
    pub population: Population,
}

/// Runs `generations` generations and returns the best agent ever seen.
pub fn evolve<F: Fitness + ?Sized>(config: &EvolutionConfig, n_wires: usize, fitness: &F) -> Result<EvolutionOutcome> {
    evolve_with(config, n_wires, fitness, |_, _| Ok(()))
}

/// As [`evolve`], calling `observe` once per generation after speciation.
/// The observer may fill in extra record fields such as accuracy.
pub fn evolve_with<F, O>(config: &EvolutionConfig, n_wires: usize, fitness: &F, observe: O) -> Result<EvolutionOutcome>
where
    F: Fitness + ?Sized,
    O: FnMut(&Population, &mut GenerationRecord) -> Result<()>,
{
    let population = Population::new(config.clone(), n_wires)?;
    continue_evolution(population, fitness, observe, |p, _| p.advance())
}

pub(crate) fn continue_evolution<F, O, A>(
    mut population: Population,
    fitness: &F,
    mut observe: O,
    mut advance: A,
) -> Result<EvolutionOutcome>
where
    F: Fitness + ?Sized,
    O: FnMut(&Population, &mut GenerationRecord) -> Result<()>,
    A: FnMut(&mut Population, &F) -> Result<()>,
{
    let mut history = Vec::new();
    let total = population.config.generations as u64;
    if total == 0 {
        population.evaluate(fitness)?;
    }
    while population.generation < total {
        let mut record = population.run_generation(fitness)?;
        observe(&population, &mut record)?;
        history.push(record);
        if population.generation + 1 < total {
            advance(&mut population, fitness)?;
        } else {
            break;
        }
    }
    let best = population
        .best_ever()
        .cloned()
        .ok_or_else(|| Error::Fitness("no agent was evaluated".into()))?;
    Ok(EvolutionOutcome { best, history, population })
}

/// Resumes a checkpointed population (saved between generations) until its
/// configured generation count.
pub fn resume<F: Fitness + ?Sized>(population: Population, fitness: &F) -> Result<EvolutionOutcome> {
    continue_evolution(population, fitness, |_, _| Ok(()), |p, _| p.advance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::RotGene;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent(id: u64, genome: Genome, fitness: f64) -> Agent {
        Agent { id, genome, fitness: Some(fitness), parent: None }
    }

    fn one_rot(angle: f64) -> Genome {
        Genome::new(2, vec![RotGene { layer: 1, wire: 0, angles: [angle, 0.0, 0.0], innovation: 1 }], vec![]).unwrap()
    }

    fn coeffs() -> DistanceCoefficients {
        DistanceCoefficients { c1: 1.0, c2: 1.0, c3: 1.0 }
    }

    #[test]
    fn identical_agents_share_one_species() {
        let agents: Vec<_> = (0..10).map(|i| agent(i, one_rot(0.5), 1.0)).collect();
        let s = speciate(&agents, &[], 0.1, coeffs());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].members.len(), 10);
    }

    #[test]
    fn threshold_is_strict() {
        // distance between the two is exactly 0.5 = c3 · 0.5
        let agents = vec![agent(0, one_rot(0.0), 1.0), agent(1, one_rot(0.5), 1.0)];
        assert_eq!(speciate(&agents, &[], 0.5, coeffs()).len(), 2);
        assert_eq!(speciate(&agents, &[], 0.5000001, coeffs()).len(), 1);
        assert_eq!(speciate(&agents, &[], f64::INFINITY, coeffs()).len(), 1);
    }

    #[test]
    fn speciation_is_a_partition_without_empty_species() {
        let agents: Vec<_> = (0..20).map(|i| agent(i, one_rot(i as f64 * 0.3), 1.0)).collect();
        let reps = vec![one_rot(100.0), one_rot(0.0)];
        let s = speciate(&agents, &reps, 1.0, coeffs());
        assert!(s.iter().all(|sp| !sp.members.is_empty()));
        let mut ids: Vec<u64> = s.iter().flat_map(|sp| sp.members.iter().map(|a| a.id)).collect();
        ids.sort();
        assert_eq!(ids, (0..20).collect::<Vec<_>>());
    }

    fn species_with(fitness: &[f64], start: u64) -> Species {
        let members: Vec<Agent> =
            fitness.iter().enumerate().map(|(i, &f)| agent(start + i as u64, Genome::empty(2), f)).collect();
        Species { representative: members[0].genome.clone(), members }
    }

    #[test]
    fn allocation_examples() {
        let one = vec![species_with(&[3.0, 1.0, 2.0], 0)];
        assert_eq!(allocate_offspring(&one, 7).unwrap(), vec![7]);

        let two = vec![species_with(&[2.0, 2.0], 0), species_with(&[1.0, 1.0], 2)];
        assert_eq!(allocate_offspring(&two, 4).unwrap(), vec![3, 1]);

        let uniform = vec![species_with(&[1.0; 3], 0), species_with(&[1.0; 5], 3), species_with(&[1.0; 2], 8)];
        assert_eq!(allocate_offspring(&uniform, 10).unwrap(), vec![3, 5, 2]);

        let zeros = vec![species_with(&[0.0; 3], 0), species_with(&[0.0], 3)];
        assert_eq!(allocate_offspring(&zeros, 4).unwrap(), vec![3, 1]);
    }

    #[test]
    fn allocation_raw_quotas_sum_to_population() {
        // Σ_j Σ_i f_ij / f̄ = N for any positive fitness table
        let sp = vec![species_with(&[0.3, 7.0], 0), species_with(&[2.5], 2), species_with(&[1.0, 1.0, 9.0], 3)];
        let all: Vec<f64> = sp.iter().flat_map(|s| s.members.iter().map(|a| a.fitness.unwrap())).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let raw: f64 = all.iter().map(|f| f / mean).sum();
        assert!((raw - all.len() as f64).abs() < 1e-12);
        let counts = allocate_offspring(&sp, 6).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 6);
    }

    #[test]
    fn allocation_handles_negative_fitness() {
        let sp = vec![species_with(&[-5.0, -5.0], 0), species_with(&[-1.0], 2)];
        let counts = allocate_offspring(&sp, 3).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 3);
        assert!(counts[1] >= 1);
    }

    #[test]
    fn allocation_rejects_unevaluated() {
        let mut sp = species_with(&[1.0], 0);
        sp.members[0].fitness = None;
        assert!(allocate_offspring(&[sp], 2).is_err());
    }

    fn quiet_config() -> EvolutionConfig {
        EvolutionConfig { p_weight: 0.0, p_add_rot: 0.0, p_add_cnot: 0.0, elitism: false, ..EvolutionConfig::default() }
    }

    #[test]
    fn lone_member_without_elitism_yields_mutated_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sp = Species { members: vec![agent(0, one_rot(0.2), 1.0)], representative: one_rot(0.2) };
        let config = EvolutionConfig { p_weight: 1.0, ..quiet_config() };
        let mut reg = InnovationRegistry::new();
        let mut next = 1;
        let kids = reproduce(&sp, 1, &config, &mut reg, &mut next, &mut rng).unwrap();
        assert_eq!(kids.len(), 1);
        let a = kids[0].genome.rot_genes()[0].angles[0];
        assert!(a != 0.2 && (a - 0.2).abs() < 0.1);
        assert_eq!(kids[0].genome.rot_count(), 1);
    }

    #[test]
    fn parents_come_from_survivors_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // each member has a unique angle so children reveal their parents
        let members: Vec<Agent> = (0..10).map(|i| agent(i, one_rot(i as f64), i as f64)).collect();
        let sp = Species { representative: members[0].genome.clone(), members };
        let config = EvolutionConfig { survival_fraction: 0.5, ..quiet_config() };
        let mut reg = InnovationRegistry::new();
        let mut next = 10;
        let kids = reproduce(&sp, 200, &config, &mut reg, &mut next, &mut rng).unwrap();
        for k in &kids {
            let angle = k.genome.rot_genes()[0].angles[0];
            assert!(angle >= 5.0, "child inherited from a culled member: {angle}");
        }
    }

    #[test]
    fn pure_crossover_without_mutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let members = vec![agent(0, one_rot(1.0), 2.0), agent(1, one_rot(2.0), 2.0)];
        let sp = Species { representative: members[0].genome.clone(), members };
        let config = EvolutionConfig { survival_fraction: 1.0, ..quiet_config() };
        let mut reg = InnovationRegistry::new();
        let mut next = 2;
        for k in reproduce(&sp, 50, &config, &mut reg, &mut next, &mut rng).unwrap() {
            let angle = k.genome.rot_genes()[0].angles[0];
            assert!(angle == 1.0 || angle == 2.0);
        }
    }

    #[test]
    fn elitism_keeps_champion_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let members = vec![agent(0, one_rot(1.0), 1.0), agent(1, one_rot(2.0), 3.0)];
        let sp = Species { representative: members[0].genome.clone(), members };
        let config = EvolutionConfig { elitism: true, p_weight: 1.0, ..quiet_config() };
        let mut reg = InnovationRegistry::new();
        let mut next = 2;
        let kids = reproduce(&sp, 3, &config, &mut reg, &mut next, &mut rng).unwrap();
        assert_eq!(kids[0].genome, one_rot(2.0));
        assert_eq!(kids[0].parent, Some(1));
        assert_eq!(kids.iter().map(|k| k.id).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    fn angle_penalty(g: &Genome, _: &mut TaskRng) -> Result<f64> {
        Ok(-g.rot_genes().iter().flat_map(|r| r.angles).map(|a| a * a).sum::<f64>())
    }

    fn toy_config(generations: usize) -> EvolutionConfig {
        EvolutionConfig {
            generations,
            population_size: 30,
            sigma: 0.3,
            p_weight: 0.8,
            p_add_rot: 0.0,
            p_add_cnot: 0.0,
            initial_layers: 1,
            seed: 11,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn zero_generations_returns_best_initial_agent() {
        let out = evolve(&toy_config(0), 1, &angle_penalty).unwrap();
        assert!(out.history.is_empty());
        let best_initial = out.population.agents().iter().filter_map(|a| a.fitness).fold(f64::MIN, f64::max);
        assert_eq!(out.best.fitness, Some(best_initial));
    }

    #[test]
    fn toy_fitness_improves_and_best_is_monotone() {
        let out = evolve(&toy_config(30), 1, &angle_penalty).unwrap();
        assert_eq!(out.history.len(), 30);
        let mut best_so_far = f64::NEG_INFINITY;
        for r in &out.history {
            best_so_far = best_so_far.max(r.best_fitness);
            assert!(out.best.fitness.unwrap() >= best_so_far);
        }
        assert!(out.history.last().unwrap().best_fitness > out.history[0].best_fitness);
        for r in &out.history {
            assert_eq!(r.n_gates, 1);
        }
    }

    #[test]
    fn constant_fitness_keeps_population_size_and_grows_circuits() {
        let config = EvolutionConfig { generations: 15, population_size: 20, seed: 5, ..EvolutionConfig::default() };
        let mut sizes = Vec::new();
        let out = evolve_with(&config, 4, &|_: &Genome, _: &mut TaskRng| Ok(1.0), |p, _| {
            sizes.push(p.agents().len());
            Ok(())
        })
        .unwrap();
        assert!(sizes.iter().all(|&s| s == 20));
        assert!(out.history.iter().all(|r| r.best_fitness == 1.0));
        let gates: usize = out.population.agents().iter().map(|a| a.genome.gate_count()).sum();
        assert!(gates > 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let config = EvolutionConfig { generations: 8, population_size: 25, seed: 9, ..EvolutionConfig::default() };
        let fit = |g: &Genome, rng: &mut TaskRng| -> Result<f64> {
            Ok(g.gate_count() as f64 + rng.random::<f64>())
        };
        let a = evolve(&config, 3, &fit).unwrap();
        let b = evolve(&config, 3, &fit).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted_run() {
        let config = EvolutionConfig { generations: 6, population_size: 20, seed: 3, ..EvolutionConfig::default() };
        let fit = |g: &Genome, rng: &mut TaskRng| -> Result<f64> { Ok(g.gate_count() as f64 + rng.random::<f64>()) };
        let full = evolve(&config, 3, &fit).unwrap();

        let mut pop = Population::new(config.clone(), 3).unwrap();
        for _ in 0..3 {
            pop.run_generation(&fit).unwrap();
            pop.advance().unwrap();
        }
        let saved = serde_json::to_string(&pop).unwrap();
        let restored: Population = serde_json::from_str(&saved).unwrap();
        let resumed = resume(restored, &fit).unwrap();
        assert_eq!(resumed.history, full.history[3..].to_vec());
        assert_eq!(
            resumed.population.current_best().map(|a| a.id),
            full.population.current_best().map(|a| a.id)
        );
    }

    #[test]
    fn lineage_walks_back_to_generation_zero() {
        let config = EvolutionConfig { generations: 5, population_size: 12, seed: 2, ..EvolutionConfig::default() };
        let fit = |g: &Genome, _: &mut TaskRng| -> Result<f64> { Ok(g.gate_count() as f64) };
        let out = evolve(&config, 3, &fit).unwrap();
        let trace = out.population.lineage(out.best.id);
        assert_eq!(trace.first().unwrap().generation, 0);
        assert_eq!(trace.last().unwrap().agent_id, out.best.id);
        assert!(trace.windows(2).all(|w| w[0].generation < w[1].generation));
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig { p_weight: 1.5, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { population_size: 1, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { compatibility_threshold: 0.0, ..Default::default() }.validate().is_err());
        EvolutionConfig::maxcut().validate().unwrap();
    }
}
