//! NSGA-II selection inside species.
//!
//! Objectives are minimized. The task fitness enters negated and the second
//! objective is the total gate count, so a smaller circuit with the same
//! score dominates a larger one.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    allocate_offspring, continue_evolution, evaluate_genomes, reproduce, Agent, EvolutionConfig, EvolutionOutcome,
    Fitness, GenerationRecord, Population,
};
use crate::seeding::{substream, Stream};

/// Objective values, all to be minimized.
pub type ObjectiveVector = Vec<f64>;

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Fitness(format!("objective vectors of length {} and {}", a.len(), b.len())));
    }
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return Ok(false);
        }
        strictly |= x < y;
    }
    Ok(strictly)
}

fn check_points(points: &[ObjectiveVector]) -> Result<()> {
    let Some(first) = points.first() else { return Ok(()) };
    for p in points {
        if p.len() != first.len() {
            return Err(Error::Fitness(format!("objective vectors of length {} and {}", first.len(), p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fitness(format!("non-finite objective vector {p:?}")));
        }
    }
    Ok(())
}

/// Nondomination fronts as ascending index lists, best front first.
pub fn fast_non_dominated_sort(points: &[ObjectiveVector]) -> Result<Vec<Vec<usize>>> {
    check_points(points)?;
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates(&points[p], &points[q])? {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&points[q], &points[p])? {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// Crowding distance of each member of one front.
///
/// Per objective the front is sorted; the two extremes get infinity and each
/// interior point adds `(next - previous) / (max - min)`. An objective on
/// which the whole front is equal adds nothing.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut distance = vec![0.0; n];
    let dims = front[0].len();
    for m in 0..dims {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]));
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = front[order[n - 1]][m] - front[order[0]][m];
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            distance[w[1]] += (front[w[2]][m] - front[w[0]][m]) / range;
        }
    }
    distance
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAgent {
    pub agent: Agent,
    pub objectives: ObjectiveVector,
    /// Front index, 0 for the nondominated set.
    pub rank: usize,
    pub crowding: f64,
}

/// `(-fitness, gate count)` of an evaluated agent.
pub fn agent_objectives(agent: &Agent) -> Result<ObjectiveVector> {
    Ok(vec![-agent.score()?, agent.genome.gate_count() as f64])
}

/// Attaches front rank and crowding distance (within the front) to each agent.
pub fn rank_agents(agents: Vec<Agent>, objectives: Vec<ObjectiveVector>) -> Result<Vec<RankedAgent>> {
    if agents.len() != objectives.len() {
        return Err(Error::Fitness(format!("{} agents but {} objective vectors", agents.len(), objectives.len())));
    }
    let fronts = fast_non_dominated_sort(&objectives)?;
    let mut rank = vec![0; agents.len()];
    let mut crowding = vec![0.0; agents.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    Ok(agents
        .into_iter()
        .zip(objectives)
        .enumerate()
        .map(|(i, (agent, objectives))| RankedAgent { agent, objectives, rank: rank[i], crowding: crowding[i] })
        .collect())
}

/// The crowded-comparison order: lower rank first, then larger crowding.
pub fn crowded_cmp(a: &RankedAgent, b: &RankedAgent) -> Ordering {
    a.rank.cmp(&b.rank).then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Keeps `n` members of a ranked pool.
///
/// Whole fronts are admitted in rank order while they fit; the front that
/// straddles the cut is sorted by descending crowding (input order on ties)
/// and truncated. The survivors are returned in crowded-comparison order.
pub fn nsga2_select(pool: Vec<RankedAgent>, n: usize) -> Result<Vec<RankedAgent>> {
    if n > pool.len() {
        return Err(Error::Fitness(format!("cannot select {n} from a pool of {}", pool.len())));
    }
    let n_fronts = pool.iter().map(|r| r.rank + 1).max().unwrap_or(0);
    let mut fronts: Vec<Vec<(usize, RankedAgent)>> = vec![Vec::new(); n_fronts];
    for (i, r) in pool.into_iter().enumerate() {
        fronts[r.rank].push((i, r));
    }
    let mut chosen: Vec<(usize, RankedAgent)> = Vec::with_capacity(n);
    for mut front in fronts {
        let room = n - chosen.len();
        if room == 0 {
            break;
        }
        if front.len() > room {
            front.sort_by(|a, b| b.1.crowding.total_cmp(&a.1.crowding).then(a.0.cmp(&b.0)));
            front.truncate(room);
        }
        chosen.extend(front);
    }
    chosen.sort_by(|a, b| crowded_cmp(&a.1, &b.1).then(a.0.cmp(&b.0)));
    Ok(chosen.into_iter().map(|(_, r)| r).collect())
}

impl Population {
    /// Multi-objective replacement step.
    ///
    /// Each species gets its usual offspring allocation `k`. It breeds `k`
    /// children without elitism, the children are evaluated, and NSGA-II
    /// keeps `k` members of parents plus children. A species allocated no
    /// offspring dies out.
    pub fn advance_moo<F: Fitness + ?Sized>(&mut self, fitness: &F) -> Result<()> {
        if self.species.is_empty() {
            self.speciate();
        }
        let counts = allocate_offspring(&self.species, self.config.population_size)?;
        let breeding = EvolutionConfig { elitism: false, ..self.config.clone() };
        let mut offspring: Vec<Vec<Agent>> = Vec::with_capacity(self.species.len());
        for (j, (species, &count)) in self.species.iter().zip(&counts).enumerate() {
            let mut rng = substream(self.config.seed, Stream::Reproduce, self.generation, j as u64);
            offspring.push(reproduce(species, count, &breeding, &mut self.registry, &mut self.next_id, &mut rng)?);
        }

        self.generation += 1;
        let generation = self.generation;
        let seed = self.config.seed;
        let jobs: Vec<(u64, &crate::genome::Genome)> =
            offspring.iter().flatten().enumerate().map(|(i, a)| (i as u64, &a.genome)).collect();
        let scores = evaluate_genomes(jobs, fitness, |idx| substream(seed, Stream::Evaluate, generation, idx))?;
        let mut scores = scores.into_iter();
        for child in offspring.iter_mut().flatten() {
            child.fitness = scores.next();
            self.evaluations += 1;
        }
        for child in offspring.iter().flatten() {
            self.note_evaluated(child);
        }

        let mut next = Vec::with_capacity(self.config.population_size);
        for ((species, children), &count) in self.species.iter().zip(offspring).zip(&counts) {
            if count == 0 {
                continue;
            }
            let pool: Vec<Agent> = species.members.iter().cloned().chain(children).collect();
            let objectives = pool.iter().map(agent_objectives).collect::<Result<Vec<_>>>()?;
            let ranked = rank_agents(pool, objectives)?;
            next.extend(nsga2_select(ranked, count)?.into_iter().map(|r| r.agent));
        }
        self.agents = next;
        self.species.clear();
        Ok(())
    }

    /// Front sizes of the whole population under `(-fitness, gates)`.
    pub fn front_sizes(&self) -> Result<Vec<usize>> {
        let objectives = self.agents.iter().map(agent_objectives).collect::<Result<Vec<_>>>()?;
        Ok(fast_non_dominated_sort(&objectives)?.iter().map(Vec::len).collect())
    }
}

/// Speciated NSGA-II evolution on `(-fitness, total gate count)`.
pub fn evolve_moo<F: Fitness + ?Sized>(
    config: &EvolutionConfig,
    n_wires: usize,
    fitness: &F,
) -> Result<EvolutionOutcome> {
    evolve_moo_with(config, n_wires, fitness, |_, _| Ok(()))
}

/// As [`evolve_moo`] with a per-generation observer. Records carry the front
/// sizes and the best agent's objective vector.
pub fn evolve_moo_with<F, O>(
    config: &EvolutionConfig,
    n_wires: usize,
    fitness: &F,
    observe: O,
) -> Result<EvolutionOutcome>
where
    F: Fitness + ?Sized,
    O: FnMut(&Population, &mut GenerationRecord) -> Result<()>,
{
    resume_moo_with(Population::new(config.clone(), n_wires)?, fitness, observe)
}

/// Continues a multi-objective run from an existing population.
pub fn resume_moo_with<F, O>(population: Population, fitness: &F, mut observe: O) -> Result<EvolutionOutcome>
where
    F: Fitness + ?Sized,
    O: FnMut(&Population, &mut GenerationRecord) -> Result<()>,
{
    continue_evolution(
        population,
        fitness,
        |p, record| {
            record.front_sizes = Some(p.front_sizes()?);
            let best = p.current_best().ok_or_else(|| Error::Fitness("empty population".into()))?;
            record.best_objectives = Some(agent_objectives(best)?);
            observe(p, record)
        },
        |p, f| p.advance_moo(f),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Genome;
    use crate::seeding::TaskRng;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn peel(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
        let mut left: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !left.is_empty() {
            let front: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&i| !left.iter().any(|&j| dominates(&points[j], &points[i]).unwrap()))
                .collect();
            left.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<ObjectiveVector> {
        // coarse grid so ties and duplicates occur
        (0..n).map(|_| vec![rng.random_range(0..8) as f64, rng.random_range(0..8) as f64]).collect()
    }

    fn ranked(points: &[ObjectiveVector]) -> Vec<RankedAgent> {
        let agents = (0..points.len()).map(|i| Agent::new(i as u64, Genome::empty(1), None)).collect();
        rank_agents(agents, points.to_vec()).unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sort_examples() {
        assert_eq!(fast_non_dominated_sort(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(fast_non_dominated_sort(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(), vec![vec![0, 1]]);
        assert!(fast_non_dominated_sort(&[vec![f64::NAN, 1.0]]).is_err());
        assert!(fast_non_dominated_sort(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn sort_matches_peeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts = random_points(&mut rng, 32);
            assert_eq!(fast_non_dominated_sort(&pts).unwrap(), peel(&pts));
        }
    }

    #[test]
    fn crowding_examples() {
        assert_eq!(crowding_distance(&[vec![1.0, 2.0], vec![2.0, 1.0]]), vec![f64::INFINITY; 2]);
        let line = [vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert_eq!(crowding_distance(&line), vec![f64::INFINITY, 1.0, f64::INFINITY]);
        let diag = [vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(crowding_distance(&diag)[1], 2.0);
        // the middle copy of a triplicate sits between equal neighbours
        let dup = [vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert_eq!(crowding_distance(&dup), vec![f64::INFINITY, 0.5, 0.0, 0.5, f64::INFINITY]);
    }

    #[test]
    fn selection_examples() {
        // single front: keep the two boundary points
        let front = vec![vec![0.0, 3.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 0.0]];
        let kept: Vec<u64> = nsga2_select(ranked(&front), 2).unwrap().iter().map(|r| r.agent.id).collect();
        assert_eq!(kept, vec![0, 3]);

        // two fronts of equal size: the second is dropped
        let two = vec![vec![2.0, 2.0], vec![0.0, 1.0], vec![3.0, 3.0], vec![1.0, 0.0]];
        let mut kept: Vec<u64> = nsga2_select(ranked(&two), 2).unwrap().iter().map(|r| r.agent.id).collect();
        kept.sort();
        assert_eq!(kept, vec![1, 3]);
        assert!(nsga2_select(ranked(&two), 5).is_err());
    }

    #[test]
    fn selection_matches_total_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let n = rng.random_range(1..=16);
            let pts = random_points(&mut rng, 2 * n);
            let pool = ranked(&pts);
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| crowded_cmp(&pool[a], &pool[b]).then(a.cmp(&b)));
            let expect: Vec<u64> = order[..n].iter().map(|&i| i as u64).collect();
            let got: Vec<u64> = nsga2_select(pool, n).unwrap().iter().map(|r| r.agent.id).collect();
            assert_eq!(got, expect);
        }
    }

    fn moo_config() -> EvolutionConfig {
        EvolutionConfig {
            generations: 8,
            population_size: 24,
            initial_layers: 1,
            p_add_rot: 0.6,
            p_add_cnot: 0.6,
            seed: 3,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn constant_fitness_never_grows_circuits() {
        let flat = |_: &Genome, _: &mut TaskRng| -> Result<f64> { Ok(1.0) };
        let mut pop = Population::new(moo_config(), 3).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            pop.run_generation(&flat).unwrap();
            let mean = pop.agents().iter().map(|a| a.genome.gate_count() as f64).sum::<f64>()
                / pop.agents().len() as f64;
            assert!(mean <= last + 1e-12, "{mean} > {last}");
            last = mean;
            pop.advance_moo(&flat).unwrap();
        }
        assert_eq!(pop.agents().len(), 24);
    }

    #[test]
    fn lone_member_survives_constant_fitness() {
        let flat = |_: &Genome, _: &mut TaskRng| -> Result<f64> { Ok(1.0) };
        let config = EvolutionConfig { population_size: 2, compatibility_threshold: 1e-9, ..moo_config() };
        let mut pop = Population::new(config, 2).unwrap();
        pop.run_generation(&flat).unwrap();
        let before: Vec<u64> = pop.agents().iter().map(|a| a.id).collect();
        assert_eq!(pop.species().len(), 2);
        pop.advance_moo(&flat).unwrap();
        let after: Vec<u64> = pop.agents().iter().map(|a| a.id).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn moo_run_records_fronts_and_is_deterministic() {
        let f = |g: &Genome, rng: &mut TaskRng| -> Result<f64> {
            let s: f64 = g.rot_genes().iter().map(|r| r.angles[0].cos()).sum();
            Ok(s + rng.random::<f64>() * 0.01)
        };
        let a = evolve_moo(&moo_config(), 3, &f).unwrap();
        let b = evolve_moo(&moo_config(), 3, &f).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 8);
        for r in &a.history {
            assert_eq!(r.front_sizes.as_ref().unwrap().iter().sum::<usize>(), 24);
            assert_eq!(r.best_objectives.as_ref().unwrap()[0], -r.best_fitness);
        }
        let evals: Vec<u64> = a.history.iter().map(|r| r.evals_cumulative).collect();
        assert!(evals.windows(2).all(|w| w[0] < w[1]));
    }
}
