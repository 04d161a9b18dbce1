use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qneat::evolution::GenerationRecord;
use qneat::genome::{DistanceCoefficients, InnovationRegistry};
use qneat::moo::{crowding_distance, dominates, fast_non_dominated_sort};
use qneat::runner::history::{parse_history, HistoryWriter};
use qneat::sim::{Gate, Statevector};
use qneat::tasks::Graph;
use qneat::Genome;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let angle = -10.0..10.0f64;
    prop_oneof![
        (0..n, [angle.clone(), angle.clone(), angle.clone()]).prop_map(|(wire, angles)| Gate::Rot { wire, angles }),
        (0..n, 1..n.max(2)).prop_map(move |(c, d)| Gate::Cnot { control: c, target: (c + d) % n.max(2) }),
        (0..n, angle.clone()).prop_map(|(wire, theta)| Gate::Rx { wire, theta }),
        (0..n, angle).prop_map(|(wire, theta)| Gate::Rz { wire, theta }),
        (0..n).prop_map(|wire| Gate::H { wire }),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 0..30)))
}

/// A pair of genomes grown from one registry, that registry, and a seed.
fn genome_pair() -> impl Strategy<Value = (Genome, Genome, InnovationRegistry, u64)> {
    (2usize..=6, 0u32..3, 0usize..8, any::<u64>()).prop_map(|(n, layers, adds, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut registry = InnovationRegistry::new();
        let mut grow = |rng: &mut ChaCha8Rng| {
            let mut g = Genome::init(layers, n, &mut registry, rng);
            for k in 0..adds {
                g = if k % 2 == 0 { g.mutate_add_rot(&mut registry, rng) } else { g.mutate_add_cnot(&mut registry, rng) };
            }
            g.mutate_weights(0.5, 0.5, rng)
        };
        let a = grow(&mut rng);
        let b = grow(&mut rng);
        (a, b, registry, seed)
    })
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0..6i32, 2), 1..40)
        .prop_map(|ps| ps.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect())
}

proptest! {
    #[test]
    fn circuits_preserve_norm((n, gates) in circuit()) {
        let mut state = Statevector::new(n).unwrap();
        state.apply_all(&gates).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-10);
        for w in 0..n {
            let z = state.expectation_z(w).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
        }
    }

    #[test]
    fn genome_json_round_trip((a, _, _, _) in genome_pair()) {
        let text = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<Genome>(&text).unwrap(), a.clone());
        prop_assert_eq!(a.reconstruct_circuit().len(), a.gate_count());
    }

    #[test]
    fn crossover_stays_valid_and_distance_is_symmetric((a, b, _, seed) in genome_pair(), fa in 0.0..2.0f64, fb in 0.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let child = Genome::crossover(&a, &b, fa, fb, &mut rng).unwrap();
        prop_assert!(child.validate().is_ok());
        let c = DistanceCoefficients::default();
        let (ab, ba) = (Genome::compatibility_distance(&a, &b, c), Genome::compatibility_distance(&b, &a, c));
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn mutations_only_grow((a, _, mut registry, seed) in genome_pair()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = a.mutate_add_rot(&mut registry, &mut rng);
        let c = a.mutate_add_cnot(&mut registry, &mut rng);
        prop_assert_eq!(r.rot_count(), a.rot_count() + 1);
        prop_assert_eq!(c.cnot_count(), a.cnot_count() + 1);
        prop_assert!(r.validate().is_ok() && c.validate().is_ok());
        prop_assert!(r.depth() <= a.depth() + 1);
    }

    #[test]
    fn fronts_partition_and_are_mutually_nondominated(pts in points()) {
        let fronts = fast_non_dominated_sort(&pts).unwrap();
        let mut all: Vec<usize> = fronts.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                for &j in front {
                    prop_assert!(!dominates(&pts[i], &pts[j]).unwrap());
                }
                // every later member is dominated by someone in an earlier front
                if r > 0 {
                    prop_assert!(fronts[r - 1].iter().any(|&k| dominates(&pts[k], &pts[i]).unwrap()));
                }
            }
            let members: Vec<Vec<f64>> = front.iter().map(|&i| pts[i].clone()).collect();
            prop_assert!(crowding_distance(&members).iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn graph_text_round_trip(n in 2usize..9, raw in prop::collection::btree_set((0usize..9, 0usize..9), 1..20)) {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|&(u, v)| u < v && v < n).collect();
        prop_assume!(!edges.is_empty());
        let graph = Graph::new(n, edges).unwrap();
        prop_assert_eq!(Graph::parse(&graph.to_string()).unwrap(), graph);
    }

    #[test]
    fn history_round_trip(rows in prop::collection::vec((any::<u32>(), -1e6..1e6f64, 0usize..200, prop::option::of(0.0..1.0f64)), 1..10)) {
        let records: Vec<GenerationRecord> = rows
            .iter()
            .enumerate()
            .map(|(g, &(evals, fitness, gates, accuracy))| GenerationRecord {
                generation: g as u64,
                best_fitness: fitness,
                top5_mean: fitness / 2.0,
                pop_mean: fitness / 3.0,
                n_rot: gates,
                n_cnot: gates / 2,
                n_gates: gates + gates / 2,
                n_species: 1 + g,
                accuracy,
                evals_cumulative: evals as u64,
                seconds: None,
                front_sizes: Some(vec![gates, 1]),
                best_objectives: Some(vec![-fitness, gates as f64]),
            })
            .collect();
        let mut w = HistoryWriter::new(Vec::new(), true).unwrap();
        for r in &records {
            w.write(r).unwrap();
        }
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        prop_assert_eq!(parse_history(&text).unwrap(), records);
    }
}
