//! Seeded random instances for property tests and the acceptance suite.
//!
//! Nodes are laid out in a hidden topological order with sources first and
//! sinks last. Forward arcs may have zero transit time; backward arcs always
//! get transit time at least 1, so every directed cycle is positive.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{
    validate_instance, Arc, ArcId, Instance, NodeId, SinkDemand, Source, ValidatedInstance,
};
use crate::rational::{rat, Rat};
use crate::thin_flow::{TfArc, ThinFlowProblem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorParams {
    pub nodes: usize,
    pub max_sources: usize,
    pub max_sinks: usize,
    /// Upper bound on forward arcs added beyond the connectivity skeleton.
    pub extra_arcs: usize,
    /// Upper bound on backward arcs.
    pub back_arcs: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            nodes: 5,
            max_sources: 2,
            max_sinks: 2,
            extra_arcs: 3,
            back_arcs: 1,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("need at least 2 nodes to separate sources from sinks, got {0}")]
    TooFewNodes(usize),
    #[error("need at least one source and one sink")]
    NoTerminals,
}

fn pick(rng: &mut impl Rng, pool: &[(i64, i64)]) -> Rat {
    let (n, d) = pool[rng.gen_range(0..pool.len())];
    rat(n, d)
}

const TRANSITS: [(i64, i64); 6] = [(0, 1), (0, 1), (1, 2), (1, 1), (2, 1), (3, 1)];
const BACK_TRANSITS: [(i64, i64); 3] = [(1, 1), (2, 1), (3, 1)];
const CAPACITIES: [(i64, i64); 6] = [(1, 2), (1, 1), (1, 1), (3, 2), (2, 1), (3, 1)];
const RATES: [(i64, i64); 5] = [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1)];

/// Deterministic in `seed`; the result always validates.
pub fn generate_random_instance(
    seed: u64,
    params: &GeneratorParams,
) -> Result<ValidatedInstance, GenerateError> {
    let n = params.nodes;
    if n < 2 {
        return Err(GenerateError::TooFewNodes(n));
    }
    if params.max_sources == 0 || params.max_sinks == 0 {
        return Err(GenerateError::NoTerminals);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(1..=params.max_sources.min(n - 1));
    let nt = rng.gen_range(1..=params.max_sinks.min(n - ns));

    let mut arcs: Vec<(usize, usize, Rat)> = Vec::new();
    for v in ns..n {
        let u = rng.gen_range(0..v);
        arcs.push((u, v, pick(&mut rng, &TRANSITS)));
    }
    for u in 0..n - nt {
        if !arcs.iter().any(|&(a, _, _)| a == u) {
            let v = rng.gen_range(u + 1..n);
            arcs.push((u, v, pick(&mut rng, &TRANSITS)));
        }
    }
    for _ in 0..rng.gen_range(0..=params.extra_arcs) {
        let u = rng.gen_range(0..n - 1);
        let v = rng.gen_range(u + 1..n);
        arcs.push((u, v, pick(&mut rng, &TRANSITS)));
    }
    for _ in 0..rng.gen_range(0..=params.back_arcs) {
        let v = rng.gen_range(0..n - 1);
        let u = rng.gen_range(v + 1..n);
        arcs.push((u, v, pick(&mut rng, &BACK_TRANSITS)));
    }
    arcs.shuffle(&mut rng);

    let weights: Vec<i64> = (0..nt).map(|_| rng.gen_range(1..=3)).collect();
    let total: i64 = weights.iter().sum();
    let inst = Instance {
        nodes: (0..n).map(|i| format!("v{i}")).collect(),
        arcs: arcs
            .into_iter()
            .enumerate()
            .map(|(i, (u, v, transit))| Arc {
                name: format!("a{i}"),
                tail: NodeId(u),
                head: NodeId(v),
                transit,
                capacity: pick(&mut rng, &CAPACITIES),
            })
            .collect(),
        sources: (0..ns)
            .map(|i| Source {
                node: NodeId(i),
                rate: pick(&mut rng, &RATES),
            })
            .collect(),
        sinks: (0..nt)
            .map(|j| SinkDemand {
                node: NodeId(n - nt + j),
                demand: rat(weights[j], total),
            })
            .collect(),
    };
    Ok(validate_instance(inst).expect("generator produces valid instances"))
}

/// A random acyclic thin-flow problem with every node reachable from a
/// source. Arc ids are shuffled so the id order does not follow the layout.
pub fn random_thin_flow_problem(seed: u64, max_nodes: usize, max_arcs: usize) -> ThinFlowProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_nodes.max(2));
    // Layout position -> node id.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let ns = rng.gen_range(1..=(n - 1).min(3));
    let mut sources: Vec<usize> = vec![0];
    for p in 1..n - 1 {
        if sources.len() < ns && rng.gen_bool(0.5) {
            sources.push(p);
        }
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        if !sources.contains(&v) {
            edges.push((rng.gen_range(0..v), v));
        }
    }
    let budget = max_arcs.max(edges.len());
    let extra = rng.gen_range(0..=budget - edges.len());
    for _ in 0..extra {
        let u = rng.gen_range(0..n - 1);
        let v = rng.gen_range(u + 1..n);
        edges.push((u, v));
    }
    edges.shuffle(&mut rng);
    ThinFlowProblem {
        node_names: (0..n).map(|i| format!("v{i}")).collect(),
        arcs: edges
            .into_iter()
            .enumerate()
            .map(|(i, (u, v))| TfArc {
                id: ArcId(i),
                name: format!("a{i}"),
                tail: NodeId(perm[u]),
                head: NodeId(perm[v]),
                capacity: pick(&mut rng, &CAPACITIES),
                resetting: rng.gen_bool(0.3),
            })
            .collect(),
        sources: sources
            .into_iter()
            .map(|p| (NodeId(perm[p]), pick(&mut rng, &RATES)))
            .collect(),
        sink: NodeId(perm[n - 1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let p = GeneratorParams {
            nodes: 4,
            ..Default::default()
        };
        let a = generate_random_instance(1, &p).unwrap();
        let b = generate_random_instance(1, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nodes.len(), 4);
    }

    #[test]
    fn one_node_rejected() {
        let p = GeneratorParams {
            nodes: 1,
            ..Default::default()
        };
        assert_eq!(
            generate_random_instance(1, &p),
            Err(GenerateError::TooFewNodes(1))
        );
    }

    #[test]
    fn many_seeds_validate() {
        for seed in 0..300 {
            let p = GeneratorParams {
                nodes: 2 + (seed as usize % 5),
                max_sources: 3,
                max_sinks: 3,
                extra_arcs: 4,
                back_arcs: 2,
            };
            generate_random_instance(seed, &p).unwrap();
        }
    }

    #[test]
    fn thin_flow_problems_validate() {
        for seed in 0..300 {
            let p = random_thin_flow_problem(seed, 6, 10);
            p.validate().unwrap();
            assert!(p.arcs.len() <= 10);
        }
    }
}
