//! Splitting each phase's flow into one commodity per original sink.
//!
//! Paths are peeled off the phase flow on the extended graph; the super arc a
//! path ends on names the sink it serves.

use std::collections::VecDeque;

use crate::engine::{NashFlowProfile, PhaseFlow, PiecewiseConstant};
use crate::network::{ArcId, NodeId};
use crate::rational::{ExtRat, Rat};
use crate::super_sink::ExtendedInstance;

/// Per-sink split of one phase, restricted to the original graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSplit {
    /// `arc_flows[j][e]`: flow of sink `j`'s commodity on original arc `e`.
    pub arc_flows: Vec<Vec<Rat>>,
    /// `source_flows[j][i]`: share of sink `j`'s commodity entering at source `i`.
    pub source_flows: Vec<Vec<Rat>>,
}

/// Aligned with the profile's phases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub phases: Vec<PhaseSplit>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecompositionError {
    #[error("phase {phase}: super arc of sink {sink} carries {value}, not its demand")]
    DemandMismatch {
        phase: usize,
        sink: usize,
        value: Rat,
    },
    #[error("phase {phase}: supply left at source {source_index} cannot reach the sink")]
    Stranded { phase: usize, source_index: usize },
    #[error("phase {phase}: flow {value} left on arc {arc} after peeling")]
    Residual {
        phase: usize,
        arc: ArcId,
        value: Rat,
    },
}

/// Shortest (fewest arcs, then smallest ids) path with positive residual
/// from any source with supply left to `sink`.
fn find_path(
    graph: &crate::network::Instance,
    residual: &[Rat],
    supply: &[Rat],
    sink: NodeId,
) -> Option<(usize, Vec<ArcId>)> {
    let outgoing = graph.outgoing();
    let mut pred: Vec<Option<ArcId>> = vec![None; graph.node_count()];
    let mut origin: Vec<Option<usize>> = vec![None; graph.node_count()];
    let mut queue = VecDeque::new();
    for (i, s) in graph.sources.iter().enumerate() {
        if supply[i].is_positive() && origin[s.node.0].is_none() {
            origin[s.node.0] = Some(i);
            queue.push_back(s.node);
        }
    }
    while let Some(u) = queue.pop_front() {
        if u == sink {
            let mut path = Vec::new();
            let mut v = u;
            while let Some(e) = pred[v.0] {
                path.push(e);
                v = graph.arc(e).tail;
            }
            path.reverse();
            return Some((origin[u.0].expect("reached"), path));
        }
        for &e in &outgoing[u.0] {
            let h = graph.arc(e).head;
            if residual[e.0].is_positive() && origin[h.0].is_none() {
                origin[h.0] = origin[u.0];
                pred[h.0] = Some(e);
                queue.push_back(h);
            }
        }
    }
    None
}

impl DecompositionError {
    fn at_phase(self, k: usize) -> Self {
        match self {
            DecompositionError::DemandMismatch { sink, value, .. } => {
                DecompositionError::DemandMismatch {
                    phase: k,
                    sink,
                    value,
                }
            }
            DecompositionError::Stranded { source_index, .. } => DecompositionError::Stranded {
                phase: k,
                source_index,
            },
            DecompositionError::Residual { arc, value, .. } => DecompositionError::Residual {
                phase: k,
                arc,
                value,
            },
        }
    }
}

/// Splits one phase flow on the extended graph by sink. Errors report phase 0.
pub fn decompose_thin_flow(
    ext: &ExtendedInstance,
    flow: &PhaseFlow,
) -> Result<PhaseSplit, DecompositionError> {
    let g = ext.graph();
    let base = ext.base();
    let sink = ext.super_sink();
    for (j, &e) in ext.super_arcs().iter().enumerate() {
        if flow.arc_flows[e.0] != base.sinks[j].demand {
            return Err(DecompositionError::DemandMismatch {
                phase: 0,
                sink: j,
                value: flow.arc_flows[e.0].clone(),
            });
        }
    }
    let mut residual = flow.arc_flows.clone();
    let mut supply = flow.source_splits.clone();
    let mut arc_flows = vec![vec![Rat::zero(); g.arcs.len()]; base.sinks.len()];
    while supply.iter().any(Rat::is_positive) {
        let Some((i, path)) = find_path(g, &residual, &supply, sink) else {
            let source_index = supply
                .iter()
                .position(Rat::is_positive)
                .expect("some supply");
            return Err(DecompositionError::Stranded {
                phase: 0,
                source_index,
            });
        };
        let w = path
            .iter()
            .map(|e| residual[e.0].clone())
            .fold(supply[i].clone(), Rat::min);
        let last = *path.last().expect("sources are not the sink");
        let j = ext
            .sink_of_super_arc(last)
            .expect("only super arcs enter the super sink");
        for e in &path {
            residual[e.0] -= &w;
            arc_flows[j][e.0] += &w;
        }
        supply[i] -= &w;
    }
    if let Some(e) = g.arc_ids().find(|e| !residual[e.0].is_zero()) {
        return Err(DecompositionError::Residual {
            phase: 0,
            arc: e,
            value: residual[e.0].clone(),
        });
    }
    for flows in arc_flows.iter_mut() {
        flows.truncate(base.arcs.len());
    }
    let outgoing = base.outgoing();
    let incoming = base.incoming();
    let source_flows = arc_flows
        .iter()
        .map(|flows| {
            base.sources
                .iter()
                .map(|s| {
                    let out: Rat = outgoing[s.node.0].iter().map(|e| &flows[e.0]).sum();
                    let inn: Rat = incoming[s.node.0].iter().map(|e| &flows[e.0]).sum();
                    out - inn
                })
                .collect()
        })
        .collect();
    Ok(PhaseSplit {
        arc_flows,
        source_flows,
    })
}

pub fn decompose(profile: &NashFlowProfile) -> Result<Decomposition, DecompositionError> {
    let phases = profile
        .phases
        .iter()
        .enumerate()
        .map(|(k, ph)| decompose_thin_flow(&profile.instance, &ph.flow).map_err(|e| e.at_phase(k)))
        .collect::<Result<_, _>>()?;
    Ok(Decomposition { phases })
}

/// Inflow rate over time of each sink's commodity on each original arc.
pub fn subflow_functions(
    profile: &NashFlowProfile,
    dec: &Decomposition,
) -> Vec<Vec<PiecewiseConstant>> {
    let base = profile.instance.base();
    (0..base.sinks.len())
        .map(|j| {
            base.arc_ids()
                .map(|e| {
                    let u = base.arc(e).tail;
                    let label = &profile.labels[u.0];
                    let mut pc = PiecewiseConstant::default();
                    for (ph, split) in profile.phases.iter().zip(&dec.phases) {
                        let slope = &ph.flow.labels[u.0];
                        if slope.is_zero() {
                            continue;
                        }
                        pc.push(label.eval(&ph.start), &split.arc_flows[j][e.0] / slope);
                    }
                    if let ExtRat::Finite(end) = &profile.horizon {
                        pc.push(label.eval(end), Rat::zero());
                    }
                    pc
                })
                .collect()
        })
        .collect()
}

/// Per-particle share of each sink's commodity entering at each source.
pub fn subflow_source_distribution(
    profile: &NashFlowProfile,
    dec: &Decomposition,
) -> Vec<Vec<PiecewiseConstant>> {
    let base = profile.instance.base();
    (0..base.sinks.len())
        .map(|j| {
            (0..base.sources.len())
                .map(|i| {
                    let mut pc = PiecewiseConstant::default();
                    for (ph, split) in profile.phases.iter().zip(&dec.phases) {
                        pc.push(ph.start.clone(), split.source_flows[j][i].clone());
                    }
                    if let ExtRat::Finite(end) = &profile.horizon {
                        pc.push(end.clone(), Rat::zero());
                    }
                    pc
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_subflow_decomposition;
    use crate::engine::solve_instance;
    use crate::rational::rat;
    use crate::samples;

    #[test]
    fn crossing_sinks_split_evenly() {
        let p = solve_instance(&samples::crossing_sinks(), &ExtRat::Infinity, 100).unwrap();
        let d = decompose(&p).unwrap();
        for split in &d.phases {
            for j in 0..2 {
                let total: Rat = split.source_flows[j].iter().sum();
                assert_eq!(total, rat(1, 2));
            }
        }
        let rep = check_subflow_decomposition(&p, &d);
        assert!(rep.is_pass(), "{rep}");
    }

    #[test]
    fn single_sink_takes_everything() {
        let p = solve_instance(&samples::parallel_arcs(), &ExtRat::Infinity, 100).unwrap();
        let d = decompose(&p).unwrap();
        for (ph, split) in p.phases.iter().zip(&d.phases) {
            assert_eq!(split.arc_flows[0][..], ph.flow.arc_flows[..2]);
        }
        assert!(check_subflow_decomposition(&p, &d).is_pass());
    }

    #[test]
    fn demand_mismatch_reported() {
        let mut p = solve_instance(&samples::crossing_sinks(), &ExtRat::Infinity, 100).unwrap();
        let e = p.instance.super_arcs()[0];
        p.phases[0].flow.arc_flows[e.0] = rat(1, 3);
        assert!(matches!(
            decompose(&p),
            Err(DecompositionError::DemandMismatch {
                phase: 0,
                sink: 0,
                ..
            })
        ));
    }

    #[test]
    fn perturbed_subflow_detected() {
        let p = solve_instance(&samples::crossing_sinks(), &ExtRat::Infinity, 100).unwrap();
        let mut d = decompose(&p).unwrap();
        d.phases[0].arc_flows[0][0] += rat(1, 100);
        assert!(check_subflow_decomposition(&p, &d).has("superposition"));
    }
}
