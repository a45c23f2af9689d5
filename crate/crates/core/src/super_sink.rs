//! Reduction of a multi-sink instance with demands to a single-sink instance.
//!
//! Every sink `t_j` gets an arc into a new super sink. The arcs are made slow
//! enough (capacity proportional to the demand and below every original
//! capacity and rate) that equilibrium flow splits across them exactly by
//! demand, and their transit times equalise the sinks' distances so that all
//! of them are active from the first particle on.

use crate::network::{
    transit_distances_from, validate_instance, Arc, ArcId, Instance, NodeId, SinkDemand,
    ValidatedInstance,
};
use crate::rational::{ExtRat, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedInstance {
    base: ValidatedInstance,
    graph: ValidatedInstance,
    super_sink: NodeId,
    /// Aligned with `base.sinks`.
    super_arcs: Vec<ArcId>,
    sigma: Rat,
    /// Distance from the nearest source to each sink, aligned with `base.sinks`.
    sink_distances: Vec<Rat>,
}

/// Minimum over all capacities and all source rates.
pub fn sigma(inst: &Instance) -> Rat {
    inst.arcs
        .iter()
        .map(|a| &a.capacity)
        .chain(inst.sources.iter().map(|s| &s.rate))
        .min()
        .cloned()
        .expect("instance has at least one source")
}

fn unique_name(taken: impl Fn(&str) -> bool, wanted: &str) -> String {
    let mut name = wanted.to_string();
    while taken(&name) {
        name.push('_');
    }
    name
}

pub fn build_extended_graph(inst: &ValidatedInstance) -> ExtendedInstance {
    let sigma = sigma(inst);
    let sources: Vec<NodeId> = inst.sources.iter().map(|s| s.node).collect();
    let from_sources = transit_distances_from(inst, &sources);
    let sink_distances: Vec<Rat> = inst
        .sinks
        .iter()
        .map(|t| match &from_sources[t.node.0] {
            ExtRat::Finite(d) => d.clone(),
            ExtRat::Infinity => unreachable!("validated sinks are reachable from a source"),
        })
        .collect();
    let delta_max = sink_distances
        .iter()
        .max()
        .cloned()
        .expect("at least one sink");
    let half = Rat::new(1, 2);

    let mut graph: Instance = inst.instance().clone();
    let super_name = unique_name(|n| graph.node_by_name(n).is_some(), "_super_sink");
    graph.nodes.push(super_name);
    let super_sink = NodeId(graph.nodes.len() - 1);
    let mut super_arcs = Vec::with_capacity(inst.sinks.len());
    for (t, delta) in inst.sinks.iter().zip(&sink_distances) {
        let wanted = format!("_super_{}", inst.node_name(t.node));
        let name = unique_name(|n| graph.arc_by_name(n).is_some(), &wanted);
        graph.arcs.push(Arc {
            name,
            tail: t.node,
            head: super_sink,
            transit: &delta_max - delta,
            capacity: &(&half * &t.demand) * &sigma,
        });
        super_arcs.push(ArcId(graph.arcs.len() - 1));
    }
    graph.sinks = vec![SinkDemand {
        node: super_sink,
        demand: Rat::one(),
    }];
    let graph = validate_instance(graph).expect("extension of a valid instance is valid");
    ExtendedInstance {
        base: inst.clone(),
        graph,
        super_sink,
        super_arcs,
        sigma,
        sink_distances,
    }
}

impl ExtendedInstance {
    pub fn base(&self) -> &ValidatedInstance {
        &self.base
    }

    /// The single-sink instance the engine runs on. Original node and arc
    /// ids are preserved; the super sink and the super arcs come last.
    pub fn graph(&self) -> &ValidatedInstance {
        &self.graph
    }

    pub fn super_sink(&self) -> NodeId {
        self.super_sink
    }

    pub fn super_arcs(&self) -> &[ArcId] {
        &self.super_arcs
    }

    pub fn sigma(&self) -> &Rat {
        &self.sigma
    }

    pub fn sink_distances(&self) -> &[Rat] {
        &self.sink_distances
    }

    /// Sink index `j` served by `arc`, if it is a super arc.
    pub fn sink_of_super_arc(&self, arc: ArcId) -> Option<usize> {
        self.super_arcs.iter().position(|&e| e == arc)
    }

    pub fn is_original_arc(&self, arc: ArcId) -> bool {
        arc.0 < self.base.arcs.len()
    }

    pub fn is_original_node(&self, v: NodeId) -> bool {
        v.0 < self.base.nodes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::InstanceBuilder;
    use crate::rational::rat;

    #[test]
    fn sigma_examples() {
        let mut b = InstanceBuilder::new();
        b.arc("a", "s", "t", rat(0, 1), rat(1, 1));
        b.arc("b", "s", "t", rat(0, 1), rat(2, 1));
        b.source("s", rat(3, 1)).sink("t", rat(1, 1));
        assert_eq!(sigma(&b.build()), rat(1, 1));
        let mut b = InstanceBuilder::new();
        b.arc("a", "s", "t", rat(0, 1), rat(1, 2));
        b.source("s", rat(1, 3)).sink("t", rat(1, 1));
        assert_eq!(sigma(&b.build()), rat(1, 3));
    }

    #[test]
    fn two_sinks_different_distances() {
        let mut b = InstanceBuilder::new();
        b.arc("a", "s", "t1", rat(3, 1), rat(1, 1));
        b.arc("b", "s", "t2", rat(1, 1), rat(1, 1));
        b.source("s", rat(1, 1))
            .sink("t1", rat(1, 2))
            .sink("t2", rat(1, 2));
        let ext = build_extended_graph(&validate_instance(b.build()).unwrap());
        let g = ext.graph();
        let arcs: Vec<&Arc> = ext.super_arcs().iter().map(|&e| g.arc(e)).collect();
        assert_eq!(arcs[0].transit, rat(0, 1));
        assert_eq!(arcs[1].transit, rat(2, 1));
        assert_eq!(arcs[0].capacity, rat(1, 4));
        assert_eq!(arcs[1].capacity, rat(1, 4));
        assert_eq!(g.sinks.len(), 1);
        assert_eq!(g.sinks[0].node, ext.super_sink());
    }

    #[test]
    fn three_sinks_demand_shares() {
        let mut b = InstanceBuilder::new();
        for (i, t) in ["t1", "t2", "t3"].iter().enumerate() {
            b.arc(&format!("a{i}"), "s", t, rat(1, 1), rat(1, 1));
        }
        b.source("s", rat(1, 1))
            .sink("t1", rat(1, 2))
            .sink("t2", rat(1, 3))
            .sink("t3", rat(1, 6));
        let ext = build_extended_graph(&validate_instance(b.build()).unwrap());
        let caps: Vec<Rat> = ext
            .super_arcs()
            .iter()
            .map(|&e| ext.graph().arc(e).capacity.clone())
            .collect();
        assert_eq!(caps, vec![rat(1, 4), rat(1, 6), rat(1, 12)]);
        for &e in ext.super_arcs() {
            assert_eq!(ext.graph().arc(e).transit, rat(0, 1));
        }
    }

    #[test]
    fn single_sink_still_extended() {
        let mut b = InstanceBuilder::new();
        b.arc("e", "s", "t", rat(0, 1), rat(1, 1));
        b.source("s", rat(1, 1)).sink("t", rat(1, 1));
        let ext = build_extended_graph(&validate_instance(b.build()).unwrap());
        assert_eq!(ext.super_arcs().len(), 1);
        let a = ext.graph().arc(ext.super_arcs()[0]);
        assert_eq!(a.transit, rat(0, 1));
        assert_eq!(a.capacity, rat(1, 2));
        assert!(ext.is_original_arc(ArcId(0)));
        assert!(!ext.is_original_arc(ext.super_arcs()[0]));
        assert_eq!(ext.sink_of_super_arc(ext.super_arcs()[0]), Some(0));
    }

    #[test]
    fn names_do_not_collide() {
        let mut b = InstanceBuilder::new();
        b.arc("_super_t", "s", "t", rat(0, 1), rat(1, 1));
        b.arc("x", "t", "_super_sink", rat(0, 1), rat(1, 1));
        b.source("s", rat(1, 1)).sink("_super_sink", rat(1, 1));
        let inst = b.build();
        let inst = validate_instance(inst).unwrap();
        let ext = build_extended_graph(&inst);
        let g = ext.graph();
        assert_eq!(g.node_name(ext.super_sink()), "_super_sink_");
        assert_eq!(g.arc(ext.super_arcs()[0]).name, "_super__super_sink");
    }

    #[test]
    fn super_capacities_below_sigma() {
        for seed in 0..100 {
            let p = crate::generate::GeneratorParams {
                nodes: 5,
                max_sources: 3,
                max_sinks: 3,
                extra_arcs: 3,
                back_arcs: 1,
            };
            let inst = crate::generate::generate_random_instance(seed, &p).unwrap();
            let ext = build_extended_graph(&inst);
            let min_transit = ext
                .super_arcs()
                .iter()
                .map(|&e| ext.graph().arc(e).transit.clone())
                .min()
                .unwrap();
            assert_eq!(min_transit, Rat::zero());
            for (j, &e) in ext.super_arcs().iter().enumerate() {
                let a = ext.graph().arc(e);
                assert!(a.capacity < *ext.sigma());
                assert_eq!(
                    &a.capacity / &inst.sinks[j].demand,
                    ext.sigma() / &rat(2, 1)
                );
            }
        }
    }
}
