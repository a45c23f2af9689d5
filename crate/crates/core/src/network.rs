//! Fluid queuing network instances and their structural validation.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt;
use std::ops::Deref;

use crate::rational::{ExtRat, Rat};

/// Index of a node in [`Instance::nodes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Index of an arc in [`Instance::arcs`]. Parallel arcs are told apart by this id only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub name: String,
    pub tail: NodeId,
    pub head: NodeId,
    /// Free-flow transit time, `>= 0`.
    pub transit: Rat,
    /// Outflow capacity per unit time, `> 0`.
    pub capacity: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub node: NodeId,
    pub rate: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinkDemand {
    pub node: NodeId,
    pub demand: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Instance {
    pub nodes: Vec<String>,
    pub arcs: Vec<Arc>,
    pub sources: Vec<Source>,
    pub sinks: Vec<SinkDemand>,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.nodes[v.0]
    }

    pub fn arc(&self, e: ArcId) -> &Arc {
        &self.arcs[e.0]
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name).map(NodeId)
    }

    pub fn arc_by_name(&self, name: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.name == name).map(ArcId)
    }

    /// Arcs entering each node, ascending by id.
    pub fn incoming(&self) -> Vec<Vec<ArcId>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            inc[a.head.0].push(ArcId(i));
        }
        inc
    }

    /// Arcs leaving each node, ascending by id.
    pub fn outgoing(&self) -> Vec<Vec<ArcId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            out[a.tail.0].push(ArcId(i));
        }
        out
    }

    pub fn source_index(&self, v: NodeId) -> Option<usize> {
        self.sources.iter().position(|s| s.node == v)
    }

    pub fn sink_index(&self, v: NodeId) -> Option<usize> {
        self.sinks.iter().position(|s| s.node == v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("instance has no nodes")]
    NoNodes,
    #[error("instance has no sources")]
    NoSources,
    #[error("instance has no sinks")]
    NoSinks,
    #[error("duplicate node name {0:?}")]
    DuplicateNodeName(String),
    #[error("duplicate arc id {0:?}")]
    DuplicateArcId(String),
    #[error("arc {0:?} references a node outside the instance")]
    DanglingArc(String),
    #[error("source or sink references node index {0} outside the instance")]
    DanglingTerminal(usize),
    #[error("arc {0:?} has nonpositive capacity")]
    NonpositiveCapacity(String),
    #[error("arc {0:?} has negative transit time")]
    NegativeTransit(String),
    #[error("source {0:?} has nonpositive rate")]
    NonpositiveRate(String),
    #[error("node {0:?} is listed as a source more than once")]
    DuplicateSource(String),
    #[error("sink {0:?} has nonpositive demand")]
    NonpositiveDemand(String),
    #[error("node {0:?} is listed as a sink more than once")]
    DuplicateSink(String),
    #[error("node {0:?} is both a source and a sink")]
    SourceIsSink(String),
    #[error("sink demands sum to {0}, expected 1")]
    DemandSumMismatch(Rat),
    #[error("node {0:?} is not reachable from any source")]
    UnreachableNode(String),
    #[error("node {0:?} cannot reach any sink")]
    NodeCannotReachSink(String),
    #[error("cycle with zero total transit time through arcs {0:?}")]
    ZeroTransitCycle(Vec<String>),
}

/// All violations found in one pass.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid instance: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn contains(&self, pred: impl Fn(&ValidationError) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// An [`Instance`] whose invariants have been certified. Immutable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedInstance(Instance);

impl ValidatedInstance {
    pub fn instance(&self) -> &Instance {
        &self.0
    }

    pub fn into_inner(self) -> Instance {
        self.0
    }
}

impl Deref for ValidatedInstance {
    type Target = Instance;
    fn deref(&self) -> &Instance {
        &self.0
    }
}

/// Checks every structural invariant and reports all violations together.
pub fn validate_instance(raw: Instance) -> Result<ValidatedInstance, ValidationErrors> {
    let mut errs = Vec::new();
    let n = raw.nodes.len();
    if n == 0 {
        errs.push(ValidationError::NoNodes);
    }
    if raw.sources.is_empty() {
        errs.push(ValidationError::NoSources);
    }
    if raw.sinks.is_empty() {
        errs.push(ValidationError::NoSinks);
    }

    let mut seen = HashSet::new();
    for name in &raw.nodes {
        if !seen.insert(name.as_str()) {
            errs.push(ValidationError::DuplicateNodeName(name.clone()));
        }
    }
    let mut seen = HashSet::new();
    let mut arcs_ok = true;
    for a in &raw.arcs {
        if !seen.insert(a.name.as_str()) {
            errs.push(ValidationError::DuplicateArcId(a.name.clone()));
        }
        if a.tail.0 >= n || a.head.0 >= n {
            errs.push(ValidationError::DanglingArc(a.name.clone()));
            arcs_ok = false;
        }
        if !a.capacity.is_positive() {
            errs.push(ValidationError::NonpositiveCapacity(a.name.clone()));
        }
        if a.transit.is_negative() {
            errs.push(ValidationError::NegativeTransit(a.name.clone()));
        }
    }

    let mut terminals_ok = true;
    for v in raw
        .sources
        .iter()
        .map(|s| s.node)
        .chain(raw.sinks.iter().map(|s| s.node))
    {
        if v.0 >= n {
            errs.push(ValidationError::DanglingTerminal(v.0));
            terminals_ok = false;
        }
    }
    if !terminals_ok || !arcs_ok {
        return Err(ValidationErrors(errs));
    }

    let name = |v: NodeId| raw.nodes[v.0].clone();
    let mut seen = HashSet::new();
    for s in &raw.sources {
        if !s.rate.is_positive() {
            errs.push(ValidationError::NonpositiveRate(name(s.node)));
        }
        if !seen.insert(s.node) {
            errs.push(ValidationError::DuplicateSource(name(s.node)));
        }
    }
    let source_set = seen;
    let mut seen = HashSet::new();
    for t in &raw.sinks {
        if !t.demand.is_positive() {
            errs.push(ValidationError::NonpositiveDemand(name(t.node)));
        }
        if !seen.insert(t.node) {
            errs.push(ValidationError::DuplicateSink(name(t.node)));
        }
        if source_set.contains(&t.node) {
            errs.push(ValidationError::SourceIsSink(name(t.node)));
        }
    }
    if !raw.sinks.is_empty() {
        let total: Rat = raw.sinks.iter().map(|t| &t.demand).sum();
        if total != Rat::one() {
            errs.push(ValidationError::DemandSumMismatch(total));
        }
    }

    let out = raw.outgoing();
    let inc = raw.incoming();
    let fwd = reach(n, raw.sources.iter().map(|s| s.node), |v| {
        out[v.0].iter().map(|e| raw.arcs[e.0].head).collect()
    });
    let bwd = reach(n, raw.sinks.iter().map(|s| s.node), |v| {
        inc[v.0].iter().map(|e| raw.arcs[e.0].tail).collect()
    });
    for v in raw.node_ids() {
        if !fwd[v.0] && !raw.sources.is_empty() {
            errs.push(ValidationError::UnreachableNode(name(v)));
        }
        if !bwd[v.0] && !raw.sinks.is_empty() {
            errs.push(ValidationError::NodeCannotReachSink(name(v)));
        }
    }

    if let Some(cycle) = zero_transit_cycle(&raw) {
        errs.push(ValidationError::ZeroTransitCycle(
            cycle.iter().map(|e| raw.arcs[e.0].name.clone()).collect(),
        ));
    }

    if errs.is_empty() {
        Ok(ValidatedInstance(raw))
    } else {
        Err(ValidationErrors(errs))
    }
}

fn reach(
    n: usize,
    starts: impl Iterator<Item = NodeId>,
    next: impl Fn(NodeId) -> Vec<NodeId>,
) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack: Vec<NodeId> = starts.collect();
    for v in &stack {
        seen[v.0] = true;
    }
    while let Some(v) = stack.pop() {
        for w in next(v) {
            if !seen[w.0] {
                seen[w.0] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Finds a directed cycle using only zero-transit arcs, if any.
fn zero_transit_cycle(inst: &Instance) -> Option<Vec<ArcId>> {
    let n = inst.nodes.len();
    let mut zero_out: Vec<Vec<ArcId>> = vec![Vec::new(); n];
    for e in inst.arc_ids() {
        let a = inst.arc(e);
        if a.transit.is_zero() {
            zero_out[a.tail.0].push(e);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut via: Vec<Option<ArcId>> = vec![None; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&e) = zero_out[v].get(*next) {
                *next += 1;
                let w = inst.arc(e).head.0;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        via[w] = Some(e);
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![e];
                        let mut x = v;
                        while x != w {
                            let back = via[x].expect("stack node has a parent arc");
                            cycle.push(back);
                            x = inst.arc(back).tail.0;
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Transit-time distances from the nearest of `starts` to every node.
pub fn transit_distances_from(inst: &Instance, starts: &[NodeId]) -> Vec<ExtRat> {
    let out = inst.outgoing();
    dijkstra(inst.nodes.len(), starts, |v| {
        out[v.0]
            .iter()
            .map(|&e| (inst.arc(e).head, inst.arc(e).transit.clone()))
            .collect()
    })
}

/// Transit-time distances from every node to `target`.
pub fn transit_distances_to(inst: &Instance, target: NodeId) -> Vec<ExtRat> {
    let inc = inst.incoming();
    dijkstra(inst.nodes.len(), &[target], |v| {
        inc[v.0]
            .iter()
            .map(|&e| (inst.arc(e).tail, inst.arc(e).transit.clone()))
            .collect()
    })
}

fn dijkstra(
    n: usize,
    starts: &[NodeId],
    neighbours: impl Fn(NodeId) -> Vec<(NodeId, Rat)>,
) -> Vec<ExtRat> {
    let mut dist = vec![ExtRat::Infinity; n];
    let mut heap = BinaryHeap::new();
    for &s in starts {
        dist[s.0] = ExtRat::Finite(Rat::zero());
        heap.push(Reverse((Rat::zero(), s.0)));
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if ExtRat::Finite(d.clone()) > dist[v] {
            continue;
        }
        for (w, len) in neighbours(NodeId(v)) {
            let nd = &d + &len;
            if ExtRat::Finite(nd.clone()) < dist[w.0] {
                dist[w.0] = ExtRat::Finite(nd.clone());
                heap.push(Reverse((nd, w.0)));
            }
        }
    }
    dist
}

/// For each source, the transit length of a shortest path to `target`.
pub fn shortest_transit_distances(
    inst: &ValidatedInstance,
    target: NodeId,
) -> BTreeMap<NodeId, ExtRat> {
    let to = transit_distances_to(inst, target);
    inst.sources
        .iter()
        .map(|s| (s.node, to[s.node.0].clone()))
        .collect()
}

/// Small builder used by tests, examples and the generator.
#[derive(Default)]
pub struct InstanceBuilder {
    inst: Instance,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, adding the node on first use.
    pub fn node(&mut self, name: &str) -> NodeId {
        match self.inst.node_by_name(name) {
            Some(v) => v,
            None => {
                self.inst.nodes.push(name.to_string());
                NodeId(self.inst.nodes.len() - 1)
            }
        }
    }

    pub fn arc(
        &mut self,
        name: &str,
        tail: &str,
        head: &str,
        transit: Rat,
        capacity: Rat,
    ) -> ArcId {
        let tail = self.node(tail);
        let head = self.node(head);
        self.inst.arcs.push(Arc {
            name: name.to_string(),
            tail,
            head,
            transit,
            capacity,
        });
        ArcId(self.inst.arcs.len() - 1)
    }

    pub fn source(&mut self, node: &str, rate: Rat) -> &mut Self {
        let node = self.node(node);
        self.inst.sources.push(Source { node, rate });
        self
    }

    pub fn sink(&mut self, node: &str, demand: Rat) -> &mut Self {
        let node = self.node(node);
        self.inst.sinks.push(SinkDemand { node, demand });
        self
    }

    pub fn build(&self) -> Instance {
        self.inst.clone()
    }
}
