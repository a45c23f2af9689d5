//! Thin flows with resetting on an acyclic subgraph with a single sink.
//!
//! A thin flow is the derivative of an equilibrium inside one phase: a static
//! unit flow together with node label slopes. [`check_thin_flow`] decides the
//! defining conditions exactly, [`solve_thin_flow`] searches for a solution and
//! certifies it, and [`oracle_enumerate`] is an independent brute force used to
//! cross-check the solver.

mod lp;
mod oracle;
mod solver;

use std::collections::HashSet;
use std::fmt;

use crate::network::{ArcId, Instance, NodeId};
use crate::rational::Rat;
use crate::report::CertReport;

pub use oracle::{oracle_enumerate, oracle_enumerate_with_bound, DEFAULT_ORACLE_BOUND};
pub use solver::{solve_thin_flow, solve_thin_flow_with_hint, ArcState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TfArc {
    pub id: ArcId,
    pub name: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: Rat,
    pub resetting: bool,
}

/// Input of a thin-flow computation. `arcs` holds exactly the subgraph arcs,
/// sorted by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinFlowProblem {
    pub node_names: Vec<String>,
    pub arcs: Vec<TfArc>,
    /// `(node, rate)` per source.
    pub sources: Vec<(NodeId, Rat)>,
    pub sink: NodeId,
}

/// A candidate or certified thin flow. `arc_flows` is aligned with
/// `ThinFlowProblem::arcs`, `source_splits` with its sources and `labels`
/// with its nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThinFlow {
    pub source_splits: Vec<Rat>,
    pub arc_flows: Vec<Rat>,
    pub labels: Vec<Rat>,
}

#[derive(Debug, thiserror::Error)]
pub enum ThinFlowError {
    #[error("invalid thin-flow problem: {0}")]
    InvalidProblem(String),
    /// A thin flow always exists on a valid problem, so this is a solver bug.
    #[error("no thin flow found; problem dump:\n{0}")]
    NoThinFlowFound(String),
    #[error("oracle bound exceeded: {arcs} subgraph arcs, bound {bound}")]
    OracleBoundExceeded { arcs: usize, bound: usize },
}

impl ThinFlowProblem {
    /// Restricts `graph` to `active`, marking `resetting` arcs.
    pub fn from_subgraph(
        graph: &Instance,
        active: &[ArcId],
        resetting: &[ArcId],
        sink: NodeId,
    ) -> ThinFlowProblem {
        let resetting: HashSet<ArcId> = resetting.iter().copied().collect();
        let mut ids: Vec<ArcId> = active.to_vec();
        ids.sort();
        ids.dedup();
        ThinFlowProblem {
            node_names: graph.nodes.clone(),
            arcs: ids
                .into_iter()
                .map(|e| {
                    let a = graph.arc(e);
                    TfArc {
                        id: e,
                        name: a.name.clone(),
                        tail: a.tail,
                        head: a.head,
                        capacity: a.capacity.clone(),
                        resetting: resetting.contains(&e),
                    }
                })
                .collect(),
            sources: graph
                .sources
                .iter()
                .map(|s| (s.node, s.rate.clone()))
                .collect(),
            sink,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn source_index(&self, v: NodeId) -> Option<usize> {
        self.sources.iter().position(|(s, _)| *s == v)
    }

    pub fn arc_index(&self, id: ArcId) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    /// Indices into `arcs` entering each node.
    pub(crate) fn incoming(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.node_count()];
        for (i, a) in self.arcs.iter().enumerate() {
            inc[a.head.0].push(i);
        }
        inc
    }

    pub(crate) fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count()];
        for (i, a) in self.arcs.iter().enumerate() {
            out[a.tail.0].push(i);
        }
        out
    }

    /// Checks the structural preconditions under which a thin flow exists.
    pub fn validate(&self) -> Result<(), ThinFlowError> {
        let bad = |m: String| Err(ThinFlowError::InvalidProblem(m));
        let n = self.node_count();
        if self.sources.is_empty() {
            return bad("no sources".into());
        }
        if self.sink.0 >= n {
            return bad("sink outside node range".into());
        }
        let mut seen = HashSet::new();
        for (v, r) in &self.sources {
            if v.0 >= n {
                return bad(format!("source {v} outside node range"));
            }
            if !r.is_positive() {
                return bad(format!(
                    "source {} has nonpositive rate",
                    self.node_names[v.0]
                ));
            }
            if !seen.insert(*v) {
                return bad(format!("duplicate source {}", self.node_names[v.0]));
            }
            if *v == self.sink {
                return bad("sink is a source".into());
            }
        }
        let mut ids = HashSet::new();
        for w in self.arcs.windows(2) {
            if w[0].id >= w[1].id {
                return bad("arcs not sorted by id".into());
            }
        }
        for a in &self.arcs {
            if a.tail.0 >= n || a.head.0 >= n {
                return bad(format!("arc {} outside node range", a.name));
            }
            if !a.capacity.is_positive() {
                return bad(format!("arc {} has nonpositive capacity", a.name));
            }
            ids.insert(a.id);
        }
        if self.topological_order().is_none() {
            return bad("subgraph has a directed cycle".into());
        }
        let out = self.outgoing();
        let mut reached = vec![false; n];
        let mut stack: Vec<usize> = self.sources.iter().map(|(v, _)| v.0).collect();
        for &v in &stack {
            reached[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &i in &out[v] {
                let w = self.arcs[i].head.0;
                if !reached[w] {
                    reached[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return bad(format!(
                "node {} not reachable from a source",
                self.node_names[v]
            ));
        }
        // Some source must reach the sink; reachability of every node from a
        // source alone already guarantees the sink is reached.
        Ok(())
    }

    /// Kahn order of the nodes, or `None` on a cycle.
    pub(crate) fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indeg = vec![0usize; n];
        for a in &self.arcs {
            indeg[a.head.0] += 1;
        }
        let out = self.outgoing();
        let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &i in &out[v] {
                let w = self.arcs[i].head.0;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Human-readable dump for triage.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("nodes: {:?}\n", self.node_names));
        s.push_str(&format!("sink: {}\n", self.node_names[self.sink.0]));
        for (v, r) in &self.sources {
            s.push_str(&format!("source {} rate {}\n", self.node_names[v.0], r));
        }
        for a in &self.arcs {
            s.push_str(&format!(
                "arc {} {}->{} capacity {}{}\n",
                a.name,
                self.node_names[a.tail.0],
                self.node_names[a.head.0],
                a.capacity,
                if a.resetting { " resetting" } else { "" }
            ));
        }
        s
    }
}

impl fmt::Display for ThinFlowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Congestion of an arc: `x/ν` on resetting arcs, `max(ℓ'_tail, x/ν)` otherwise.
pub fn congestion(tail_label: &Rat, flow: &Rat, capacity: &Rat, resetting: bool) -> Rat {
    let ratio = flow / capacity;
    if resetting {
        ratio
    } else {
        ratio.max(tail_label.clone())
    }
}

/// Verifies conservation, the split normalisation and all four label
/// conditions, listing every failure.
pub fn check_thin_flow(p: &ThinFlowProblem, tf: &ThinFlow) -> CertReport {
    let mut rep = CertReport::new();
    let n = p.node_count();
    if tf.labels.len() != n
        || tf.arc_flows.len() != p.arcs.len()
        || tf.source_splits.len() != p.sources.len()
    {
        rep.push(
            "shape",
            "thin flow",
            "vector lengths do not match the problem",
        );
        return rep;
    }
    let name = |v: usize| p.node_names[v].as_str();

    for (i, x) in tf.source_splits.iter().enumerate() {
        if x.is_negative() {
            rep.push(
                "nonnegativity",
                format!("source {}", name(p.sources[i].0 .0)),
                format!("split {x}"),
            );
        }
    }
    for (i, x) in tf.arc_flows.iter().enumerate() {
        if x.is_negative() {
            rep.push(
                "nonnegativity",
                format!("arc {}", p.arcs[i].name),
                format!("flow {x}"),
            );
        }
    }
    for (v, l) in tf.labels.iter().enumerate() {
        if l.is_negative() {
            rep.push(
                "nonnegativity",
                format!("node {}", name(v)),
                format!("label {l}"),
            );
        }
    }
    let total: Rat = tf.source_splits.iter().sum();
    if total != Rat::one() {
        rep.push("split sum", "sources", format!("splits sum to {total}"));
    }

    let mut net_out = vec![Rat::zero(); n];
    for (a, x) in p.arcs.iter().zip(&tf.arc_flows) {
        net_out[a.tail.0] += x;
        net_out[a.head.0] -= x;
    }
    for (v, net) in net_out.iter().enumerate() {
        let expected = if v == p.sink.0 {
            -Rat::one()
        } else {
            match p.source_index(NodeId(v)) {
                Some(i) => tf.source_splits[i].clone(),
                None => Rat::zero(),
            }
        };
        if *net != expected {
            rep.push(
                "conservation",
                format!("node {}", name(v)),
                format!("net outflow {} expected {}", net, expected),
            );
        }
    }

    let inc = p.incoming();
    let rho: Vec<Rat> = p
        .arcs
        .iter()
        .zip(&tf.arc_flows)
        .map(|(a, x)| congestion(&tf.labels[a.tail.0], x, &a.capacity, a.resetting))
        .collect();
    let min_rho = |v: usize| inc[v].iter().map(|&i| &rho[i]).min().cloned();

    for (i, (s, r)) in p.sources.iter().enumerate() {
        let expected = &tf.source_splits[i] / r;
        if tf.labels[s.0] != expected {
            rep.push(
                "source label",
                format!("source {}", name(s.0)),
                format!("label {} but split/rate is {}", tf.labels[s.0], expected),
            );
        }
        if let Some(m) = min_rho(s.0) {
            if tf.labels[s.0] > m {
                rep.push(
                    "source congestion",
                    format!("source {}", name(s.0)),
                    format!(
                        "label {} exceeds min incoming congestion {}",
                        tf.labels[s.0], m
                    ),
                );
            }
        }
    }
    for v in 0..n {
        if p.source_index(NodeId(v)).is_some() {
            continue;
        }
        match min_rho(v) {
            None => rep.push(
                "node label",
                format!("node {}", name(v)),
                "no incoming subgraph arc",
            ),
            Some(m) if m != tf.labels[v] => rep.push(
                "node label",
                format!("node {}", name(v)),
                format!("label {} but min incoming congestion {}", tf.labels[v], m),
            ),
            _ => {}
        }
    }
    for (i, a) in p.arcs.iter().enumerate() {
        if tf.arc_flows[i].is_positive() && tf.labels[a.head.0] != rho[i] {
            rep.push(
                "used arc congestion",
                format!("arc {}", a.name),
                format!(
                    "carries {} but head label {} differs from congestion {}",
                    tf.arc_flows[i], tf.labels[a.head.0], rho[i]
                ),
            );
        }
    }
    rep
}
