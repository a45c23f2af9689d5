//! JSON wire formats. Nodes and arcs are referenced by name; rationals are
//! strings `"p/q"` (integers are accepted on input).

use serde::{Deserialize, Deserializer, Serialize};

use crate::engine::{Event, NashFlowProfile, Phase, PhaseFlow, PiecewiseLinear};
use crate::network::{
    validate_instance, Arc, ArcId, Instance, NodeId, SinkDemand, Source, ValidationErrors,
};
use crate::rational::{ExtRat, Rat};
use crate::super_sink::build_extended_graph;
use crate::thin_flow::{TfArc, ThinFlow, ThinFlowProblem};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown arc {0:?}")]
    UnknownArc(String),
    #[error("invalid instance:\n{0}")]
    Invalid(#[from] ValidationErrors),
    #[error("{0}")]
    Shape(String),
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(serde_json::Number),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireArc {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    tail: String,
    head: String,
    transit: Rat,
    capacity: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSource {
    node: String,
    rate: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSink {
    node: String,
    demand: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireInstance {
    nodes: Vec<String>,
    arcs: Vec<WireArc>,
    sources: Vec<WireSource>,
    sinks: Vec<WireSink>,
}

fn node_lookup(nodes: &[String], name: &str) -> Result<NodeId, IoError> {
    nodes
        .iter()
        .position(|n| n == name)
        .map(NodeId)
        .ok_or_else(|| IoError::UnknownNode(name.to_string()))
}

impl WireInstance {
    fn from_instance(inst: &Instance) -> Self {
        let name = |v: NodeId| inst.node_name(v).to_string();
        WireInstance {
            nodes: inst.nodes.clone(),
            arcs: inst
                .arcs
                .iter()
                .map(|a| WireArc {
                    id: a.name.clone(),
                    tail: name(a.tail),
                    head: name(a.head),
                    transit: a.transit.clone(),
                    capacity: a.capacity.clone(),
                })
                .collect(),
            sources: inst
                .sources
                .iter()
                .map(|s| WireSource {
                    node: name(s.node),
                    rate: s.rate.clone(),
                })
                .collect(),
            sinks: inst
                .sinks
                .iter()
                .map(|t| WireSink {
                    node: name(t.node),
                    demand: t.demand.clone(),
                })
                .collect(),
        }
    }

    fn into_instance(self) -> Result<Instance, IoError> {
        let nodes = self.nodes;
        let arcs = self
            .arcs
            .into_iter()
            .map(|a| {
                Ok(Arc {
                    tail: node_lookup(&nodes, &a.tail)?,
                    head: node_lookup(&nodes, &a.head)?,
                    name: a.id,
                    transit: a.transit,
                    capacity: a.capacity,
                })
            })
            .collect::<Result<_, IoError>>()?;
        let sources = self
            .sources
            .into_iter()
            .map(|s| {
                Ok(Source {
                    node: node_lookup(&nodes, &s.node)?,
                    rate: s.rate,
                })
            })
            .collect::<Result<_, IoError>>()?;
        let sinks = self
            .sinks
            .into_iter()
            .map(|t| {
                Ok(SinkDemand {
                    node: node_lookup(&nodes, &t.node)?,
                    demand: t.demand,
                })
            })
            .collect::<Result<_, IoError>>()?;
        Ok(Instance {
            nodes,
            arcs,
            sources,
            sinks,
        })
    }
}

/// Parses an instance without validating it.
pub fn instance_from_json(s: &str) -> Result<Instance, IoError> {
    serde_json::from_str::<WireInstance>(s)?.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&WireInstance::from_instance(inst)).expect("serializable")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTfArc {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    tail: String,
    head: String,
    capacity: Rat,
    #[serde(default)]
    resetting: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTfProblem {
    nodes: Vec<String>,
    arcs: Vec<WireTfArc>,
    sources: Vec<WireSource>,
    sink: String,
}

/// Arc ids follow the order of the `arcs` array.
pub fn thin_flow_problem_from_json(s: &str) -> Result<ThinFlowProblem, IoError> {
    let w: WireTfProblem = serde_json::from_str(s)?;
    let nodes = w.nodes;
    let arcs = w
        .arcs
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            Ok(TfArc {
                id: ArcId(i),
                tail: node_lookup(&nodes, &a.tail)?,
                head: node_lookup(&nodes, &a.head)?,
                name: a.id,
                capacity: a.capacity,
                resetting: a.resetting,
            })
        })
        .collect::<Result<_, IoError>>()?;
    let sources = w
        .sources
        .into_iter()
        .map(|s| Ok((node_lookup(&nodes, &s.node)?, s.rate)))
        .collect::<Result<_, IoError>>()?;
    Ok(ThinFlowProblem {
        sink: node_lookup(&nodes, &w.sink)?,
        node_names: nodes,
        arcs,
        sources,
    })
}

pub fn thin_flow_problem_to_json(p: &ThinFlowProblem) -> String {
    let name = |v: NodeId| p.node_names[v.0].clone();
    let w = WireTfProblem {
        nodes: p.node_names.clone(),
        arcs: p
            .arcs
            .iter()
            .map(|a| WireTfArc {
                id: a.name.clone(),
                tail: name(a.tail),
                head: name(a.head),
                capacity: a.capacity.clone(),
                resetting: a.resetting,
            })
            .collect(),
        sources: p
            .sources
            .iter()
            .map(|(v, r)| WireSource {
                node: name(*v),
                rate: r.clone(),
            })
            .collect(),
        sink: name(p.sink),
    };
    serde_json::to_string_pretty(&w).expect("serializable")
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct NodeValue {
    node: String,
    value: Rat,
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct ArcValue {
    arc: String,
    value: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireThinFlow {
    source_splits: Vec<NodeValue>,
    arc_flows: Vec<ArcValue>,
    labels: Vec<NodeValue>,
}

pub fn thin_flow_to_json(p: &ThinFlowProblem, tf: &ThinFlow) -> String {
    let w = WireThinFlow {
        source_splits: p
            .sources
            .iter()
            .zip(&tf.source_splits)
            .map(|((v, _), x)| NodeValue {
                node: p.node_names[v.0].clone(),
                value: x.clone(),
            })
            .collect(),
        arc_flows: p
            .arcs
            .iter()
            .zip(&tf.arc_flows)
            .map(|(a, x)| ArcValue {
                arc: a.name.clone(),
                value: x.clone(),
            })
            .collect(),
        labels: p
            .node_names
            .iter()
            .zip(&tf.labels)
            .map(|(n, l)| NodeValue {
                node: n.clone(),
                value: l.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&w).expect("serializable")
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WireEvent {
    QueueDepleted { arc: String },
    ArcBecameActive { arc: String },
    Horizon,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePhase {
    start: Rat,
    end: ExtRat,
    active: Vec<String>,
    resetting: Vec<String>,
    thin_flow: WireThinFlow,
    events: Vec<WireEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFunction {
    name: String,
    breakpoints: Vec<(Rat, Rat)>,
    final_slope: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireProfile {
    /// The original instance; the super sink extension is rebuilt on load.
    instance: WireInstance,
    horizon: ExtRat,
    phases: Vec<WirePhase>,
    labels: Vec<WireFunction>,
    arc_flows: Vec<WireFunction>,
    source_flows: Vec<WireFunction>,
}

pub fn profile_to_json(p: &NashFlowProfile) -> String {
    let g = p.graph();
    let arc_name = |e: &ArcId| g.arc(*e).name.clone();
    let node_values = |vals: &[Rat]| -> Vec<NodeValue> {
        g.nodes
            .iter()
            .zip(vals)
            .map(|(n, v)| NodeValue {
                node: n.clone(),
                value: v.clone(),
            })
            .collect()
    };
    let function = |name: String, f: &PiecewiseLinear| WireFunction {
        name,
        breakpoints: f.breakpoints.clone(),
        final_slope: f.final_slope.clone(),
    };
    let source_names: Vec<String> = g
        .sources
        .iter()
        .map(|s| g.node_name(s.node).to_string())
        .collect();
    let w = WireProfile {
        instance: WireInstance::from_instance(p.instance.base()),
        horizon: p.horizon.clone(),
        phases: p
            .phases
            .iter()
            .map(|ph| WirePhase {
                start: ph.start.clone(),
                end: ph.end.clone(),
                active: ph.active.iter().map(arc_name).collect(),
                resetting: ph.resetting.iter().map(arc_name).collect(),
                thin_flow: WireThinFlow {
                    source_splits: source_names
                        .iter()
                        .zip(&ph.flow.source_splits)
                        .map(|(n, v)| NodeValue {
                            node: n.clone(),
                            value: v.clone(),
                        })
                        .collect(),
                    arc_flows: g
                        .arcs
                        .iter()
                        .zip(&ph.flow.arc_flows)
                        .map(|(a, v)| ArcValue {
                            arc: a.name.clone(),
                            value: v.clone(),
                        })
                        .collect(),
                    labels: node_values(&ph.flow.labels),
                },
                events: ph
                    .events
                    .iter()
                    .map(|ev| match ev {
                        Event::QueueDepleted(e) => WireEvent::QueueDepleted { arc: arc_name(e) },
                        Event::ArcBecameActive(e) => {
                            WireEvent::ArcBecameActive { arc: arc_name(e) }
                        }
                        Event::Horizon => WireEvent::Horizon,
                    })
                    .collect(),
            })
            .collect(),
        labels: g
            .nodes
            .iter()
            .zip(&p.labels)
            .map(|(n, f)| function(n.clone(), f))
            .collect(),
        arc_flows: g
            .arcs
            .iter()
            .zip(&p.arc_flows)
            .map(|(a, f)| function(a.name.clone(), f))
            .collect(),
        source_flows: source_names
            .iter()
            .zip(&p.source_flows)
            .map(|(n, f)| function(n.clone(), f))
            .collect(),
    };
    serde_json::to_string_pretty(&w).expect("serializable")
}

/// Reorders `items` to follow `names`, requiring each name exactly once.
fn aligned<T>(
    what: &str,
    names: &[String],
    items: Vec<T>,
    key: impl Fn(&T) -> &str,
) -> Result<Vec<T>, IoError> {
    if items.len() != names.len() {
        return Err(IoError::Shape(format!(
            "{what}: expected {} entries, got {}",
            names.len(),
            items.len()
        )));
    }
    let mut slots: Vec<Option<T>> = names.iter().map(|_| None).collect();
    for it in items {
        let k = key(&it);
        let i = names
            .iter()
            .position(|n| n == k)
            .ok_or_else(|| IoError::Shape(format!("{what}: unknown name {k:?}")))?;
        if slots[i].is_some() {
            return Err(IoError::Shape(format!("{what}: duplicate name {k:?}")));
        }
        slots[i] = Some(it);
    }
    Ok(slots.into_iter().map(|s| s.expect("all filled")).collect())
}

fn to_function(w: WireFunction) -> Result<PiecewiseLinear, IoError> {
    if w.breakpoints.is_empty() {
        return Err(IoError::Shape(format!(
            "function {:?} has no breakpoints",
            w.name
        )));
    }
    if w.breakpoints.windows(2).any(|p| p[0].0 >= p[1].0) {
        return Err(IoError::Shape(format!(
            "function {:?}: breakpoints not increasing",
            w.name
        )));
    }
    Ok(PiecewiseLinear {
        breakpoints: w.breakpoints,
        final_slope: w.final_slope,
    })
}

pub fn profile_from_json(s: &str) -> Result<NashFlowProfile, IoError> {
    let w: WireProfile = serde_json::from_str(s)?;
    let base = validate_instance(w.instance.into_instance()?)?;
    let ext = build_extended_graph(&base);
    let g = ext.graph();
    let arc_names: Vec<String> = g.arcs.iter().map(|a| a.name.clone()).collect();
    let source_names: Vec<String> = g
        .sources
        .iter()
        .map(|s| g.node_name(s.node).to_string())
        .collect();
    let arc_id = |n: &str| {
        g.arc_by_name(n)
            .ok_or_else(|| IoError::UnknownArc(n.to_string()))
    };
    let values = |v: Vec<NodeValue>| v.into_iter().map(|x| x.value).collect::<Vec<_>>();

    let mut phases = Vec::with_capacity(w.phases.len());
    for ph in w.phases {
        let tf = ph.thin_flow;
        let flow = PhaseFlow {
            source_splits: values(aligned(
                "source splits",
                &source_names,
                tf.source_splits,
                |x| &x.node,
            )?),
            arc_flows: aligned("arc flows", &arc_names, tf.arc_flows, |x| &x.arc)?
                .into_iter()
                .map(|x| x.value)
                .collect(),
            labels: values(aligned("label slopes", &g.nodes, tf.labels, |x| &x.node)?),
        };
        phases.push(Phase {
            start: ph.start,
            end: ph.end,
            active: ph
                .active
                .iter()
                .map(|n| arc_id(n))
                .collect::<Result<_, _>>()?,
            resetting: ph
                .resetting
                .iter()
                .map(|n| arc_id(n))
                .collect::<Result<_, _>>()?,
            flow,
            events: ph
                .events
                .into_iter()
                .map(|ev| {
                    Ok(match ev {
                        WireEvent::QueueDepleted { arc } => Event::QueueDepleted(arc_id(&arc)?),
                        WireEvent::ArcBecameActive { arc } => Event::ArcBecameActive(arc_id(&arc)?),
                        WireEvent::Horizon => Event::Horizon,
                    })
                })
                .collect::<Result<_, IoError>>()?,
        });
    }
    let functions = |what: &str, names: &[String], fs: Vec<WireFunction>| {
        aligned(what, names, fs, |f| &f.name)?
            .into_iter()
            .map(to_function)
            .collect::<Result<Vec<_>, _>>()
    };
    let labels = functions("labels", &g.nodes, w.labels)?;
    let arc_flows = functions("cumulative arc flows", &arc_names, w.arc_flows)?;
    let source_flows = functions("cumulative source flows", &source_names, w.source_flows)?;
    Ok(NashFlowProfile {
        instance: ext,
        phases,
        labels,
        arc_flows,
        source_flows,
        horizon: w.horizon,
    })
}
