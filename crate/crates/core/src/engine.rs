//! Phase-by-phase construction of a Nash flow over time on a single-sink
//! (extended) instance.
//!
//! Everything is parameterised by particle `φ`. Each phase solves a thin flow
//! on the current active subgraph and extends labels and cumulative flows
//! linearly for as long as the active and resetting sets stay valid.

use std::collections::HashMap;
use std::fmt;

use log::{debug, info};

use crate::checker::{verify_nash, NashCertificate};
use crate::network::{ArcId, Instance, NodeId, ValidatedInstance};
use crate::rational::{ExtRat, Rat};
use crate::super_sink::{build_extended_graph, ExtendedInstance};
use crate::thin_flow::{
    solve_thin_flow_with_hint, ArcState, ThinFlow, ThinFlowError, ThinFlowProblem,
};

pub const DEFAULT_PHI_MAX: i64 = 1000;
pub const DEFAULT_PHASE_CAP: usize = 10_000;

/// Continuous piecewise-linear function given by breakpoints; constant to
/// the left of the first breakpoint and continued with `final_slope` to the
/// right of the last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinear {
    pub breakpoints: Vec<(Rat, Rat)>,
    pub final_slope: Rat,
}

impl PiecewiseLinear {
    pub fn starting_at(x: Rat, y: Rat) -> Self {
        PiecewiseLinear {
            breakpoints: vec![(x, y)],
            final_slope: Rat::zero(),
        }
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let bp = &self.breakpoints;
        let (x0, y0) = &bp[0];
        if x <= x0 {
            return y0.clone();
        }
        let k = bp.partition_point(|(bx, _)| bx <= x);
        if k == bp.len() {
            let (xl, yl) = &bp[k - 1];
            return yl + &(&self.final_slope * &(x - xl));
        }
        let (xa, ya) = &bp[k - 1];
        let (xb, yb) = &bp[k];
        ya + &(&(yb - ya) * &(&(x - xa) / &(xb - xa)))
    }

    /// Slope of the piece starting at or containing `x` (right derivative).
    pub fn slope_right_of(&self, x: &Rat) -> Rat {
        let bp = &self.breakpoints;
        let k = bp.partition_point(|(bx, _)| bx <= x);
        if k == 0 {
            return Rat::zero();
        }
        if k == bp.len() {
            return self.final_slope.clone();
        }
        let (xa, ya) = &bp[k - 1];
        let (xb, yb) = &bp[k];
        &(yb - ya) / &(xb - xa)
    }

    pub fn last_value(&self) -> &Rat {
        &self.breakpoints.last().expect("nonempty").1
    }

    pub fn is_nondecreasing(&self) -> bool {
        !self.final_slope.is_negative() && self.breakpoints.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    fn push_segment(&mut self, slope: &Rat, length: &ExtRat) {
        if let ExtRat::Finite(len) = length {
            let (x, y) = self.breakpoints.last().expect("nonempty").clone();
            self.breakpoints.push((&x + len, &y + &(slope * len)));
        }
        self.final_slope = slope.clone();
    }
}

/// Piecewise-constant rate: `pieces[i].1` holds on `(pieces[i].0, pieces[i+1].0]`,
/// the last value holds to infinity and the function is zero before the first
/// start.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PiecewiseConstant {
    pub pieces: Vec<(Rat, Rat)>,
}

impl PiecewiseConstant {
    pub fn eval(&self, x: &Rat) -> Rat {
        let k = self.pieces.partition_point(|(s, _)| s < x);
        if k == 0 {
            Rat::zero()
        } else {
            self.pieces[k - 1].1.clone()
        }
    }

    /// Appends a piece, merging with the previous one when the value repeats.
    pub(crate) fn push(&mut self, start: Rat, value: Rat) {
        if let Some((s, v)) = self.pieces.last_mut() {
            if *s == start {
                *v = value;
                self.dedup_tail();
                return;
            }
            if *v == value {
                return;
            }
        } else if value.is_zero() {
            return;
        }
        self.pieces.push((start, value));
    }

    fn dedup_tail(&mut self) {
        let k = self.pieces.len();
        if (k >= 2 && self.pieces[k - 1].1 == self.pieces[k - 2].1)
            || (k == 1 && self.pieces[0].1.is_zero())
        {
            self.pieces.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    QueueDepleted(ArcId),
    ArcBecameActive(ArcId),
    Horizon,
}

/// Derivatives of one phase, aligned with the full extended graph (flows are
/// zero off the active set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseFlow {
    pub source_splits: Vec<Rat>,
    pub arc_flows: Vec<Rat>,
    pub labels: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub start: Rat,
    pub end: ExtRat,
    pub active: Vec<ArcId>,
    pub resetting: Vec<ArcId>,
    pub flow: PhaseFlow,
    /// Constraints tight at `end`, plus `Horizon` if the run was cut there.
    pub events: Vec<Event>,
}

impl Phase {
    pub fn thin_flow_problem(&self, graph: &Instance, sink: NodeId) -> ThinFlowProblem {
        ThinFlowProblem::from_subgraph(graph, &self.active, &self.resetting, sink)
    }

    /// The phase flow restricted to the active arcs of `problem`.
    pub fn thin_flow(&self, problem: &ThinFlowProblem) -> ThinFlow {
        ThinFlow {
            source_splits: self.flow.source_splits.clone(),
            arc_flows: problem
                .arcs
                .iter()
                .map(|a| self.flow.arc_flows[a.id.0].clone())
                .collect(),
            labels: self.flow.labels.clone(),
        }
    }

    pub fn length(&self) -> ExtRat {
        match &self.end {
            ExtRat::Finite(e) => ExtRat::Finite(e - &self.start),
            ExtRat::Infinity => ExtRat::Infinity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NashFlowProfile {
    pub instance: ExtendedInstance,
    pub phases: Vec<Phase>,
    /// Earliest arrival labels per node of the extended graph.
    pub labels: Vec<PiecewiseLinear>,
    /// Cumulative static flow per arc of the extended graph.
    pub arc_flows: Vec<PiecewiseLinear>,
    /// Cumulative inflow per source.
    pub source_flows: Vec<PiecewiseLinear>,
    /// Last particle covered, or infinity once a steady state was reached.
    pub horizon: ExtRat,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("phase cap of {cap} reached at particle {}", .partial.horizon)]
    PhaseCapExceeded {
        cap: usize,
        partial: Box<NashFlowProfile>,
    },
    #[error("labels infeasible at particle {phi}: {detail}")]
    InfeasibleLabels { phi: Rat, detail: String },
    #[error("nonpositive phase length {0}")]
    NonpositiveAlpha(Rat),
    #[error("super arc invariant violated at particle {phi}: {detail}")]
    SuperArcInvariant { phi: Rat, detail: String },
    #[error("horizon must be positive, got {0}")]
    InvalidHorizon(ExtRat),
    #[error("phase cap must be at least 1")]
    InvalidPhaseCap,
    #[error(transparent)]
    ThinFlow(#[from] ThinFlowError),
    #[error("constructed profile failed certification:\n{0}")]
    CertificationFailed(Box<NashCertificate>),
}

/// Labels at particle 0: transit distance from the nearest source.
pub fn initial_labels(inst: &ExtendedInstance) -> Vec<Rat> {
    let g = inst.graph();
    let sources: Vec<NodeId> = g.sources.iter().map(|s| s.node).collect();
    crate::network::transit_distances_from(g, &sources)
        .into_iter()
        .map(|d| match d {
            ExtRat::Finite(d) => d,
            ExtRat::Infinity => unreachable!("validated nodes are reachable from a source"),
        })
        .collect()
}

/// Active arcs (`ℓ_v >= ℓ_u + τ`) and resetting arcs (strict), ascending by id.
pub fn active_and_resetting_sets(
    graph: &Instance,
    labels: &[Rat],
) -> Result<(Vec<ArcId>, Vec<ArcId>), EngineError> {
    let mut active = Vec::new();
    let mut resetting = Vec::new();
    let mut has_active_in = vec![false; graph.node_count()];
    for e in graph.arc_ids() {
        let a = graph.arc(e);
        let reach = &labels[a.tail.0] + &a.transit;
        if labels[a.head.0] >= reach {
            active.push(e);
            has_active_in[a.head.0] = true;
            if labels[a.head.0] > reach {
                resetting.push(e);
            }
        }
    }
    for v in graph.node_ids() {
        if graph.source_index(v).is_none() && !has_active_in[v.0] {
            return Err(EngineError::InfeasibleLabels {
                phi: Rat::zero(),
                detail: format!("node {} has no active incoming arc", graph.node_name(v)),
            });
        }
    }
    Ok((active, resetting))
}

/// Longest extension keeping resetting arcs resetting and inactive arcs
/// inactive, with the constraints that become tight there.
pub fn compute_alpha(
    graph: &Instance,
    labels: &[Rat],
    active: &[ArcId],
    resetting: &[ArcId],
    slopes: &[Rat],
) -> Result<(ExtRat, Vec<Event>), EngineError> {
    let mut best = ExtRat::Infinity;
    let mut events = Vec::new();
    let mut consider = |bound: Rat, ev: Event| {
        let bound = ExtRat::Finite(bound);
        if bound < best {
            best = bound;
            events.clear();
            events.push(ev);
        } else if bound == best {
            events.push(ev);
        }
    };
    let mut is_active = vec![false; graph.arcs.len()];
    for e in active {
        is_active[e.0] = true;
    }
    for &e in resetting {
        let a = graph.arc(e);
        let (u, v) = (a.tail.0, a.head.0);
        if slopes[v] < slopes[u] {
            let slack = &(&labels[v] - &labels[u]) - &a.transit;
            consider(&slack / &(&slopes[u] - &slopes[v]), Event::QueueDepleted(e));
        }
    }
    for e in graph.arc_ids() {
        if is_active[e.0] {
            continue;
        }
        let a = graph.arc(e);
        let (u, v) = (a.tail.0, a.head.0);
        if slopes[v] > slopes[u] {
            let slack = &(&a.transit - &labels[v]) + &labels[u];
            consider(
                &slack / &(&slopes[v] - &slopes[u]),
                Event::ArcBecameActive(e),
            );
        }
    }
    if let ExtRat::Finite(a) = &best {
        if !a.is_positive() {
            return Err(EngineError::NonpositiveAlpha(a.clone()));
        }
    }
    Ok((best, events))
}

impl NashFlowProfile {
    /// Profile of length zero: labels at particle 0, no flow yet.
    pub fn empty(inst: ExtendedInstance) -> Self {
        let l0 = initial_labels(&inst);
        let g = inst.graph();
        let zero = || PiecewiseLinear::starting_at(Rat::zero(), Rat::zero());
        NashFlowProfile {
            labels: l0
                .into_iter()
                .map(|v| PiecewiseLinear::starting_at(Rat::zero(), v))
                .collect(),
            arc_flows: (0..g.arcs.len()).map(|_| zero()).collect(),
            source_flows: (0..g.sources.len()).map(|_| zero()).collect(),
            phases: Vec::new(),
            horizon: ExtRat::Finite(Rat::zero()),
            instance: inst,
        }
    }

    pub fn graph(&self) -> &ValidatedInstance {
        self.instance.graph()
    }

    /// Particle at which the next phase would start.
    pub fn current_phi(&self) -> Option<&Rat> {
        self.horizon.finite()
    }

    pub fn labels_at(&self, phi: &Rat) -> Vec<Rat> {
        self.labels.iter().map(|l| l.eval(phi)).collect()
    }

    pub fn is_steady_state(&self) -> bool {
        self.horizon == ExtRat::Infinity
    }
}

/// Appends a phase of length `alpha` with derivatives `flow`.
pub fn extend(
    profile: &mut NashFlowProfile,
    active: Vec<ArcId>,
    resetting: Vec<ArcId>,
    flow: PhaseFlow,
    alpha: ExtRat,
    events: Vec<Event>,
) -> Result<(), EngineError> {
    let start = profile
        .current_phi()
        .cloned()
        .expect("cannot extend past a steady state");
    if let ExtRat::Finite(a) = &alpha {
        if !a.is_positive() {
            return Err(EngineError::NonpositiveAlpha(a.clone()));
        }
    }
    for (f, s) in profile.labels.iter_mut().zip(&flow.labels) {
        f.push_segment(s, &alpha);
    }
    for (f, s) in profile.arc_flows.iter_mut().zip(&flow.arc_flows) {
        f.push_segment(s, &alpha);
    }
    for (f, s) in profile.source_flows.iter_mut().zip(&flow.source_splits) {
        f.push_segment(s, &alpha);
    }
    let end = match &alpha {
        ExtRat::Finite(a) => ExtRat::Finite(&start + a),
        ExtRat::Infinity => ExtRat::Infinity,
    };
    profile.horizon = end.clone();
    profile.phases.push(Phase {
        start,
        end,
        active,
        resetting,
        flow,
        events,
    });
    Ok(())
}

/// Runs the phase loop without the final certification.
pub fn construct_nash_flow_unchecked(
    inst: &ExtendedInstance,
    phi_max: &ExtRat,
    phase_cap: usize,
) -> Result<NashFlowProfile, EngineError> {
    if phase_cap == 0 {
        return Err(EngineError::InvalidPhaseCap);
    }
    if let ExtRat::Finite(p) = phi_max {
        if !p.is_positive() {
            return Err(EngineError::InvalidHorizon(phi_max.clone()));
        }
    }
    let mut profile = NashFlowProfile::empty(inst.clone());
    let graph = inst.graph().instance().clone();
    let sink = inst.super_sink();
    let mut hint: HashMap<ArcId, ArcState> = HashMap::new();

    while let Some(phi) = profile.current_phi().cloned() {
        if ExtRat::Finite(phi.clone()) >= *phi_max {
            break;
        }
        if profile.phases.len() >= phase_cap {
            return Err(EngineError::PhaseCapExceeded {
                cap: phase_cap,
                partial: Box::new(profile),
            });
        }
        let labels = profile.labels_at(&phi);
        let (active, resetting) =
            active_and_resetting_sets(&graph, &labels).map_err(|e| match e {
                EngineError::InfeasibleLabels { detail, .. } => EngineError::InfeasibleLabels {
                    phi: phi.clone(),
                    detail,
                },
                other => other,
            })?;

        let problem = ThinFlowProblem::from_subgraph(&graph, &active, &resetting, sink);
        let hint_vec: Vec<ArcState> = problem
            .arcs
            .iter()
            .map(|a| hint.get(&a.id).copied().unwrap_or(ArcState::Saturated))
            .collect();
        let (tf, pattern) = solve_thin_flow_with_hint(&problem, Some(&hint_vec))?;
        for (a, s) in problem.arcs.iter().zip(&pattern) {
            hint.insert(a.id, *s);
        }
        let mut arc_flows = vec![Rat::zero(); graph.arcs.len()];
        for (a, x) in problem.arcs.iter().zip(&tf.arc_flows) {
            arc_flows[a.id.0] = x.clone();
        }
        check_super_arcs(inst, &active, &arc_flows, &phi)?;

        let (alpha, mut events) = compute_alpha(&graph, &labels, &active, &resetting, &tf.labels)?;
        // A steady state covers every particle, so it is kept even past the horizon.
        let alpha = match (phi_max, &alpha) {
            (ExtRat::Finite(pm), ExtRat::Finite(a)) => {
                let room = pm - &phi;
                if room < *a {
                    events = vec![Event::Horizon];
                    ExtRat::Finite(room)
                } else {
                    if room == *a {
                        events.push(Event::Horizon);
                    }
                    alpha
                }
            }
            _ => alpha,
        };
        debug!(
            "phase {} at {}: |active|={} |resetting|={} alpha={} events={:?}",
            profile.phases.len(),
            phi,
            active.len(),
            resetting.len(),
            alpha,
            events
        );
        let flow = PhaseFlow {
            source_splits: tf.source_splits,
            arc_flows,
            labels: tf.labels,
        };
        extend(&mut profile, active, resetting, flow, alpha, events)?;
    }
    info!(
        "constructed {} phases up to particle {}",
        profile.phases.len(),
        profile.horizon
    );
    Ok(profile)
}

fn check_super_arcs(
    inst: &ExtendedInstance,
    active: &[ArcId],
    arc_flows: &[Rat],
    phi: &Rat,
) -> Result<(), EngineError> {
    for (j, &e) in inst.super_arcs().iter().enumerate() {
        let name = &inst.graph().arc(e).name;
        if !active.contains(&e) {
            return Err(EngineError::SuperArcInvariant {
                phi: phi.clone(),
                detail: format!("{name} inactive"),
            });
        }
        let d = &inst.base().sinks[j].demand;
        if arc_flows[e.0] != *d {
            return Err(EngineError::SuperArcInvariant {
                phi: phi.clone(),
                detail: format!("{name} carries {} instead of demand {d}", arc_flows[e.0]),
            });
        }
    }
    Ok(())
}

/// Runs the phase loop and certifies the result with the independent checker.
pub fn construct_nash_flow(
    inst: &ExtendedInstance,
    phi_max: &ExtRat,
    phase_cap: usize,
) -> Result<NashFlowProfile, EngineError> {
    let profile = construct_nash_flow_unchecked(inst, phi_max, phase_cap)?;
    let cert = verify_nash(&profile);
    if !cert.is_pass() {
        return Err(EngineError::CertificationFailed(Box::new(cert)));
    }
    Ok(profile)
}

/// Multi-sink entry point: extends by a super sink, then constructs.
pub fn solve_instance(
    inst: &ValidatedInstance,
    phi_max: &ExtRat,
    phase_cap: usize,
) -> Result<NashFlowProfile, EngineError> {
    construct_nash_flow(&build_extended_graph(inst), phi_max, phase_cap)
}

/// Rate `x'_e / ℓ'_node` on the time intervals `(ℓ_node(φ_k), ℓ_node(φ_{k+1})]`,
/// where `node` is the tail for inflow and the head for outflow.
fn rate_functions(profile: &NashFlowProfile, use_head: bool) -> Vec<PiecewiseConstant> {
    let g = profile.graph();
    g.arc_ids()
        .map(|e| {
            let a = g.arc(e);
            let v = if use_head { a.head } else { a.tail };
            let label = &profile.labels[v.0];
            let mut pc = PiecewiseConstant::default();
            for ph in &profile.phases {
                let slope = &ph.flow.labels[v.0];
                if slope.is_zero() {
                    continue;
                }
                pc.push(label.eval(&ph.start), &ph.flow.arc_flows[e.0] / slope);
            }
            if let (Some(last), ExtRat::Finite(end)) = (profile.phases.last(), &profile.horizon) {
                if last.end.is_finite() {
                    pc.push(label.eval(end), Rat::zero());
                }
            }
            pc
        })
        .collect()
}

/// Inflow rate per arc over time.
pub fn inflow_functions(profile: &NashFlowProfile) -> Vec<PiecewiseConstant> {
    rate_functions(profile, false)
}

/// Outflow rate per arc over time.
pub fn outflow_functions(profile: &NashFlowProfile) -> Vec<PiecewiseConstant> {
    rate_functions(profile, true)
}

/// Share of each particle entering at each source.
pub fn source_distribution(profile: &NashFlowProfile) -> Vec<PiecewiseConstant> {
    (0..profile.graph().sources.len())
        .map(|i| {
            let mut pc = PiecewiseConstant::default();
            for ph in &profile.phases {
                pc.push(ph.start.clone(), ph.flow.source_splits[i].clone());
            }
            if let ExtRat::Finite(end) = &profile.horizon {
                if !profile.phases.is_empty() {
                    pc.push(end.clone(), Rat::zero());
                }
            }
            pc
        })
        .collect()
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::QueueDepleted(e) => write!(f, "queue_depleted({e})"),
            Event::ArcBecameActive(e) => write!(f, "arc_became_active({e})"),
            Event::Horizon => f.write_str("horizon"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::samples as fixtures;

    #[test]
    fn pwl_eval_and_slopes() {
        let f = PiecewiseLinear {
            breakpoints: vec![(rat(0, 1), rat(0, 1)), (rat(2, 1), rat(1, 1))],
            final_slope: rat(3, 1),
        };
        assert_eq!(f.eval(&rat(-1, 1)), rat(0, 1));
        assert_eq!(f.eval(&rat(1, 1)), rat(1, 2));
        assert_eq!(f.eval(&rat(3, 1)), rat(4, 1));
        assert_eq!(f.slope_right_of(&rat(2, 1)), rat(3, 1));
        assert_eq!(f.slope_right_of(&rat(0, 1)), rat(1, 2));
    }

    #[test]
    fn pc_merges_and_evaluates() {
        let mut pc = PiecewiseConstant::default();
        pc.push(rat(0, 1), rat(0, 1));
        pc.push(rat(1, 1), rat(2, 1));
        pc.push(rat(2, 1), rat(2, 1));
        pc.push(rat(3, 1), rat(0, 1));
        assert_eq!(
            pc.pieces,
            vec![(rat(1, 1), rat(2, 1)), (rat(3, 1), rat(0, 1))]
        );
        assert_eq!(pc.eval(&rat(1, 1)), rat(0, 1));
        assert_eq!(pc.eval(&rat(3, 1)), rat(2, 1));
        assert_eq!(pc.eval(&rat(4, 1)), rat(0, 1));
    }

    #[test]
    fn initial_labels_examples() {
        let ext = build_extended_graph(&fixtures::single_arc());
        assert_eq!(initial_labels(&ext), vec![rat(0, 1), rat(0, 1), rat(0, 1)]);
        let ext = build_extended_graph(&fixtures::parallel_arcs());
        assert_eq!(&initial_labels(&ext)[..2], &[rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn super_sink_starts_at_max_distance() {
        let mut b = crate::network::InstanceBuilder::new();
        b.arc("a", "s", "t1", rat(3, 1), rat(1, 1));
        b.arc("b", "s", "t2", rat(1, 1), rat(1, 1));
        b.source("s", rat(1, 1))
            .sink("t1", rat(1, 2))
            .sink("t2", rat(1, 2));
        let ext = build_extended_graph(&crate::validate_instance(b.build()).unwrap());
        assert_eq!(initial_labels(&ext)[ext.super_sink().0], rat(3, 1));
    }

    #[test]
    fn active_sets_on_parallel_arcs() {
        let ext = build_extended_graph(&fixtures::parallel_arcs());
        let g = ext.graph();
        let (act, res) = active_and_resetting_sets(g, &[rat(0, 1), rat(0, 1), rat(0, 1)]).unwrap();
        assert_eq!(act, vec![ArcId(0), ArcId(2)]);
        assert!(res.is_empty());
        let (act, res) = active_and_resetting_sets(g, &[rat(1, 2), rat(3, 2), rat(3, 1)]).unwrap();
        assert_eq!(act, vec![ArcId(0), ArcId(1), ArcId(2)]);
        assert_eq!(res, vec![ArcId(0), ArcId(2)]);
    }

    #[test]
    fn alpha_examples() {
        let ext = build_extended_graph(&fixtures::parallel_arcs());
        let g = ext.graph();
        let labels = [rat(0, 1), rat(0, 1), rat(0, 1)];
        let slopes = [rat(1, 3), rat(1, 1), rat(2, 1)];
        let (a, ev) = compute_alpha(g, &labels, &[ArcId(0), ArcId(2)], &[], &slopes).unwrap();
        assert_eq!(a, ExtRat::Finite(rat(3, 2)));
        assert_eq!(ev, vec![Event::ArcBecameActive(ArcId(1))]);

        // Resetting arc closing its slack of 1 at relative speed 1/2.
        let mut b = crate::network::InstanceBuilder::new();
        b.arc("e", "s", "t", rat(0, 1), rat(1, 1));
        b.source("s", rat(1, 1)).sink("t", rat(1, 1));
        let inst = b.build();
        let (a, ev) = compute_alpha(
            &inst,
            &[rat(0, 1), rat(1, 1)],
            &[ArcId(0)],
            &[ArcId(0)],
            &[rat(1, 1), rat(1, 2)],
        )
        .unwrap();
        assert_eq!(a, ExtRat::Finite(rat(2, 1)));
        assert_eq!(ev, vec![Event::QueueDepleted(ArcId(0))]);

        let ext = build_extended_graph(&fixtures::single_arc());
        let (a, ev) = compute_alpha(
            ext.graph(),
            &[rat(0, 1), rat(0, 1), rat(0, 1)],
            &[ArcId(0), ArcId(1)],
            &[],
            &[rat(1, 1), rat(1, 1), rat(2, 1)],
        )
        .unwrap();
        assert_eq!(a, ExtRat::Infinity);
        assert!(ev.is_empty());
    }

    #[test]
    fn extend_rejects_zero_length() {
        let ext = build_extended_graph(&fixtures::single_arc());
        let mut p = NashFlowProfile::empty(ext);
        let flow = PhaseFlow {
            source_splits: vec![rat(1, 1)],
            arc_flows: vec![rat(1, 1); 2],
            labels: vec![rat(1, 1); 3],
        };
        let err = extend(
            &mut p,
            vec![],
            vec![],
            flow,
            ExtRat::Finite(Rat::zero()),
            vec![],
        );
        assert!(matches!(err, Err(EngineError::NonpositiveAlpha(_))));
    }

    #[test]
    fn single_arc_steady_state() {
        let p = solve_instance(&fixtures::single_arc(), &ExtRat::Finite(rat(10, 1)), 100).unwrap();
        assert_eq!(p.phases.len(), 1);
        assert!(p.is_steady_state());
        let t = p.graph().node_by_name("t").unwrap();
        for x in [rat(0, 1), rat(5, 2), rat(100, 1)] {
            assert_eq!(p.labels[t.0].eval(&x), x);
        }
    }

    #[test]
    fn fast_source_builds_queue() {
        let p = solve_instance(&fixtures::fast_source(), &ExtRat::Infinity, 100).unwrap();
        assert_eq!(p.phases.len(), 1);
        let g = p.graph();
        let s = g.node_by_name("s").unwrap();
        let t = g.node_by_name("t").unwrap();
        assert_eq!(p.labels[s.0].eval(&rat(4, 1)), rat(2, 1));
        assert_eq!(p.labels[t.0].eval(&rat(4, 1)), rat(4, 1));
        let inflow = inflow_functions(&p);
        let outflow = outflow_functions(&p);
        assert_eq!(inflow[0].pieces, vec![(rat(0, 1), rat(2, 1))]);
        assert_eq!(outflow[0].pieces, vec![(rat(0, 1), rat(1, 1))]);
    }

    #[test]
    fn parallel_arcs_two_phases() {
        let p = solve_instance(&fixtures::parallel_arcs(), &ExtRat::Infinity, 100).unwrap();
        assert_eq!(p.phases.len(), 2);
        assert_eq!(p.phases[0].end, ExtRat::Finite(rat(3, 2)));
        assert_eq!(p.phases[0].events, vec![Event::ArcBecameActive(ArcId(1))]);
        let ph = &p.phases[1];
        assert_eq!(ph.flow.arc_flows[..2], [rat(1, 2), rat(1, 2)]);
        assert_eq!(ph.flow.labels[..2], [rat(1, 3), rat(1, 2)]);
        let t = p.graph().node_by_name("t").unwrap();
        assert_eq!(p.labels[t.0].eval(&rat(3, 1)), rat(9, 4));
        let s = p.graph().node_by_name("s").unwrap();
        assert_eq!(p.labels[s.0].eval(&rat(3, 2)), rat(1, 2));
        assert_eq!(p.labels[t.0].eval(&rat(3, 2)), rat(3, 2));
        let inflow = inflow_functions(&p);
        assert_eq!(inflow[0].eval(&rat(1, 1)), rat(3, 2));
        let outflow = outflow_functions(&p);
        assert_eq!(outflow[0].eval(&rat(2, 1)), rat(1, 1));
    }

    #[test]
    fn horizon_truncates() {
        let p =
            solve_instance(&fixtures::parallel_arcs(), &ExtRat::Finite(rat(1, 1)), 100).unwrap();
        assert_eq!(p.phases.len(), 1);
        assert_eq!(p.horizon, ExtRat::Finite(rat(1, 1)));
        assert_eq!(p.phases[0].events, vec![Event::Horizon]);
    }

    #[test]
    fn phase_cap_reports_partial() {
        let err = solve_instance(&fixtures::parallel_arcs(), &ExtRat::Infinity, 1).unwrap_err();
        match err {
            EngineError::PhaseCapExceeded { cap, partial } => {
                assert_eq!(cap, 1);
                assert_eq!(partial.phases.len(), 1);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
