//! Independent certification of a constructed profile.
//!
//! The checker reads the engine's output only through its inflow rates,
//! labels and source shares. It simulates every queue on its own, recomputes
//! earliest arrival labels by a fixed-point iteration over exact
//! piecewise-linear functions, and compares the results.

pub mod functions;
pub mod queue;

use std::fmt;

use log::debug;

pub use functions::{grid, probes, Pc, Pwl};
pub use queue::{
    check_exit_time_slopes, check_trajectory, simulate_queue, simulate_queues, QueueError,
    QueueTrajectory,
};

use crate::decomposition::{subflow_functions, subflow_source_distribution, Decomposition};
use crate::engine::{
    inflow_functions, outflow_functions, source_distribution, NashFlowProfile, PiecewiseConstant,
    PiecewiseLinear,
};
use crate::network::{Instance, NodeId};
use crate::rational::{ExtRat, Rat};
use crate::report::CertReport;

/// Outcome of [`verify_nash`]: the violations found on the particle window
/// `[0, window]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NashCertificate {
    pub report: CertReport,
    pub window: ExtRat,
}

impl NashCertificate {
    pub fn is_pass(&self) -> bool {
        self.report.is_pass()
    }

    pub fn has(&self, condition: &str) -> bool {
        self.report.has(condition)
    }
}

impl fmt::Display for NashCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "particles checked: [0, {}]", self.window)?;
        write!(f, "{}", self.report)
    }
}

pub fn pwl_of(f: &PiecewiseLinear) -> Pwl {
    Pwl::new(f.breakpoints.clone(), f.final_slope.clone()).simplify()
}

pub fn pc_of(f: &PiecewiseConstant) -> Pc {
    Pc::new(f.pieces.clone()).simplify()
}

/// Largest value `f` takes on `[0, hi]`, for nondecreasing `f`.
fn sup_on(f: &Pwl, hi: &ExtRat) -> ExtRat {
    match hi {
        ExtRat::Finite(h) => ExtRat::Finite(f.eval(h)),
        ExtRat::Infinity if f.final_slope().is_positive() => ExtRat::Infinity,
        ExtRat::Infinity => ExtRat::Finite(f.eval(f.last_x())),
    }
}

/// Rate `value` on `(0, until]`.
fn box_rate(value: &Rat, until: &ExtRat) -> Pc {
    match until {
        ExtRat::Finite(u) if !u.is_positive() => Pc::zero(),
        ExtRat::Finite(u) => Pc::new(vec![(Rat::zero(), value.clone()), (u.clone(), Rat::zero())]),
        ExtRat::Infinity => Pc::new(vec![(Rat::zero(), value.clone())]),
    }
}

/// Entry time per particle at each source: cumulative share over rate.
pub fn source_entry_times(graph: &Instance, shares: &[Pc]) -> Vec<Pwl> {
    graph
        .sources
        .iter()
        .zip(shares)
        .map(|(s, x)| x.integral().scale(&s.rate.recip()))
        .collect()
}

fn same_function(a: &Option<Pwl>, b: &Option<Pwl>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => a.differs_on(b, &Rat::zero(), &ExtRat::Infinity).is_none(),
        _ => false,
    }
}

fn arrival_candidates(
    graph: &Instance,
    trajs: &[QueueTrajectory],
    source_times: &[Pwl],
    labels: &[Option<Pwl>],
    v: NodeId,
    incoming: &[crate::network::ArcId],
) -> Vec<Pwl> {
    let mut out = Vec::new();
    if let Some(i) = graph.source_index(v) {
        out.push(source_times[i].clone());
    }
    for &e in incoming {
        if let Some(lu) = &labels[graph.arc(e).tail.0] {
            out.push(trajs[e.0].exit_time.compose(lu));
        }
    }
    out
}

/// Earliest arrival labels: the fixed point of taking, at every node, the
/// minimum over its source entry time and the exit times of incoming arcs.
pub fn earliest_arrival_labels(
    graph: &Instance,
    trajs: &[QueueTrajectory],
    source_times: &[Pwl],
) -> Result<Vec<Pwl>, String> {
    let n = graph.node_count();
    let incoming = graph.incoming();
    let mut cur: Vec<Option<Pwl>> = vec![None; n];
    for (s, t) in graph.sources.iter().zip(source_times) {
        cur[s.node.0] = Some(t.clone());
    }
    for round in 0..n + 2 {
        let next: Vec<Option<Pwl>> = graph
            .node_ids()
            .map(|v| {
                arrival_candidates(graph, trajs, source_times, &cur, v, &incoming[v.0])
                    .into_iter()
                    .reduce(|a, b| a.min(&b))
            })
            .collect();
        if next.iter().zip(&cur).all(|(a, b)| same_function(a, b)) {
            debug!("labels stable after {round} rounds");
            return next
                .into_iter()
                .enumerate()
                .map(|(v, l)| l.ok_or_else(|| format!("node {} never reached", graph.nodes[v])))
                .collect();
        }
        cur = next;
    }
    Err(format!("labels not stable after {} rounds", n + 2))
}

/// Right slope of each label is the minimum right slope over the candidates
/// attaining it, and composed exit times obey the chain rule.
pub fn check_label_slopes(
    graph: &Instance,
    trajs: &[QueueTrajectory],
    source_times: &[Pwl],
    labels: &[Pwl],
    window: &ExtRat,
) -> CertReport {
    let mut rep = CertReport::new();
    let incoming = graph.incoming();
    let some_labels: Vec<Option<Pwl>> = labels.iter().cloned().map(Some).collect();
    for v in graph.node_ids() {
        let cands = arrival_candidates(graph, trajs, source_times, &some_labels, v, &incoming[v.0]);
        let lv = &labels[v.0];
        let pts = cands.iter().flat_map(|c| c.xs()).chain(lv.xs()).cloned();
        for p in grid(pts, &Rat::zero(), window) {
            if ExtRat::Finite(p.clone()) == *window {
                continue;
            }
            let value = lv.eval(&p);
            let expected = cands
                .iter()
                .filter(|c| c.eval(&p) == value)
                .map(|c| c.slope_right(&p))
                .min();
            let got = lv.slope_right(&p);
            if expected.as_ref() != Some(&got) {
                rep.push(
                    "label slope",
                    format!("node {}", graph.node_name(v)),
                    format!("right slope {got} at {p}, attaining candidates give {expected:?}"),
                );
            }
        }
        for &e in &incoming[v.0] {
            let lu = &labels[graph.arc(e).tail.0];
            let te = &trajs[e.0].exit_time;
            let composed = te.compose(lu);
            for p in grid(lu.xs().chain(composed.xs()).cloned(), &Rat::zero(), window) {
                let chain = &te.slope_right(&lu.eval(&p)) * &lu.slope_right(&p);
                if composed.slope_right(&p) != chain {
                    rep.push(
                        "chain rule",
                        format!("arc {}", graph.arc(e).name),
                        format!(
                            "composed slope {} at {p}, chain rule {chain}",
                            composed.slope_right(&p)
                        ),
                    );
                }
            }
        }
    }
    rep
}

/// Exit time slope cases on every arc plus the label slope rule.
pub fn derivative_consistency(
    graph: &Instance,
    trajs: &[QueueTrajectory],
    source_times: &[Pwl],
    labels: &[Pwl],
    window: &ExtRat,
) -> CertReport {
    let mut rep = CertReport::new();
    for (a, t) in graph.arcs.iter().zip(trajs) {
        rep.merge(check_exit_time_slopes(&a.name, t));
    }
    rep.merge(check_label_slopes(
        graph,
        trajs,
        source_times,
        labels,
        window,
    ));
    rep
}

/// Points of `[0, window]` splitting the particle line so that `label` is
/// linear and `rate ∘ label` constant on every piece.
fn refine_by_preimages(label: &Pwl, rate: &Pc, extra: &[&Pwl], window: &ExtRat) -> Vec<Rat> {
    let pts = label
        .xs()
        .cloned()
        .chain(rate.starts().filter_map(|s| label.first_reaching(s)))
        .chain(extra.iter().flat_map(|f| f.xs().cloned()));
    grid(pts, &Rat::zero(), window)
}

/// Full certification of a Nash flow profile.
pub fn verify_nash(profile: &NashFlowProfile) -> NashCertificate {
    let window = profile.horizon.clone();
    let mut rep = CertReport::new();
    if profile.phases.is_empty() {
        rep.push("profile shape", "profile", "no phases");
        return NashCertificate {
            report: rep,
            window,
        };
    }
    let g: &Instance = profile.graph();
    let zero = Rat::zero();
    if profile.labels.len() != g.node_count()
        || profile.arc_flows.len() != g.arcs.len()
        || profile.source_flows.len() != g.sources.len()
    {
        rep.push(
            "profile shape",
            "profile",
            "function counts do not match the graph",
        );
        return NashCertificate {
            report: rep,
            window,
        };
    }
    let labels: Vec<Pwl> = profile.labels.iter().map(pwl_of).collect();
    for v in g.node_ids() {
        if !labels[v.0].is_nondecreasing() {
            rep.push(
                "label monotonicity",
                format!("node {}", g.node_name(v)),
                "label decreases",
            );
        }
    }
    let inflows: Vec<Pc> = inflow_functions(profile).iter().map(pc_of).collect();
    let trajs = match simulate_queues(g, &inflows) {
        Ok(t) => t,
        Err(e) => {
            rep.push("inflow sign", "profile", e.to_string());
            return NashCertificate {
                report: rep,
                window,
            };
        }
    };
    for (a, t) in g.arcs.iter().zip(&trajs) {
        rep.merge(check_trajectory(&a.name, t));
    }

    // Sources: cumulative share equals rate times entry time.
    let shares: Vec<Pc> = source_distribution(profile).iter().map(pc_of).collect();
    let source_times = source_entry_times(g, &shares);
    for (i, s) in g.sources.iter().enumerate() {
        let name = g.node_name(s.node);
        let cum = shares[i].integral();
        if let Some(x) = labels[s.node.0]
            .scale(&s.rate)
            .differs_on(&cum, &zero, &window)
        {
            rep.push(
                "source inflow",
                format!("source {name}"),
                format!(
                    "particle {x}: label times rate {} vs cumulative share {}",
                    labels[s.node.0].eval(&x) * s.rate.clone(),
                    cum.eval(&x)
                ),
            );
        }
        if let Some(x) = pwl_of(&profile.source_flows[i]).differs_on(&cum, &zero, &window) {
            rep.push(
                "source inflow",
                format!("source {name}"),
                format!("stored cumulative share differs at particle {x}"),
            );
        }
    }

    for e in g.arc_ids() {
        let a = g.arc(e);
        let loc = format!("arc {}", a.name);
        let t = &trajs[e.0];
        let lu = &labels[a.tail.0];
        let lv = &labels[a.head.0];
        let entered = t.cum_inflow.compose(lu);
        let left = t.cum_outflow.compose(lv);
        if let Some(x) = entered.differs_on(&left, &zero, &window) {
            rep.push(
                "arc balance",
                &loc,
                format!(
                    "particle {x}: entered {} but left {}",
                    entered.eval(&x),
                    left.eval(&x)
                ),
            );
        }
        if let Some(x) = pwl_of(&profile.arc_flows[e.0]).differs_on(&entered, &zero, &window) {
            rep.push(
                "static flow",
                &loc,
                format!("stored cumulative flow differs at particle {x}"),
            );
        }

        // Flow may only enter while the arc lies on a current shortest path.
        let slack = t.exit_time.compose(lu).sub(lv);
        let g_pts = refine_by_preimages(lu, &t.inflow, &[&slack], &window);
        let mut segs: Vec<(Rat, Option<Rat>)> = g_pts
            .windows(2)
            .map(|w| (w[0].clone(), Some(w[1].clone())))
            .collect();
        if !window.is_finite() {
            segs.push((g_pts.last().expect("nonempty").clone(), None));
        }
        for (p, q) in segs {
            let m = match &q {
                Some(q) => &(&p + q) / &Rat::from_int(2),
                None => &p + &Rat::one(),
            };
            if !lu.slope_right(&m).is_positive() || !t.inflow.right_of(&lu.eval(&m)).is_positive() {
                continue;
            }
            let tight = slack.eval(&p).is_zero()
                && match &q {
                    Some(q) => slack.eval(q).is_zero(),
                    None => slack.final_slope().is_zero(),
                };
            if !tight {
                rep.push(
                    "inflow on inactive arc",
                    &loc,
                    format!("particles after {p} enter with exit time above the head label"),
                );
                break;
            }
        }
        let lo_time = lu.eval(&zero);
        let hi_time = sup_on(lu, &window);
        let pieces = t.inflow.pieces();
        for (k, (s, v)) in pieces.iter().enumerate() {
            if !v.is_positive() {
                continue;
            }
            let end = pieces
                .get(k + 1)
                .map_or(ExtRat::Infinity, |(n, _)| ExtRat::Finite(n.clone()));
            if *s < lo_time || end > hi_time {
                rep.push(
                    "inflow outside window",
                    &loc,
                    format!("positive inflow on the piece after {s}"),
                );
            }
        }
    }

    match earliest_arrival_labels(g, &trajs, &source_times) {
        Err(msg) => rep.push("label fixed point", "graph", msg),
        Ok(own) => {
            for v in g.node_ids() {
                if let Some(x) = own[v.0].differs_on(&labels[v.0], &zero, &window) {
                    rep.push(
                        "label agreement",
                        format!("node {}", g.node_name(v)),
                        format!(
                            "particle {x}: recomputed {} vs profile {}",
                            own[v.0].eval(&x),
                            labels[v.0].eval(&x)
                        ),
                    );
                }
            }
            for (s, t) in g.sources.iter().zip(&source_times) {
                if let Some(x) = own[s.node.0].differs_on(t, &zero, &window) {
                    rep.push(
                        "source entry",
                        format!("source {}", g.node_name(s.node)),
                        format!("particle {x} could reach the source earlier than it enters"),
                    );
                }
            }
            rep.merge(derivative_consistency(
                g,
                &trajs,
                &source_times,
                &own,
                &window,
            ));
        }
    }

    // Conservation over time at every node except the sink.
    let outgoing = g.outgoing();
    let incoming = g.incoming();
    let sink = g.sinks[0].node;
    for v in g.node_ids() {
        if v == sink {
            continue;
        }
        let arriving = Pc::sum(incoming[v.0].iter().map(|e| &trajs[e.0].outflow));
        let leaving = Pc::sum(outgoing[v.0].iter().map(|e| &trajs[e.0].inflow));
        let injected = match g.source_index(v) {
            Some(i) => box_rate(&g.sources[i].rate, &sup_on(&source_times[i], &window)),
            None => Pc::zero(),
        };
        if let Some(x) = arriving.add(&injected).differs(&leaving) {
            rep.push(
                "conservation",
                format!("node {}", g.node_name(v)),
                format!("imbalance right after time {x}"),
            );
        }
    }

    let engine_out: Vec<Pc> = outflow_functions(profile).iter().map(pc_of).collect();
    for (a, (mine, theirs)) in g.arcs.iter().zip(trajs.iter().zip(&engine_out)) {
        if let Some(x) = mine.outflow.differs(theirs) {
            rep.push(
                "outflow agreement",
                format!("arc {}", a.name),
                format!("differs right after time {x}"),
            );
        }
    }

    NashCertificate {
        report: rep,
        window,
    }
}

/// Outflow of a subflow: on pieces where the exit time strictly increases,
/// the subflow keeps its share of the total outflow; elsewhere it is zero.
pub fn subflow_outflow(t: &QueueTrajectory, sub_inflow: &Pc) -> Pc {
    let te = &t.exit_time;
    let pts = te
        .xs()
        .chain(sub_inflow.starts())
        .chain(t.inflow.starts())
        .cloned()
        .chain(t.outflow.starts().filter_map(|s| te.first_reaching(s)));
    let g = grid(pts, &Rat::zero(), &ExtRat::Infinity);
    let mut pieces: Vec<(Rat, Rat)> = Vec::new();
    let share = |m: &Rat| {
        let f = t.inflow.right_of(m);
        if f.is_positive() {
            &(&t.outflow.right_of(&te.eval(m)) * &sub_inflow.right_of(m)) / &f
        } else {
            Rat::zero()
        }
    };
    for (w, m) in g.windows(2).zip(probes(&g, &ExtRat::Finite(Rat::zero()))) {
        if te.slope_right(&m).is_positive() {
            pieces.push((te.eval(&w[0]), share(&m)));
        }
    }
    let last = g.last().expect("nonempty");
    let probe = last + &Rat::one();
    let tail = if te.final_slope().is_positive() {
        share(&probe)
    } else {
        Rat::zero()
    };
    pieces.push((te.eval(last), tail));
    Pc::new(pieces).simplify()
}

/// Certifies a per-sink decomposition of the profile's flow.
pub fn check_subflow_decomposition(profile: &NashFlowProfile, dec: &Decomposition) -> CertReport {
    let mut rep = CertReport::new();
    let ext = &profile.instance;
    let g: &Instance = ext.graph();
    let base = ext.base();
    let window = profile.horizon.clone();
    let inflows: Vec<Pc> = inflow_functions(profile).iter().map(pc_of).collect();
    let trajs = match simulate_queues(g, &inflows) {
        Ok(t) => t,
        Err(e) => {
            rep.push("inflow sign", "profile", e.to_string());
            return rep;
        }
    };
    let shares: Vec<Pc> = source_distribution(profile).iter().map(pc_of).collect();
    let source_times = source_entry_times(g, &shares);
    let sub_in: Vec<Vec<Pc>> = subflow_functions(profile, dec)
        .iter()
        .map(|fs| fs.iter().map(pc_of).collect())
        .collect();
    let sub_src: Vec<Vec<Pc>> = subflow_source_distribution(profile, dec)
        .iter()
        .map(|fs| fs.iter().map(pc_of).collect())
        .collect();
    if sub_in.len() != base.sinks.len() || sub_in.iter().any(|v| v.len() != base.arcs.len()) {
        rep.push(
            "decomposition shape",
            "decomposition",
            "one subflow per sink and original arc expected",
        );
        return rep;
    }
    let sub_out: Vec<Vec<Pc>> = sub_in
        .iter()
        .map(|fs| {
            fs.iter()
                .zip(&trajs)
                .map(|(f, t)| subflow_outflow(t, f))
                .collect()
        })
        .collect();

    for e in base.arc_ids() {
        let name = &base.arc(e).name;
        for (j, fs) in sub_in.iter().enumerate() {
            if fs[e.0].min_value().is_negative() || fs[e.0].exceeds(&trajs[e.0].inflow).is_some() {
                rep.push(
                    "subflow domination",
                    format!("arc {name}"),
                    format!(
                        "sink {} subflow outside [0, inflow]",
                        base.node_name(base.sinks[j].node)
                    ),
                );
            }
        }
        let total = Pc::sum(sub_in.iter().map(|fs| &fs[e.0]));
        if let Some(x) = total.differs(&trajs[e.0].inflow) {
            rep.push(
                "superposition",
                format!("arc {name}"),
                format!("subflows do not add up right after time {x}"),
            );
        }
    }

    let incoming = base.incoming();
    let outgoing = base.outgoing();
    let net = |v: NodeId, ins: &dyn Fn(usize) -> Pc, outs: &dyn Fn(usize) -> Pc| {
        let a = Pc::sum(
            incoming[v.0]
                .iter()
                .map(|e| ins(e.0))
                .collect::<Vec<_>>()
                .iter(),
        );
        let b = Pc::sum(
            outgoing[v.0]
                .iter()
                .map(|e| outs(e.0))
                .collect::<Vec<_>>()
                .iter(),
        );
        a.sub(&b)
    };
    let total_net = |v: NodeId| {
        net(v, &|e| trajs[e].outflow.clone(), &|e| {
            trajs[e].inflow.clone()
        })
    };
    for (j, sink) in base.sinks.iter().enumerate() {
        let tname = base.node_name(sink.node);
        let sub_net = |v: NodeId| net(v, &|e| sub_out[j][e].clone(), &|e| sub_in[j][e].clone());
        for v in base.node_ids() {
            if base.source_index(v).is_some() {
                continue;
            }
            if v == sink.node {
                if let Some(x) = sub_net(v).exceeds(&total_net(v)) {
                    rep.push(
                        "sink absorption",
                        format!("node {tname}"),
                        format!("subflow absorbs more than the total right after time {x}"),
                    );
                }
            } else if let Some(x) = sub_net(v).differs(&Pc::zero()) {
                rep.push(
                    "subflow conservation",
                    format!("node {}", base.node_name(v)),
                    format!("sink {tname} subflow imbalanced right after time {x}"),
                );
            }
        }

        let mut demand_sum = Pc::zero();
        for (i, s) in base.sources.iter().enumerate() {
            let sname = base.node_name(s.node);
            let out = Pc::zero().sub(&sub_net(s.node));
            let ti = &source_times[i];
            let share = &sub_src[j][i];
            let pts = refine_by_preimages(ti, &out, &[&share.integral()], &window);
            for m in probes(&pts, &window) {
                let lhs = &ti.slope_right(&m) * &out.right_of(&ti.eval(&m));
                if lhs != share.right_of(&m) {
                    rep.push(
                        "source matching",
                        format!("source {sname}"),
                        format!(
                            "sink {tname}: particle {m} has share {} but the source emits {lhs}",
                            share.right_of(&m)
                        ),
                    );
                    break;
                }
            }
            if share.min_value().is_negative() || share.exceeds(&shares[i]).is_some() {
                rep.push(
                    "source share",
                    format!("source {sname}"),
                    format!("sink {tname} share outside [0, source share]"),
                );
            }
            demand_sum = demand_sum.add(share);
        }
        let expected = box_rate(&sink.demand, &window);
        if let Some(x) = demand_sum.differs(&expected) {
            rep.push(
                "demand share",
                format!("sink {tname}"),
                format!("shares do not sum to the demand right after particle {x}"),
            );
        }
    }
    for (i, s) in base.sources.iter().enumerate() {
        let total = Pc::sum(sub_src.iter().map(|v| &v[i]));
        if let Some(x) = total.differs(&shares[i]) {
            rep.push(
                "source share",
                format!("source {}", base.node_name(s.node)),
                format!("shares do not add up right after particle {x}"),
            );
        }
    }
    rep
}
