//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nashflow::checker::{
    check_subflow_decomposition, check_trajectory, derivative_consistency, earliest_arrival_labels,
    simulate_queue, simulate_queues, verify_nash, Pc, Pwl, QueueTrajectory,
};
use nashflow::decomposition::{decompose, DecompositionError};
use nashflow::engine::{
    construct_nash_flow, construct_nash_flow_unchecked, NashFlowProfile, PiecewiseLinear,
};
use nashflow::generate::{generate_random_instance, random_thin_flow_problem, GeneratorParams};
use nashflow::samples;
use nashflow::super_sink::build_extended_graph;
use nashflow::thin_flow::{check_thin_flow, oracle_enumerate, solve_thin_flow};
use nashflow::{rat, ExtRat, Rat, ValidatedInstance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

fn thin_flow_certification() -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut oracle_solutions = 0;
    for seed in 0..500 {
        let p = random_thin_flow_problem(seed, 6, 10);
        let tf = match solve_thin_flow(&p) {
            Ok(tf) => tf,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        if !check_thin_flow(&p, &tf).is_pass() {
            failures.push(format!("seed {seed}: solver output not certified"));
        }
        let sols = oracle_enumerate(&p).expect("within oracle bound");
        if sols.is_empty() {
            failures.push(format!("seed {seed}: oracle found nothing"));
        }
        oracle_solutions += sols.len();
        if sols.iter().any(|s| s.labels != tf.labels) {
            failures.push(format!(
                "seed {seed}: labels differ from an oracle solution"
            ));
        }
    }
    let el = t.elapsed();
    outcome(
        failures.is_empty() && within(el, 60),
        format!(
            "500 problems, {oracle_solutions} oracle solutions, {} failures, {:.1?}{}",
            failures.len(),
            el,
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn label_bound(corpus: &[NashFlowProfile]) -> Outcome {
    let mut phases = 0;
    let mut violations = 0;
    for p in corpus {
        let bound = p.instance.sigma().recip();
        for ph in &p.phases {
            phases += 1;
            for v in p
                .graph()
                .node_ids()
                .filter(|&v| p.instance.is_original_node(v))
            {
                if ph.flow.labels[v.0] > bound {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{} profiles, {phases} phases, {violations} violations",
            corpus.len()
        ),
    )
}

fn golden_parallel_arcs() -> Outcome {
    let ext = build_extended_graph(&samples::parallel_arcs());
    let p = match construct_nash_flow(&ext, &ExtRat::Infinity, 100) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let g = p.graph();
    let (e1, e2) = (g.arc_by_name("e1").unwrap(), g.arc_by_name("e2").unwrap());
    let (s, t) = (g.node_by_name("s").unwrap(), g.node_by_name("t").unwrap());
    let mut ok = p.phases.len() == 2 && p.phases[0].end == ExtRat::Finite(rat(3, 2));
    if ok {
        let f = &p.phases[1].flow;
        let got = [
            &f.arc_flows[e1.0],
            &f.arc_flows[e2.0],
            &f.labels[s.0],
            &f.labels[t.0],
        ];
        ok = got == [&rat(1, 2), &rat(1, 2), &rat(1, 3), &rat(1, 2)];
        let problem = p.phases[1].thin_flow_problem(g, ext.super_sink());
        let oracle = oracle_enumerate(&problem).unwrap();
        ok &= !oracle.is_empty() && oracle.iter().all(|o| o.labels == f.labels);
    }
    ok &= verify_nash(&p).is_pass();
    outcome(
        ok,
        format!(
            "{} phases, first boundary {}",
            p.phases.len(),
            p.phases[0].end
        ),
    )
}

struct Run {
    profile: NashFlowProfile,
}

fn random_runs(count: u64) -> (Vec<Run>, Vec<String>, Duration) {
    let t = Instant::now();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for seed in 0..count {
        let params = GeneratorParams {
            nodes: 2 + (seed as usize % 5),
            max_sources: 3,
            max_sinks: 3,
            extra_arcs: 7,
            back_arcs: 2,
        };
        let inst = generate_random_instance(seed, &params).expect("valid parameters");
        let ext = build_extended_graph(&inst);
        match construct_nash_flow_unchecked(&ext, &ExtRat::Finite(rat(50, 1)), 10_000) {
            Ok(profile) => {
                let cert = verify_nash(&profile);
                if !cert.is_pass() {
                    failures.push(format!("seed {seed}:\n{cert}"));
                }
                runs.push(Run { profile });
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    (runs, failures, t.elapsed())
}

fn super_arc_invariants(runs: &[Run]) -> Outcome {
    let mut violations = 0;
    for r in runs {
        let ext = &r.profile.instance;
        for ph in &r.profile.phases {
            for (j, &e) in ext.super_arcs().iter().enumerate() {
                if !ph.active.contains(&e) || ph.flow.arc_flows[e.0] != ext.base().sinks[j].demand {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{} runs, {violations} violations", runs.len()),
    )
}

fn decomposition_certification(runs: &[Run]) -> Outcome {
    let mut failures = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        match decompose(&r.profile) {
            Ok(d) => {
                let rep = check_subflow_decomposition(&r.profile, &d);
                if !rep.is_pass() {
                    failures.push(format!("run {k}:\n{rep}"));
                }
            }
            Err(e) => failures.push(format!("run {k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} runs, {} failures{}",
            runs.len(),
            failures.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

/// Equal as functions on `[0, horizon]`, slopes included for an unbounded horizon.
fn same_on(a: &PiecewiseLinear, b: &PiecewiseLinear, horizon: &ExtRat) -> bool {
    let mut xs: Vec<Rat> = a
        .breakpoints
        .iter()
        .chain(&b.breakpoints)
        .map(|(x, _)| x.clone())
        .collect();
    xs.push(Rat::zero());
    xs.retain(|x| ExtRat::Finite(x.clone()) <= *horizon);
    if let ExtRat::Finite(h) = horizon {
        xs.push(h.clone());
    }
    let values_agree = xs.iter().all(|x| a.eval(x) == b.eval(x));
    match horizon {
        ExtRat::Finite(_) => values_agree,
        ExtRat::Infinity => values_agree && a.final_slope == b.final_slope,
    }
}

fn crossing_sinks_symmetry() -> Outcome {
    let inst = samples::crossing_sinks();
    let mut details = Vec::new();
    let mut ok = true;
    for horizon in [ExtRat::Infinity, ExtRat::Finite(rat(50, 1))] {
        let p = match construct_nash_flow(&build_extended_graph(&inst), &horizon, 1000) {
            Ok(p) => p,
            Err(e) => return outcome(false, e.to_string()),
        };
        let g = p.graph();
        let (t1, t2) = (g.node_by_name("t1").unwrap(), g.node_by_name("t2").unwrap());
        ok &= same_on(&p.labels[t1.0], &p.labels[t2.0], &p.horizon);
        details.push(format!(
            "phi_max {horizon}: {} phases, horizon {}",
            p.phases.len(),
            p.horizon
        ));
    }
    outcome(ok, details.join(", "))
}

fn solved(inst: &ValidatedInstance) -> NashFlowProfile {
    construct_nash_flow(&build_extended_graph(inst), &ExtRat::Infinity, 100).expect("sample solves")
}

fn checker_sensitivity() -> Outcome {
    let mut caught = Vec::new();

    // Flow split perturbation in the second phase.
    let mut p = solved(&samples::parallel_arcs());
    p.phases[1].flow.arc_flows[0] = rat(3, 4);
    p.phases[1].flow.arc_flows[1] = rat(1, 4);
    caught.push(("flow split", verify_nash(&p).has("arc balance")));

    // Label perturbation.
    let mut p = solved(&samples::parallel_arcs());
    let t = p.graph().node_by_name("t").unwrap();
    p.labels[t.0].breakpoints[1].1 += rat(1, 7);
    caught.push(("label", verify_nash(&p).has("label agreement")));

    // Flow on an arc that is not active yet.
    let mut p = solved(&samples::parallel_arcs());
    p.phases[0].flow.arc_flows[1] = rat(1, 4);
    caught.push((
        "inactive arc",
        verify_nash(&p).has("inflow on inactive arc"),
    ));

    // Super arc not carrying its demand.
    let mut p = solved(&samples::crossing_sinks());
    let e = p.instance.super_arcs()[0];
    p.phases[0].flow.arc_flows[e.0] = rat(1, 3);
    caught.push((
        "demand mismatch",
        matches!(
            decompose(&p),
            Err(DecompositionError::DemandMismatch { sink: 0, .. })
        ),
    ));

    // Outflow leaving later than FIFO allows.
    let t = simulate_queue(
        &Rat::zero(),
        &Rat::one(),
        &Pc::new(vec![(rat(0, 1), rat(2, 1)), (rat(1, 1), rat(0, 1))]),
    )
    .unwrap();
    let mut broken: QueueTrajectory = t.clone();
    broken.outflow = Pc::new(vec![(rat(0, 1), rat(1, 2)), (rat(4, 1), rat(0, 1))]);
    broken.cum_outflow = broken.outflow.integral();
    caught.push((
        "fifo",
        check_trajectory("e", &t).is_pass() && !check_trajectory("e", &broken).is_pass(),
    ));

    // Extra inflow that is not balanced anywhere, in the flow and in a subflow.
    let mut p = solved(&samples::crossing_sinks());
    let d = decompose(&p).unwrap();
    let mut d_bad = d.clone();
    d_bad.phases[0].arc_flows[0][0] += rat(1, 100);
    let sub_caught = check_subflow_decomposition(&p, &d_bad).has("superposition");
    p.phases[0].flow.arc_flows[0] += rat(1, 100);
    caught.push((
        "conservation",
        verify_nash(&p).has("conservation") && sub_caught,
    ));

    let detected = caught.iter().filter(|(_, c)| *c).count();
    let missed: Vec<&str> = caught.iter().filter(|(_, c)| !c).map(|(n, _)| *n).collect();
    outcome(
        detected == caught.len(),
        format!(
            "{detected}/{} detected{}",
            caught.len(),
            if missed.is_empty() {
                String::new()
            } else {
                format!(", missed {missed:?}")
            }
        ),
    )
}

fn random_rate(rng: &mut ChaCha8Rng) -> Rat {
    const RATES: [(i64, i64); 6] = [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1)];
    let (n, d) = RATES[rng.gen_range(0..RATES.len())];
    rat(n, d)
}

fn random_inflow(rng: &mut ChaCha8Rng) -> Pc {
    let mut x = rat(rng.gen_range(0..4), 2);
    let mut pieces = Vec::new();
    for _ in 0..rng.gen_range(1..6) {
        pieces.push((x.clone(), random_rate(rng)));
        x = &x + &rat(rng.gen_range(1..7), 3);
    }
    if rng.gen_bool(0.7) {
        pieces.push((x, Rat::zero()));
    }
    Pc::new(pieces).simplify()
}

fn random_entry_time(rng: &mut ChaCha8Rng) -> Pwl {
    let mut bps = vec![(Rat::zero(), Rat::zero())];
    for _ in 0..rng.gen_range(0..4) {
        let (x, y) = bps.last().unwrap().clone();
        let dx = rat(rng.gen_range(1..5), 2);
        let slope = rat(rng.gen_range(0..5), 2);
        bps.push((&x + &dx, &y + &(&slope * &dx)));
    }
    Pwl::new(bps, rat(rng.gen_range(0..4), 2))
}

/// Queue length from the cumulative arriving flow alone: the largest
/// backlog over all earlier start points.
fn lindley_queue(t: &QueueTrajectory, at: &Rat) -> Rat {
    let arriving = |s: &Rat| t.cum_inflow.eval(&(s - &t.transit));
    let potential = |s: &Rat| &arriving(s) - &(&t.capacity * s);
    let mut candidates: Vec<Rat> = t
        .inflow
        .starts()
        .map(|s| s + &t.transit)
        .filter(|s| s <= at)
        .collect();
    candidates.push(at.clone());
    let lowest = candidates.iter().map(potential).min().unwrap();
    &potential(at) - &lowest
}

fn simulator_identities() -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let params = GeneratorParams {
            nodes: 2 + (seed as usize % 5),
            max_sources: 3,
            max_sinks: 3,
            extra_arcs: 7,
            back_arcs: 2,
        };
        let inst = generate_random_instance(seed, &params).unwrap();
        let inflows: Vec<Pc> = inst.arcs.iter().map(|_| random_inflow(&mut rng)).collect();
        let trajs = simulate_queues(&inst, &inflows).unwrap();
        for (a, t) in inst.arcs.iter().zip(&trajs) {
            let rep = check_trajectory(&a.name, t);
            if !rep.is_pass() {
                failures.push(format!("seed {seed}: {rep}"));
            }
            let mut probes: Vec<Rat> = t
                .queue
                .breakpoints()
                .iter()
                .map(|(x, _)| x.clone())
                .collect();
            let extra: Vec<Rat> = probes
                .windows(2)
                .map(|w| &(&w[0] + &w[1]) / &rat(2, 1))
                .collect();
            probes.extend(extra);
            probes.push(probes.last().unwrap() + &rat(5, 1));
            if let Some(x) = probes
                .iter()
                .find(|x| lindley_queue(t, x) != t.queue.eval(x))
            {
                failures.push(format!(
                    "seed {seed}: arc {} queue differs from backlog oracle at {x}",
                    a.name
                ));
            }
        }
        let entry: Vec<Pwl> = inst
            .sources
            .iter()
            .map(|_| random_entry_time(&mut rng))
            .collect();
        match earliest_arrival_labels(&inst, &trajs, &entry) {
            Ok(labels) => {
                let rep = derivative_consistency(&inst, &trajs, &entry, &labels, &ExtRat::Infinity);
                if !rep.is_pass() {
                    failures.push(format!("seed {seed}: {rep}"));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let el = t0.elapsed();
    outcome(
        failures.is_empty() && within(el, 30),
        format!(
            "200 scenarios, {} failures, {:.1?}{}",
            failures.len(),
            el,
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((
        1,
        "thin-flow certification against the oracle",
        thin_flow_certification(),
    ));

    let (runs, failures, elapsed) = random_runs(200);
    let mut corpus: Vec<NashFlowProfile> = runs.iter().map(|r| r.profile.clone()).collect();
    for inst in [
        samples::single_arc(),
        samples::fast_source(),
        samples::parallel_arcs(),
        samples::crossing_sinks(),
    ] {
        corpus.push(solved(&inst));
    }
    results.push((
        2,
        "label derivatives bounded by 1/sigma",
        label_bound(&corpus),
    ));
    results.push((
        3,
        "golden trace on two parallel arcs",
        golden_parallel_arcs(),
    ));
    results.push((
        4,
        "end-to-end Nash certification",
        outcome(
            failures.is_empty() && runs.len() >= 100 && within(elapsed, 300),
            format!(
                "200 instances, {} certified, max {} phases, {} failures, {:.1?}{}",
                runs.len(),
                runs.iter()
                    .map(|r| r.profile.phases.len())
                    .max()
                    .unwrap_or(0),
                failures.len(),
                elapsed,
                failures
                    .first()
                    .map(|f| format!("; first: {f}"))
                    .unwrap_or_default()
            ),
        ),
    ));
    results.push((
        5,
        "super arcs active and carrying their demand",
        super_arc_invariants(&runs),
    ));
    results.push((
        6,
        "per-sink decomposition certification",
        decomposition_certification(&runs),
    ));
    results.push((
        7,
        "symmetric sinks share one label",
        crossing_sinks_symmetry(),
    ));
    results.push((
        8,
        "checker sensitivity to corruptions",
        checker_sensitivity(),
    ));
    results.push((
        9,
        "queue simulator identities and slopes",
        simulator_identities(),
    ));

    let mut all = true;
    for (k, name, o) in &results {
        all &= o.pass;
        println!(
            "criterion {k} {}  {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
