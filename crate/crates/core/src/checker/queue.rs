//! Event-driven simulation of a single point queue under a piecewise-constant
//! inflow, plus the identities any such trajectory must satisfy.

use super::functions::{grid, probes, Pc, Pwl};
use crate::network::Instance;
use crate::rational::{ExtRat, Rat};
use crate::report::CertReport;

/// Everything the checker derives for one arc. The queue is indexed by the
/// time flow reaches it, i.e. `transit` after entering the arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueueTrajectory {
    pub transit: Rat,
    pub capacity: Rat,
    pub inflow: Pc,
    pub outflow: Pc,
    pub queue: Pwl,
    pub cum_inflow: Pwl,
    pub cum_outflow: Pwl,
    /// Exit time of flow entering at time `θ`.
    pub exit_time: Pwl,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueueError {
    #[error("negative inflow {} on arc {} after time {}", .0.value, .0.arc, .0.at)]
    NegativeInflow(Box<NegativeInflow>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeInflow {
    pub arc: String,
    pub at: Rat,
    pub value: Rat,
}

pub fn simulate_queue(transit: &Rat, capacity: &Rat, inflow: &Pc) -> Result<QueueTrajectory, Rat> {
    if let Some((at, _)) = inflow.pieces().iter().find(|(_, v)| v.is_negative()) {
        return Err(at.clone());
    }
    let arriving = inflow.delay(transit);
    let start = arriving
        .starts()
        .next()
        .cloned()
        .unwrap_or_else(Rat::zero)
        .min(Rat::zero());

    let mut bps = vec![(start, Rat::zero())];
    let mut z = Rat::zero();
    let mut final_slope = Rat::zero();
    let pieces = arriving.pieces();
    for (k, (a, c)) in pieces.iter().enumerate() {
        let b = pieces.get(k + 1).map(|(s, _)| s);
        if bps.last().expect("nonempty").0 < *a {
            bps.push((a.clone(), z.clone()));
        }
        let rate = c - capacity;
        if z.is_zero() && !rate.is_positive() {
            final_slope = Rat::zero();
            continue;
        }
        if rate.is_negative() {
            let empty_at = a + &(&z / &(-&rate));
            if b.is_none_or(|b| empty_at < *b) {
                bps.push((empty_at, Rat::zero()));
                z = Rat::zero();
                final_slope = Rat::zero();
                continue;
            }
        }
        match b {
            Some(b) => {
                z = &z + &(&rate * &(b - a));
                bps.push((b.clone(), z.clone()));
            }
            None => final_slope = rate,
        }
    }
    let queue = Pwl::new(bps, final_slope).simplify();

    // Outflow: capacity while a queue is present, else the arriving rate capped.
    let mut xs: Vec<Rat> = queue.xs().chain(arriving.starts()).cloned().collect();
    xs.sort();
    xs.dedup();
    let mut out_pieces = Vec::with_capacity(xs.len());
    let probes = probes(&xs, &ExtRat::Infinity);
    for (x, m) in xs.iter().zip(&probes) {
        let v = if queue.eval(m).is_positive() {
            capacity.clone()
        } else {
            arriving.right_of(m).min(capacity.clone())
        };
        out_pieces.push((x.clone(), v));
    }
    let outflow = Pc::new(out_pieces).simplify();

    let exit_time = Pwl::affine_from(Rat::zero().min(queue.first_x() - transit), transit.clone())
        .add(&queue.delay(&-transit).scale(&capacity.recip()));

    Ok(QueueTrajectory {
        transit: transit.clone(),
        capacity: capacity.clone(),
        cum_inflow: inflow.integral(),
        cum_outflow: outflow.integral(),
        inflow: inflow.clone(),
        outflow,
        queue,
        exit_time,
    })
}

/// One trajectory per arc of `graph`, aligned with `inflows`.
pub fn simulate_queues(
    graph: &Instance,
    inflows: &[Pc],
) -> Result<Vec<QueueTrajectory>, QueueError> {
    graph
        .arcs
        .iter()
        .zip(inflows)
        .map(|(a, f)| {
            simulate_queue(&a.transit, &a.capacity, f).map_err(|at| {
                QueueError::NegativeInflow(Box::new(NegativeInflow {
                    arc: a.name.clone(),
                    value: f.right_of(&at),
                    at,
                }))
            })
        })
        .collect()
}

/// Queue balance, FIFO exit and sign identities of a trajectory.
pub fn check_trajectory(name: &str, t: &QueueTrajectory) -> CertReport {
    let mut rep = CertReport::new();
    let loc = format!("arc {name}");
    let lo = t.queue.first_x().clone().min(Rat::zero());

    let balance = t.cum_inflow.delay(&t.transit).sub(&t.cum_outflow);
    if let Some(x) = balance.differs_on(&t.queue, &lo, &ExtRat::Infinity) {
        rep.push(
            "queue balance",
            &loc,
            format!(
                "queue {} but inflow minus outflow {} at {x}",
                t.queue.eval(&x),
                balance.eval(&x)
            ),
        );
    }
    let exited = t.cum_outflow.compose(&t.exit_time);
    if let Some(x) = exited.differs_on(&t.cum_inflow, &Rat::zero(), &ExtRat::Infinity) {
        rep.push(
            "fifo exit",
            &loc,
            format!(
                "inflow up to {x} is {} but outflow by its exit time is {}",
                t.cum_inflow.eval(&x),
                exited.eval(&x)
            ),
        );
    }
    if !t.queue.is_nonnegative() {
        rep.push("queue sign", &loc, "queue becomes negative");
    }
    if !t.exit_time.is_nondecreasing() {
        rep.push("fifo exit", &loc, "exit time decreases");
    }
    if t.outflow.min_value().is_negative() {
        rep.push("outflow bounds", &loc, "negative outflow");
    }
    if t.outflow.pieces().iter().any(|(_, v)| *v > t.capacity) {
        rep.push("outflow bounds", &loc, "outflow above capacity");
    }
    rep
}

/// Slope of the exit time: `f⁺/ν` while a queue is waiting, otherwise
/// `max(f⁺/ν, 1)`.
pub fn check_exit_time_slopes(name: &str, t: &QueueTrajectory) -> CertReport {
    let mut rep = CertReport::new();
    let points = t
        .exit_time
        .xs()
        .chain(t.inflow.starts())
        .cloned()
        .chain(t.queue.xs().map(|x| x - &t.transit));
    let g = grid(points, &Rat::zero(), &ExtRat::Infinity);
    for m in probes(&g, &ExtRat::Infinity) {
        let rate = &t.inflow.right_of(&m) / &t.capacity;
        let waiting = t.queue.eval(&(&m + &t.transit)).is_positive();
        let expected = if waiting { rate } else { rate.max(Rat::one()) };
        let got = t.exit_time.slope_right(&m);
        if got != expected {
            rep.push(
                "exit time slope",
                format!("arc {name}"),
                format!("slope {got} at {m}, expected {expected} (queue waiting: {waiting})"),
            );
        }
    }
    rep
}
