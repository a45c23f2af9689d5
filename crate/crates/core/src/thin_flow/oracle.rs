//! Brute-force enumeration of thin flows, kept independent of the solver.
//!
//! For every flow support `S` of the subgraph, every choice of one tight
//! congestion term per non-resetting support arc, and every choice of the arc
//! attaining the minimum at nodes without support inflow, the induced linear
//! system is solved by exact Gaussian elimination. Systems without a unique solution are
//! skipped; unique solutions are certified and deduplicated.

use std::collections::HashSet;

use super::{check_thin_flow, ThinFlow, ThinFlowError, ThinFlowProblem};
use crate::rational::Rat;

pub const DEFAULT_ORACLE_BOUND: usize = 16;

pub fn oracle_enumerate(p: &ThinFlowProblem) -> Result<Vec<ThinFlow>, ThinFlowError> {
    oracle_enumerate_with_bound(p, DEFAULT_ORACLE_BOUND)
}

/// Tight-term choice for a non-resetting arc inside the support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tight {
    /// Head label equals tail label.
    Tail,
    /// Head label equals flow over capacity.
    Ratio,
}

pub fn oracle_enumerate_with_bound(
    p: &ThinFlowProblem,
    bound: usize,
) -> Result<Vec<ThinFlow>, ThinFlowError> {
    p.validate()?;
    let m = p.arcs.len();
    if m > bound {
        return Err(ThinFlowError::OracleBoundExceeded { arcs: m, bound });
    }
    let n = p.node_count();
    let is_source: Vec<bool> = (0..n)
        .map(|v| p.sources.iter().any(|(s, _)| s.0 == v))
        .collect();
    let inc = p.incoming();

    let mut found: Vec<ThinFlow> = Vec::new();
    let mut seen: HashSet<ThinFlow> = HashSet::new();

    for mask in 0u64..(1u64 << m) {
        let in_s = |i: usize| mask >> i & 1 == 1;
        if !support_is_plausible(p, &is_source, mask) {
            continue;
        }
        // Per node without incoming support: which incoming arc is tight.
        let mut node_options: Vec<(usize, Vec<NodeTight>)> = Vec::new();
        let mut dead = false;
        for v in 0..n {
            let has_support_in = inc[v].iter().any(|&i| in_s(i));
            let idle_resetting_in = inc[v].iter().any(|&i| !in_s(i) && p.arcs[i].resetting);
            if idle_resetting_in {
                if has_support_in {
                    // Zero congestion caps the label at 0, yet inflow forces it positive.
                    dead = true;
                    break;
                }
                node_options.push((v, vec![NodeTight::Zero]));
                continue;
            }
            if is_source[v] || has_support_in {
                continue;
            }
            let opts: Vec<NodeTight> = inc[v].iter().map(|&i| NodeTight::FromTail(i)).collect();
            if opts.is_empty() {
                dead = true;
                break;
            }
            node_options.push((v, opts));
        }
        if dead {
            continue;
        }
        let support_free: Vec<usize> = (0..m)
            .filter(|&i| in_s(i) && !p.arcs[i].resetting)
            .collect();

        let mut arc_choice = vec![0usize; support_free.len()];
        loop {
            let mut node_choice = vec![0usize; node_options.len()];
            loop {
                let tights: Vec<Tight> = arc_choice
                    .iter()
                    .map(|&c| [Tight::Tail, Tight::Ratio][c])
                    .collect();
                let nodes: Vec<(usize, NodeTight)> = node_options
                    .iter()
                    .zip(&node_choice)
                    .map(|((v, opts), &c)| (*v, opts[c]))
                    .collect();
                if let Some(tf) = solve_pattern(p, mask, &support_free, &tights, &nodes) {
                    if check_thin_flow(p, &tf).is_pass() && seen.insert(tf.clone()) {
                        found.push(tf);
                    }
                }
                if !advance(&mut node_choice, |k| node_options[k].1.len()) {
                    break;
                }
            }
            if !advance(&mut arc_choice, |_| 2) {
                break;
            }
        }
    }
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeTight {
    Zero,
    FromTail(usize),
}

/// Odometer increment; false once every combination was visited.
fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for (k, d) in digits.iter_mut().enumerate() {
        *d += 1;
        if *d < radix(k) {
            return true;
        }
        *d = 0;
    }
    false
}

/// An acyclic flow's support is a union of source-to-sink paths.
fn support_is_plausible(p: &ThinFlowProblem, is_source: &[bool], mask: u64) -> bool {
    let n = p.node_count();
    let mut has_in = vec![false; n];
    let mut has_out = vec![false; n];
    for (i, a) in p.arcs.iter().enumerate() {
        if mask >> i & 1 == 1 {
            has_out[a.tail.0] = true;
            has_in[a.head.0] = true;
        }
    }
    if !has_in[p.sink.0] {
        return false;
    }
    p.arcs.iter().enumerate().all(|(i, a)| {
        mask >> i & 1 == 0
            || ((is_source[a.tail.0] || has_in[a.tail.0])
                && (a.head == p.sink || has_out[a.head.0]))
    })
}

/// Variables: one label per node, then one flow per support arc.
fn solve_pattern(
    p: &ThinFlowProblem,
    mask: u64,
    support_free: &[usize],
    tights: &[Tight],
    nodes: &[(usize, NodeTight)],
) -> Option<ThinFlow> {
    let n = p.node_count();
    let support: Vec<usize> = (0..p.arcs.len()).filter(|&i| mask >> i & 1 == 1).collect();
    let mut flow_var = vec![usize::MAX; p.arcs.len()];
    for (k, &i) in support.iter().enumerate() {
        flow_var[i] = n + k;
    }
    let nv = n + support.len();
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let new_row = || vec![Rat::zero(); nv + 1];

    for v in 0..n {
        if v == p.sink.0 {
            continue;
        }
        let mut row = new_row();
        for &i in &support {
            let a = &p.arcs[i];
            if a.tail.0 == v {
                row[flow_var[i]] += Rat::one();
            }
            if a.head.0 == v {
                row[flow_var[i]] -= Rat::one();
            }
        }
        if let Some(k) = p.source_index(crate::network::NodeId(v)) {
            row[v] -= &p.sources[k].1;
        }
        rows.push(row);
    }
    let mut norm = new_row();
    for (v, r) in &p.sources {
        norm[v.0] += r;
    }
    norm[nv] = Rat::one();
    rows.push(norm);

    let ratio_row = |i: usize| {
        let a = &p.arcs[i];
        let mut row = new_row();
        row[flow_var[i]] = Rat::one();
        row[a.head.0] = -&a.capacity;
        row
    };
    let tail_row = |i: usize| {
        let a = &p.arcs[i];
        let mut row = new_row();
        row[a.head.0] += Rat::one();
        row[a.tail.0] -= Rat::one();
        row
    };
    for &i in &support {
        if p.arcs[i].resetting {
            rows.push(ratio_row(i));
        }
    }
    for (&i, t) in support_free.iter().zip(tights) {
        rows.push(match t {
            Tight::Tail => tail_row(i),
            Tight::Ratio => ratio_row(i),
        });
    }
    for &(v, t) in nodes {
        match t {
            NodeTight::Zero => {
                let mut row = new_row();
                row[v] = Rat::one();
                rows.push(row);
            }
            NodeTight::FromTail(i) => rows.push(tail_row(i)),
        }
    }

    let sol = unique_solution(rows, nv)?;
    let labels: Vec<Rat> = sol[..n].to_vec();
    let mut arc_flows = vec![Rat::zero(); p.arcs.len()];
    for &i in &support {
        arc_flows[i] = sol[flow_var[i]].clone();
    }
    let source_splits = p.sources.iter().map(|(v, r)| r * &labels[v.0]).collect();
    Some(ThinFlow {
        source_splits,
        arc_flows,
        labels,
    })
}

/// Gauss-Jordan on an augmented matrix; `None` unless consistent with full column rank.
fn unique_solution(mut rows: Vec<Vec<Rat>>, nv: usize) -> Option<Vec<Rat>> {
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(nv);
    for col in 0..nv {
        let r = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(pivot_row, r);
        let inv = rows[pivot_row][col].recip();
        for x in rows[pivot_row].iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        let prow = rows[pivot_row].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k == pivot_row || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (j, pv) in prow.iter().enumerate() {
                if !pv.is_zero() {
                    row[j] -= &f * pv;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    // Leftover rows must reduce to 0 = 0.
    if rows[pivot_row..].iter().any(|r| !r[nv].is_zero()) {
        return None;
    }
    Some((0..nv).map(|c| rows[c][nv].clone()).collect())
}
