//! Branch-and-bound search over per-arc states with an exact LP at every node.
//!
//! Resetting arcs always carry `x = ν·ℓ'_head`. Every other arc `uv` is in one
//! of three closed states:
//!
//! * `Saturated`: `x = ν·ℓ'_v` and `ℓ'_u <= ℓ'_v`;
//! * `Flat`: `ℓ'_u = ℓ'_v` and `0 <= x <= ν·ℓ'_v`;
//! * `Idle`: `x = 0` and `ℓ'_v <= ℓ'_u`.
//!
//! The union of the three is exactly the set allowed by the congestion
//! conditions on that arc, and only `Idle` fails to attain the minimum at the
//! head. A full assignment in which every non-source node has a resetting,
//! saturated or flat incoming arc therefore turns every feasible LP point into
//! a thin flow. Unassigned arcs are relaxed to `0 <= x <= ν·ℓ'_head`.

use log::{debug, warn};

use super::lp::LinearSystem;
use super::{check_thin_flow, ThinFlow, ThinFlowError, ThinFlowProblem};
use crate::rational::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcState {
    Saturated,
    Flat,
    Idle,
}

const ORDER: [ArcState; 3] = [ArcState::Saturated, ArcState::Flat, ArcState::Idle];

/// Returns the first certified thin flow in the deterministic search order.
pub fn solve_thin_flow(p: &ThinFlowProblem) -> Result<ThinFlow, ThinFlowError> {
    solve_thin_flow_with_hint(p, None).map(|(tf, _)| tf)
}

/// Like [`solve_thin_flow`], but first tries the full state pattern in `hint`
/// (one entry per subgraph arc, ignored on resetting arcs). Also returns the
/// pattern that produced the solution so callers can feed it back.
pub fn solve_thin_flow_with_hint(
    p: &ThinFlowProblem,
    hint: Option<&[ArcState]>,
) -> Result<(ThinFlow, Vec<ArcState>), ThinFlowError> {
    p.validate()?;
    let search = Search::new(p);
    if let Some(h) = hint.filter(|h| h.len() == p.arcs.len()) {
        let assign: Vec<Option<ArcState>> = p
            .arcs
            .iter()
            .zip(h)
            .map(|(a, s)| (!a.resetting).then_some(*s))
            .collect();
        if !search.dead_end(&assign) {
            if let Some(tf) = search.leaf(&assign) {
                return Ok((tf, fill(&assign)));
            }
        }
    }
    let mut assign: Vec<Option<ArcState>> = vec![None; p.arcs.len()];
    match search.dfs(0, &mut assign) {
        Some(tf) => Ok((tf, fill(&assign))),
        None => Err(ThinFlowError::NoThinFlowFound(p.dump())),
    }
}

fn fill(assign: &[Option<ArcState>]) -> Vec<ArcState> {
    assign
        .iter()
        .map(|s| s.unwrap_or(ArcState::Saturated))
        .collect()
}

struct Search<'a> {
    p: &'a ThinFlowProblem,
    incoming: Vec<Vec<usize>>,
    is_source: Vec<bool>,
    /// Non-resetting arc indices in id order; the branching sequence.
    free_arcs: Vec<usize>,
}

enum XExpr {
    Zero,
    /// `capacity · label(head)`
    Scaled,
    Var(usize),
}

impl<'a> Search<'a> {
    fn new(p: &'a ThinFlowProblem) -> Self {
        let mut is_source = vec![false; p.node_count()];
        for (v, _) in &p.sources {
            is_source[v.0] = true;
        }
        Search {
            p,
            incoming: p.incoming(),
            is_source,
            free_arcs: (0..p.arcs.len())
                .filter(|&i| !p.arcs[i].resetting)
                .collect(),
        }
    }

    fn dfs(&self, depth: usize, assign: &mut Vec<Option<ArcState>>) -> Option<ThinFlow> {
        if depth == self.free_arcs.len() {
            return self.leaf(assign);
        }
        let arc = self.free_arcs[depth];
        for state in ORDER {
            assign[arc] = Some(state);
            if self.dead_end(assign) || self.build(assign).feasible_point().is_none() {
                continue;
            }
            if let Some(tf) = self.dfs(depth + 1, assign) {
                return Some(tf);
            }
        }
        assign[arc] = None;
        None
    }

    /// A non-source node whose incoming arcs are all idle cannot attain its label.
    fn dead_end(&self, assign: &[Option<ArcState>]) -> bool {
        (0..self.p.node_count()).any(|v| {
            !self.is_source[v]
                && self.incoming[v]
                    .iter()
                    .all(|&i| assign[i] == Some(ArcState::Idle))
        })
    }

    fn leaf(&self, assign: &[Option<ArcState>]) -> Option<ThinFlow> {
        let sys = self.build(assign);
        let point = sys.feasible_point()?;
        let tf = self.extract(assign, &point);
        let rep = check_thin_flow(self.p, &tf);
        if rep.is_pass() {
            debug!("thin flow found with pattern {:?}", assign);
            Some(tf)
        } else {
            warn!("LP point failed certification:\n{rep}");
            None
        }
    }

    /// Label classes after merging the endpoints of flat arcs.
    fn classes(&self, assign: &[Option<ArcState>]) -> (Vec<usize>, usize) {
        let n = self.p.node_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for (i, a) in self.p.arcs.iter().enumerate() {
            if assign[i] == Some(ArcState::Flat) {
                let (x, y) = (find(&mut parent, a.tail.0), find(&mut parent, a.head.0));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
        let mut class = vec![usize::MAX; n];
        let mut count = 0;
        let mut root_class = vec![usize::MAX; n];
        for (v, c) in class.iter_mut().enumerate() {
            let r = find(&mut parent, v);
            if root_class[r] == usize::MAX {
                root_class[r] = count;
                count += 1;
            }
            *c = root_class[r];
        }
        (class, count)
    }

    fn xexprs(&self, assign: &[Option<ArcState>], first_var: usize) -> (Vec<XExpr>, usize) {
        let mut next = first_var;
        let exprs = self
            .p
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if a.resetting {
                    return XExpr::Scaled;
                }
                match assign[i] {
                    Some(ArcState::Saturated) => XExpr::Scaled,
                    Some(ArcState::Idle) => XExpr::Zero,
                    Some(ArcState::Flat) | None => {
                        next += 1;
                        XExpr::Var(next - 1)
                    }
                }
            })
            .collect();
        (exprs, next)
    }

    fn build(&self, assign: &[Option<ArcState>]) -> LinearSystem {
        let p = self.p;
        let n = p.node_count();
        let (class, nclass) = self.classes(assign);
        let (xs, nvars) = self.xexprs(assign, nclass);
        let mut sys = LinearSystem::new(nvars);
        let zero_row = || vec![Rat::zero(); nvars];

        let add_x = |row: &mut Vec<Rat>, i: usize, sign: &Rat| {
            let a = &p.arcs[i];
            match xs[i] {
                XExpr::Zero => {}
                XExpr::Scaled => row[class[a.head.0]] += sign * &a.capacity,
                XExpr::Var(k) => row[k] += sign.clone(),
            }
        };
        let plus = Rat::one();
        let minus = Rat::from_int(-1);

        // Conservation at every node but the sink.
        let mut rows: Vec<Vec<Rat>> = vec![zero_row(); n];
        for (i, a) in p.arcs.iter().enumerate() {
            add_x(&mut rows[a.tail.0], i, &plus);
            add_x(&mut rows[a.head.0], i, &minus);
        }
        let mut norm = zero_row();
        for (v, r) in &p.sources {
            rows[v.0][class[v.0]] -= r;
            norm[class[v.0]] += r;
        }
        for (v, row) in rows.into_iter().enumerate() {
            if v != p.sink.0 {
                sys.add_eq(row, Rat::zero());
            }
        }
        sys.add_eq(norm, Rat::one());

        for (i, a) in p.arcs.iter().enumerate() {
            let (cu, cv) = (class[a.tail.0], class[a.head.0]);
            match (a.resetting, assign[i]) {
                (true, _) => {}
                (false, Some(ArcState::Saturated)) => {
                    let mut row = zero_row();
                    row[cu] += &plus;
                    row[cv] -= &plus;
                    sys.add_le(row, Rat::zero());
                }
                (false, Some(ArcState::Idle)) => {
                    let mut row = zero_row();
                    row[cv] += &plus;
                    row[cu] -= &plus;
                    sys.add_le(row, Rat::zero());
                }
                (false, Some(ArcState::Flat)) | (false, None) => {
                    let mut row = zero_row();
                    add_x(&mut row, i, &plus);
                    row[cv] -= &a.capacity;
                    sys.add_le(row, Rat::zero());
                }
            }
        }
        sys
    }

    fn extract(&self, assign: &[Option<ArcState>], point: &[Rat]) -> ThinFlow {
        let p = self.p;
        let (class, nclass) = self.classes(assign);
        let (xs, _) = self.xexprs(assign, nclass);
        let labels: Vec<Rat> = (0..p.node_count())
            .map(|v| point[class[v]].clone())
            .collect();
        let arc_flows = p
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| match xs[i] {
                XExpr::Zero => Rat::zero(),
                XExpr::Scaled => &a.capacity * &labels[a.head.0],
                XExpr::Var(k) => point[k].clone(),
            })
            .collect();
        let source_splits = p.sources.iter().map(|(v, r)| r * &labels[v.0]).collect();
        ThinFlow {
            source_splits,
            arc_flows,
            labels,
        }
    }
}
