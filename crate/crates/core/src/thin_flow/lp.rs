//! Exact feasibility for small linear systems `A x (=|<=) b, x >= 0`.
//!
//! Phase-one simplex on a dense tableau over [`Rat`], Bland's rule for
//! termination. Sizes stay in the tens of rows and columns.

use crate::rational::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Eq,
    Le,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<Rat>,
    rhs: Rat,
    kind: Kind,
}

#[derive(Clone, Debug)]
pub(crate) struct LinearSystem {
    nvars: usize,
    rows: Vec<Row>,
    trivially_infeasible: bool,
}

impl LinearSystem {
    pub fn new(nvars: usize) -> Self {
        LinearSystem {
            nvars,
            rows: Vec::new(),
            trivially_infeasible: false,
        }
    }

    fn add(&mut self, coeffs: Vec<Rat>, rhs: Rat, kind: Kind) {
        debug_assert_eq!(coeffs.len(), self.nvars);
        if coeffs.iter().all(Rat::is_zero) {
            let ok = match kind {
                Kind::Eq => rhs.is_zero(),
                Kind::Le => !rhs.is_negative(),
            };
            if !ok {
                self.trivially_infeasible = true;
            }
            return;
        }
        self.rows.push(Row { coeffs, rhs, kind });
    }

    pub fn add_eq(&mut self, coeffs: Vec<Rat>, rhs: Rat) {
        self.add(coeffs, rhs, Kind::Eq);
    }

    pub fn add_le(&mut self, coeffs: Vec<Rat>, rhs: Rat) {
        self.add(coeffs, rhs, Kind::Le);
    }

    /// A basic feasible point, or `None` if the system is infeasible.
    pub fn feasible_point(&self) -> Option<Vec<Rat>> {
        if self.trivially_infeasible {
            return None;
        }
        let m = self.rows.len();
        let n = self.nvars;
        let n_slack = self.rows.iter().filter(|r| r.kind == Kind::Le).count();

        // Columns: structural | slack | artificial. A row whose slack enters
        // with +1 after sign normalisation starts with the slack basic.
        let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut rhs: Vec<Rat> = Vec::with_capacity(m);
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut needs_art: Vec<bool> = Vec::with_capacity(m);
        let mut slack_col = n;
        for row in &self.rows {
            let flip = row.rhs.is_negative();
            let mut line: Vec<Rat> = row
                .coeffs
                .iter()
                .map(|c| if flip { -c } else { c.clone() })
                .collect();
            line.resize(n + n_slack, Rat::zero());
            let b = if flip { -&row.rhs } else { row.rhs.clone() };
            if row.kind == Kind::Le {
                line[slack_col] = if flip { Rat::from_int(-1) } else { Rat::one() };
                if !flip {
                    basis.push(slack_col);
                    needs_art.push(false);
                } else {
                    basis.push(usize::MAX);
                    needs_art.push(true);
                }
                slack_col += 1;
            } else {
                basis.push(usize::MAX);
                needs_art.push(true);
            }
            tab.push(line);
            rhs.push(b);
        }
        let n_art = needs_art.iter().filter(|&&a| a).count();
        let width = n + n_slack + n_art;
        let mut art_col = n + n_slack;
        for i in 0..m {
            tab[i].resize(width, Rat::zero());
            if needs_art[i] {
                tab[i][art_col] = Rat::one();
                basis[i] = art_col;
                art_col += 1;
            }
        }
        let first_art = n + n_slack;

        // Reduced costs of the phase-one objective (sum of artificials).
        let mut cost = vec![Rat::zero(); width];
        let mut obj = Rat::zero();
        for i in 0..m {
            if needs_art[i] {
                for (j, c) in cost.iter_mut().enumerate().take(first_art) {
                    if !tab[i][j].is_zero() {
                        *c -= &tab[i][j];
                    }
                }
                obj -= &rhs[i];
            }
        }

        while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..m {
                if tab[i][enter].is_positive() {
                    let ratio = &rhs[i] / &tab[i][enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                // Unbounded direction cannot occur for a bounded-below objective.
                unreachable!("phase-one objective is bounded below by zero");
            };
            pivot(&mut tab, &mut rhs, &mut cost, &mut obj, r, enter);
            basis[r] = enter;
        }

        if !obj.is_zero() {
            return None;
        }
        let mut x = vec![Rat::zero(); n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = rhs[i].clone();
            }
        }
        Some(x)
    }
}

fn pivot(
    tab: &mut [Vec<Rat>],
    rhs: &mut [Rat],
    cost: &mut [Rat],
    obj: &mut Rat,
    r: usize,
    c: usize,
) {
    let p = tab[r][c].clone();
    if p != Rat::one() {
        let inv = p.recip();
        for v in tab[r].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        rhs[r] = &rhs[r] * &inv;
    }
    let prow = tab[r].clone();
    let prhs = rhs[r].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
    for i in 0..tab.len() {
        if i == r || tab[i][c].is_zero() {
            continue;
        }
        let f = tab[i][c].clone();
        for &j in &nz {
            let d = &f * &prow[j];
            tab[i][j] -= d;
        }
        rhs[i] -= &f * &prhs;
    }
    if !cost[c].is_zero() {
        let f = cost[c].clone();
        for &j in &nz {
            let d = &f * &prow[j];
            cost[j] -= d;
        }
        *obj -= &f * &prhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn simple_feasible() {
        // x + y = 1, x - y <= 0
        let mut s = LinearSystem::new(2);
        s.add_eq(vec![r(1), r(1)], r(1));
        s.add_le(vec![r(1), r(-1)], r(0));
        let x = s.feasible_point().unwrap();
        assert_eq!(&x[0] + &x[1], r(1));
        assert!(x[0] <= x[1]);
    }

    #[test]
    fn infeasible_detected() {
        // x + y = 1, x + y <= 1/2
        let mut s = LinearSystem::new(2);
        s.add_eq(vec![r(1), r(1)], r(1));
        s.add_le(vec![r(1), r(1)], rat(1, 2));
        assert!(s.feasible_point().is_none());
    }

    #[test]
    fn negative_rhs_rows() {
        // -x <= -2, x <= 3  => 2 <= x <= 3
        let mut s = LinearSystem::new(1);
        s.add_le(vec![r(-1)], r(-2));
        s.add_le(vec![r(1)], r(3));
        let x = s.feasible_point().unwrap();
        assert!(x[0] >= r(2) && x[0] <= r(3));
        let mut s = LinearSystem::new(1);
        s.add_le(vec![r(-1)], r(-4));
        s.add_le(vec![r(1)], r(3));
        assert!(s.feasible_point().is_none());
    }

    #[test]
    fn empty_rows() {
        let mut s = LinearSystem::new(1);
        s.add_eq(vec![r(0)], r(0));
        assert!(s.feasible_point().is_some());
        s.add_le(vec![r(0)], r(-1));
        assert!(s.feasible_point().is_none());
    }

    #[test]
    fn degenerate_system_terminates() {
        // Redundant equalities and a degenerate vertex.
        let mut s = LinearSystem::new(3);
        s.add_eq(vec![r(1), r(1), r(1)], r(1));
        s.add_eq(vec![r(2), r(2), r(2)], r(2));
        s.add_le(vec![r(1), r(-1), r(0)], r(0));
        s.add_le(vec![r(0), r(1), r(-1)], r(0));
        s.add_le(vec![r(1), r(0), r(-1)], r(0));
        let x = s.feasible_point().unwrap();
        assert_eq!(x.iter().sum::<Rat>(), r(1));
    }
}
