//! Exact piecewise-linear and piecewise-constant functions used by the
//! checker. Deliberately separate from the engine's representations.

use std::fmt;

use crate::rational::{ExtRat, Rat};

/// Continuous piecewise-linear function: constant left of the first
/// breakpoint, `final_slope` right of the last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pwl {
    bps: Vec<(Rat, Rat)>,
    final_slope: Rat,
}

fn midpoint(a: &Rat, b: &Rat) -> Rat {
    &(a + b) / &Rat::from_int(2)
}

fn sorted_union(mut xs: Vec<Rat>) -> Vec<Rat> {
    xs.sort();
    xs.dedup();
    xs
}

impl Pwl {
    /// Breakpoint abscissae must be strictly increasing.
    pub fn new(bps: Vec<(Rat, Rat)>, final_slope: Rat) -> Self {
        assert!(
            !bps.is_empty(),
            "a piecewise-linear function needs a breakpoint"
        );
        debug_assert!(bps.windows(2).all(|w| w[0].0 < w[1].0));
        Pwl { bps, final_slope }
    }

    pub fn constant(c: Rat) -> Self {
        Pwl::new(vec![(Rat::zero(), c)], Rat::zero())
    }

    /// `x -> x + offset` for `x >= from`, constant before.
    pub fn affine_from(from: Rat, offset: Rat) -> Self {
        let y = &from + &offset;
        Pwl::new(vec![(from, y)], Rat::one())
    }

    pub fn breakpoints(&self) -> &[(Rat, Rat)] {
        &self.bps
    }

    pub fn final_slope(&self) -> &Rat {
        &self.final_slope
    }

    pub fn xs(&self) -> impl Iterator<Item = &Rat> {
        self.bps.iter().map(|(x, _)| x)
    }

    pub fn first_x(&self) -> &Rat {
        &self.bps[0].0
    }

    pub fn last_x(&self) -> &Rat {
        &self.bps[self.bps.len() - 1].0
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let k = self.bps.partition_point(|(bx, _)| bx <= x);
        if k == 0 {
            return self.bps[0].1.clone();
        }
        let (xa, ya) = &self.bps[k - 1];
        if k == self.bps.len() {
            return ya + &(&self.final_slope * &(x - xa));
        }
        let (xb, yb) = &self.bps[k];
        ya + &(&(yb - ya) * &(&(x - xa) / &(xb - xa)))
    }

    /// Slope on `(x, x + ε)`.
    pub fn slope_right(&self, x: &Rat) -> Rat {
        let k = self.bps.partition_point(|(bx, _)| bx <= x);
        if k == 0 {
            return Rat::zero();
        }
        if k == self.bps.len() {
            return self.final_slope.clone();
        }
        let (xa, ya) = &self.bps[k - 1];
        let (xb, yb) = &self.bps[k];
        &(yb - ya) / &(xb - xa)
    }

    pub fn is_nondecreasing(&self) -> bool {
        !self.final_slope.is_negative() && self.bps.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.final_slope.is_negative() && self.bps.iter().all(|(_, y)| !y.is_negative())
    }

    /// `x -> self(x - d)`.
    pub fn delay(&self, d: &Rat) -> Pwl {
        Pwl::new(
            self.bps.iter().map(|(x, y)| (x + d, y.clone())).collect(),
            self.final_slope.clone(),
        )
    }

    fn pointwise(&self, other: &Pwl, op: impl Fn(&Rat, &Rat) -> Rat) -> Pwl {
        let xs = sorted_union(self.xs().chain(other.xs()).cloned().collect());
        let bps = xs
            .into_iter()
            .map(|x| {
                let y = op(&self.eval(&x), &other.eval(&x));
                (x, y)
            })
            .collect();
        Pwl::new(bps, op(&self.final_slope, &other.final_slope)).simplify()
    }

    pub fn add(&self, other: &Pwl) -> Pwl {
        self.pointwise(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Pwl) -> Pwl {
        self.pointwise(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rat) -> Pwl {
        Pwl::new(
            self.bps.iter().map(|(x, y)| (x.clone(), y * c)).collect(),
            &self.final_slope * c,
        )
    }

    /// Pointwise minimum, with crossing points added as breakpoints.
    pub fn min(&self, other: &Pwl) -> Pwl {
        let mut xs = sorted_union(self.xs().chain(other.xs()).cloned().collect());
        let diff = |x: &Rat| &self.eval(x) - &other.eval(x);
        let mut extra = Vec::new();
        for w in xs.windows(2) {
            let (d0, d1) = (diff(&w[0]), diff(&w[1]));
            if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
                extra.push(&w[0] + &(&(&w[1] - &w[0]) * &(&d0 / &(&d0 - &d1))));
            }
        }
        let last = xs.last().expect("nonempty").clone();
        let d_last = diff(&last);
        let ds = &self.final_slope - &other.final_slope;
        if (d_last.is_positive() && ds.is_negative()) || (d_last.is_negative() && ds.is_positive())
        {
            extra.push(&last - &(&d_last / &ds));
        }
        xs.extend(extra);
        let xs = sorted_union(xs);
        let last = xs.last().expect("nonempty").clone();
        let d_last = diff(&last);
        let final_slope = if d_last.is_negative() {
            self.final_slope.clone()
        } else if d_last.is_positive() {
            other.final_slope.clone()
        } else {
            self.final_slope.clone().min(other.final_slope.clone())
        };
        let bps = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&x).min(other.eval(&x));
                (x, y)
            })
            .collect();
        Pwl::new(bps, final_slope).simplify()
    }

    /// Smallest `x` with `self(x) >= y`, for nondecreasing `self`. `None` if
    /// `y` is never reached; the first breakpoint if it is reached already there.
    pub fn first_reaching(&self, y: &Rat) -> Option<Rat> {
        if self.bps[0].1 >= *y {
            return Some(self.bps[0].0.clone());
        }
        for w in self.bps.windows(2) {
            let ((xa, ya), (xb, yb)) = (&w[0], &w[1]);
            if yb >= y {
                return Some(xa + &(&(xb - xa) * &(&(y - ya) / &(yb - ya))));
            }
        }
        let (xl, yl) = self.bps.last().expect("nonempty");
        if self.final_slope.is_positive() {
            Some(xl + &(&(y - yl) / &self.final_slope))
        } else {
            None
        }
    }

    /// `self ∘ inner` for nondecreasing `inner`.
    pub fn compose(&self, inner: &Pwl) -> Pwl {
        let mut xs: Vec<Rat> = inner.xs().cloned().collect();
        for (y, _) in &self.bps {
            if let Some(x) = inner.first_reaching(y) {
                xs.push(x);
            }
        }
        let xs = sorted_union(xs);
        let last = xs.last().expect("nonempty").clone();
        let final_slope = if inner.final_slope.is_zero() {
            Rat::zero()
        } else {
            &self.slope_right(&inner.eval(&last)) * &inner.final_slope
        };
        let bps = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&inner.eval(&x));
                (x, y)
            })
            .collect();
        Pwl::new(bps, final_slope).simplify()
    }

    /// Drops breakpoints where the slope does not change.
    pub fn simplify(self) -> Pwl {
        let Pwl { bps, final_slope } = self;
        if bps.len() == 1 {
            return Pwl { bps, final_slope };
        }
        let slope = |a: &(Rat, Rat), b: &(Rat, Rat)| &(&b.1 - &a.1) / &(&b.0 - &a.0);
        let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(bps.len());
        let n = bps.len();
        for k in 0..n {
            let left = out.last().map(|prev| slope(prev, &bps[k]));
            let right = if k + 1 < n {
                slope(&bps[k], &bps[k + 1])
            } else {
                final_slope.clone()
            };
            // Keep the first breakpoint: it anchors the constant left part.
            match left {
                Some(l) if l == right => continue,
                _ => out.push(bps[k].clone()),
            }
        }
        Pwl {
            bps: out,
            final_slope,
        }
    }

    /// A point of `[lo, hi]` where the functions differ, if any. For an
    /// unbounded window the final slopes are compared as well.
    pub fn differs_on(&self, other: &Pwl, lo: &Rat, hi: &ExtRat) -> Option<Rat> {
        let inside = |x: &Rat| x >= lo && ExtRat::Finite(x.clone()) <= *hi;
        let mut xs: Vec<Rat> = self
            .xs()
            .chain(other.xs())
            .filter(|x| inside(x))
            .cloned()
            .collect();
        xs.push(lo.clone());
        if let ExtRat::Finite(h) = hi {
            xs.push(h.clone());
        }
        let xs = sorted_union(xs);
        if let Some(x) = xs.iter().find(|x| self.eval(x) != other.eval(x)) {
            return Some(x.clone());
        }
        if !hi.is_finite() {
            let far = self
                .last_x()
                .clone()
                .max(other.last_x().clone())
                .max(lo.clone());
            let probe = &far + &Rat::one();
            if self.eval(&probe) != other.eval(&probe) || self.final_slope != other.final_slope {
                return Some(probe);
            }
        }
        None
    }

    /// Slopes as a piecewise-constant function.
    pub fn derivative(&self) -> Pc {
        let mut pieces = Vec::with_capacity(self.bps.len());
        for w in self.bps.windows(2) {
            let s = &(&w[1].1 - &w[0].1) / &(&w[1].0 - &w[0].0);
            pieces.push((w[0].0.clone(), s));
        }
        pieces.push((self.last_x().clone(), self.final_slope.clone()));
        Pc::new(pieces).simplify()
    }
}

impl fmt::Display for Pwl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, y) in &self.bps {
            write!(f, "({x}, {y}) ")?;
        }
        write!(f, "slope {}", self.final_slope)
    }
}

/// Piecewise-constant rate: `pieces[i].1` on `(pieces[i].0, pieces[i+1].0]`,
/// the last value to infinity, zero before the first start.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Pc {
    pieces: Vec<(Rat, Rat)>,
}

impl Pc {
    pub fn new(pieces: Vec<(Rat, Rat)>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| w[0].0 < w[1].0));
        Pc { pieces }
    }

    pub fn zero() -> Self {
        Pc::default()
    }

    pub fn pieces(&self) -> &[(Rat, Rat)] {
        &self.pieces
    }

    pub fn starts(&self) -> impl Iterator<Item = &Rat> {
        self.pieces.iter().map(|(s, _)| s)
    }

    /// Value on `(x, x + ε)`.
    pub fn right_of(&self, x: &Rat) -> Rat {
        let k = self.pieces.partition_point(|(s, _)| s <= x);
        if k == 0 {
            Rat::zero()
        } else {
            self.pieces[k - 1].1.clone()
        }
    }

    /// Value at `x` under the left-open piece convention.
    pub fn eval(&self, x: &Rat) -> Rat {
        let k = self.pieces.partition_point(|(s, _)| s < x);
        if k == 0 {
            Rat::zero()
        } else {
            self.pieces[k - 1].1.clone()
        }
    }

    pub fn last_value(&self) -> Rat {
        self.pieces
            .last()
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Cumulative integral from minus infinity.
    pub fn integral(&self) -> Pwl {
        let Some((s0, _)) = self.pieces.first() else {
            return Pwl::constant(Rat::zero());
        };
        let mut bps = vec![(s0.clone(), Rat::zero())];
        for w in self.pieces.windows(2) {
            let y = bps.last().expect("nonempty").1.clone();
            bps.push((w[1].0.clone(), &y + &(&w[0].1 * &(&w[1].0 - &w[0].0))));
        }
        Pwl::new(bps, self.last_value()).simplify()
    }

    /// `x -> self(x - d)`.
    pub fn delay(&self, d: &Rat) -> Pc {
        Pc::new(
            self.pieces
                .iter()
                .map(|(s, v)| (s + d, v.clone()))
                .collect(),
        )
    }

    fn pointwise(&self, other: &Pc, op: impl Fn(&Rat, &Rat) -> Rat) -> Pc {
        let xs = sorted_union(self.starts().chain(other.starts()).cloned().collect());
        Pc::new(
            xs.into_iter()
                .map(|x| {
                    let v = op(&self.right_of(&x), &other.right_of(&x));
                    (x, v)
                })
                .collect(),
        )
        .simplify()
    }

    pub fn add(&self, other: &Pc) -> Pc {
        self.pointwise(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Pc) -> Pc {
        self.pointwise(other, |a, b| a - b)
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Pc>) -> Pc {
        items.into_iter().fold(Pc::zero(), |acc, p| acc.add(p))
    }

    pub fn min_value(&self) -> Rat {
        self.pieces
            .iter()
            .map(|(_, v)| v.clone())
            .fold(Rat::zero(), Rat::min)
    }

    /// Merges equal neighbours and drops leading zeros.
    pub fn simplify(self) -> Pc {
        let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(self.pieces.len());
        for (s, v) in self.pieces {
            let prev = out
                .last()
                .map(|(_, pv)| pv.clone())
                .unwrap_or_else(Rat::zero);
            if prev != v {
                out.push((s, v));
            }
        }
        Pc { pieces: out }
    }

    /// Start of an interval where `self` and `other` differ, if any.
    /// Values at isolated points are ignored.
    pub fn differs(&self, other: &Pc) -> Option<Rat> {
        self.first_where(other, |a, b| a != b)
    }

    /// Start of an interval where `self > other`, if any.
    pub fn exceeds(&self, other: &Pc) -> Option<Rat> {
        self.first_where(other, |a, b| a > b)
    }

    fn first_where(&self, other: &Pc, bad: impl Fn(&Rat, &Rat) -> bool) -> Option<Rat> {
        let xs = sorted_union(self.starts().chain(other.starts()).cloned().collect());
        xs.into_iter()
            .find(|x| bad(&self.right_of(x), &other.right_of(x)))
    }
}

impl fmt::Display for Pc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("0");
        }
        for (s, v) in &self.pieces {
            write!(f, "({s}: {v}) ")?;
        }
        Ok(())
    }
}

/// The points inside `[lo, hi]` plus the finite ends, sorted and deduplicated.
pub fn grid(points: impl IntoIterator<Item = Rat>, lo: &Rat, hi: &ExtRat) -> Vec<Rat> {
    let mut xs = vec![lo.clone()];
    if let ExtRat::Finite(h) = hi {
        xs.push(h.clone());
    }
    xs.extend(
        points
            .into_iter()
            .filter(|x| x >= lo && ExtRat::Finite(x.clone()) <= *hi),
    );
    sorted_union(xs)
}

/// Midpoints of consecutive grid points, plus a probe past the last point
/// for unbounded windows.
pub fn probes(grid: &[Rat], hi: &ExtRat) -> Vec<Rat> {
    let mut out: Vec<Rat> = grid.windows(2).map(|w| midpoint(&w[0], &w[1])).collect();
    if !hi.is_finite() {
        out.push(grid.last().expect("nonempty grid") + &Rat::one());
    }
    out
}
