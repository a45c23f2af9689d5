//! Exact rational scalars.
//!
//! [`Rat`] keeps small values inline as a reduced `i64` fraction and falls back
//! to a heap-allocated [`BigRational`] only when a result no longer fits. The
//! representation is canonical (lowest terms, positive denominator, inline
//! whenever it fits), so derived equality and hashing agree with numeric
//! equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone)]
enum Repr {
    /// Reduced fraction, denominator > 0.
    Small(i64, i64),
    /// Only used when the reduced value does not fit into `Small`.
    Big(BigRational),
}

/// An exact rational number.
#[derive(Clone)]
pub struct Rat(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd_u64(a as u64, b as u64) as u128;
    }
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Binary gcd; avoids 128-bit division on the hot path.
fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rat {
    pub fn zero() -> Rat {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Rat {
        Rat(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Rat {
        Rat(Repr::Small(n, 1))
    }

    /// Builds `num/den`. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Rat {
        assert!(den != 0, "zero denominator");
        Rat::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Rat {
        debug_assert!(den != 0);
        let (mut n, mut d) = if den < 0 {
            match (num.checked_neg(), den.checked_neg()) {
                (Some(n), Some(d)) => (n, d),
                _ => return Rat::from_big(BigRational::new(num.into(), den.into())),
            }
        } else {
            (num, den)
        };
        let g = gcd_u128(n.unsigned_abs(), d.unsigned_abs());
        if g > 1 {
            n /= g as i128;
            d /= g as i128;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(BigRational::new_raw(n.into(), d.into()))),
        }
    }

    fn from_big(r: BigRational) -> Rat {
        // BigRational::new reduces; demote when it fits.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(r)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(n, d) => Rat::from_i128(*d as i128, *n as i128),
            Repr::Big(r) => Rat::from_big(r.recip()),
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64`; approximate by nature.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Renders the value with `digits` significant decimal digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        format_significant(self.to_f64(), digits)
    }
}

fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let exp = v.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, v);
        // trim mantissa zeros: 1.500000e3 -> 1.5e3
        match s.split_once('e') {
            Some((m, e)) if m.contains('.') => {
                let m = m.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{e}")
            }
            _ => s,
        }
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Self {
        Rat::from_int(n as i64)
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat::from_big(r)
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl Hash for Rat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state);
            }
        }
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_ref(a: &Rat, b: &Rat) -> Rat {
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            if d1 == d2 {
                return Rat::from_i128(*n1 as i128 + *n2 as i128, *d1 as i128);
            }
            let n = *n1 as i128 * *d2 as i128 + *n2 as i128 * *d1 as i128;
            let d = *d1 as i128 * *d2 as i128;
            Rat::from_i128(n, d)
        }
        _ => Rat::from_big(a.to_big() + b.to_big()),
    }
}

fn sub_ref(a: &Rat, b: &Rat) -> Rat {
    add_ref(a, &neg_ref(b))
}

fn neg_ref(a: &Rat) -> Rat {
    match &a.0 {
        Repr::Small(n, d) => match n.checked_neg() {
            Some(n) => Rat(Repr::Small(n, *d)),
            None => Rat::from_big(-a.to_big()),
        },
        Repr::Big(r) => Rat::from_big(-r.clone()),
    }
}

fn mul_ref(a: &Rat, b: &Rat) -> Rat {
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            if *n1 == 0 || *n2 == 0 {
                return Rat::zero();
            }
            // cross-reduce keeps the i128 products small
            let g1 = n1.unsigned_abs().gcd(&d2.unsigned_abs()) as i128;
            let g2 = n2.unsigned_abs().gcd(&d1.unsigned_abs()) as i128;
            let n = (*n1 as i128 / g1) * (*n2 as i128 / g2);
            let d = (*d1 as i128 / g2) * (*d2 as i128 / g1);
            Rat::from_i128(n, d)
        }
        _ => Rat::from_big(a.to_big() * b.to_big()),
    }
}

fn div_ref(a: &Rat, b: &Rat) -> Rat {
    assert!(!b.is_zero(), "division by zero");
    mul_ref(a, &b.recip())
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl $trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                $f(self, rhs)
            }
        }
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                $f(&self, &rhs)
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                $f(&self, rhs)
            }
        }
        impl $trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                $f(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);
forward_binop!(Div, div, div_ref);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        neg_ref(&self)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        neg_ref(self)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = add_ref(self, rhs);
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        *self = add_ref(self, &rhs);
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = sub_ref(self, rhs);
    }
}

impl SubAssign<Rat> for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        *self = sub_ref(self, &rhs);
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRatError(pub String);

impl FromStr for Rat {
    type Err = ParseRatError;

    /// Accepts `p`, `p/q` and finite decimals such as `1.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRatError(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Rat::from_big(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            let whole: BigInt = if int_digits.is_empty() {
                BigInt::zero()
            } else {
                int_digits.parse().map_err(|_| err())?
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let f: BigInt = frac.parse().map_err(|_| err())?;
            let mut n = whole * &scale + f;
            if neg {
                n = -n;
            }
            return Ok(Rat::from_big(BigRational::new(n, scale)));
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Rat::from_big(BigRational::new(n, BigInt::one())))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            Int(i64),
            Str(String),
        }
        match Lit::deserialize(deserializer)? {
            Lit::Int(n) => Ok(Rat::from_int(n)),
            Lit::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A rational extended by `+∞`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rat),
    Infinity,
}

impl ExtRat {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }

    pub fn min(self, other: ExtRat) -> ExtRat {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => fmt::Display::fmt(r, f),
            ExtRat::Infinity => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExtRat {
    type Err = ParseRatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(ExtRat::Infinity),
            t => t.parse().map(ExtRat::Finite),
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            Int(i64),
            Str(String),
        }
        match Lit::deserialize(deserializer)? {
            Lit::Int(n) => Ok(ExtRat::Finite(Rat::from_int(n))),
            Lit::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Shorthand for `Rat::new(n, d)`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowest_terms() {
        assert_eq!(rat(2, 4), rat(1, 2));
        assert_eq!(rat(-3, -6).to_string(), "1/2");
        assert_eq!(rat(3, -6).to_string(), "-1/2");
        assert_eq!(rat(4, 2).to_string(), "2");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/2".parse::<Rat>().unwrap(), rat(3, 2));
        assert_eq!("-7".parse::<Rat>().unwrap(), rat(-7, 1));
        assert_eq!("1.25".parse::<Rat>().unwrap(), rat(5, 4));
        assert_eq!("-0.5".parse::<Rat>().unwrap(), rat(-1, 2));
        assert!("1/0".parse::<Rat>().is_err());
        assert!("abc".parse::<Rat>().is_err());
        assert_eq!("inf".parse::<ExtRat>().unwrap(), ExtRat::Infinity);
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rat::from_int(i64::MAX) * Rat::from_int(4);
        assert!(matches!(big.0, Repr::Big(_)));
        let back = big / Rat::from_int(4);
        assert!(matches!(back.0, Repr::Small(_, _)));
        assert_eq!(back, Rat::from_int(i64::MAX));
        let min = Rat::from_int(i64::MIN);
        assert_eq!(-(-min.clone()), min);
        assert_eq!(
            Rat::from_int(i64::MIN).abs().to_string(),
            "9223372036854775808"
        );
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rat(1, 3).to_decimal(12), "0.333333333333");
        assert_eq!(rat(3, 2).to_decimal(12), "1.5");
        assert_eq!(Rat::zero().to_decimal(12), "0");
        assert_eq!(rat(1, 1_000_000_000).to_decimal(12), "1e-9");
    }

    #[test]
    fn serde_accepts_ints_and_strings() {
        let v: Vec<Rat> = serde_json::from_str(r#"[1, "2/4", "-3"]"#).unwrap();
        assert_eq!(v, vec![rat(1, 1), rat(1, 2), rat(-3, 1)]);
        assert_eq!(serde_json::to_string(&rat(3, 2)).unwrap(), r#""3/2""#);
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (any::<i64>(), 1..i64::MAX).prop_map(|(n, d)| rat(n, d))
    }

    fn big(r: &Rat) -> BigRational {
        BigRational::new(r.numer(), r.denom())
    }

    proptest! {
        #[test]
        fn arithmetic_matches_bigrational(a in arb_rat(), b in arb_rat()) {
            prop_assert_eq!(Rat::from(big(&a) + big(&b)), &a + &b);
            prop_assert_eq!(Rat::from(big(&a) - big(&b)), &a - &b);
            prop_assert_eq!(Rat::from(big(&a) * big(&b)), &a * &b);
            if !b.is_zero() {
                prop_assert_eq!(Rat::from(big(&a) / big(&b)), &a / &b);
            }
            prop_assert_eq!(big(&a).cmp(&big(&b)), a.cmp(&b));
        }

        #[test]
        fn display_parse_roundtrip(a in arb_rat()) {
            prop_assert_eq!(a.to_string().parse::<Rat>().unwrap(), a);
        }
    }
}
