//! Exact rationals and exact base-2 logarithms.
//!
//! Every lemma check in this crate is decided with zero tolerance. Probabilities
//! are [`BigRational`]s; entropies and deficiencies are [`Bits`], which hold a
//! value of the form `log2(r) / k` for a positive rational `r` and a positive
//! integer `k`. Sums, differences and rational multiples of such values stay in
//! the same form, and the sign of one reduces to comparing `r` against 1.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Shorthand for an exact rational.
pub type Q = BigRational;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_ratio(num: u64, den: u64) -> Q {
    assert!(den != 0, "zero denominator");
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_from_big(num: BigUint, den: BigUint) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `"p/q"` (always with a denominator).
pub fn fmt_q(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Float approximation of a rational, exact to within double precision for the
/// magnitudes that occur here.
pub fn q_to_f64(q: &Q) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    let l = log2_biguint(q.numer().magnitude()) - log2_biguint(q.denom().magnitude());
    sign * l.exp2()
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.9"` into an exact
/// rational.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int_part: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits.parse().map_err(|_| bad())?
        };
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let mag = Q::new(int_part * &scale + frac_part, scale);
        return Ok(if negative { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub(crate) fn serialize_q<S: Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(q))
}

pub(crate) fn serialize_opt_q<S: Serializer>(q: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_str(&fmt_q(q)),
        None => s.serialize_none(),
    }
}

/// Approximate `log2` of a big unsigned integer (`-inf` for zero).
pub fn log2_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return v.to_f64().map(f64::log2).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

fn pow_q(base: &Q, exp: u64) -> Q {
    let e = u32::try_from(exp).expect("exponent fits in u32");
    Q::new(base.numer().pow(e), base.denom().pow(e))
}

/// An exact quantity `log2(arg) / root`, measured in bits.
///
/// The representation is not canonical; equality and ordering compare values.
#[derive(Clone, Debug)]
pub struct Bits {
    arg: Q,
    root: u64,
}

impl Bits {
    pub fn zero() -> Self {
        Bits {
            arg: Q::one(),
            root: 1,
        }
    }

    /// `log2(r)` for a positive rational `r`.
    pub fn log2(r: Q) -> Self {
        assert!(r.is_positive(), "log2 of a non-positive rational");
        Bits { arg: r, root: 1 }
    }

    /// `log2(num / den)` for positive integers.
    pub fn log2_ratio(num: u64, den: u64) -> Self {
        assert!(num > 0 && den > 0, "log2 ratio needs positive operands");
        Bits::log2(q_ratio(num, den))
    }

    pub fn log2_int(v: u64) -> Self {
        Bits::log2_ratio(v, 1)
    }

    /// The rational number `q` itself, read as a bit count.
    pub fn rational(q: &Q) -> Self {
        // q = p/d  ->  log2(2^p) / d
        let d = q.denom().to_u64().expect("denominator fits in u64");
        let p = q.numer();
        let two = BigInt::from(2u32);
        let mag = BigUint::try_from(p.abs()).expect("non-negative");
        let power = two.pow(mag);
        let arg = if p.is_negative() {
            Q::new(BigInt::one(), power)
        } else {
            Q::from_integer(power)
        };
        Bits { arg, root: d }
    }

    pub fn integer(v: i64) -> Self {
        Bits::rational(&q_int(v))
    }

    /// Multiplies the value by a rational factor.
    pub fn scale(&self, factor: &Q) -> Self {
        if factor.is_zero() {
            return Bits::zero();
        }
        let p = factor.numer().magnitude().to_u64().expect("factor numerator fits in u64");
        let d = factor.denom().to_u64().expect("factor denominator fits in u64");
        let mut arg = pow_q(&self.arg, p);
        if factor.is_negative() {
            arg = arg.recip();
        }
        Bits {
            arg,
            root: self.root * d,
        }
        .reduced()
    }

    fn reduced(self) -> Self {
        if self.arg.is_one() {
            return Bits::zero();
        }
        self
    }

    fn with_root(&self, root: u64) -> Q {
        debug_assert_eq!(root % self.root, 0);
        pow_q(&self.arg, root / self.root)
    }

    /// Sign of the value.
    pub fn signum(&self) -> Ordering {
        self.arg.cmp(&Q::one())
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn to_f64(&self) -> f64 {
        let l = log2_biguint(self.arg.numer().magnitude()) - log2_biguint(self.arg.denom().magnitude());
        l / self.root as f64
    }

    /// Exact textual form, e.g. `log2(27/8)/10`.
    pub fn exact_string(&self) -> String {
        if self.root == 1 {
            format!("log2({})", fmt_q(&self.arg))
        } else {
            format!("log2({})/{}", fmt_q(&self.arg), self.root)
        }
    }
}

impl Default for Bits {
    fn default() -> Self {
        Bits::zero()
    }
}

impl<'a> Add<&'a Bits> for &'a Bits {
    type Output = Bits;
    // Logs add by multiplying their arguments.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: &'a Bits) -> Bits {
        let root = self.root.lcm(&rhs.root);
        Bits {
            arg: self.with_root(root) * rhs.with_root(root),
            root,
        }
        .reduced()
    }
}

impl Add for Bits {
    type Output = Bits;
    fn add(self, rhs: Bits) -> Bits {
        &self + &rhs
    }
}

impl Neg for &Bits {
    type Output = Bits;
    fn neg(self) -> Bits {
        Bits {
            arg: self.arg.recip(),
            root: self.root,
        }
    }
}

impl Neg for Bits {
    type Output = Bits;
    fn neg(self) -> Bits {
        -&self
    }
}

impl<'a> Sub<&'a Bits> for &'a Bits {
    type Output = Bits;
    fn sub(self, rhs: &'a Bits) -> Bits {
        self + &(-rhs)
    }
}

impl Sub for Bits {
    type Output = Bits;
    fn sub(self, rhs: Bits) -> Bits {
        &self - &rhs
    }
}

impl std::iter::Sum for Bits {
    fn sum<I: Iterator<Item = Bits>>(iter: I) -> Bits {
        iter.fold(Bits::zero(), |a, b| a + b)
    }
}

impl PartialEq for Bits {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bits {}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{:.6})", self.exact_string(), self.to_f64())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Bits", 2)?;
        st.serialize_field("exact", &self.exact_string())?;
        st.serialize_field("approx", &self.to_f64())?;
        st.end()
    }
}

/// `base^exp` as a big unsigned integer.
pub fn big_pow(base: u64, exp: u64) -> BigUint {
    BigUint::from(base).pow(BigUint::from(exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_q("0.9").unwrap(), q_ratio(9, 10));
        assert_eq!(parse_q("3/6").unwrap(), q_ratio(1, 2));
        assert_eq!(parse_q("2").unwrap(), q_int(2));
        assert_eq!(parse_q("-0.25").unwrap(), -q_ratio(1, 4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn log_identities() {
        // log2(3) + log2(3/2) - 1 == 2 log2(3) - 2
        let lhs = Bits::log2_int(3) + Bits::log2_ratio(3, 2) - Bits::integer(1);
        let rhs = Bits::log2_int(3).scale(&q_int(2)) - Bits::integer(2);
        assert_eq!(lhs, rhs);
        assert_eq!(Bits::log2_int(8), Bits::integer(3));
        assert_eq!(Bits::rational(&q_ratio(9, 10)).scale(&q_int(10)), Bits::integer(9));
    }

    #[test]
    fn tight_comparison_is_exact() {
        // 0.9 * log2(4) = 1.8 vs log2(3) = 1.58496...
        let rate = Bits::log2_int(4).scale(&q_ratio(9, 10));
        assert!(Bits::log2_int(3) < rate);
        // log2(3) >= 1.8 - 1
        assert!(Bits::log2_int(3) >= &rate - &Bits::integer(1));
        // 10 log2(7) vs 28 (7^10 = 282475249 > 2^28 = 268435456)
        assert!(Bits::log2_int(7) > Bits::rational(&q_ratio(28, 10)));
    }

    proptest! {
        #[test]
        fn matches_float_arithmetic(a in 1u64..1000, b in 1u64..1000, c in 1u64..1000,
                                    p in 0i64..20, d in 1u64..12) {
            let x = Bits::log2_ratio(a, b) + Bits::log2_int(c).scale(&Q::new(p.into(), (d as i64).into()));
            let f = (a as f64 / b as f64).log2() + (c as f64).log2() * p as f64 / d as f64;
            prop_assert!((x.to_f64() - f).abs() < 1e-9);
            let y = Bits::rational(&Q::new(p.into(), (d as i64).into()));
            let g = p as f64 / d as f64;
            if (f - g).abs() > 1e-9 {
                prop_assert_eq!(x > y, f > g);
            }
        }
    }
}
