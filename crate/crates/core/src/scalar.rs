//! Scalar abstractions.
//!
//! The polynomial, root-finding and certification code is written against
//! [`Field`] (exact or approximate ring operations with comparison) and
//! [`Real`] (a field with the elementary transcendental functions). The
//! implementations are `f32`/`f64` through `num-traits`, [`Mp`] (an MPFR
//! float whose precision travels with the value), and `rug::Rational` for
//! exact arithmetic.
//!
//! Constants are produced from an existing value (`x.from_i64_like(2)`), so
//! generic code never needs a global precision setting.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float as NumFloat, FloatConst, FromPrimitive, ToPrimitive};
use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Ring operations, division and ordering.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero_like(&self) -> Self;
    fn from_i64_like(&self, v: i64) -> Self;
    fn from_integer_like(&self, v: &Integer) -> Self;
    fn from_rational_like(&self, v: &Rational) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Relative rounding unit at this value's precision; zero for exact types.
    fn unit_roundoff(&self) -> Self;
    /// `|self|` rounded up into a bound.
    fn abs_bound(&self) -> ErrBound;
    /// A bound converted to this type, rounded up.
    fn bound_like(&self, b: &ErrBound) -> Self;

    fn one_like(&self) -> Self {
        self.from_i64_like(1)
    }

    fn is_exact(&self) -> bool {
        self.unit_roundoff().is_zero()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// A field with square roots and the elementary functions.
pub trait Real: Field {
    fn from_f64_like(&self, v: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
    fn hypot(&self, other: &Self) -> Self;
    fn pi_like(&self) -> Self;
    /// Mantissa bits carried by this value.
    fn precision_bits(&self) -> u32;
    /// Exact conversion to a multiple-precision value.
    fn to_mp(&self) -> Mp;

    fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.one_like() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn powf(&self, e: &Self) -> Self {
        (self.ln() * e.clone()).exp()
    }
}

macro_rules! impl_prim {
    ($t:ty, $bits:expr) => {
        impl Field for $t {
            fn zero_like(&self) -> Self {
                0.0
            }
            fn from_i64_like(&self, v: i64) -> Self {
                <$t as FromPrimitive>::from_i64(v).unwrap_or(<$t>::NAN)
            }
            fn from_integer_like(&self, v: &Integer) -> Self {
                v.to_f64() as $t
            }
            fn from_rational_like(&self, v: &Rational) -> Self {
                v.to_f64() as $t
            }
            fn abs(&self) -> Self {
                NumFloat::abs(*self)
            }
            fn is_zero(&self) -> bool {
                *self == 0.0
            }
            fn to_f64(&self) -> f64 {
                ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
            }
            fn unit_roundoff(&self) -> Self {
                <$t as NumFloat>::epsilon() / 2.0
            }
            fn abs_bound(&self) -> ErrBound {
                ErrBound::from_f64(NumFloat::abs(*self) as f64)
            }
            fn bound_like(&self, b: &ErrBound) -> Self {
                let (f, _) = Float::with_val_round($bits, b.as_float(), Round::Up);
                f.to_f64_round(Round::Up) as $t
            }
        }

        impl Real for $t {
            fn from_f64_like(&self, v: f64) -> Self {
                v as $t
            }
            fn sqrt(&self) -> Self {
                NumFloat::sqrt(*self)
            }
            fn exp(&self) -> Self {
                NumFloat::exp(*self)
            }
            fn ln(&self) -> Self {
                NumFloat::ln(*self)
            }
            fn sin(&self) -> Self {
                NumFloat::sin(*self)
            }
            fn cos(&self) -> Self {
                NumFloat::cos(*self)
            }
            fn atan2(&self, x: &Self) -> Self {
                NumFloat::atan2(*self, *x)
            }
            fn hypot(&self, other: &Self) -> Self {
                NumFloat::hypot(*self, *other)
            }
            fn pi_like(&self) -> Self {
                <$t as FloatConst>::PI()
            }
            fn precision_bits(&self) -> u32 {
                $bits
            }
            fn to_mp(&self) -> Mp {
                Mp::from_f64(53, *self as f64)
            }
            fn powi(&self, n: i64) -> Self {
                NumFloat::powi(*self, n as i32)
            }
        }
    };
}

impl_prim!(f32, 24);
impl_prim!(f64, 53);

impl Field for Rational {
    fn zero_like(&self) -> Self {
        Rational::new()
    }
    fn from_i64_like(&self, v: i64) -> Self {
        Rational::from(v)
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        Rational::from(v)
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        v.clone()
    }
    fn abs(&self) -> Self {
        self.clone().abs()
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == Ordering::Equal
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn unit_roundoff(&self) -> Self {
        Rational::new()
    }
    fn abs_bound(&self) -> ErrBound {
        let (f, _) = Float::with_val_round(BOUND_PREC, &*self.as_abs(), Round::Up);
        ErrBound::from_float_up(&f)
    }
    fn bound_like(&self, b: &ErrBound) -> Self {
        b.as_float().to_rational().unwrap_or_default()
    }
}

/// Multiple-precision binary float (MPFR) with value-carried precision.
///
/// Binary operations produce a result at the larger of the two operand
/// precisions, rounded to nearest.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mp(Float);

impl Mp {
    pub fn new(prec: u32) -> Self {
        Mp(Float::new(prec))
    }

    pub fn from_f64(prec: u32, v: f64) -> Self {
        Mp(Float::with_val(prec, v))
    }

    pub fn from_i64(prec: u32, v: i64) -> Self {
        Mp(Float::with_val(prec, v))
    }

    pub fn from_integer(prec: u32, v: &Integer) -> Self {
        Mp(Float::with_val(prec, v))
    }

    pub fn from_rational(prec: u32, v: &Rational) -> Self {
        Mp(Float::with_val(prec, v))
    }

    pub fn from_float(v: Float) -> Self {
        Mp(v)
    }

    pub fn pi(prec: u32) -> Self {
        Mp(Float::with_val(prec, Constant::Pi))
    }

    /// Parses a decimal string (as written by [`Mp::to_decimal`]).
    pub fn parse(prec: u32, s: &str) -> Option<Self> {
        Float::parse(s.trim()).ok().map(|p| Mp(Float::with_val(prec, p)))
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    pub fn into_inner(self) -> Float {
        self.0
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// Same value rounded to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        Mp(Float::with_val(prec, &self.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn gamma(&self) -> Self {
        Mp(self.0.clone().gamma())
    }

    pub fn ln_gamma(&self) -> Self {
        Mp(self.0.clone().ln_gamma())
    }

    pub fn mul_2si(&self, e: i32) -> Self {
        Mp(Float::with_val(self.prec(), &self.0 << e))
    }

    pub fn pow_mp(&self, e: &Mp) -> Self {
        let p = self.prec().max(e.prec());
        Mp(Float::with_val(p, (&self.0).pow(&e.0)))
    }

    pub fn floor(&self) -> Self {
        Mp(self.0.clone().floor())
    }

    pub fn to_integer(&self) -> Option<Integer> {
        self.0.to_integer()
    }

    pub fn signum_i32(&self) -> i32 {
        match self.0.cmp0() {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            _ => 0,
        }
    }

    /// Base-2 exponent such that `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        self.0.get_exp()
    }

    /// Decimal digits used for text serialization at a given precision.
    pub fn digits_for(prec: u32) -> usize {
        ((prec as f64) * 0.302).ceil() as usize
    }

    /// Scientific decimal with a digit count fixed by the precision.
    pub fn to_decimal(&self) -> String {
        self.to_decimal_digits(Self::digits_for(self.prec()))
    }

    pub fn to_decimal_digits(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, Some(digits.max(2)))
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_digits(24))
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(d) => write!(f, "{}", self.to_decimal_digits(d)),
            None => write!(f, "{}", self.to_decimal()),
        }
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident, $op:tt, $tra:ident, $ma:ident) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                let p = self.prec().max(rhs.prec());
                Mp(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl<'a> $tr<&'a Mp> for Mp {
            type Output = Mp;
            fn $method(self, rhs: &'a Mp) -> Mp {
                let p = self.prec().max(rhs.prec());
                Mp(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Mp> for &'a Mp {
            type Output = Mp;
            fn $method(self, rhs: &'b Mp) -> Mp {
                let p = self.prec().max(rhs.prec());
                Mp(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl $tra<&Mp> for Mp {
            fn $ma(&mut self, rhs: &Mp) {
                if rhs.prec() > self.prec() {
                    self.0.set_prec(rhs.prec());
                }
                self.0 = Float::with_val(self.prec(), &self.0 $op &rhs.0);
            }
        }
    };
}

mp_binop!(Add, add, +, AddAssign, add_assign);
mp_binop!(Sub, sub, -, SubAssign, sub_assign);
mp_binop!(Mul, mul, *, MulAssign, mul_assign);

impl Div for Mp {
    type Output = Mp;
    fn div(self, rhs: Mp) -> Mp {
        let p = self.prec().max(rhs.prec());
        Mp(Float::with_val(p, &self.0 / &rhs.0))
    }
}

impl<'a> Div<&'a Mp> for &Mp {
    type Output = Mp;
    fn div(self, rhs: &'a Mp) -> Mp {
        let p = self.prec().max(rhs.prec());
        Mp(Float::with_val(p, &self.0 / &rhs.0))
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

impl Field for Mp {
    fn zero_like(&self) -> Self {
        Mp(Float::new(self.prec()))
    }
    fn from_i64_like(&self, v: i64) -> Self {
        Mp(Float::with_val(self.prec(), v))
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        Mp(Float::with_val(self.prec(), v))
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        Mp(Float::with_val(self.prec(), v))
    }
    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn unit_roundoff(&self) -> Self {
        Mp(Float::with_val(self.prec(), Float::i_exp(1, -(self.prec() as i32))))
    }
    fn abs_bound(&self) -> ErrBound {
        ErrBound::from_mp(self)
    }
    fn bound_like(&self, b: &ErrBound) -> Self {
        b.to_mp(self.prec())
    }
}

impl Real for Mp {
    fn from_f64_like(&self, v: f64) -> Self {
        Mp(Float::with_val(self.prec(), v))
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }
    fn sin(&self) -> Self {
        Mp(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Mp(self.0.clone().cos())
    }
    fn atan2(&self, x: &Self) -> Self {
        let p = self.prec().max(x.prec());
        Mp(Float::with_val(p, self.0.atan2_ref(&x.0)))
    }
    fn hypot(&self, other: &Self) -> Self {
        let p = self.prec().max(other.prec());
        Mp(Float::with_val(p, self.0.hypot_ref(&other.0)))
    }
    fn pi_like(&self) -> Self {
        Mp::pi(self.prec())
    }
    fn precision_bits(&self) -> u32 {
        self.prec()
    }
    fn to_mp(&self) -> Mp {
        self.clone()
    }
    fn powi(&self, n: i64) -> Self {
        Mp(Float::with_val(self.prec(), (&self.0).pow(n)))
    }
    fn powf(&self, e: &Self) -> Self {
        self.pow_mp(e)
    }
}

/// Nonnegative error magnitude kept at 64 bits with every operation
/// rounded toward +infinity, so sums and products of bounds stay bounds.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct ErrBound(Float);

const BOUND_PREC: u32 = 64;

impl ErrBound {
    pub fn zero() -> Self {
        ErrBound(Float::new(BOUND_PREC))
    }

    pub fn from_f64(v: f64) -> Self {
        assert!(v >= 0.0, "error bounds are nonnegative");
        ErrBound(Float::with_val(BOUND_PREC, v))
    }

    /// `|x|` rounded up.
    pub fn from_mp(x: &Mp) -> Self {
        let (f, _) = Float::with_val_round(BOUND_PREC, &*x.inner().as_abs(), Round::Up);
        ErrBound(f)
    }

    pub fn from_float_up(x: &Float) -> Self {
        let (f, _) = Float::with_val_round(BOUND_PREC, &*x.as_abs(), Round::Up);
        ErrBound(f)
    }

    /// `exp(ln)` rounded up, with a relative cushion covering the double
    /// precision error of `ln` itself.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            return ErrBound::zero();
        }
        let cushion = 1e-13 * (1.0 + ln.abs());
        let (f, _) = Float::with_val_round(BOUND_PREC, ln + cushion, Round::Up);
        let (e, _) = Float::with_val_round(BOUND_PREC, f.exp_ref(), Round::Up);
        ErrBound(e)
    }

    /// Natural logarithm as a double (`-inf` for zero).
    pub fn ln_f64(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        Float::with_val(BOUND_PREC, self.0.ln_ref()).to_f64()
    }

    /// `2^e`.
    pub fn pow2(e: i32) -> Self {
        ErrBound(Float::with_val(BOUND_PREC, Float::i_exp(1, e)))
    }

    /// A bound on the rounding error of a value of magnitude `|x|` held at
    /// `prec` bits: `|x| * 2^(1-prec)`.
    pub fn ulps(x: &Mp, prec: u32, count: u32) -> Self {
        ErrBound::from_mp(x)
            .mul(&ErrBound::pow2(1 - prec as i32))
            .mul(&ErrBound::from_f64(count.max(1) as f64))
    }

    pub fn add(&self, o: &ErrBound) -> ErrBound {
        let (f, _) = Float::with_val_round(BOUND_PREC, &self.0 + &o.0, Round::Up);
        ErrBound(f)
    }

    pub fn mul(&self, o: &ErrBound) -> ErrBound {
        let (f, _) = Float::with_val_round(BOUND_PREC, &self.0 * &o.0, Round::Up);
        ErrBound(f)
    }

    pub fn div(&self, o: &ErrBound) -> ErrBound {
        let (f, _) = Float::with_val_round(BOUND_PREC, &self.0 / &o.0, Round::Up);
        ErrBound(f)
    }

    pub fn max(&self, o: &ErrBound) -> ErrBound {
        if o.0 > self.0 {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn scale(&self, s: f64) -> ErrBound {
        self.mul(&ErrBound::from_f64(s))
    }

    pub fn sum<'a>(it: impl IntoIterator<Item = &'a ErrBound>) -> ErrBound {
        it.into_iter().fold(ErrBound::zero(), |a, b| a.add(b))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn to_mp(&self, prec: u32) -> Mp {
        let (f, _) = Float::with_val_round(prec, &self.0, Round::Up);
        Mp(f)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64_round(Round::Up)
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// `|x| <= self`.
    pub fn covers(&self, x: &Mp) -> bool {
        x.inner().as_abs().le(&self.0)
    }

    pub fn lt_mp(&self, x: &Mp) -> bool {
        self.0.lt(&*x.inner().as_abs())
    }

    pub fn to_decimal(&self) -> String {
        if self.0.is_zero() {
            return "0".into();
        }
        // round the printed value up so reparsing never shrinks the bound
        let (f, _) = Float::with_val_round(24, &self.0, Round::Up);
        let s = f.to_string_radix_round(10, Some(8), Round::Up);
        s
    }

    pub fn parse(s: &str) -> Option<Self> {
        let v = Float::parse(s.trim()).ok()?;
        let (f, _) = Float::with_val_round(BOUND_PREC, v, Round::Up);
        if f.is_sign_negative() && !f.is_zero() {
            return None;
        }
        Some(ErrBound(f))
    }
}

impl fmt::Debug for ErrBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl fmt::Display for ErrBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

/// `n!` as an exact integer.
pub fn factorial(n: u64) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}
