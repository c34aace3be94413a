//! Exact Hecke eigenvalues in `Q` or a real quadratic field `Q(sqrt d)`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Integer, Rational};

use crate::scalar::{ErrBound, Field, Mp, Real};

/// `rational + irrational * sqrt(d)`; forms with rational coefficients use
/// `d = 0` and a zero irrational part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckeValue {
    pub rational: Rational,
    pub irrational: Rational,
    pub d: Integer,
}

impl HeckeValue {
    pub fn integer(v: Integer) -> Self {
        HeckeValue { rational: Rational::from(v), irrational: Rational::new(), d: Integer::new() }
    }

    pub fn from_i64(v: i64) -> Self {
        HeckeValue::integer(Integer::from(v))
    }

    pub fn quadratic(rational: Rational, irrational: Rational, d: Integer) -> Self {
        HeckeValue { rational, irrational, d }
    }

    /// Same field as `self`, value `v`.
    pub fn lift(&self, v: Integer) -> Self {
        HeckeValue { rational: Rational::from(v), irrational: Rational::new(), d: self.d.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.cmp0() == Ordering::Equal && self.irrational.cmp0() == Ordering::Equal
    }

    pub fn is_rational(&self) -> bool {
        self.irrational.cmp0() == Ordering::Equal
    }

    pub fn as_integer(&self) -> Option<Integer> {
        if self.is_rational() && *self.rational.denom() == 1 {
            Some(self.rational.numer().clone())
        } else {
            None
        }
    }

    pub fn div_integer(&self, v: &Integer) -> Self {
        HeckeValue {
            rational: Rational::from(&self.rational / v),
            irrational: Rational::from(&self.irrational / v),
            d: self.d.clone(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = self.lift(Integer::from(1));
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }

    /// Real embedding with `sqrt(d) -> sign * sqrt(d)`.
    pub fn embed(&self, prec: u32, sign: i8) -> Mp {
        let x = Mp::from_rational(prec, &self.rational);
        if self.is_rational() {
            return x;
        }
        let root = Mp::from_integer(prec, &self.d).sqrt();
        let y = Mp::from_rational(prec, &self.irrational) * root;
        if sign < 0 {
            x - y
        } else {
            x + y
        }
    }

    /// Both real embeddings (equal for rational values).
    pub fn embeddings(&self, prec: u32) -> [Mp; 2] {
        [self.embed(prec, 1), self.embed(prec, -1)]
    }

    fn field(&self, o: &Self) -> Integer {
        if self.d == 0 {
            o.d.clone()
        } else {
            debug_assert!(o.d == 0 || o.d == self.d, "mixing quadratic fields");
            self.d.clone()
        }
    }
}

impl Add for HeckeValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let d = self.field(&o);
        HeckeValue { rational: self.rational + o.rational, irrational: self.irrational + o.irrational, d }
    }
}

impl Sub for HeckeValue {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let d = self.field(&o);
        HeckeValue { rational: self.rational - o.rational, irrational: self.irrational - o.irrational, d }
    }
}

impl Mul for HeckeValue {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let d = self.field(&o);
        let rational = Rational::from(&self.rational * &o.rational)
            + Rational::from(&self.irrational * &o.irrational) * &d;
        let irrational =
            Rational::from(&self.rational * &o.irrational) + Rational::from(&self.irrational * &o.rational);
        HeckeValue { rational, irrational, d }
    }
}

impl Neg for HeckeValue {
    type Output = Self;
    fn neg(self) -> Self {
        HeckeValue { rational: -self.rational, irrational: -self.irrational, d: self.d }
    }
}

/// `|sigma(a)| <= bound` in both real embeddings, decided at a precision
/// high enough for the sizes involved; exact for rational values.
pub fn within_in_all_embeddings(a: &HeckeValue, bound_sq: &Integer) -> bool {
    if a.is_rational() {
        let sq = Rational::from(&a.rational * &a.rational);
        return sq <= Rational::from(bound_sq);
    }
    let prec = 64 + 2 * (bound_sq.significant_bits() + a.d.significant_bits());
    let b = Mp::from_integer(prec, bound_sq);
    a.embeddings(prec).iter().all(|e| e.clone() * e.clone() <= b)
}

impl Field for HeckeValue {
    fn zero_like(&self) -> Self {
        self.lift(Integer::new())
    }
    fn from_i64_like(&self, v: i64) -> Self {
        self.lift(Integer::from(v))
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        self.lift(v.clone())
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        HeckeValue { rational: v.clone(), irrational: Rational::new(), d: self.d.clone() }
    }
    fn abs(&self) -> Self {
        if self.embed(128, 1) < Mp::new(128) {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn is_zero(&self) -> bool {
        HeckeValue::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        self.embed(128, 1).to_f64()
    }
    fn unit_roundoff(&self) -> Self {
        self.zero_like()
    }
    fn abs_bound(&self) -> ErrBound {
        // the 128-bit embedding is within a relative 2^-120 of the exact value
        ErrBound::from_mp(&self.embed(128, 1)).scale(1.0 + 1e-15)
    }
    fn bound_like(&self, b: &ErrBound) -> Self {
        self.from_rational_like(&b.as_float().to_rational().unwrap_or_default())
    }
}

impl std::ops::Div for HeckeValue {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // (a + b r)/(c + e r) = (a + b r)(c - e r) / (c^2 - e^2 d)
        let d = self.field(&o);
        let conj = HeckeValue { rational: o.rational.clone(), irrational: -o.irrational.clone(), d: d.clone() };
        let norm = Rational::from(&o.rational * &o.rational) - Rational::from(&o.irrational * &o.irrational) * &d;
        let num = self * conj;
        HeckeValue { rational: num.rational / &norm, irrational: num.irrational / &norm, d }
    }
}

impl PartialOrd for HeckeValue {
    /// Order of the `+sqrt(d)` embedding.
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        if self == o {
            return Some(Ordering::Equal);
        }
        self.embed(256, 1).partial_cmp(&o.embed(256, 1))
    }
}
