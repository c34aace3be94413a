//! Polynomials whose coefficients carry absolute error bounds.

use serde::{Deserialize, Serialize};

use crate::complex::Complex;
use crate::poly::Polynomial;
use crate::scalar::{ErrBound, Field, Mp, Real};

/// Real coefficients `c_j` with bounds `b_j >= |c_j - true_j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial<T> {
    pub poly: Polynomial<T>,
    pub bounds: Vec<ErrBound>,
}

/// `|x| * u * count`, the rounding charge of `count` operations producing `x`.
pub(crate) fn rounding<T: Field>(x: &T, count: f64) -> ErrBound {
    if x.is_exact() || x.is_zero() {
        return ErrBound::zero();
    }
    x.abs_bound().mul(&x.unit_roundoff().abs_bound()).scale(count)
}

impl<T: Field> RealPolynomial<T> {
    pub fn new(coeffs: Vec<T>, bounds: Vec<ErrBound>) -> Self {
        assert_eq!(coeffs.len(), bounds.len(), "one bound per coefficient");
        RealPolynomial { poly: Polynomial::new(coeffs), bounds }
    }

    pub fn exact(coeffs: Vec<T>) -> Self {
        let n = coeffs.len();
        RealPolynomial::new(coeffs, vec![ErrBound::zero(); n])
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn coeffs(&self) -> &[T] {
        self.poly.coeffs()
    }

    pub fn coeff(&self, j: usize) -> &T {
        self.poly.coeff(j)
    }

    pub fn bound(&self, j: usize) -> &ErrBound {
        &self.bounds[j]
    }

    pub fn reversed(&self) -> Self {
        let mut b = self.bounds.clone();
        b.reverse();
        RealPolynomial { poly: self.poly.reversed(), bounds: b }
    }

    pub fn shift(&self, k: usize) -> Self {
        let mut b = vec![ErrBound::zero(); k];
        b.extend(self.bounds.iter().cloned());
        RealPolynomial { poly: self.poly.shift(k), bounds: b }
    }

    /// Pads with exact zeros up to `degree`.
    pub fn padded(&self, degree: usize) -> Self {
        if degree <= self.degree() {
            return self.clone();
        }
        let z = self.coeff(0).zero_like();
        let mut c = self.coeffs().to_vec();
        c.resize(degree + 1, z);
        let mut b = self.bounds.clone();
        b.resize(degree + 1, ErrBound::zero());
        RealPolynomial::new(c, b)
    }

    fn combine(&self, o: &Self, sign: i64) -> Self {
        let n = self.degree().max(o.degree());
        let a = self.padded(n);
        let b = o.padded(n);
        let s = a.coeff(0).from_i64_like(sign);
        let mut coeffs = Vec::with_capacity(n + 1);
        let mut bounds = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let c = a.coeff(j).clone() + b.coeff(j).clone() * s.clone();
            bounds.push(a.bounds[j].add(&b.bounds[j]).add(&rounding(&c, 1.0)));
            coeffs.push(c);
        }
        RealPolynomial::new(coeffs, bounds)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.combine(o, 1)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.combine(o, -1)
    }

    /// Multiplies by `s` known to within `s_bound`.
    pub fn scale(&self, s: &T, s_bound: &ErrBound) -> Self {
        let sb = s.abs_bound();
        let mut coeffs = Vec::with_capacity(self.degree() + 1);
        let mut bounds = Vec::with_capacity(self.degree() + 1);
        for (c, b) in self.coeffs().iter().zip(&self.bounds) {
            let v = c.clone() * s.clone();
            let e = b.mul(&sb).add(&c.abs_bound().mul(s_bound)).add(&b.mul(s_bound)).add(&rounding(&v, 1.0));
            bounds.push(e);
            coeffs.push(v);
        }
        RealPolynomial::new(coeffs, bounds)
    }

    /// Largest coefficient bound.
    pub fn max_bound(&self) -> ErrBound {
        self.bounds.iter().fold(ErrBound::zero(), |a, b| a.max(b))
    }

    /// `sum_j b_j r^j` for `r = |z|` given as a bound.
    pub fn bound_at_radius(&self, r: &ErrBound) -> ErrBound {
        let mut acc = ErrBound::zero();
        for b in self.bounds.iter().rev() {
            acc = acc.mul(r).add(b);
        }
        acc
    }
}

impl<T: Real> RealPolynomial<T> {
    /// Checks `c_j = eps c_(d-j)` within `b_j + b_(d-j)` plus rounding;
    /// returns the first failing index.
    pub fn palindrome_violation(&self, eps: i8) -> Option<usize> {
        let d = self.degree();
        let e = self.coeff(0).from_i64_like(eps as i64);
        (0..=d).find(|&j| {
            let diff = self.coeff(j).clone() - e.clone() * self.coeff(d - j).clone();
            let allowed = self.bounds[j].add(&self.bounds[d - j]).add(&rounding(&diff, 2.0));
            !allowed.covers(&diff.to_mp())
        })
    }

    /// The leading coefficient is nonzero even after subtracting its bound.
    pub fn degree_is_certain(&self) -> bool {
        let lead = self.poly.leading();
        !lead.is_zero() && self.bounds[self.degree()].lt_mp(&lead.to_mp())
    }

    /// `p(z)` and a bound on `|p(z) - p_true(z)|` covering the coefficient
    /// bounds and the Horner rounding error.
    pub fn eval_bounded(&self, z: &Complex<T>) -> (Complex<T>, ErrBound) {
        let v = self.poly.eval_complex(z);
        let r = z.abs().abs_bound().scale(1.0 + 1e-12);
        let mut mag = ErrBound::zero();
        for c in self.coeffs().iter().rev() {
            mag = mag.mul(&r).add(&c.abs_bound());
        }
        let d = self.degree() as f64;
        let u = self.coeff(0).unit_roundoff().abs_bound();
        let err = self.bound_at_radius(&r).add(&mag.mul(&u).scale(4.0 * d + 8.0));
        (v, err)
    }

    pub fn to_complex(&self) -> ComplexPolynomial<T> {
        ComplexPolynomial {
            poly: self.poly.map(|c| Complex::from_real(c.clone())),
            bounds: self.bounds.clone(),
        }
    }
}

/// Complex coefficients with modulus bounds `b_j >= |c_j - true_j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial<T> {
    pub poly: Polynomial<Complex<T>>,
    pub bounds: Vec<ErrBound>,
}

impl<T: Real> ComplexPolynomial<T> {
    pub fn new(coeffs: Vec<Complex<T>>, bounds: Vec<ErrBound>) -> Self {
        assert_eq!(coeffs.len(), bounds.len(), "one bound per coefficient");
        ComplexPolynomial { poly: Polynomial::new(coeffs), bounds }
    }

    pub fn exact(coeffs: Vec<Complex<T>>) -> Self {
        let n = coeffs.len();
        ComplexPolynomial::new(coeffs, vec![ErrBound::zero(); n])
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        self.poly.coeffs()
    }

    pub fn degree_is_certain(&self) -> bool {
        let lead = self.poly.leading();
        !lead.is_zero() && self.bounds[self.degree()].lt_mp(&lead.abs().to_mp())
    }

    /// `p(z)` with a bound on its distance from `p_true(z)`.
    pub fn eval_bounded(&self, z: &Complex<T>) -> (Complex<T>, ErrBound) {
        let v = self.poly.eval_at(z);
        let r = z.abs().abs_bound().scale(1.0 + 1e-12);
        let mut mag = ErrBound::zero();
        let mut berr = ErrBound::zero();
        for (c, b) in self.coeffs().iter().zip(&self.bounds).rev() {
            mag = mag.mul(&r).add(&c.abs().abs_bound());
            berr = berr.mul(&r).add(b);
        }
        let d = self.degree() as f64;
        let u = self.coeffs()[0].re.unit_roundoff().abs_bound();
        (v, berr.add(&mag.mul(&u).scale(8.0 * d + 16.0)))
    }
}

/// Polynomial dump: parameters, a name, and decimal coefficients with their
/// bounds (complex coefficients as `[re, im]` pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDump {
    pub params: serde_json::Value,
    pub poly: String,
    pub coeffs: Vec<serde_json::Value>,
    pub bounds: Vec<String>,
}

impl PolyDump {
    pub fn real(params: serde_json::Value, name: &str, p: &RealPolynomial<Mp>) -> Self {
        PolyDump {
            params,
            poly: name.to_string(),
            coeffs: p.coeffs().iter().map(|c| serde_json::Value::String(c.to_decimal())).collect(),
            bounds: p.bounds.iter().map(|b| b.to_decimal()).collect(),
        }
    }

    pub fn complex(params: serde_json::Value, name: &str, p: &ComplexPolynomial<Mp>) -> Self {
        PolyDump {
            params,
            poly: name.to_string(),
            coeffs: p.coeffs().iter().map(|c| serde_json::json!([c.re.to_decimal(), c.im.to_decimal()])).collect(),
            bounds: p.bounds.iter().map(|b| b.to_decimal()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let d: PolyDump = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if d.coeffs.is_empty() || d.coeffs.len() != d.bounds.len() {
            return Err("coefficient and bound counts differ".into());
        }
        Ok(d)
    }

    /// Parses back a real dump at `prec` bits.
    pub fn to_real(&self, prec: u32) -> Result<RealPolynomial<Mp>, String> {
        let mut c = Vec::with_capacity(self.coeffs.len());
        let mut b = Vec::with_capacity(self.coeffs.len());
        for (j, (v, e)) in self.coeffs.iter().zip(&self.bounds).enumerate() {
            let s = v.as_str().ok_or_else(|| format!("coefficient {j} is not a string"))?;
            c.push(Mp::parse(prec, s).ok_or_else(|| format!("coefficient {j} is not a number"))?);
            b.push(ErrBound::parse(e).ok_or_else(|| format!("bound {j} is not a nonnegative number"))?);
        }
        Ok(RealPolynomial::new(c, b))
    }
}
