//! Dense univariate polynomials, coefficients in ascending degree order.

use crate::complex::Complex;
use crate::scalar::{Field, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    coeffs: Vec<C>,
}

impl<C: Clone> Polynomial<C> {
    /// Builds from ascending coefficients. Trailing zeros are kept; use
    /// [`Polynomial::trimmed`] where the exact degree matters.
    pub fn new(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs at least one coefficient");
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    /// Formal degree (length minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &C {
        &self.coeffs[j]
    }

    pub fn leading(&self) -> &C {
        &self.coeffs[self.coeffs.len() - 1]
    }

    /// Coefficients reversed: `z^deg * p(1/z)`.
    pub fn reversed(&self) -> Self {
        let mut c = self.coeffs.clone();
        c.reverse();
        Polynomial { coeffs: c }
    }

    pub fn map<D: Clone>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

impl<T: Field> Polynomial<T> {
    pub fn zero_like(x: &T, degree: usize) -> Self {
        Polynomial { coeffs: vec![x.zero_like(); degree + 1] }
    }

    pub fn monomial(c: T, degree: usize) -> Self {
        let mut coeffs = vec![c.zero_like(); degree + 1];
        coeffs[degree] = c;
        Polynomial { coeffs }
    }

    /// Drops exactly-zero leading coefficients (keeps at least one).
    pub fn trimmed(&self) -> Self {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c[c.len() - 1].is_zero() {
            c.pop();
        }
        Polynomial { coeffs: c }
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        let z = self.coeffs[0].zero_like();
        let mut c = vec![z; k];
        c.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs: c }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|c| c.clone() * s.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = self.coeffs[0].zero_like();
        let coeffs = (0..n)
            .map(|j| {
                let a = self.coeffs.get(j).cloned().unwrap_or_else(|| z.clone());
                let b = o.coeffs.get(j).cloned().unwrap_or_else(|| z.clone());
                a + b
            })
            .collect();
        Polynomial { coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-self.coeffs[0].one_like()))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let z = self.coeffs[0].zero_like();
        let mut c = vec![z; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial { coeffs: c }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial { coeffs: vec![self.coeffs[0].zero_like()] };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c.clone() * c.from_i64_like(j as i64))
            .collect();
        Polynomial { coeffs }
    }

    pub fn eval(&self, x: &T) -> T {
        let mut acc = self.leading().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn eval_complex(&self, z: &Complex<T>) -> Complex<T> {
        let mut acc = Complex::from_real(self.leading().clone());
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z.clone();
            acc.re = acc.re + c.clone();
        }
        acc
    }

    /// Value and first derivative at `z` by a single Horner pass.
    pub fn eval_with_derivative(&self, z: &Complex<T>) -> (Complex<T>, Complex<T>) {
        let mut p = Complex::from_real(self.leading().clone());
        let mut dp = Complex::zero_like(self.leading());
        for c in self.coeffs.iter().rev().skip(1) {
            dp = dp * z.clone() + p.clone();
            p = p * z.clone();
            p.re = p.re + c.clone();
        }
        (p, dp)
    }

    /// `sum |c_j|`, the maximum of `|p|` on the unit circle is at most this.
    pub fn l1_norm(&self) -> T {
        self.coeffs.iter().fold(self.coeffs[0].zero_like(), |a, c| a + c.abs())
    }

    /// `sum j |c_j|`, a Lipschitz constant for `p` along the unit circle
    /// with respect to arc length.
    pub fn derivative_l1_norm(&self) -> T {
        self.coeffs.iter().enumerate().fold(self.coeffs[0].zero_like(), |a, (j, c)| {
            a + c.abs() * c.from_i64_like(j as i64)
        })
    }

    /// Monic real polynomial with the given roots; non-real roots must come
    /// in conjugate pairs, only the member with positive imaginary part is
    /// passed in `complex_pairs`.
    pub fn from_roots(real_roots: &[T], complex_pairs: &[Complex<T>], like: &T) -> Self {
        let mut p = Polynomial { coeffs: vec![like.one_like()] };
        for r in real_roots {
            p = p.mul(&Polynomial { coeffs: vec![-r.clone(), like.one_like()] });
        }
        for z in complex_pairs {
            let q = Polynomial {
                coeffs: vec![z.norm_sqr(), -(z.re.clone() + z.re.clone()), like.one_like()],
            };
            p = p.mul(&q);
        }
        p
    }
}

impl<T: Real> Polynomial<T> {
    pub fn max_abs_coeff(&self) -> T {
        self.coeffs
            .iter()
            .fold(self.coeffs[0].zero_like(), |a, c| a.max_of(c.abs()))
    }
}

impl<T: Field> Polynomial<Complex<T>> {
    pub fn eval_at(&self, z: &Complex<T>) -> Complex<T> {
        let mut acc = self.leading().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    #[test]
    fn exact_arithmetic_over_rationals() {
        let half = Rational::from((1, 2));
        let p = Polynomial::new(vec![-half.clone(), Rational::from(1)]);
        let q = p.mul(&p);
        assert_eq!(q.coeffs(), &[Rational::from((1, 4)), Rational::from(-1), Rational::from(1)]);
        assert_eq!(q.eval(&half), Rational::from(0));
        assert_eq!(q.derivative().coeffs(), &[Rational::from(-1), Rational::from(2)]);
    }

    #[test]
    fn from_roots_real_and_pairs() {
        let p = Polynomial::from_roots(&[2.0], &[Complex::new(0.0, 1.0)], &1.0_f64);
        assert_eq!(p.coeffs(), &[-2.0, 1.0, -2.0, 1.0]);
        let v = p.eval_complex(&Complex::new(0.0, 1.0));
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn horner_derivative_matches() {
        let p = Polynomial::new(vec![1.0, -3.0, 0.5, 2.0]);
        let z = Complex::new(0.3, -0.7);
        let (v, d) = p.eval_with_derivative(&z);
        let d2 = p.derivative().eval_complex(&z);
        assert!((v - p.eval_complex(&z)).abs() < 1e-15);
        assert!((d - d2).abs() < 1e-14);
    }

    #[test]
    fn reversal_and_shift() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.reversed().coeffs(), &[3.0, 2.0, 1.0]);
        assert_eq!(p.shift(2).degree(), 4);
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).trimmed().degree(), 0);
    }
}
