//! Complex numbers over a generic scalar.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{Field, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Complex<T> {
    pub re: T,
    pub im: T,
}

impl<T: Field> Complex<T> {
    pub fn new(re: T, im: T) -> Self {
        Complex { re, im }
    }

    pub fn from_real(re: T) -> Self {
        let im = re.zero_like();
        Complex { re, im }
    }

    pub fn zero_like(x: &T) -> Self {
        Complex::new(x.zero_like(), x.zero_like())
    }

    pub fn one_like(x: &T) -> Self {
        Complex::new(x.one_like(), x.zero_like())
    }

    /// `i^e` as an exact unit.
    pub fn i_pow(x: &T, e: i64) -> Self {
        let (one, zero) = (x.one_like(), x.zero_like());
        match e.rem_euclid(4) {
            0 => Complex::new(one, zero),
            1 => Complex::new(zero, one),
            2 => Complex::new(-one, zero),
            _ => Complex::new(zero, -one),
        }
    }

    pub fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> T {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    pub fn scale(&self, s: &T) -> Self {
        Complex::new(self.re.clone() * s.clone(), self.im.clone() * s.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// `|re| + |im|`, an upper bound for the modulus that needs no square root.
    pub fn l1_norm(&self) -> T {
        self.re.abs() + self.im.abs()
    }

    pub fn mul_i(&self) -> Self {
        Complex::new(-self.im.clone(), self.re.clone())
    }

    pub fn inv(&self) -> Self {
        let d = self.norm_sqr();
        Complex::new(self.re.clone() / d.clone(), -self.im.clone() / d)
    }

    pub fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inv() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Complex::one_like(&self.re);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl<T: Real> Complex<T> {
    pub fn abs(&self) -> T {
        self.re.hypot(&self.im)
    }

    pub fn arg(&self) -> T {
        self.im.atan2(&self.re)
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        Complex::new(m.clone() * self.im.cos(), m * self.im.sin())
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        Complex::new(self.abs().ln(), self.arg())
    }

    pub fn sqrt(&self) -> Self {
        let r = self.abs();
        let two = r.from_i64_like(2);
        let re = ((r.clone() + self.re.clone()) / two.clone()).sqrt();
        let mut im = ((r - self.re.clone()) / two).sqrt();
        if self.im < self.im.zero_like() {
            im = -im;
        }
        Complex::new(re, im)
    }

    /// `e^{i theta}`.
    pub fn cis(theta: &T) -> Self {
        Complex::new(theta.cos(), theta.sin())
    }
}

impl<T: Field> Add for Complex<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl<T: Field> Sub for Complex<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl<T: Field> Mul for Complex<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let re = self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone();
        let im = self.re * o.im + self.im * o.re;
        Complex::new(re, im)
    }
}

impl<T: Field> Div for Complex<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.inv()
    }
}

impl<T: Field> Neg for Complex<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Complex::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;

    #[test]
    fn exp_ln_inverse() {
        let z = Complex::new(Mp::from_f64(128, 0.3), Mp::from_f64(128, -2.1));
        let w = z.ln().exp();
        assert!((w - z).abs().to_f64() < 1e-35);
    }

    #[test]
    fn unit_powers() {
        let x = 0.0_f64;
        assert_eq!(Complex::i_pow(&x, 3), Complex::new(0.0, -1.0));
        assert_eq!(Complex::i_pow(&x, -1), Complex::new(0.0, -1.0));
        let i = Complex::new(0.0, 1.0);
        assert_eq!(i.powi(6), Complex::new(-1.0, 0.0));
    }

    #[test]
    fn sqrt_branch() {
        let z = Complex::new(-4.0_f64, -0.0);
        let s = z.sqrt();
        assert!((s.re).abs() < 1e-15 && (s.im.abs() - 2.0).abs() < 1e-15);
        let w = Complex::new(3.0_f64, 4.0);
        let r = w.sqrt();
        assert!((r.clone() * r - w).abs() < 1e-14);
    }
}
