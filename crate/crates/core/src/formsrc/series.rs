//! Truncated power series with exact integer coefficients.

use std::ops::{Add, Sub};

use rug::{Assign, Integer};

use super::FormError;

/// `sum_{i <= order} c_i q^i` with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerSeries {
    coeffs: Vec<Integer>,
}

/// Below this length products use the schoolbook loop.
const KRONECKER_MIN_LEN: usize = 48;

impl IntegerSeries {
    /// Series truncated at `q^order`; missing coefficients are zero.
    pub fn new(mut coeffs: Vec<Integer>, order: usize) -> Self {
        coeffs.resize(order + 1, Integer::new());
        IntegerSeries { coeffs }
    }

    pub fn one(order: usize) -> Self {
        let mut c = vec![Integer::new(); order + 1];
        c[0] = Integer::from(1);
        IntegerSeries { coeffs: c }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Integer {
        &self.coeffs[i]
    }

    pub fn into_coeffs(self) -> Vec<Integer> {
        self.coeffs
    }

    pub fn scalar_mul(&self, s: &Integer) -> Self {
        IntegerSeries { coeffs: self.coeffs.iter().map(|c| Integer::from(c * s)).collect() }
    }

    /// Exact division of every coefficient; a nonzero remainder is an error.
    pub fn div_exact(&self, d: &Integer) -> Result<Self, FormError> {
        if *d == 0 {
            return Err(FormError::InexactDivision { index: 0, divisor: d.to_string() });
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let (q, r) = c.clone().div_rem(d.clone());
            if r != 0 {
                return Err(FormError::InexactDivision { index: i, divisor: d.to_string() });
            }
            out.push(q);
        }
        Ok(IntegerSeries { coeffs: out })
    }

    /// Product truncated at the smaller of the two orders.
    pub fn mul(&self, o: &Self) -> Self {
        let order = self.order().min(o.order());
        let a = &self.coeffs[..=order];
        let b = &o.coeffs[..=order];
        let coeffs = if order + 1 < KRONECKER_MIN_LEN {
            schoolbook(a, b, order)
        } else {
            kronecker(a, b, order)
        };
        IntegerSeries { coeffs }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = IntegerSeries::one(self.order());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Add for &IntegerSeries {
    type Output = IntegerSeries;
    fn add(self, o: &IntegerSeries) -> IntegerSeries {
        let order = self.order().min(o.order());
        IntegerSeries {
            coeffs: (0..=order).map(|i| Integer::from(&self.coeffs[i] + &o.coeffs[i])).collect(),
        }
    }
}

impl Sub for &IntegerSeries {
    type Output = IntegerSeries;
    fn sub(self, o: &IntegerSeries) -> IntegerSeries {
        let order = self.order().min(o.order());
        IntegerSeries {
            coeffs: (0..=order).map(|i| Integer::from(&self.coeffs[i] - &o.coeffs[i])).collect(),
        }
    }
}

fn schoolbook(a: &[Integer], b: &[Integer], order: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); order + 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Kronecker substitution: pack each series into one integer with
/// fixed-width slots, multiply once, unpack. Signs are handled by splitting
/// into nonnegative parts so every slot holds a nonnegative value.
fn kronecker(a: &[Integer], b: &[Integer], order: usize) -> Vec<Integer> {
    let (ap, an) = split_signs(a);
    let (bp, bn) = split_signs(b);
    let max_bits = |v: &[Integer]| v.iter().map(|c| c.significant_bits()).max().unwrap_or(0);
    let len_bits = usize::BITS - a.len().leading_zeros();
    let slot = (max_bits(a) + max_bits(b) + len_bits + 2) as usize;

    let pos = Integer::from(pack(&ap, slot) * pack(&bp, slot)) + Integer::from(pack(&an, slot) * pack(&bn, slot));
    let neg = Integer::from(pack(&ap, slot) * pack(&bn, slot)) + Integer::from(pack(&an, slot) * pack(&bp, slot));
    let mut p = unpack(pos, slot, order + 1);
    let n = unpack(neg, slot, order + 1);
    for (x, y) in p.iter_mut().zip(n) {
        *x -= y;
    }
    p
}

fn split_signs(v: &[Integer]) -> (Vec<Integer>, Vec<Integer>) {
    let mut pos = Vec::with_capacity(v.len());
    let mut neg = Vec::with_capacity(v.len());
    for c in v {
        if *c < 0 {
            pos.push(Integer::new());
            neg.push(Integer::from(-c));
        } else {
            pos.push(c.clone());
            neg.push(Integer::new());
        }
    }
    (pos, neg)
}

fn pack(v: &[Integer], slot: usize) -> Integer {
    match v.len() {
        0 => Integer::new(),
        1 => v[0].clone(),
        n => {
            let mid = n / 2;
            let lo = pack(&v[..mid], slot);
            let hi = pack(&v[mid..], slot);
            Integer::from(hi << (slot * mid) as u32) + lo
        }
    }
}

fn unpack(x: Integer, slot: usize, count: usize) -> Vec<Integer> {
    let mut out = Vec::with_capacity(count);
    unpack_into(x, slot, count, &mut out);
    out
}

fn unpack_into(x: Integer, slot: usize, count: usize, out: &mut Vec<Integer>) {
    if count == 1 {
        let mut c = Integer::new();
        c.assign(x.keep_bits_ref(slot as u32));
        out.push(c);
        return;
    }
    let mid = count / 2;
    let shift = (slot * mid) as u32;
    let lo = Integer::from(x.keep_bits_ref(shift));
    let hi = x >> shift;
    unpack_into(lo, slot, mid, out);
    unpack_into(hi, slot, count - mid, out);
}
