//! Sampled Rouché margins and self-inversive polynomials built from a
//! polynomial with roots in the closed disk.

use rayon::prelude::*;

use crate::complex::Complex;
use crate::perpoly::ComplexPolynomial;
use crate::scalar::{ErrBound, Real};

use super::{certify_in_disk, CircleError, DiskVerdict, RoucheDump};

/// Outcome of sampling `|B(z)| - |A(z) - B(z)|` on the unit circle.
#[derive(Clone, Debug)]
pub struct RoucheReport<T> {
    pub samples: usize,
    /// Minimum of `|B| - |A - B|` over the samples.
    pub margin: T,
    /// Allowance for the gaps between samples and for evaluation error.
    pub slack: ErrBound,
    /// Sample index attaining the minimum.
    pub worst: usize,
    /// `margin > slack`: `|A - B| < |B|` on the whole circle.
    pub certified: bool,
}

impl<T: Real> RoucheReport<T> {
    pub fn dump(&self) -> RoucheDump {
        RoucheDump {
            samples: self.samples,
            margin: self.margin.to_mp().to_decimal(),
            slack: self.slack.to_decimal(),
            certified: self.certified,
        }
    }
}

fn difference<T: Real>(a: &ComplexPolynomial<T>, b: &ComplexPolynomial<T>) -> ComplexPolynomial<T> {
    let n = a.degree().max(b.degree());
    let zero = Complex::zero_like(&a.coeffs()[0].re);
    let u = zero.re.unit_roundoff().abs_bound();
    let mut c = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let x = a.coeffs().get(j).cloned().unwrap_or_else(|| zero.clone());
        let y = b.coeffs().get(j).cloned().unwrap_or_else(|| zero.clone());
        let bx = a.bounds.get(j).cloned().unwrap_or_else(ErrBound::zero);
        let by = b.bounds.get(j).cloned().unwrap_or_else(ErrBound::zero);
        let v = x - y;
        r.push(bx.add(&by).add(&v.abs().abs_bound().mul(&u).scale(4.0)));
        c.push(v);
    }
    ComplexPolynomial::new(c, r)
}

fn slope<T: Real>(p: &ComplexPolynomial<T>) -> ErrBound {
    p.coeffs()
        .iter()
        .zip(&p.bounds)
        .enumerate()
        .fold(ErrBound::zero(), |acc, (j, (c, b))| acc.add(&c.abs().abs_bound().add(b).scale(j as f64)))
}

/// Samples `|B(z)| - |A(z) - B(z)|` at `samples` equally spaced points of the
/// unit circle. Every point of the circle is within `pi / samples` of a
/// sample and the function is Lipschitz with constant
/// `sum j |B_j| + sum j |(A - B)_j|`, which gives the slack.
pub fn rouche_margin<T: Real>(a: &ComplexPolynomial<T>, b: &ComplexPolynomial<T>, samples: usize) -> RoucheReport<T> {
    assert!(samples >= 64, "at least 64 samples");
    let diff = difference(a, b);
    let like = a.coeffs()[0].re.zero_like();
    let u = like.unit_roundoff().abs_bound().scale(16.0);
    let lip = slope(b).add(&slope(&diff));
    let vals: Vec<(T, ErrBound)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let theta = like.pi_like() * like.from_i64_like(2 * k as i64) / like.from_i64_like(samples as i64);
            let z = Complex::cis(&theta);
            let (bv, be) = b.eval_bounded(&z);
            let (dv, de) = diff.eval_bounded(&z);
            let (bm, dm) = (bv.abs(), dv.abs());
            let err = be.add(&de).add(&bm.abs_bound().add(&dm.abs_bound()).mul(&u));
            (bm - dm, err)
        })
        .collect();
    let mut worst = 0;
    let mut eval_err = ErrBound::zero();
    for (k, (g, e)) in vals.iter().enumerate() {
        if *g < vals[worst].0 {
            worst = k;
        }
        eval_err = eval_err.max(e);
    }
    let gap = lip.mul(&ErrBound::from_f64(std::f64::consts::PI / samples as f64)).scale(1.0 + 1e-12);
    let slack = gap.add(&eval_err).add(&lip.mul(&u));
    let margin = vals[worst].0.clone();
    let certified = margin > like && slack.lt_mp(&margin.to_mp());
    RoucheReport { samples, margin, slack, worst, certified }
}

/// Relative enlargement used to test roots against the closed unit disk:
/// `h` passes when `h((1 + s) z)` has all roots strictly inside.
pub const CLOSED_DISK_SLACK: f64 = 1.0 / (1u64 << 20) as f64;

/// `P(z) = z^(d-n) h(z) + lambda z^n conj(h)(1/z)` for `h` of degree `n <= d`
/// with roots in the closed unit disk and `|lambda| = 1`. It satisfies
/// `P_j = lambda conj(P_(d-j))` and has all its roots on the unit circle.
pub fn lalin_smyth_construct<T: Real>(
    h: &ComplexPolynomial<T>,
    d: usize,
    lambda: &Complex<T>,
) -> Result<ComplexPolynomial<T>, CircleError<T>> {
    let n = h.degree();
    if d < n {
        return Err(CircleError::DegreeTooSmall { d, n });
    }
    let like = h.coeffs()[0].re.zero_like();
    let u = like.unit_roundoff().abs_bound();
    let dev = (lambda.abs() - like.one_like()).abs();
    if !u.scale(64.0).add(&ErrBound::pow2(-1000)).covers(&dev.to_mp()) {
        return Err(CircleError::NotUnimodular);
    }

    let grow = like.one_like() + like.from_f64_like(CLOSED_DISK_SLACK);
    let mut pw = like.one_like();
    let mut gc = Vec::with_capacity(n + 1);
    let mut gb = Vec::with_capacity(n + 1);
    for (c, b) in h.coeffs().iter().zip(&h.bounds) {
        let v = c.scale(&pw);
        gb.push(b.mul(&pw.abs_bound()).scale(1.0 + 1e-9).add(&v.abs().abs_bound().mul(&u).scale(4.0 * (gc.len() as f64 + 2.0))));
        gc.push(v);
        pw = pw * grow.clone();
    }
    let verdict = certify_in_disk(&ComplexPolynomial::new(gc, gb));
    if verdict != DiskVerdict::AllInside {
        return Err(CircleError::RootOutsideDisk { verdict });
    }

    let zero = Complex::zero_like(&like);
    let mut c = vec![zero; d + 1];
    let mut b = vec![ErrBound::zero(); d + 1];
    for (j, (hj, bj)) in h.coeffs().iter().zip(&h.bounds).enumerate() {
        c[j + d - n] = c[j + d - n].clone() + hj.clone();
        b[j + d - n] = b[j + d - n].add(bj);
        c[n - j] = c[n - j].clone() + lambda.clone() * hj.conj();
        b[n - j] = b[n - j].add(&bj.scale(1.0 + 1e-9));
    }
    for j in 0..=d {
        b[j] = b[j].add(&c[j].abs().abs_bound().mul(&u).scale(8.0));
    }
    Ok(ComplexPolynomial::new(c, b))
}
