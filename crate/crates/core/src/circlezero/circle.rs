//! Sign changes of the real circle function of a self-inversive polynomial.

use rayon::prelude::*;

use crate::complex::Complex;
use crate::perpoly::{ComplexPolynomial, RealPolynomial};
use crate::scalar::{ErrBound, Real};

use super::{find_roots, CircleError, CircleVerdict, ZeroCertificate};

/// Largest sign grid tried before giving up on a certificate.
pub const CIRCLE_GRID_CAP: usize = 1 << 20;

fn check_self_inversive<T: Real>(p: &ComplexPolynomial<T>, lambda: &Complex<T>) -> Result<(), usize> {
    let d = p.degree();
    let c = p.coeffs();
    let u = c[0].re.unit_roundoff().abs_bound().scale(16.0);
    for j in 0..=d {
        let diff = c[j].clone() - lambda.clone() * c[d - j].conj();
        let mag = c[j].abs().abs_bound().add(&c[d - j].abs().abs_bound());
        let allowed = p.bounds[j].add(&p.bounds[d - j].scale(1.0 + 1e-9)).add(&mag.mul(&u));
        if !allowed.covers(&diff.abs().to_mp()) {
            return Err(j);
        }
    }
    Ok(())
}

struct CircleFn<'a, T> {
    p: &'a ComplexPolynomial<T>,
    mu_bar: Complex<T>,
    /// `sum j |c_j|`, charged for `cis` not being exactly unimodular
    slope: ErrBound,
    u: ErrBound,
}

impl<T: Real> CircleFn<'_, T> {
    /// Sign of `F(2 pi i / m) = Re(conj(mu) e^(-i d theta / 2) p(e^(i theta)))`,
    /// or `None` when the value is within its error bound of zero.
    fn sign(&self, i: usize, m: usize) -> Option<bool> {
        let like = &self.mu_bar.re;
        let d = self.p.degree();
        let theta = like.pi_like() * like.from_i64_like(2 * i as i64) / like.from_i64_like(m as i64);
        let z = Complex::cis(&theta);
        let (v, err) = self.p.eval_bounded(&z);
        let half = theta * like.from_f64_like(-(d as f64) / 2.0);
        let g = Complex::cis(&half) * self.mu_bar.clone() * v;
        let f = g.re.clone();
        let total = err
            .scale(1.0 + 1e-9)
            .add(&self.slope.mul(&self.u))
            .add(&g.abs().abs_bound().mul(&self.u));
        if total.lt_mp(&f.to_mp()) {
            Some(f > f.zero_like())
        } else {
            None
        }
    }
}

/// Sign changes around the full circle, using `F(theta + 2 pi) = (-1)^d F(theta)`.
/// Each counted change is a distinct zero on the circle.
fn count_changes(signs: &[Option<bool>], d: usize) -> usize {
    let known: Vec<bool> = signs.iter().flatten().copied().collect();
    let Some(&first) = known.first() else { return 0 };
    let mut changes = known.windows(2).filter(|w| w[0] != w[1]).count();
    let wrapped = if d % 2 == 1 { !first } else { first };
    if *known.last().unwrap() != wrapped {
        changes += 1;
    }
    changes
}

/// Certifies that every root of `p` lies on the unit circle, for `p` with
/// `c_j = lambda conj(c_(d-j))`.
///
/// With `mu^2 = lambda`, `F(theta) = Re(conj(mu) e^(-i d theta/2) p(e^(i theta)))`
/// is real-valued; `d` sign changes of `F` on a grid prove `d` zeros on the
/// circle. The grid doubles from `max(64, 4d)` points up to
/// [`CIRCLE_GRID_CAP`]; the search stops early when a root is certainly
/// off the circle.
pub fn certify_on_circle<T: Real>(
    p: &ComplexPolynomial<T>,
    lambda: &Complex<T>,
) -> Result<ZeroCertificate<T>, CircleError<T>> {
    certify_on_circle_capped(p, lambda, CIRCLE_GRID_CAP)
}

/// [`certify_on_circle`] with the grid capped at `cap` points (rounded up
/// to the starting size).
pub fn certify_on_circle_capped<T: Real>(
    p: &ComplexPolynomial<T>,
    lambda: &Complex<T>,
    cap: usize,
) -> Result<ZeroCertificate<T>, CircleError<T>> {
    if !p.degree_is_certain() {
        return Err(CircleError::UncertainDegree);
    }
    check_self_inversive(p, lambda).map_err(|index| CircleError::NotSelfInversive { index })?;
    let set = find_roots(p)?;
    let mut cert = ZeroCertificate::from_roots(&set);
    let d = p.degree();
    let like = &p.coeffs()[0].re;
    let slope = p
        .coeffs()
        .iter()
        .enumerate()
        .fold(ErrBound::zero(), |a, (j, c)| a.add(&c.abs().abs_bound().scale(j as f64)));
    let f = CircleFn {
        p,
        mu_bar: lambda.sqrt().conj(),
        slope,
        u: like.unit_roundoff().abs_bound().scale(32.0),
    };
    let off = set.certainly_off_circle().is_some();

    let mut m = (4 * d).max(64).next_power_of_two();
    let mut signs: Vec<Option<bool>> = (0..m).into_par_iter().map(|i| f.sign(i, m)).collect();
    let (count, verdict) = loop {
        let count = count_changes(&signs, d);
        if count == d {
            break (count, CircleVerdict::Certified);
        }
        if count > d || off {
            break (count, CircleVerdict::Failed);
        }
        if m >= cap {
            break (count, CircleVerdict::NumericOnly);
        }
        let odd: Vec<Option<bool>> = (0..m).into_par_iter().map(|i| f.sign(2 * i + 1, 2 * m)).collect();
        signs = signs.into_iter().zip(odd).flat_map(|(a, b)| [a, b]).collect();
        m *= 2;
    };
    cert.sign_changes = Some(count);
    cert.circle = Some(verdict);
    Ok(cert)
}

/// [`certify_on_circle`] for a real polynomial with `c_j = eps c_(d-j)`.
pub fn certify_real_on_circle<T: Real>(p: &RealPolynomial<T>, eps: i8) -> Result<ZeroCertificate<T>, CircleError<T>> {
    certify_real_on_circle_capped(p, eps, CIRCLE_GRID_CAP)
}

pub fn certify_real_on_circle_capped<T: Real>(
    p: &RealPolynomial<T>,
    eps: i8,
    cap: usize,
) -> Result<ZeroCertificate<T>, CircleError<T>> {
    let like = p.coeff(0);
    certify_on_circle_capped(&p.to_complex(), &Complex::from_real(like.from_i64_like(eps as i64)), cap)
}
