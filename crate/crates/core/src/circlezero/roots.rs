//! Aberth–Ehrlich iteration with Newton-polygon starting points and
//! Weierstrass inclusion radii.

use crate::complex::Complex;
use crate::perpoly::ComplexPolynomial;
use crate::scalar::{ErrBound, Real};

use super::CircleError;

pub const MAX_ITERATIONS: usize = 500;

/// Roots of one polynomial with their residuals and error radii.
#[derive(Clone, Debug)]
pub struct RootSet<T> {
    pub roots: Vec<Complex<T>>,
    pub residuals: Vec<T>,
    /// Radius of a disk around each root. The union of the disks holds every
    /// root of every polynomial inside the coefficient bounds, and a
    /// connected group of `j` disks holds exactly `j` of them. `None` when no
    /// finite radius could be derived.
    pub inclusion: Vec<Option<ErrBound>>,
    /// The inclusion radius of disks that meet no other disk; `None` when
    /// the root is part of a cluster (or a multiple root).
    pub radii: Vec<Option<ErrBound>>,
    pub iterations: usize,
    pub(crate) zero: T,
}

impl<T: Real> RootSet<T> {
    /// `max | |z| - 1 |`.
    pub fn circle_deviation(&self) -> T {
        let one = self.zero.one_like();
        self.roots
            .iter()
            .fold(self.zero.clone(), |a, z| a.max_of((z.abs() - one.clone()).abs()))
    }

    /// Upper bound on the modulus of every root, when all inclusion radii
    /// are finite.
    pub fn modulus_bound(&self) -> Option<ErrBound> {
        let u = self.zero.unit_roundoff().abs_bound().scale(4.0);
        let mut acc = ErrBound::zero();
        for (z, r) in self.roots.iter().zip(&self.inclusion) {
            let m = z.abs().abs_bound();
            acc = acc.max(&m.add(&m.mul(&u)).add(r.as_ref()?));
        }
        Some(acc)
    }

    /// Index of a root whose isolated disk misses the unit circle, so that
    /// some true root is certainly off the circle.
    pub fn certainly_off_circle(&self) -> Option<usize> {
        let one = self.zero.one_like();
        let u = self.zero.unit_roundoff().abs_bound().scale(8.0);
        (0..self.roots.len()).find(|&i| match &self.radii[i] {
            Some(r) => {
                let dev = (self.roots[i].abs() - one.clone()).abs();
                r.add(&u).add(&dev.abs_bound().mul(&u)).lt_mp(&dev.to_mp())
            }
            None => false,
        })
    }
}

fn horner2<T: Real>(c: &[Complex<T>], z: &Complex<T>) -> (Complex<T>, Complex<T>) {
    let n = c.len() - 1;
    let mut p = c[n].clone();
    let mut dp = Complex::zero_like(&z.re);
    for cj in c[..n].iter().rev() {
        dp = dp * z.clone() + p.clone();
        p = p * z.clone() + cj.clone();
    }
    (p, dp)
}

fn horner_abs<T: Real>(a: &[T], r: &T) -> T {
    a.iter().rev().fold(r.zero_like(), |acc, x| acc * r.clone() + x.clone())
}

/// Points on circles whose radii come from the upper convex hull of
/// `(j, ln |c_j|)`, one circle per hull edge.
fn initial_points<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    let like = c[0].re.zero_like();
    let n = c.len() - 1;
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(j, x)| (j as f64, x.abs().ln().to_f64()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let tau = 2.0 * std::f64::consts::PI;
    let mut r_min = f64::INFINITY;
    for (e, w) in hull.windows(2).enumerate() {
        let count = (w[1].0 - w[0].0) as usize;
        let r = ((w[0].1 - w[1].1) / count as f64).clamp(-700.0, 700.0).exp();
        r_min = r_min.min(r);
        for q in 0..count {
            let ang = tau * q as f64 / count as f64 + tau * e as f64 / n as f64 + 0.4;
            out.push(Complex::new(like.from_f64_like(r * ang.cos()), like.from_f64_like(r * ang.sin())));
        }
    }
    // vanishing low-order coefficients with nonzero bounds: small roots
    let missing = n - out.len();
    let r = if r_min.is_finite() { r_min * 1e-3 } else { 1e-3 };
    for q in 0..missing {
        let ang = tau * q as f64 / missing as f64 + 0.9;
        out.push(Complex::new(like.from_f64_like(r * ang.cos()), like.from_f64_like(r * ang.sin())));
    }
    out
}

fn nudge<T: Real>(z: &Complex<T>, k: usize) -> Complex<T> {
    let like = &z.re;
    let s = z.abs().max_of(like.one_like()) * like.from_f64_like(1e-3 * (1.0 + k as f64));
    Complex::new(z.re.clone() + s.clone(), z.im.clone() + s.clone() * like.from_f64_like(0.7))
}

/// All roots of `p`, computed at the precision of its coefficients.
///
/// Exactly vanishing low-order coefficients give exact roots at 0. The
/// iteration stops once every root has `|p(z)| <= 2^(-3 prec/4) sum |c_j| |z|^j`;
/// each residual must then satisfy `|p(z)| < 2^(-prec/2) ||p|| max(1, |z|)^d`.
pub fn find_roots<T: Real>(p: &ComplexPolynomial<T>) -> Result<RootSet<T>, CircleError<T>> {
    if !p.degree_is_certain() {
        return Err(CircleError::UncertainDegree);
    }
    let coeffs = p.coeffs();
    let zero = coeffs[0].re.zero_like();
    let prec = zero.precision_bits() as i64;
    let d = p.degree();
    let s = (0..d).take_while(|&j| coeffs[j].is_zero() && p.bounds[j].as_float().is_zero()).count();
    let core = &coeffs[s..];
    let n = d - s;
    let abs_core: Vec<T> = core.iter().map(|c| c.abs()).collect();
    let two = zero.from_i64_like(2);
    let tol = two.powi(-(3 * prec / 4));

    let mut z = if n > 0 { initial_points(core) } else { Vec::new() };
    let mut done = vec![false; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut moved = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, dv) = horner2(core, &z[i]);
            let mag = horner_abs(&abs_core, &z[i].abs());
            if v.abs() <= tol.clone() * mag {
                done[i] = true;
                continue;
            }
            moved = true;
            if dv.is_zero() {
                z[i] = nudge(&z[i], iterations);
                continue;
            }
            let ratio = v / dv;
            let mut sum = Complex::zero_like(&zero);
            let mut clash = false;
            for j in 0..n {
                if j != i {
                    let diff = z[i].clone() - z[j].clone();
                    if diff.is_zero() {
                        clash = true;
                        break;
                    }
                    sum = sum + diff.inv();
                }
            }
            if clash {
                z[i] = nudge(&z[i], iterations);
                continue;
            }
            let den = Complex::one_like(&zero) - ratio.clone() * sum;
            let step = if den.is_zero() { ratio } else { ratio / den };
            z[i] = z[i].clone() - step;
        }
        if !moved {
            break;
        }
    }

    // polish: the stopping test fires one step before full precision
    for _ in 0..2 {
        for i in 0..n {
            let (v, dv) = horner2(core, &z[i]);
            if v.is_zero() || dv.is_zero() {
                continue;
            }
            let ratio = v / dv;
            let mut sum = Complex::zero_like(&zero);
            for j in (0..n).filter(|&j| j != i) {
                let diff = z[i].clone() - z[j].clone();
                if !diff.is_zero() {
                    sum = sum + diff.inv();
                }
            }
            let den = Complex::one_like(&zero) - ratio.clone() * sum;
            let step = if den.is_zero() { ratio } else { ratio / den };
            z[i] = z[i].clone() - step;
        }
    }

    let mut roots = vec![Complex::zero_like(&zero); s];
    roots.extend(z);
    let norm = coeffs.iter().fold(zero.clone(), |a, c| a + c.abs());
    let half = two.powi(-(prec / 2));
    let one = zero.one_like();
    let mut residuals = Vec::with_capacity(d);
    let mut converged = true;
    for r in &roots {
        let v = if r.is_zero() && s > 0 { zero.clone() } else { p.poly.eval_at(r).abs() };
        let scale = r.abs().max_of(one.clone()).powi(d as i64);
        if v >= half.clone() * norm.clone() * scale {
            converged = false;
        }
        residuals.push(v);
    }
    let (inclusion, radii) = radii(p, s, &roots);
    let set = RootSet { roots, residuals, inclusion, radii, iterations, zero };
    if !converged {
        return Err(CircleError::NotConverged { iterations, partial: Box::new(set) });
    }
    Ok(set)
}

/// Inclusion radii `n |W_i|` with `W_i = p(z_i) / (a_n prod_{j != i} (z_i - z_j))`,
/// enlarged by the coefficient bounds and the rounding of every step.
#[allow(clippy::type_complexity)]
fn radii<T: Real>(
    p: &ComplexPolynomial<T>,
    s: usize,
    roots: &[Complex<T>],
) -> (Vec<Option<ErrBound>>, Vec<Option<ErrBound>>) {
    let d = roots.len();
    let n = d - s;
    let zero = p.coeffs()[0].re.zero_like();
    let u = zero.unit_roundoff().to_f64();
    let core = ComplexPolynomial::new(p.coeffs()[s..].to_vec(), p.bounds[s..].to_vec());
    let lead = core.coeffs()[n].abs() - zero.bound_like(&core.bounds[n]);
    let cushion = 1.0 - (4.0 * n as f64 + 16.0) * u - 1e-18;

    let mut inclusion = vec![Some(ErrBound::zero()); s];
    for i in s..d {
        let (v, err) = core.eval_bounded(&roots[i]);
        let num = v.abs().abs_bound().add(&err).scale(n as f64);
        let mut den = lead.clone();
        for (j, zj) in roots[s..].iter().enumerate() {
            if j + s != i {
                den = den * (roots[i].clone() - zj.clone()).abs();
            }
        }
        let den = den * zero.from_f64_like(cushion);
        inclusion.push(if den > zero { Some(num.div(&den.abs_bound()).scale(1.0 + 1e-15)) } else { None });
    }

    let mut radii = inclusion.clone();
    for i in s..d {
        let Some(ri) = inclusion[i].clone() else { continue };
        let isolated = (0..d).filter(|&j| j != i).all(|j| {
            let Some(rj) = &inclusion[j] else { return false };
            let dist = (roots[i].clone() - roots[j].clone()).abs();
            let sum = ri.add(rj);
            sum.add(&sum.scale(8.0 * u)).add(&dist.abs_bound().scale(8.0 * u)).lt_mp(&dist.to_mp())
        });
        if !isolated {
            radii[i] = None;
        }
    }
    (inclusion, radii)
}
