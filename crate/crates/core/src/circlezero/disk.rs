//! Schur–Cohn reduction with coefficient radii.

use crate::complex::Complex;
use crate::perpoly::ComplexPolynomial;
use crate::scalar::{ErrBound, Real};

use super::{find_roots, CircleError, DiskVerdict, ZeroCertificate};

/// Runs the Schur–Cohn recursion `q = (conj(a_d) p - a_0 p*) / z` in ball
/// arithmetic. A step certifies when `|a_d| - r_d > |a_0| + r_0`; it refutes
/// when `|a_0| - r_0 > |a_d| + r_d`; anything else is indeterminate.
pub fn schur_cohn<T: Real>(p: &ComplexPolynomial<T>) -> DiskVerdict {
    if !p.degree_is_certain() {
        return DiskVerdict::Indeterminate;
    }
    let mut c: Vec<Complex<T>> = p.coeffs().to_vec();
    let mut r: Vec<ErrBound> = p.bounds.clone();
    let u = c[0].re.unit_roundoff().abs_bound();
    loop {
        let d = c.len() - 1;
        if d == 0 {
            return DiskVerdict::AllInside;
        }
        let ad = c[d].abs();
        let a0 = c[0].abs();
        let rounding = ad.abs_bound().add(&a0.abs_bound()).mul(&u).scale(4.0);
        let gap = ad.clone() - a0.clone();
        let need = r[d].add(&r[0]).add(&rounding);
        if gap > gap.zero_like() {
            if !need.lt_mp(&gap.to_mp()) {
                return DiskVerdict::Indeterminate;
            }
        } else if need.lt_mp(&gap.to_mp()) {
            return DiskVerdict::NotAllInside;
        } else {
            return DiskVerdict::Indeterminate;
        }

        let (cd, c0) = (c[d].conj(), c[0].clone());
        let (ad_b, a0_b) = (ad.abs_bound(), a0.abs_bound());
        let mut q = Vec::with_capacity(d);
        let mut qr = Vec::with_capacity(d);
        for j in 0..d {
            let x = &c[j + 1];
            let y = c[d - 1 - j].conj();
            let (xb, yb) = (x.abs().abs_bound(), y.abs().abs_bound());
            let v = cd.clone() * x.clone() - c0.clone() * y;
            let e = ad_b
                .mul(&r[j + 1])
                .add(&r[d].mul(&xb))
                .add(&r[d].mul(&r[j + 1]))
                .add(&a0_b.mul(&r[d - 1 - j]))
                .add(&r[0].mul(&yb))
                .add(&r[0].mul(&r[d - 1 - j]))
                .add(&ad_b.mul(&xb).add(&a0_b.mul(&yb)).mul(&u).scale(12.0));
            q.push(v);
            qr.push(e);
        }
        // rescale by a positive real to keep magnitudes near 1
        let top = q[d - 1].abs();
        if top.is_zero() {
            return DiskVerdict::Indeterminate;
        }
        let s = top.one_like() / top;
        let sb = s.abs_bound();
        c = q.iter().map(|v| v.scale(&s)).collect();
        r = qr
            .iter()
            .zip(&q)
            .map(|(e, v)| e.mul(&sb).scale(1.0 + 1e-12).add(&v.abs().abs_bound().mul(&sb).mul(&u).scale(4.0)))
            .collect();
    }
}

/// Disk verdict for `p`: Schur–Cohn first, then the root inclusion disks
/// when the recursion is marginal. `AllInside` always carries a strict margin.
pub fn certify_in_disk<T: Real>(p: &ComplexPolynomial<T>) -> DiskVerdict {
    match schur_cohn(p) {
        DiskVerdict::Indeterminate => match find_roots(p) {
            Ok(set) => verdict_from_roots(&set),
            Err(_) => DiskVerdict::Indeterminate,
        },
        v => v,
    }
}

fn verdict_from_roots<T: Real>(set: &super::RootSet<T>) -> DiskVerdict {
    if let Some(b) = set.modulus_bound() {
        if b < ErrBound::from_f64(1.0) {
            return DiskVerdict::AllInside;
        }
    }
    let one = set.zero.one_like();
    let u = set.zero.unit_roundoff().abs_bound().scale(8.0);
    let outside = set.roots.iter().zip(&set.radii).any(|(z, r)| match r {
        Some(r) => {
            let m = z.abs();
            m > one && r.add(&m.abs_bound().mul(&u)).lt_mp(&(m - one.clone()).to_mp())
        }
        None => false,
    });
    if outside {
        DiskVerdict::NotAllInside
    } else {
        DiskVerdict::Indeterminate
    }
}

/// Roots of `p` together with its disk verdict.
pub fn disk_certificate<T: Real>(p: &ComplexPolynomial<T>) -> Result<ZeroCertificate<T>, CircleError<T>> {
    let set = find_roots(p)?;
    let mut cert = ZeroCertificate::from_roots(&set);
    cert.disk = Some(match schur_cohn(p) {
        DiskVerdict::Indeterminate => verdict_from_roots(&set),
        v => v,
    });
    Ok(cert)
}
