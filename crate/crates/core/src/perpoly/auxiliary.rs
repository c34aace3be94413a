//! The comparison polynomials `H`, `M` (odd `m`) and `h` (even `m`). They
//! depend only on `m`, `k` and the level, never on L-values.

use rug::{Integer, Rational};

use super::{sqrt_level_pow, PerpolyError, RealPolynomial};
use crate::lvalues::{GammaFactorSpec, Parity};
use crate::scalar::{factorial, ErrBound, Mp, Real};

/// Extra bits carried while a coefficient is assembled.
pub const AUX_GUARD_BITS: u32 = 32;

/// `prod_{j=1}^{r-1} Gamma((m-j)(k-1) - n) / Gamma((m-j)(k-1))`, exactly.
fn gamma_ratio(spec: &GammaFactorSpec, n: u64) -> Rational {
    let k1 = spec.k as u64 - 1;
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for j in 1..spec.r as u64 {
        let top = (spec.m as u64 - j) * k1;
        num *= factorial(top - n - 1);
        den *= factorial(top - 1);
    }
    Rational::from((num, den))
}

/// Rounds an assembled coefficient to `prec` bits; `ops` counts the
/// roundings made at the guarded precision.
fn finish(x: Mp, prec: u32, ops: u64) -> (Mp, ErrBound) {
    let wp = x.prec();
    let v = x.with_prec(prec);
    let err = ErrBound::ulps(&x, wp, ops as u32 + 2).add(&ErrBound::ulps(&v, prec, 1));
    (v, err)
}

fn require(m: u32, k: u32, parity: Parity) -> Result<GammaFactorSpec, PerpolyError> {
    let spec = GammaFactorSpec::new(m, k);
    if spec.parity != parity {
        return Err(PerpolyError::ParityMismatch { m, expected: parity, actual: spec.parity });
    }
    Ok(spec)
}

/// `H_{m,f}` and its two-term truncation `M_{m,f}` for odd `m`, with
/// `a = (w-1)/2`:
///
/// `H(z) = (2 pi)^a / (2 a!) prod_j Gamma(a + 1 - j(k-1)) / Gamma((m-j)(k-1)) N^(-m w/2 - 1)
///        + sum_{n<a} (2 pi)^n / n! prod_j Gamma((m-j)(k-1) - n) / Gamma((m-j)(k-1)) N^(-n/2-1) z^(a-n)`
///
/// and `M(z) = N^-1 z^a + 2 pi prod_j Gamma((m-j)(k-1) - 1) / Gamma((m-j)(k-1)) N^(-3/2) z^(a-1)`.
pub fn build_h_m(
    m: u32,
    k: u32,
    level: u64,
    prec: u32,
) -> Result<(RealPolynomial<Mp>, RealPolynomial<Mp>), PerpolyError> {
    let spec = require(m, k, Parity::Odd)?;
    let w = spec.weight();
    if w < 3 {
        return Err(PerpolyError::Degenerate(w));
    }
    let a = (w - 1) / 2;
    let wp = prec + AUX_GUARD_BITS;
    let two_pi = Mp::pi(wp) * Mp::from_i64(wp, 2);
    let r = spec.r as u64;
    let k1 = k as u64 - 1;

    let mut coeffs = vec![Mp::new(prec); a as usize + 1];
    let mut bounds = vec![ErrBound::zero(); a as usize + 1];
    let mut pow = Mp::from_i64(wp, 1);
    for n in 0..a {
        let g = Mp::from_rational(wp, &(gamma_ratio(&spec, n) / Rational::from(factorial(n))));
        let x = pow.clone() * g * sqrt_level_pow(level, -(n as i64 + 2), wp);
        let (v, e) = finish(x, prec, 2 * n + 8);
        coeffs[(a - n) as usize] = v;
        bounds[(a - n) as usize] = e;
        pow = pow * two_pi.clone();
    }
    // halved boundary term
    let mut ratio = Rational::from((1, 2)) / Rational::from(factorial(a));
    for j in 1..r {
        ratio *= Rational::from((factorial(a - j * k1), factorial((m as u64 - j) * k1 - 1)));
    }
    let x = two_pi.powi(a as i64) * Mp::from_rational(wp, &ratio)
        * sqrt_level_pow(level, -((m as u64 * w + 2) as i64), wp);
    let (v, e) = finish(x, prec, 2 * a + m as u64 * w + 8);
    coeffs[0] = v;
    bounds[0] = e;
    let h = RealPolynomial::new(coeffs, bounds);

    let mut mc = vec![Mp::new(prec); a as usize + 1];
    let mut mb = vec![ErrBound::zero(); a as usize + 1];
    let (v, e) = finish(sqrt_level_pow(level, -2, wp), prec, 1);
    mc[a as usize] = v;
    mb[a as usize] = e;
    let x = two_pi * Mp::from_rational(wp, &gamma_ratio(&spec, 1)) * sqrt_level_pow(level, -3, wp);
    let (v, e) = finish(x, prec, 8);
    mc[a as usize - 1] = v;
    mb[a as usize - 1] = e;
    Ok((h, RealPolynomial::new(mc, mb)))
}

/// `h_{m,f}` for even `m`, placed on the degrees of `q` (`(w-2)/2` down to 0):
///
/// `h(z) = sum_{n <= (w-2)/2} pi^(-(w-n)/2) Gamma((w-n)/2 - floor(r(k-1)/2))
///         (2 pi)^n / n! prod_j Gamma((m-j)(k-1) - n) / Gamma((m-j)(k-1)) z^((w-2)/2 - n)`.
///
/// There is no level dependence.
pub fn build_h(m: u32, k: u32, prec: u32) -> Result<RealPolynomial<Mp>, PerpolyError> {
    let spec = require(m, k, Parity::Even)?;
    let w = spec.weight();
    if w < 2 {
        return Err(PerpolyError::Degenerate(w));
    }
    let deg = (w - 2) / 2;
    let shift = spec.half_shift().expect("even branch has a half term");
    let wp = prec + AUX_GUARD_BITS;
    let pi = Mp::pi(wp);
    let sqrt_pi = pi.sqrt();
    let two_pi = pi * Mp::from_i64(wp, 2);
    let mut coeffs = vec![Mp::new(prec); deg as usize + 1];
    let mut bounds = vec![ErrBound::zero(); deg as usize + 1];
    let mut pow = Mp::from_i64(wp, 1);
    for n in 0..=deg {
        // Gamma at the half-integer or integer (w - n)/2 - shift
        let arg = Mp::from_rational(wp, &Rational::from(((w - n) as i64 - 2 * shift as i64, 2)));
        let g = arg.gamma() * Mp::from_rational(wp, &(gamma_ratio(&spec, n) / Rational::from(factorial(n))));
        let x = pow.clone() * g * sqrt_pi.powi(-((w - n) as i64));
        let (v, e) = finish(x, prec, 2 * n + w + 12);
        coeffs[(deg - n) as usize] = v;
        bounds[(deg - n) as usize] = e;
        pow = pow * two_pi.clone();
    }
    Ok(RealPolynomial::new(coeffs, bounds))
}
