//! Period polynomials of symmetric powers and the auxiliary polynomials
//! used to locate their zeros.
//!
//! With `w = m(k-1)`, `R(z) = i^w N^(-w/2) sum_n binom(w-1, n) (sqrt(N) i z)^n
//! L*(w - n)`. The real rotation `P` has coefficients `P_j = C binom(w-1, j)
//! L*(j+1)` (even `m`: `c` in place of `C`), and splits as
//! `P = z^a Q(z) + eps rev(Q)` with the half polynomial `Q`.

mod auxiliary;
mod bounded;
#[cfg(test)]
mod tests;

use serde_json::json;
use thiserror::Error;

pub use auxiliary::{build_h, build_h_m, AUX_GUARD_BITS};
pub use bounded::{ComplexPolynomial, PolyDump, RealPolynomial};
pub(crate) use bounded::rounding;

use crate::complex::Complex;
use crate::lvalues::{GammaFactorSpec, Parity};
use crate::lvalues::CriticalValueSet;
use crate::scalar::{binomial, factorial, ErrBound, Field, Mp, Real};

#[derive(Debug, Error)]
pub enum PerpolyError {
    #[error("critical value at s = {s} is missing")]
    MissingValue { s: u64 },
    #[error("coefficient {index} of R is not a real multiple of its phase: residue {residue} exceeds bound {bound}")]
    ImaginaryResidue { index: usize, residue: String, bound: String },
    #[error("m = {m} belongs to the {actual:?} branch, this construction needs {expected:?}")]
    ParityMismatch { m: u32, expected: Parity, actual: Parity },
    #[error("decomposition residual {residual} at coefficient {index} exceeds the allowed {allowed}")]
    DecompositionMismatch { index: usize, residual: String, allowed: String },
    #[error("coefficient {index} breaks the palindrome symmetry")]
    PalindromeViolation { index: usize },
    #[error("weight m(k-1) = {0} leaves no polynomial")]
    Degenerate(u64),
}

/// Identifies a bundle: form, power, level and the sign of its functional
/// equation.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleParams {
    pub label: String,
    pub m: u32,
    pub k: u32,
    pub level: u64,
    pub epsilon: i8,
    pub precision: u32,
}

impl BundleParams {
    pub fn from_values(cvs: &CriticalValueSet) -> Self {
        BundleParams {
            label: cvs.label.clone(),
            m: cvs.m,
            k: cvs.k,
            level: cvs.level,
            epsilon: cvs.epsilon,
            precision: cvs.precision,
        }
    }

    pub fn weight(&self) -> u64 {
        self.m as u64 * (self.k as u64 - 1)
    }

    pub fn parity(&self) -> Parity {
        if self.m % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "label": self.label,
            "m": self.m,
            "k": self.k,
            "level": self.level,
            "epsilon": self.epsilon,
            "precision": self.precision,
        })
    }
}

/// `sqrt(N)^e`.
pub(crate) fn sqrt_level_pow(level: u64, e: i64, prec: u32) -> Mp {
    if level == 1 {
        return Mp::from_i64(prec, 1);
    }
    Mp::from_i64(prec, level as i64).sqrt().powi(e)
}

/// `C_{m,f}` (odd `m`) or `c_{m,f}` (even `m`) with a relative error bound.
///
/// `C = (2 pi)^(r w) / ((w-1)! prod_{j=1}^{r-1} ((m-j)(k-1)-1)!) N^(-m w/2 - 1)`
/// and `c = pi^(w/2) C / Gamma(w/2 - floor(r(k-1)/2))`.
pub fn normalizer(m: u32, k: u32, level: u64, prec: u32) -> (Mp, ErrBound) {
    let spec = GammaFactorSpec::new(m, k);
    let (r, w) = (spec.r as u64, spec.weight());
    let wp = prec + 64;
    let two_pi = Mp::pi(wp) * Mp::from_i64(wp, 2);
    let mut den = factorial(w - 1);
    for j in 1..r {
        den *= factorial((m as u64 - j) * (k as u64 - 1) - 1);
    }
    let mut c = two_pi.powi((r * w) as i64) / Mp::from_integer(wp, &den);
    c = c * sqrt_level_pow(level, -((m as u64 * w + 2) as i64), wp);
    let mut ulps = (r * w + m as u64 * w + 16) as f64;
    if spec.parity == Parity::Even {
        let g = w / 2 - spec.half_shift().expect("even branch has a half term");
        c = c * Mp::pi(wp).powi((w / 2) as i64) / Mp::from_integer(wp, &factorial(g - 1));
        ulps += (w / 2 + 4) as f64;
    }
    let out = c.with_prec(prec);
    let rel = ErrBound::pow2(1 - wp as i32).scale(2.0 * ulps).add(&ErrBound::pow2(1 - prec as i32));
    (out, rel)
}

fn value_at(cvs: &CriticalValueSet, s: u64) -> Result<(&Mp, &ErrBound), PerpolyError> {
    let w = cvs.weight();
    if s == 0 || s > w || cvs.values.len() as u64 != w {
        return Err(PerpolyError::MissingValue { s });
    }
    let v = cvs.at(s);
    if v.s != s || !v.value.is_finite() {
        return Err(PerpolyError::MissingValue { s });
    }
    Ok((&v.value, &v.budget))
}

/// `R_{m,f}` from the critical values: the coefficient of `z^n` is
/// `i^(w+n) N^((n-w)/2) binom(w-1, n) L*(w-n)`.
pub fn build_r(cvs: &CriticalValueSet) -> Result<ComplexPolynomial<Mp>, PerpolyError> {
    let w = cvs.weight();
    if w < 1 {
        return Err(PerpolyError::Degenerate(w));
    }
    let prec = cvs.precision;
    let mut coeffs = Vec::with_capacity(w as usize);
    let mut bounds = Vec::with_capacity(w as usize);
    for n in 0..w {
        let (v, b) = value_at(cvs, w - n)?;
        let scale = sqrt_level_pow(cvs.level, n as i64 - w as i64, prec) * Mp::from_integer(prec, &binomial(w - 1, n));
        let a = scale.clone() * v.clone();
        let err = b.mul(&ErrBound::from_mp(&scale)).add(&ErrBound::ulps(&a, prec, (w - n + 4) as u32));
        let unit = Complex::i_pow(&a, (w + n) as i64);
        coeffs.push(Complex::new(unit.re * a.clone(), unit.im * a));
        bounds.push(err);
    }
    Ok(ComplexPolynomial::new(coeffs, bounds))
}

/// `P_{m,f}(z)` from `R`: `P_j = eps C N^((w-j)/2) i^-(w+j) R_j`, the real
/// rotation of `C R(z / (i sqrt N))`. The imaginary residue must lie within
/// the coefficient bound and is charged to it.
pub fn build_p(params: &BundleParams, r: &ComplexPolynomial<Mp>) -> Result<RealPolynomial<Mp>, PerpolyError> {
    let w = params.weight();
    let prec = params.precision;
    let (c, crel) = normalizer(params.m, params.k, params.level, prec);
    let eps = Mp::from_i64(prec, params.epsilon as i64);
    let mut coeffs = Vec::with_capacity(w as usize);
    let mut bounds = Vec::with_capacity(w as usize);
    for (j, (rj, bj)) in r.coeffs().iter().zip(&r.bounds).enumerate() {
        let rot = Complex::i_pow(&rj.re, -((w + j as u64) as i64)) * rj.clone();
        if !bj.add(&ErrBound::ulps(&rj.re.abs().max_of(rj.im.abs()), prec, 4)).covers(&rot.im) {
            return Err(PerpolyError::ImaginaryResidue {
                index: j,
                residue: ErrBound::from_mp(&rot.im).to_decimal(),
                bound: bj.to_decimal(),
            });
        }
        let f = c.clone() * sqrt_level_pow(params.level, w as i64 - j as i64, prec);
        let v = eps.clone() * f.clone() * rot.re;
        let fb = ErrBound::from_mp(&f);
        let err = bj
            .add(&ErrBound::from_mp(&rot.im))
            .mul(&fb)
            .add(&ErrBound::from_mp(&v).mul(&crel))
            .add(&ErrBound::ulps(&v, prec, (w - j as u64 + 4) as u32));
        coeffs.push(v);
        bounds.push(err);
    }
    Ok(RealPolynomial::new(coeffs, bounds))
}

/// `Q_{m,f}` (odd `m`, degree `(w-1)/2`, halved constant term) or `q_{m,f}`
/// (even `m`, degree `(w-2)/2`): the coefficient of `z^(deg - n)` is
/// `C binom(w-1, n) L*(w-n)`.
pub fn build_q(cvs: &CriticalValueSet) -> Result<RealPolynomial<Mp>, PerpolyError> {
    let params = BundleParams::from_values(cvs);
    let w = params.weight();
    if w < 2 {
        return Err(PerpolyError::Degenerate(w));
    }
    let prec = cvs.precision;
    let (c, crel) = normalizer(params.m, params.k, params.level, prec);
    let odd = params.parity() == Parity::Odd;
    if odd != (w % 2 == 1) {
        let actual = if w % 2 == 1 { Parity::Odd } else { Parity::Even };
        return Err(PerpolyError::ParityMismatch { m: params.m, expected: params.parity(), actual });
    }
    let deg = if odd { (w - 1) / 2 } else { (w - 2) / 2 };
    let mut coeffs = vec![Mp::new(prec); deg as usize + 1];
    let mut bounds = vec![ErrBound::zero(); deg as usize + 1];
    for n in 0..=deg {
        let (v, b) = value_at(cvs, w - n)?;
        let mut f = c.clone() * Mp::from_integer(prec, &binomial(w - 1, n));
        if odd && n == deg {
            f = f.mul_2si(-1);
        }
        let x = f.clone() * v.clone();
        let err = b
            .mul(&ErrBound::from_mp(&f))
            .add(&ErrBound::from_mp(&x).mul(&crel))
            .add(&ErrBound::ulps(&x, prec, 4));
        coeffs[(deg - n) as usize] = x;
        bounds[(deg - n) as usize] = err;
    }
    Ok(RealPolynomial::new(coeffs, bounds))
}

/// Coefficientwise comparison of `P` with `z^a Q + eps rev(Q)`.
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub residuals: Vec<ErrBound>,
    pub allowed: Vec<ErrBound>,
    pub worst: usize,
}

impl DecompositionReport {
    pub fn violations(&self) -> Vec<usize> {
        (0..self.residuals.len()).filter(|&j| self.residuals[j] > self.allowed[j]).collect()
    }

    pub fn max_residual(&self) -> &ErrBound {
        &self.residuals[self.worst]
    }
}

/// Residuals of `P - (z^a Q + eps rev(Q))`, with `a = (w-1)/2` for odd `w`
/// and `a = w/2` for even `w`.
pub fn decomposition_residuals(p: &RealPolynomial<Mp>, q: &RealPolynomial<Mp>, eps: i8) -> DecompositionReport {
    let d = p.degree();
    let w = d + 1;
    let a = if w % 2 == 1 { (w - 1) / 2 } else { w / 2 };
    let e = Mp::from_i64(p.coeff(0).prec(), eps as i64);
    let rhs = q.shift(a).add(&q.reversed().scale(&e, &ErrBound::zero())).padded(d);
    let mut residuals = Vec::with_capacity(d + 1);
    let mut allowed = Vec::with_capacity(d + 1);
    let mut worst = 0;
    for j in 0..=d {
        let diff = p.coeff(j).clone() - rhs.coeff(j).clone();
        let res = ErrBound::from_mp(&diff);
        let lim = p.bounds[j].add(&rhs.bounds[j]).add(&rounding(&diff, 2.0));
        let ratio = |r: &ErrBound, l: &ErrBound| r.to_f64() / l.to_f64().max(f64::MIN_POSITIVE);
        if j == 0 || ratio(&res, &lim) > ratio(&residuals[worst], &allowed[worst]) {
            worst = j;
        }
        residuals.push(res);
        allowed.push(lim);
    }
    DecompositionReport { residuals, allowed, worst }
}

/// A complete set of period polynomials for one form and power.
#[derive(Clone, Debug)]
pub struct PeriodPolynomialBundle {
    pub params: BundleParams,
    pub parity: Parity,
    /// `C_{m,f}` or `c_{m,f}` and its relative error.
    pub normalizer: Mp,
    pub normalizer_rel: ErrBound,
    pub r: ComplexPolynomial<Mp>,
    /// `P` (odd `m`) or `p` (even `m`).
    pub p: RealPolynomial<Mp>,
    /// `Q` or `q`.
    pub q: RealPolynomial<Mp>,
    /// `H` or `h`.
    pub h: RealPolynomial<Mp>,
    /// `M`, odd `m` only.
    pub m_trunc: Option<RealPolynomial<Mp>>,
}

impl PeriodPolynomialBundle {
    pub fn build(cvs: &CriticalValueSet) -> Result<Self, PerpolyError> {
        let params = BundleParams::from_values(cvs);
        let parity = params.parity();
        let (normalizer, normalizer_rel) = normalizer(params.m, params.k, params.level, params.precision);
        let r = build_r(cvs)?;
        let p = build_p(&params, &r)?;
        if let Some(index) = p.palindrome_violation(params.epsilon) {
            return Err(PerpolyError::PalindromeViolation { index });
        }
        let q = build_q(cvs)?;
        let (h, m_trunc) = match parity {
            Parity::Odd => {
                let (h, m) = build_h_m(params.m, params.k, params.level, params.precision)?;
                (h, Some(m))
            }
            Parity::Even => (build_h(params.m, params.k, params.precision)?, None),
        };
        Ok(PeriodPolynomialBundle { params, parity, normalizer, normalizer_rel, r, p, q, h, m_trunc })
    }

    /// Names used in dumps and reports.
    pub fn names(&self) -> (&'static str, &'static str, &'static str) {
        match self.parity {
            Parity::Odd => ("P", "Q", "H"),
            Parity::Even => ("p", "q", "h"),
        }
    }

    pub fn dumps(&self) -> Vec<PolyDump> {
        let params = self.params.to_json();
        let (pn, qn, hn) = self.names();
        let mut out = vec![
            PolyDump::complex(params.clone(), "R", &self.r),
            PolyDump::real(params.clone(), pn, &self.p),
            PolyDump::real(params.clone(), qn, &self.q),
            PolyDump::real(params.clone(), hn, &self.h),
        ];
        if let Some(m) = &self.m_trunc {
            out.push(PolyDump::real(params, "M", m));
        }
        out
    }
}

/// Checks the split of `P` through `Q`, failing at the worst coefficient.
pub fn verify_decomposition(bundle: &PeriodPolynomialBundle) -> Result<DecompositionReport, PerpolyError> {
    let rep = decomposition_residuals(&bundle.p, &bundle.q, bundle.params.epsilon);
    if !rep.violations().is_empty() {
        let j = rep.worst;
        return Err(PerpolyError::DecompositionMismatch {
            index: j,
            residual: rep.residuals[j].to_decimal(),
            allowed: rep.allowed[j].to_decimal(),
        });
    }
    Ok(rep)
}
