//! Gamma function over complex arguments, Bernoulli numbers, and the
//! explicit Stirling-type magnitude bounds used by the quadrature budgets.

use std::sync::{Mutex, OnceLock};

use rug::{Integer, Rational};

use crate::complex::Complex;
use crate::scalar::{binomial, Real};

fn bernoulli_table() -> &'static Mutex<Vec<Rational>> {
    static TABLE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(vec![Rational::from(1)]))
}

/// `B_n` (with `B_1 = -1/2`), exact.
pub fn bernoulli(n: usize) -> Rational {
    let mut table = bernoulli_table().lock().expect("bernoulli table poisoned");
    while table.len() <= n {
        let m = table.len();
        // sum_{k=0}^{m} C(m+1, k) B_k = 0
        let mut s = Rational::new();
        for (k, b) in table.iter().enumerate() {
            s += Rational::from(binomial(m as u64 + 1, k as u64)) * b;
        }
        let b = -s / Rational::from(Integer::from(m + 1));
        table.push(b);
    }
    table[n].clone()
}

/// `ln |B_{2j}|` from `|B_{2j}| = 2 (2j)! zeta(2j) / (2 pi)^{2j}`, rounded up.
fn ln_abs_bernoulli_even_upper(j: usize) -> f64 {
    let n = 2 * j;
    let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    let zeta_upper = 1.0 + 2.0_f64.powi(1 - n as i32) * 2.0;
    (2.0 * zeta_upper).ln() + ln_fact - n as f64 * (2.0 * std::f64::consts::PI).ln() + 1e-12
}

/// Principal-branch-free log-gamma: returns some logarithm of `Gamma(z)`
/// (the imaginary part is only meaningful modulo `2 pi`). Exponentiate for
/// `Gamma(z)` itself.
///
/// Uses the Stirling series after shifting `Re z` above a precision-dependent
/// threshold, with the number of terms chosen from the explicit remainder
/// bound `|B_{2J+2}| sec^{2J+2}(arg/2) / ((2J+2)(2J+1)|w|^{2J+1})`. Arguments
/// with `Re z < 1/2` go through the reflection formula.
pub fn ln_gamma_complex<T: Real>(z: &Complex<T>) -> Complex<T> {
    let half = z.re.from_f64_like(0.5);
    if z.re < half {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let one = Complex::one_like(&z.re);
        let pi = z.re.pi_like();
        let w = one - z.clone();
        let lg = ln_gamma_complex(&w);
        let s = sin_complex(&z.scale(&pi));
        return Complex::from_real(pi.ln()) - s.ln() - lg;
    }
    let prec = z.re.precision_bits() as f64;
    let threshold = (0.35 * prec).max(10.0);
    let shift = (threshold - z.re.to_f64()).ceil().max(0.0) as i64;

    let mut w = z.clone();
    let mut prod = Complex::one_like(&z.re);
    for _ in 0..shift {
        prod = prod * w.clone();
        w.re = w.re.clone() + w.re.one_like();
    }

    let two_pi = z.re.pi_like() * z.re.from_i64_like(2);
    let mut acc = (w.clone() - Complex::from_real(half.clone())) * w.ln() - w.clone()
        + Complex::from_real(two_pi.ln() * half);

    let wf = (w.re.to_f64(), w.im.to_f64());
    let abs_w = wf.0.hypot(wf.1);
    let theta = wf.1.atan2(wf.0);
    let ln_sec2 = -2.0 * (theta / 2.0).cos().ln();
    let target = -(prec + 8.0) * std::f64::consts::LN_2;

    let w_inv = w.inv();
    let w_inv2 = w_inv.clone() * w_inv.clone();
    let mut wpow = w_inv;
    let mut j = 1usize;
    loop {
        let b = bernoulli(2 * j);
        let denom = Integer::from(2 * j) * Integer::from(2 * j - 1);
        let c = z.re.from_rational_like(&(b / Rational::from(denom)));
        acc = acc + wpow.scale(&c);
        // remainder bound after j terms
        let jj = j + 1;
        let ln_rem = ln_abs_bernoulli_even_upper(jj) - ((2 * jj) as f64 * (2 * jj - 1) as f64).ln()
            - (2 * jj - 1) as f64 * abs_w.ln()
            + jj as f64 * ln_sec2;
        if ln_rem < target || j > 400 {
            break;
        }
        wpow = wpow * w_inv2.clone();
        j += 1;
    }
    if shift > 0 {
        acc = acc - prod.ln();
    }
    acc
}

pub fn gamma_complex<T: Real>(z: &Complex<T>) -> Complex<T> {
    ln_gamma_complex(z).exp()
}

pub fn sin_complex<T: Real>(z: &Complex<T>) -> Complex<T> {
    // sin(x+iy) = sin x cosh y + i cos x sinh y
    let ey = z.im.exp();
    let emy = z.im.one_like() / ey.clone();
    let two = z.re.from_i64_like(2);
    let cosh = (ey.clone() + emy.clone()) / two.clone();
    let sinh = (ey - emy) / two;
    Complex::new(z.re.sin() * cosh, z.re.cos() * sinh)
}

/// Upper bound for `ln |Gamma(x + iy)|`, `x > 0`:
/// `(x - 1/2) ln|z| - pi |y| / 2 + ln sqrt(2 pi) + 1/(6|z|)`.
pub fn ln_abs_gamma_upper(x: f64, y: f64) -> f64 {
    assert!(x > 0.0, "Stirling magnitude bound needs a positive real part");
    let r = x.hypot(y);
    (x - 0.5) * r.ln() - std::f64::consts::PI * y.abs() / 2.0
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + 1.0 / (6.0 * r)
        + 1e-12 * (1.0 + r.ln().abs() * x.abs())
}

/// `ln Gamma(x)` for real `x > 0` in double precision (Stirling with shift),
/// used only for bound bookkeeping.
pub fn ln_gamma_f64(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    let mut y = x;
    while y < 15.0 {
        shift += y.ln();
        y += 1.0;
    }
    let y2 = y * y;
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * y)
        - 1.0 / (360.0 * y * y2)
        + 1.0 / (1260.0 * y * y2 * y2)
        - 1.0 / (1680.0 * y * y2 * y2 * y2)
        - shift
}
