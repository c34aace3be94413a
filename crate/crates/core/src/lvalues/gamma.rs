//! Gamma factors `gamma_m(s)`.

use serde::{Deserialize, Serialize};

use super::LError;
use crate::complex::Complex;
use crate::scalar::{Field, Mp, Real};
use crate::special::{ln_gamma_complex, ln_gamma_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// One factor `Gamma(a (s + u) - shift)` with `a = 1` or `a = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaTerm {
    pub half: bool,
    pub shift: u64,
}

impl GammaTerm {
    pub fn scale(&self) -> f64 {
        if self.half {
            0.5
        } else {
            1.0
        }
    }

    /// Real argument `a x - shift`.
    pub fn arg(&self, x: f64) -> f64 {
        self.scale() * x - self.shift as f64
    }
}

/// `gamma_m(s) = exp(-rate s) prod Gamma(a_i s - b_i)`, where for
/// `m = 2r - 1` the terms are `Gamma(s - j(k-1))`, `j < r`, and the rate is
/// `r ln(2 pi)`; for `m = 2r` the same terms are followed by
/// `Gamma(s/2 - floor(r(k-1)/2))` and the rate gains `ln(pi)/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaFactorSpec {
    pub m: u32,
    pub r: u32,
    pub k: u32,
    pub parity: Parity,
    pub terms: Vec<GammaTerm>,
}

impl GammaFactorSpec {
    pub fn new(m: u32, k: u32) -> Self {
        assert!(m >= 1 && k >= 2);
        let (r, parity) = if m % 2 == 1 { ((m + 1) / 2, Parity::Odd) } else { (m / 2, Parity::Even) };
        // the odd part always has ceil(m/2) = r terms for odd m, r terms for m = 2r
        let mut terms: Vec<GammaTerm> =
            (0..r as u64).map(|j| GammaTerm { half: false, shift: j * (k as u64 - 1) }).collect();
        if parity == Parity::Even {
            terms.push(GammaTerm { half: true, shift: (r as u64 * (k as u64 - 1)) / 2 });
        }
        GammaFactorSpec { m, r, k, parity, terms }
    }

    /// `m (k - 1)`.
    pub fn weight(&self) -> u64 {
        self.m as u64 * (self.k as u64 - 1)
    }

    pub fn half_shift(&self) -> Option<u64> {
        self.terms.iter().find(|t| t.half).map(|t| t.shift)
    }

    pub fn exp_rate_f64(&self) -> f64 {
        let pi = std::f64::consts::PI;
        let mut rate = self.r as f64 * (2.0 * pi).ln();
        if self.parity == Parity::Even {
            rate += 0.5 * pi.ln();
        }
        rate
    }

    pub fn exp_rate(&self, prec: u32) -> Mp {
        let pi = Mp::pi(prec);
        let two_pi = pi.clone() * Mp::from_i64(prec, 2);
        let mut rate = two_pi.ln() * Mp::from_i64(prec, self.r as i64);
        if self.parity == Parity::Even {
            rate = rate + pi.ln() * Mp::from_f64(prec, 0.5);
        }
        rate
    }

    /// Largest real `u` where `gamma_m(s + u)` has a pole, `s` real.
    pub fn rightmost_pole(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.shift as f64 / t.scale() - s)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ln gamma_m(x)` for real `x` right of every pole (NaN otherwise).
    pub fn ln_real(&self, x: f64) -> f64 {
        let mut acc = -self.exp_rate_f64() * x;
        for t in &self.terms {
            let a = t.arg(x);
            if a <= 0.0 {
                return f64::NAN;
            }
            acc += ln_gamma_f64(a);
        }
        acc
    }

    /// `gamma_m(x)` for real `x` right of every pole, via MPFR's real gamma.
    pub fn real_value(&self, x: &Mp) -> Result<Mp, LError> {
        let prec = x.prec();
        let mut acc = (-(self.exp_rate(prec) * x.clone())).exp();
        for t in &self.terms {
            let a = if t.half { x.clone() * Mp::from_f64(prec, 0.5) } else { x.clone() };
            let z = a - Mp::from_i64(prec, t.shift as i64);
            if z.to_f64() <= 0.0 {
                return Err(LError::PoleProximity { shift: t.shift, half: t.half });
            }
            acc = acc * z.gamma();
        }
        Ok(acc)
    }
}

/// `gamma_m(s)` at complex `s`.
pub fn gamma_factor(spec: &GammaFactorSpec, s: &Complex<Mp>, prec: u32) -> Result<Complex<Mp>, LError> {
    let s = Complex::new(s.re.with_prec(prec), s.im.with_prec(prec));
    let half = Mp::from_f64(prec, 0.5);
    let mut ln = Complex::from_real(s.re.zero_like());
    for t in &spec.terms {
        let a = if t.half { s.scale(&half) } else { s.clone() };
        let z = Complex::new(a.re - Mp::from_i64(prec, t.shift as i64), a.im);
        let (x, y) = (z.re.to_f64(), z.im.to_f64());
        if x < 0.5 {
            let nearest = x.round();
            if (x - nearest).hypot(y) < 1e-6 {
                return Err(LError::PoleProximity { shift: t.shift, half: t.half });
            }
        }
        ln = ln + ln_gamma_complex(&z);
    }
    let rate = spec.exp_rate(prec);
    ln = ln - s.scale(&rate);
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(prec: u32, x: f64, y: f64) -> Complex<Mp> {
        Complex::new(Mp::from_f64(prec, x), Mp::from_f64(prec, y))
    }

    #[test]
    fn term_layout() {
        let g = GammaFactorSpec::new(1, 12);
        assert_eq!(g.terms, vec![GammaTerm { half: false, shift: 0 }]);
        let g = GammaFactorSpec::new(2, 12);
        assert_eq!(g.r, 1);
        assert_eq!(g.half_shift(), Some(5));
        let g = GammaFactorSpec::new(3, 12);
        assert_eq!(g.terms.len(), 2);
        assert_eq!(g.terms[1].shift, 11);
        let g = GammaFactorSpec::new(4, 30);
        assert_eq!(g.terms.len(), 3);
        assert_eq!(g.half_shift(), Some(29));
        assert_eq!(g.weight(), 116);
    }

    #[test]
    fn small_examples() {
        let prec = 128;
        let g1 = GammaFactorSpec::new(1, 12);
        let v = gamma_factor(&g1, &c(prec, 1.0, 0.0), prec).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((v.re.to_f64() - want).abs() < 1e-15 * want);
        assert!(v.im.to_f64().abs() < 1e-30);

        // m = 2, k = 12, s = 22: pi^-11 Gamma(6) (2 pi)^-22 Gamma(22)
        let g2 = GammaFactorSpec::new(2, 12);
        let v = gamma_factor(&g2, &c(prec, 22.0, 0.0), prec).unwrap();
        let p = Mp::pi(prec);
        let want = Mp::from_i64(prec, 120) * Mp::from_i64(prec, 22).gamma()
            / (p.powi(11) * (p.clone() * Mp::from_i64(prec, 2)).powi(22));
        let rel = ((v.re.clone() - want.clone()) / want.clone()).to_f64().abs();
        assert!(rel < 1e-35, "{rel}");
        let real = g2.real_value(&Mp::from_i64(prec, 22)).unwrap();
        assert!(((real - want.clone()) / want).to_f64().abs() < 1e-35);

        // m = 3, k = 12, s = 34: (2 pi)^-68 Gamma(34) Gamma(23)
        let g3 = GammaFactorSpec::new(3, 12);
        let v = gamma_factor(&g3, &c(prec, 34.0, 0.0), prec).unwrap();
        let want = Mp::from_i64(prec, 34).gamma() * Mp::from_i64(prec, 23).gamma()
            / (p.clone() * Mp::from_i64(prec, 2)).powi(68);
        assert!(((v.re - want.clone()) / want).to_f64().abs() < 1e-35);
        assert!((g3.ln_real(34.0) - g3.real_value(&Mp::from_i64(prec, 34)).unwrap().ln().to_f64()).abs() < 1e-9);
    }

    #[test]
    fn poles_are_rejected() {
        let g3 = GammaFactorSpec::new(3, 12);
        let err = gamma_factor(&g3, &c(128, 11.0, 0.0), 128).unwrap_err();
        assert!(matches!(err, LError::PoleProximity { shift: 11, .. }), "{err}");
        assert!(gamma_factor(&g3, &c(128, 11.0, 1e-3), 128).is_ok());
        assert_eq!(g3.rightmost_pole(5.0), 6.0);
        assert_eq!(GammaFactorSpec::new(2, 12).rightmost_pole(1.0), 9.0);
    }

    #[test]
    fn even_branch_splits_off_the_half_term() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let prec = 96;
        for _ in 0..100 {
            let k = 2 * rng.gen_range(3..16u32);
            let r = rng.gen_range(1..4u32);
            let s = c(prec, rng.gen_range(-5.0..60.0), rng.gen_range(-30.0..30.0));
            let even = GammaFactorSpec::new(2 * r, k);
            let odd = GammaFactorSpec::new(2 * r - 1, k);
            let (Ok(a), Ok(b)) = (gamma_factor(&even, &s, prec), gamma_factor(&odd, &s, prec)) else {
                continue;
            };
            let shift = (r * (k - 1) / 2) as i64;
            let half = Complex::new(
                s.re.clone() * Mp::from_f64(prec, 0.5) - Mp::from_i64(prec, shift),
                s.im.clone() * Mp::from_f64(prec, 0.5),
            );
            let pi = Mp::pi(prec);
            let extra = (ln_gamma_complex(&half) - s.scale(&(pi.ln() * Mp::from_f64(prec, 0.5)))).exp();
            let want = extra * b;
            let diff = (a - want.clone()).abs().to_f64();
            assert!(diff <= 1e-20 * want.abs().to_f64(), "k={k} r={r} {diff}");
        }
    }
}
