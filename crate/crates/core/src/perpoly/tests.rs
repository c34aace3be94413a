use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use super::*;
use crate::formsrc::builtin_newform;
use crate::lvalues::{critical_values, default_target, plan_critical};

fn delta_values(m: u32) -> &'static CriticalValueSet {
    static SETS: [OnceLock<CriticalValueSet>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    SETS[m as usize - 1].get_or_init(|| {
        let plan = plan_critical(m, 12, 1, 128, default_target(128)).unwrap();
        let fm = builtin_newform(12, plan.cutoff.max(10)).unwrap();
        critical_values(&fm, m, 128, default_target(128)).unwrap()
    })
}

fn bundle(m: u32) -> PeriodPolynomialBundle {
    PeriodPolynomialBundle::build(delta_values(m)).unwrap()
}

fn cx(prec: u32, re: f64, im: f64) -> Complex<Mp> {
    Complex::new(Mp::from_f64(prec, re), Mp::from_f64(prec, im))
}

#[test]
fn normalizer_for_m1_is_the_classical_constant() {
    for (k, n) in [(12u32, 1u64), (12, 5), (16, 3)] {
        let (c, rel) = normalizer(1, k, n, 128);
        let two_pi = Float::with_val(256, Constant::Pi) * 2u32;
        let want = Float::with_val(256, two_pi.pow(k - 1))
            / Float::with_val(256, crate::scalar::factorial(k as u64 - 2))
            / Float::with_val(256, Float::with_val(256, n).pow(Float::with_val(256, (k + 1) as f64 / 2.0)));
        let diff = Float::with_val(256, c.inner() - &want).abs() / &want;
        assert!(diff.to_f64() <= rel.to_f64(), "k={k} N={n} rel diff {diff}");
    }
    // even branch: c = pi^(w/2) C / Gamma(w/2 - floor(r(k-1)/2)); m = 2, k = 12 has Gamma(6)
    let (c2, _) = normalizer(2, 12, 1, 128);
    let two_pi = Mp::pi(128) * Mp::from_i64(128, 2);
    let want = two_pi.powi(22) * Mp::pi(128).powi(11) / (Mp::from_integer(128, &crate::scalar::factorial(21)) * Mp::from_i64(128, 120));
    assert!(((c2 - want.clone()) / want).to_f64().abs() < 1e-35);
}

#[test]
fn degrees_follow_the_weight() {
    let b1 = bundle(1);
    assert_eq!((b1.r.degree(), b1.p.degree(), b1.q.degree(), b1.h.degree()), (10, 10, 5, 5));
    let b2 = bundle(2);
    assert_eq!((b2.r.degree(), b2.p.degree(), b2.q.degree(), b2.h.degree()), (21, 21, 10, 10));
    assert!(b2.m_trunc.is_none());
    assert_eq!(b2.names(), ("p", "q", "h"));
    let b3 = bundle(3);
    assert_eq!((b3.p.degree(), b3.q.degree()), (32, 16));
    assert_eq!(b3.m_trunc.as_ref().unwrap().degree(), 16);
}

#[test]
fn r_for_m1_is_the_classical_period_polynomial() {
    // r(z) = -(k-2)!/(2 pi i)^(k-1) sum_n (2 pi i z)^n / n! L(k-1-n), with
    // L(s) = L*(s) (2 pi)^s / Gamma(s) at level 1
    let cvs = delta_values(1);
    let r = build_r(cvs).unwrap();
    let prec = 128;
    let two_pi = Mp::pi(prec) * Mp::from_i64(prec, 2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let z = cx(prec, rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let mut acc = Complex::zero_like(&two_pi);
        for n in 0..=10u64 {
            let s = 11 - n;
            let v = &cvs.at(s).value;
            let l = v.clone() * two_pi.powi(s as i64) / Mp::from_integer(prec, &crate::scalar::factorial(s - 1));
            let t = (Complex::new(Mp::new(prec), two_pi.clone()) * z.clone()).powi(n as i64);
            acc = acc + t.scale(&(l / Mp::from_integer(prec, &crate::scalar::factorial(n))));
        }
        let pre = Complex::new(Mp::new(prec), two_pi.clone()).powi(11).inv().scale(&Mp::from_i64(prec, -362880 * 10));
        let want = pre * acc;
        let (got, err) = r.eval_bounded(&z);
        let diff = (got - want.clone()).abs();
        assert!(diff.to_f64() <= err.to_f64() + 1e-25 * want.abs().to_f64(), "{diff:?} vs {err}");
    }
}

#[test]
fn functional_equation_of_r() {
    // R(-1/(N z)) = eps i^(3(w-1)) z^(1-w) N^((1-w)/2) R(z) on |z| = N^(-1/2)
    for m in [1u32, 2] {
        let cvs = delta_values(m);
        let r = build_r(cvs).unwrap();
        let w = cvs.weight() as i64;
        let prec = 128;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11 + m as u64);
        for _ in 0..20 {
            let th = Mp::from_f64(prec, rng.gen_range(0.0..6.283));
            let z = Complex::cis(&th);
            let lhs_at = (-z.clone()).inv();
            let (lhs, e1) = r.eval_bounded(&lhs_at);
            let (rv, e2) = r.eval_bounded(&z);
            let factor = Complex::i_pow(&th, 3 * (w - 1)).scale(&Mp::from_i64(prec, cvs.epsilon as i64)) * z.powi(1 - w);
            let rhs = factor * rv;
            let diff = (lhs - rhs).abs();
            assert!(ErrBound::from_mp(&diff) <= e1.add(&e2).scale(1.0 + 1e-9), "m={m} {diff:?}");
        }
    }
}

#[test]
fn p_is_a_real_rotation_of_r() {
    // P(z) = eps C i^-w N^(w/2) R(z / (i sqrt N)) at level 1
    let b = bundle(1);
    let prec = 128;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let z = cx(prec, rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
        let (pz, pe) = b.p.eval_bounded(&z);
        let arg = Complex::new(Mp::new(prec), Mp::from_i64(prec, -1)) * z.clone();
        let (rz, re) = b.r.eval_bounded(&arg);
        let f = Complex::i_pow(&b.normalizer, -11).scale(&b.normalizer) * rz;
        let diff = (pz - f).abs();
        let allowed = pe.add(&re.mul(&ErrBound::from_mp(&b.normalizer))).scale(1.01);
        assert!(ErrBound::from_mp(&diff) <= allowed.add(&ErrBound::from_f64(1e-30)), "{diff:?}");
    }
}

#[test]
fn palindromes_and_middle_term() {
    let b1 = bundle(1);
    assert_eq!(b1.p.palindrome_violation(1), None);
    assert!(b1.p.palindrome_violation(-1).is_some());
    // constant term of Q is C binom(10, 5) L*(6) / 2
    let cvs = delta_values(1);
    let want = b1.normalizer.clone() * Mp::from_i64(128, 252) * cvs.at(6).value.clone() * Mp::from_f64(128, 0.5);
    let diff = (b1.q.coeff(0).clone() - want).abs();
    assert!(b1.q.bound(0).covers(&diff));
    // leading coefficient of Q is C L*(11) = L(11) = sum tau(n) n^-11 at level 1
    let x = 400usize;
    let mut e = vec![rug::Integer::new(); x + 1];
    e[0] += 1;
    for n in 1..=x {
        for _ in 0..24 {
            for i in (n..=x).rev() {
                let t = e[i - n].clone();
                e[i] -= t;
            }
        }
    }
    let l11: f64 = (1..=x).map(|n| e[n - 1].to_f64() / (n as f64).powi(11)).sum();
    assert!((b1.q.coeff(5).to_f64() - l11).abs() < 1e-12, "{} {l11}", b1.q.coeff(5).to_f64());

    let b2 = bundle(2);
    assert_eq!(b2.p.palindrome_violation(b2.params.epsilon), None);
    // q has no halved term: its constant is c binom(21, 10) L*(12)
    let cvs2 = delta_values(2);
    let want = b2.normalizer.clone() * Mp::from_integer(128, &binomial(21, 10)) * cvs2.at(12).value.clone();
    assert!(b2.q.bound(0).add(&ErrBound::ulps(&want, 128, 4)).covers(&(b2.q.coeff(0).clone() - want)));
}

#[test]
fn decomposition_holds_and_sign_flip_fails() {
    for m in [1u32, 2, 3] {
        let b = bundle(m);
        let rep = verify_decomposition(&b).unwrap();
        assert!(rep.violations().is_empty());
        assert_eq!(rep.residuals.len(), b.p.degree() + 1);
        if m == 1 {
            // locked: the split is exact up to rounding at 128 bits
            assert!(rep.max_residual().to_f64() < 1e-30);
        }
        let flipped = decomposition_residuals(&b.p, &b.q, -b.params.epsilon);
        assert!(!flipped.violations().is_empty(), "m={m}");
    }
    let mut b = bundle(1);
    b.params.epsilon = -1;
    assert!(matches!(verify_decomposition(&b), Err(PerpolyError::DecompositionMismatch { .. })));
}

#[test]
fn h_and_m_for_odd_powers() {
    let (h, m) = build_h_m(3, 30, 2, 128).unwrap();
    assert_eq!(h.degree(), 43);
    // leading coefficient is 1/N
    assert!((h.coeff(43).to_f64() - 0.5).abs() < 1e-30);
    let nonzero: Vec<usize> = (0..=m.degree()).filter(|&j| !m.coeff(j).is_zero()).collect();
    assert_eq!(nonzero, vec![42, 43]);
    // H - M is the n >= 2 part plus the halved constant
    let diff = h.sub(&m);
    assert!(diff.coeff(43).is_zero() && diff.coeff(42).is_zero());
    for j in 0..=41 {
        assert_eq!(diff.coeff(j), h.coeff(j));
    }
    // second coefficient: 2 pi Gamma(57)/Gamma(58) N^(-3/2)
    let want = 2.0 * std::f64::consts::PI / 57.0 / 2f64.powf(1.5);
    assert!((m.coeff(42).to_f64() - want).abs() < 1e-15 * want);

    // m = 1: M = z^a / N + 2 pi N^(-3/2) z^(a-1) vanishes at -2 pi / sqrt N
    let (_, m1) = build_h_m(1, 12, 4, 128).unwrap();
    assert_eq!(m1.degree(), 5);
    let (v, e) = m1.eval_bounded(&Complex::from_real(-Mp::pi(128)));
    assert!(e.covers(&v.abs()) || v.abs().to_f64() < 1e-35);

    assert!(matches!(build_h_m(2, 12, 1, 64), Err(PerpolyError::ParityMismatch { .. })));
    assert!(matches!(build_h(3, 12, 64), Err(PerpolyError::ParityMismatch { .. })));
}

#[test]
fn h_for_even_powers() {
    // m = 2, k = 12: pi^-(22-n)/2 Gamma((22-n)/2 - 5) (2 pi)^n / n! z^(10-n)
    let h = build_h(2, 12, 128).unwrap();
    assert_eq!(h.degree(), 10);
    let pi = std::f64::consts::PI;
    let g = |x: f64| crate::special::ln_gamma_f64(x).exp();
    for n in [0usize, 1, 5, 10] {
        let want = pi.powf(-(22.0 - n as f64) / 2.0) * g((22.0 - n as f64) / 2.0 - 5.0) * (2.0 * pi).powi(n as i32)
            / g(n as f64 + 1.0);
        let got = h.coeff(10 - n).to_f64();
        assert!((got - want).abs() < 1e-12 * want, "n={n} {got} {want}");
    }
}

#[test]
fn dumps_round_trip() {
    let b = bundle(1);
    let dumps = b.dumps();
    assert_eq!(dumps.len(), 5);
    assert_eq!(dumps[0].coeffs[0].as_array().map(|a| a.len()), Some(2));
    let d = PolyDump::from_json(&dumps[1].to_json()).unwrap();
    assert_eq!(d.poly, "P");
    assert_eq!(d.params["m"], 1);
    let back = d.to_real(128).unwrap();
    for j in 0..=10 {
        let diff = (back.coeff(j).clone() - b.p.coeff(j).clone()).abs();
        assert!(diff.to_f64() <= 1e-36 * b.p.coeff(j).abs().to_f64().max(1e-300));
        assert!(back.bound(j) >= b.p.bound(j));
    }
    assert!(PolyDump::from_json(r#"{"params":{},"poly":"P","coeffs":["1"],"bounds":[]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn scaling_values_scales_p_and_q(exp in -40i32..40, mant in 1.0f64..2.0) {
        let mut cvs = delta_values(1).clone();
        let s = Mp::from_f64(128, mant).mul_2si(exp);
        for v in &mut cvs.values {
            v.value = v.value.clone() * s.clone();
            v.budget = v.budget.mul(&ErrBound::from_mp(&s)).add(&ErrBound::ulps(&v.value, 128, 1));
        }
        let base = bundle(1);
        let b = PeriodPolynomialBundle::build(&cvs).unwrap();
        for j in 0..=10 {
            let want = base.p.coeff(j).clone() * s.clone();
            let allowed = b.p.bound(j).add(&base.p.bound(j).mul(&ErrBound::from_mp(&s)));
            prop_assert!(allowed.covers(&(b.p.coeff(j).clone() - want)));
        }
        let rep = verify_decomposition(&b).unwrap();
        prop_assert!(rep.violations().is_empty());
    }
}
