//! Exact newform Fourier coefficients: built-in level-1 eigenforms from
//! Eisenstein series arithmetic, JSON ingestion for squarefree levels, and
//! Hecke-relation validation.

mod hecke;
mod series;

use std::fs;
use std::path::Path;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize, is_squarefree, smallest_prime_factors};

pub use hecke::{within_in_all_embeddings, HeckeValue};
pub use series::IntegerSeries;

#[derive(Debug, Error)]
pub enum FormError {
    #[error("unsupported Eisenstein weight {0} (only 4 and 6)")]
    UnsupportedEisensteinWeight(u32),
    #[error("no built-in newform of weight {0}: level-1 cusp space is not one-dimensional")]
    UnsupportedBuiltinWeight(u32),
    #[error("series division by {divisor} is not exact at q^{index}")]
    InexactDivision { index: usize, divisor: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed coefficient file: {0}")]
    Malformed(String),
    #[error("not normalized: a(1) = {0}, expected 1")]
    NotNormalized(String),
    #[error("level {0} not squarefree")]
    LevelNotSquarefree(u64),
    #[error("odd weight {0}: S_k(N) with trivial character vanishes")]
    OddWeight(u32),
    #[error("invalid level {0}")]
    InvalidLevel(u64),
    #[error("coefficient cutoff {have} too small, need at least {need}")]
    CutoffTooSmall { have: usize, need: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSource {
    Builtin,
    File,
}

/// A normalized newform on `Gamma_0(N)`, `N` squarefree, with exact
/// coefficients `a(1..=X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewformData {
    pub level: u64,
    pub weight: u32,
    pub label: String,
    /// `coeffs[n - 1] = a(n)`.
    pub coeffs: Vec<HeckeValue>,
    /// Sign of `sqrt(d)` in the chosen real embedding of the Hecke field.
    pub embedding: i8,
    pub epsilon_hint_m1: Option<i8>,
    pub source: FormSource,
}

impl NewformData {
    pub fn coeff_cutoff(&self) -> usize {
        self.coeffs.len()
    }

    /// `a(n)`, `1 <= n <= X`.
    pub fn a(&self, n: usize) -> &HeckeValue {
        &self.coeffs[n - 1]
    }

    /// Discriminant of the quadratic Hecke field, `None` for rational forms.
    pub fn hecke_field(&self) -> Option<&Integer> {
        self.coeffs.iter().find(|c| c.d != 0).map(|c| &c.d)
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.coeffs.iter().all(|c| c.as_integer().is_some())
    }

    pub fn is_ramified(&self, p: u64) -> bool {
        self.level % p == 0
    }

    /// Prefix `a(1..=x)` of this form.
    pub fn truncated(&self, x: usize) -> Result<NewformData, FormError> {
        if x > self.coeffs.len() {
            return Err(FormError::CutoffTooSmall { have: self.coeffs.len(), need: x });
        }
        let mut out = self.clone();
        out.coeffs.truncate(x);
        Ok(out)
    }
}

/// `sigma_e(n)` for `n <= x`.
fn divisor_sums(e: u32, x: usize) -> Vec<Integer> {
    let mut s = vec![Integer::new(); x + 1];
    for d in 1..=x {
        let pw = Integer::from(d).pow(e);
        let mut m = d;
        while m <= x {
            s[m] += &pw;
            m += d;
        }
    }
    s
}

/// Normalized Eisenstein series `E_w = 1 - (2w/B_w) sum sigma_{w-1}(n) q^n`
/// truncated at `q^x`, for `w in {4, 6}`.
pub fn eisenstein_series(w: u32, x: usize) -> Result<IntegerSeries, FormError> {
    let c: i64 = match w {
        4 => 240,
        6 => -504,
        _ => return Err(FormError::UnsupportedEisensteinWeight(w)),
    };
    let sig = divisor_sums(w - 1, x);
    let mut coeffs = Vec::with_capacity(x + 1);
    coeffs.push(Integer::from(1));
    for s in sig.into_iter().skip(1) {
        coeffs.push(s * c);
    }
    Ok(IntegerSeries::new(coeffs, x))
}

/// `Delta = (E_4^3 - E_6^2) / 1728` truncated at `q^x`.
pub fn delta_series(x: usize) -> Result<IntegerSeries, FormError> {
    let e4 = eisenstein_series(4, x)?;
    let e6 = eisenstein_series(6, x)?;
    let num = &e4.pow(3) - &e6.pow(2);
    num.div_exact(&Integer::from(1728))
}

/// Weights with a one-dimensional level-1 cusp space, and the exponents
/// `(a, b)` with `f = Delta E_4^a E_6^b`.
pub const BUILTIN_WEIGHTS: [(u32, u32, u32); 6] =
    [(12, 0, 0), (16, 1, 0), (18, 0, 1), (20, 2, 0), (22, 1, 1), (26, 2, 1)];

/// The unique normalized eigenform of level 1 and weight `k` for the six
/// weights where `dim S_k(1) = 1`.
pub fn builtin_newform(k: u32, x: usize) -> Result<NewformData, FormError> {
    let &(_, a, b) = BUILTIN_WEIGHTS
        .iter()
        .find(|(w, _, _)| *w == k)
        .ok_or(FormError::UnsupportedBuiltinWeight(k))?;
    if x == 0 {
        return Err(FormError::CutoffTooSmall { have: 0, need: 1 });
    }
    let mut f = delta_series(x)?;
    if a > 0 {
        f = f.mul(&eisenstein_series(4, x)?.pow(a));
    }
    if b > 0 {
        f = f.mul(&eisenstein_series(6, x)?.pow(b));
    }
    let coeffs: Vec<HeckeValue> = f.into_coeffs().into_iter().skip(1).map(HeckeValue::integer).collect();
    assert_eq!(coeffs[0].as_integer(), Some(Integer::from(1)), "Delta product must be normalized");
    Ok(NewformData {
        level: 1,
        weight: k,
        label: format!("1.{k}.a.a"),
        coeffs,
        embedding: 1,
        epsilon_hint_m1: None,
        source: FormSource::Builtin,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct HeckeFieldFile {
    discriminant: String,
    #[serde(default = "default_embedding")]
    embedding: i8,
    sqrt_coefficients: Vec<String>,
}

fn default_embedding() -> i8 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientFile {
    level: u64,
    weight: u32,
    #[serde(default)]
    label: String,
    coefficients: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon_m1: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hecke_field: Option<HeckeFieldFile>,
}

fn parse_rational(s: &str, what: &str, i: usize) -> Result<Rational, FormError> {
    Rational::parse(s.trim())
        .map(Rational::from)
        .map_err(|e| FormError::Malformed(format!("{what}[{i}] = {s:?}: {e}")))
}

/// Parses the JSON coefficient format and checks every invariant.
pub fn parse_newform(text: &str) -> Result<NewformData, FormError> {
    let raw: CoefficientFile = serde_json::from_str(text).map_err(|e| FormError::Malformed(e.to_string()))?;
    if raw.level == 0 {
        return Err(FormError::InvalidLevel(0));
    }
    if raw.weight % 2 == 1 {
        return Err(FormError::OddWeight(raw.weight));
    }
    if raw.weight < 2 {
        return Err(FormError::Malformed(format!("weight {} below 2", raw.weight)));
    }
    if !is_squarefree(raw.level) {
        return Err(FormError::LevelNotSquarefree(raw.level));
    }
    if raw.coefficients.is_empty() {
        return Err(FormError::Malformed("empty coefficient list".into()));
    }
    let (coeffs, embedding) = match &raw.hecke_field {
        None => {
            let mut out = Vec::with_capacity(raw.coefficients.len());
            for (i, s) in raw.coefficients.iter().enumerate() {
                let v = Integer::parse(s.trim())
                    .map(Integer::from)
                    .map_err(|e| FormError::Malformed(format!("coefficients[{i}] = {s:?}: {e}")))?;
                out.push(HeckeValue::integer(v));
            }
            (out, 1)
        }
        Some(hf) => {
            let d = Integer::parse(hf.discriminant.trim())
                .map(Integer::from)
                .map_err(|e| FormError::Malformed(format!("discriminant: {e}")))?;
            if d <= 1 || d.is_perfect_square() {
                return Err(FormError::Malformed(format!("discriminant {d} does not define a real quadratic field")));
            }
            if hf.sqrt_coefficients.len() != raw.coefficients.len() {
                return Err(FormError::Malformed("sqrt_coefficients length differs from coefficients".into()));
            }
            if hf.embedding != 1 && hf.embedding != -1 {
                return Err(FormError::Malformed(format!("embedding {} is not +-1", hf.embedding)));
            }
            let mut out = Vec::with_capacity(raw.coefficients.len());
            for (i, (x, y)) in raw.coefficients.iter().zip(&hf.sqrt_coefficients).enumerate() {
                let x = parse_rational(x, "coefficients", i)?;
                let y = parse_rational(y, "sqrt_coefficients", i)?;
                out.push(HeckeValue::quadratic(x, y, d.clone()));
            }
            (out, hf.embedding)
        }
    };
    if coeffs[0] != HeckeValue::from_i64(1) && !(coeffs[0].is_rational() && coeffs[0].rational == 1) {
        let c = &coeffs[0];
        return Err(FormError::NotNormalized(if c.is_rational() {
            c.rational.to_string()
        } else {
            format!("{} + {}*sqrt({})", c.rational, c.irrational, c.d)
        }));
    }
    if let Some(e) = raw.epsilon_m1 {
        if e != 1 && e != -1 {
            return Err(FormError::Malformed(format!("epsilon_m1 = {e} is not +-1")));
        }
    }
    let label = if raw.label.is_empty() { format!("{}.{}.file", raw.level, raw.weight) } else { raw.label };
    Ok(NewformData {
        level: raw.level,
        weight: raw.weight,
        label,
        coeffs,
        embedding,
        epsilon_hint_m1: raw.epsilon_m1,
        source: FormSource::File,
    })
}

pub fn load_newform(path: &Path) -> Result<NewformData, FormError> {
    let text = fs::read_to_string(path).map_err(|e| FormError::Io { path: path.display().to_string(), source: e })?;
    parse_newform(&text)
}

/// Serializes to the JSON coefficient format.
pub fn newform_to_json(fm: &NewformData) -> String {
    let quadratic = fm.hecke_field().cloned();
    let raw = CoefficientFile {
        level: fm.level,
        weight: fm.weight,
        label: fm.label.clone(),
        coefficients: fm
            .coeffs
            .iter()
            .map(|c| if quadratic.is_some() { c.rational.to_string() } else { c.rational.numer().to_string() })
            .collect(),
        epsilon_m1: fm.epsilon_hint_m1,
        hecke_field: quadratic.map(|d| HeckeFieldFile {
            discriminant: d.to_string(),
            embedding: fm.embedding,
            sqrt_coefficients: fm.coeffs.iter().map(|c| c.irrational.to_string()).collect(),
        }),
    };
    serde_json::to_string_pretty(&raw).expect("coefficient file serializes")
}

pub fn save_newform(fm: &NewformData, path: &Path) -> Result<(), FormError> {
    fs::write(path, newform_to_json(fm)).map_err(|e| FormError::Io { path: path.display().to_string(), source: e })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeckeCheckKind {
    Normalization,
    Multiplicativity,
    PrimePowerRecursion,
    DeligneBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeckeCheck {
    pub kind: HeckeCheckKind,
    pub n: u64,
    pub detail: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HeckeReport {
    pub checks: Vec<HeckeCheck>,
}

impl HeckeReport {
    pub fn failures(&self) -> impl Iterator<Item = &HeckeCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the eigenform identities on the stored range:
/// `a(mn) = a(m) a(n)` for coprime `m, n`, the prime-power recursion
/// `a(p^{e+1}) = a(p) a(p^e) - p^{k-1} a(p^{e-1})` for `p` not dividing `N`
/// (`a(p^e) = a(p)^e` otherwise), and Deligne's bound.
pub fn validate_hecke(fm: &NewformData) -> Result<HeckeReport, FormError> {
    let x = fm.coeff_cutoff();
    if x < 6 {
        return Err(FormError::CutoffTooSmall { have: x, need: 6 });
    }
    let mut report = HeckeReport::default();
    let one = fm.a(1).lift(Integer::from(1));
    report.checks.push(HeckeCheck {
        kind: HeckeCheckKind::Normalization,
        n: 1,
        detail: "a(1) = 1".into(),
        passed: *fm.a(1) == one,
    });
    let spf = smallest_prime_factors(x);
    let k1 = fm.weight - 1;
    for n in 2..=x {
        let p = spf[n] as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        if pe != n {
            let rest = n / pe;
            let prod = fm.a(pe).clone() * fm.a(rest).clone();
            report.checks.push(HeckeCheck {
                kind: HeckeCheckKind::Multiplicativity,
                n: n as u64,
                detail: format!("a({n}) = a({pe}) a({rest})"),
                passed: prod == *fm.a(n),
            });
            continue;
        }
        if n == p {
            let bound_sq = Integer::from(4) * Integer::from(p).pow(k1);
            if !fm.is_ramified(p as u64) {
                report.checks.push(HeckeCheck {
                    kind: HeckeCheckKind::DeligneBound,
                    n: n as u64,
                    detail: format!("|a({p})| <= 2 {p}^({k1}/2)"),
                    passed: within_in_all_embeddings(fm.a(p), &bound_sq),
                });
            }
            continue;
        }
        // n = p^e with e >= 2
        let prev = n / p;
        let expected = if fm.is_ramified(p as u64) {
            fm.a(p).clone() * fm.a(prev).clone()
        } else {
            let pk = fm.a(p).lift(Integer::from(p).pow(k1));
            fm.a(p).clone() * fm.a(prev).clone() - pk * fm.a(prev / p).clone()
        };
        report.checks.push(HeckeCheck {
            kind: HeckeCheckKind::PrimePowerRecursion,
            n: n as u64,
            detail: format!("a({n}) from a({p}), a({prev})"),
            passed: expected == *fm.a(n),
        });
    }
    Ok(report)
}

/// Squarefree check exposed for config validation.
pub fn level_is_squarefree(level: u64) -> bool {
    is_squarefree(level)
}

/// Prime divisors of the level.
pub fn level_primes(level: u64) -> Vec<u64> {
    factorize(level).into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(s: &IntegerSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| c.to_i64().unwrap()).collect()
    }

    #[test]
    fn eisenstein_small_orders() {
        assert_eq!(ints(&eisenstein_series(4, 2).unwrap()), vec![1, 240, 2160]);
        assert_eq!(ints(&eisenstein_series(6, 2).unwrap()), vec![1, -504, -16632]);
        assert_eq!(ints(&eisenstein_series(4, 0).unwrap()), vec![1]);
        assert!(matches!(eisenstein_series(8, 3), Err(FormError::UnsupportedEisensteinWeight(8))));
    }

    #[test]
    fn eisenstein_matches_divisor_sums() {
        // independent oracle: naive divisor enumeration
        let e4 = eisenstein_series(4, 2000).unwrap();
        let e6 = eisenstein_series(6, 2000).unwrap();
        for n in 1..=2000u64 {
            let (mut s3, mut s5) = (Integer::new(), Integer::new());
            for d in (1..=n).filter(|d| n % d == 0) {
                s3 += Integer::from(d).pow(3);
                s5 += Integer::from(d).pow(5);
            }
            assert_eq!(*e4.coeff(n as usize), s3 * 240);
            assert_eq!(*e6.coeff(n as usize), s5 * -504);
        }
    }

    #[test]
    fn delta_and_products() {
        let d = builtin_newform(12, 10).unwrap();
        let tau: Vec<i64> = d.coeffs.iter().map(|c| c.as_integer().unwrap().to_i64().unwrap()).collect();
        assert_eq!(tau, vec![1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]);
        let f16 = builtin_newform(16, 2).unwrap();
        assert_eq!(f16.a(2).as_integer().unwrap(), 216);
        let one = builtin_newform(12, 1).unwrap();
        assert_eq!(one.coeff_cutoff(), 1);
        assert_eq!(one.a(1).as_integer().unwrap(), 1);
        assert!(matches!(builtin_newform(24, 5), Err(FormError::UnsupportedBuiltinWeight(24))));
        assert!(matches!(builtin_newform(14, 5), Err(FormError::UnsupportedBuiltinWeight(14))));
    }

    #[test]
    fn builtin_forms_are_eigenforms() {
        for &(k, _, _) in BUILTIN_WEIGHTS.iter() {
            let f = builtin_newform(k, 2000).unwrap();
            let r = validate_hecke(&f).unwrap();
            assert!(r.all_passed(), "weight {k}: {:?}", r.failures().next());
        }
    }

    #[test]
    fn hecke_examples() {
        let d = builtin_newform(12, 10).unwrap();
        let r = validate_hecke(&d).unwrap();
        let six = r.checks.iter().find(|c| c.n == 6).unwrap();
        assert_eq!(six.kind, HeckeCheckKind::Multiplicativity);
        assert!(six.passed);
        let four = r.checks.iter().find(|c| c.n == 4).unwrap();
        assert_eq!(four.kind, HeckeCheckKind::PrimePowerRecursion);
        assert!(four.passed);
        assert_eq!(d.a(4).as_integer().unwrap(), Integer::from(576 - 2048));

        let mut bad = d.clone();
        bad.coeffs[5] = HeckeValue::from_i64(-6047);
        let r = validate_hecke(&bad).unwrap();
        let f: Vec<_> = r.failures().collect();
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].kind, f[0].n), (HeckeCheckKind::Multiplicativity, 6));
        assert!(matches!(validate_hecke(&d.truncated(5).unwrap()), Err(FormError::CutoffTooSmall { .. })));
    }

    #[test]
    fn file_round_trip_and_diagnostics() {
        let d = builtin_newform(12, 3).unwrap();
        let text = newform_to_json(&d);
        let back = parse_newform(&text).unwrap();
        assert_eq!(back.coeffs, d.coeffs);
        assert_eq!((back.level, back.weight, back.coeff_cutoff()), (1, 12, 3));
        assert_eq!(back.source, FormSource::File);

        let bad = r#"{"level":1,"weight":12,"label":"x","coefficients":["2","-24"]}"#;
        let e = parse_newform(bad).unwrap_err();
        assert!(e.to_string().contains("not normalized"), "{e}");
        let bad = r#"{"level":4,"weight":12,"label":"x","coefficients":["1"]}"#;
        assert!(parse_newform(bad).unwrap_err().to_string().contains("level 4 not squarefree"));
        let bad = r#"{"level":3,"weight":7,"label":"x","coefficients":["1"]}"#;
        assert!(matches!(parse_newform(bad), Err(FormError::OddWeight(7))));
        let bad = r#"{"level":3,"weight":8,"coefficients":["1","x"]}"#;
        assert!(matches!(parse_newform(bad), Err(FormError::Malformed(_))));
        let bad = r#"{"level":3,"weight":8"#;
        assert!(matches!(parse_newform(bad), Err(FormError::Malformed(_))));
    }

    #[test]
    fn quadratic_file_format() {
        let text = r#"{"level":1,"weight":24,"label":"q","coefficients":["1","540"],
            "hecke_field":{"discriminant":"144169","embedding":-1,"sqrt_coefficients":["0","12"]}}"#;
        let f = parse_newform(text).unwrap();
        assert_eq!(f.embedding, -1);
        assert_eq!(f.hecke_field().unwrap(), &Integer::from(144169));
        let again = parse_newform(&newform_to_json(&f)).unwrap();
        assert_eq!(again.coeffs, f.coeffs);
    }
}
