//! Completed symmetric power L-values at the critical integers.
//!
//! `L*(s) = Q^s gamma_m(s) L_m(s)` with `Q = N^(m/2)` satisfies
//! `L*(s) = eps L*(w + 1 - s)`, `w = m(k-1)`. Values in the upper half of
//! the critical strip come from the Dirichlet series when it converges fast
//! enough, otherwise from the smoothed two-sum identity
//!
//! ```text
//! L*(s) = Q^s  sum lambda(n) n^(w/2-s)  G_s (n / (Q A))
//!       + eps Q^s' sum lambda(n) n^(w/2-s') G_s'(n A / Q),     s' = w + 1 - s,
//! ```
//!
//! valid for every `A > 0`; the lower half is reflected. The sign `eps` is
//! the one for which the identity is independent of `A`.
//!
//! Targets are relative: the budget at `s` is held below
//! `target * Q^s0 gamma_m(s0)` with `s0 = max(s, w + 1 - s)`.

mod gamma;
mod kernel;
mod plan;

use std::sync::Arc;

use rayon::prelude::*;
use rug::ops::PowAssign;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gamma::{gamma_factor, GammaFactorSpec, GammaTerm, Parity};
pub use kernel::{global_cache, KernelCache, KernelParams, KernelTable};
pub use plan::MAX_TERMS;

use crate::formsrc::{FormError, NewformData};
use crate::scalar::{ErrBound, Field, Mp, Real};
use crate::symcoef::{rankin_tail_ln, sym_coeffs, tail_bound, SymError, SymPowerCoefficients};
use plan::{PlannedSum, SumShape, Weights};

/// Direct summation needs `sigma >= 1 + DIRECT_MARGIN`.
pub const DIRECT_MARGIN: f64 = 0.25;
/// Direct summation is used only when this many terms reach the target.
pub const DIRECT_MAX_TERMS: usize = 4096;
/// Second value of the free parameter `A`.
pub const A_ALT: (u32, u32) = (6, 5);

#[derive(Debug, Error)]
pub enum LError {
    #[error("argument within 1e-6 of a pole of Gamma({}s - {shift})", if *.half { "1/2 " } else { "" })]
    PoleProximity { shift: u64, half: bool },
    #[error("direct series needs sigma >= {}, got {sigma}; use afe_value", 1.0 + DIRECT_MARGIN)]
    NotConvergent { sigma: f64 },
    #[error("s = {s} outside the critical range 1..={weight}")]
    InvalidPoint { s: i64, weight: u64 },
    #[error("target unreachable ({0}); increase the precision or loosen the target")]
    TargetUnreachable(String),
    #[error("need {need} coefficients, have {have}")]
    InsufficientCoefficients { have: usize, need: usize },
    #[error("coefficients held at {have} bits, need {need}")]
    CoefficientPrecision { have: u32, need: u32 },
    #[error("epsilon undetermined: A-stable signs {stable:?}; increase the precision")]
    EpsilonUndetermined { stable: Vec<i8> },
    #[error("epsilon hint {hint} contradicts computed sign {computed}")]
    EpsilonHintMismatch { hint: i8, computed: i8 },
    #[error("functional equation violated at s = {s}: residual {residual} exceeds {budget}")]
    PairingViolation { s: u64, residual: String, budget: String },
    #[error("budget {budget} at s = {s} exceeds target {target}")]
    TargetMissed { s: u64, budget: String, target: String },
    #[error("malformed value set: {0}")]
    Malformed(String),
    #[error(transparent)]
    Coefficients(#[from] SymError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Error bound split by origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    pub series_truncation: ErrBound,
    pub quadrature_truncation: ErrBound,
    pub quadrature_discretization: ErrBound,
    pub rounding: ErrBound,
}

impl ErrorBudget {
    pub fn zero() -> Self {
        ErrorBudget {
            series_truncation: ErrBound::zero(),
            quadrature_truncation: ErrBound::zero(),
            quadrature_discretization: ErrBound::zero(),
            rounding: ErrBound::zero(),
        }
    }

    /// Sum of the parts, rounded up.
    pub fn total(&self) -> ErrBound {
        self.series_truncation
            .add(&self.quadrature_truncation)
            .add(&self.quadrature_discretization)
            .add(&self.rounding)
    }

    pub fn add(&self, o: &ErrorBudget) -> ErrorBudget {
        ErrorBudget {
            series_truncation: self.series_truncation.add(&o.series_truncation),
            quadrature_truncation: self.quadrature_truncation.add(&o.quadrature_truncation),
            quadrature_discretization: self.quadrature_discretization.add(&o.quadrature_discretization),
            rounding: self.rounding.add(&o.rounding),
        }
    }

    pub fn scaled(&self, f: &ErrBound) -> ErrorBudget {
        ErrorBudget {
            series_truncation: self.series_truncation.mul(f),
            quadrature_truncation: self.quadrature_truncation.mul(f),
            quadrature_discretization: self.quadrature_discretization.mul(f),
            rounding: self.rounding.mul(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Reflect,
    Afe,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::Reflect => "reflect",
            Strategy::Afe => "afe",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CriticalValue {
    pub s: u64,
    pub value: Mp,
    pub budget: ErrBound,
    pub strategy: Strategy,
    /// Split of `budget` when computed in this process.
    pub parts: Option<ErrorBudget>,
}

/// Independent lower-half evaluation compared with `eps` times the upper one.
#[derive(Clone, Debug)]
pub struct PairingCheck {
    pub s: u64,
    pub mirror: u64,
    pub residual: ErrBound,
    pub allowed: ErrBound,
}

/// `L*(w - n)` for `n = 0..w`.
#[derive(Clone, Debug)]
pub struct CriticalValueSet {
    pub label: String,
    pub m: u32,
    pub k: u32,
    pub level: u64,
    pub precision: u32,
    pub epsilon: i8,
    /// `values[n]` is at `s = w - n`.
    pub values: Vec<CriticalValue>,
    pub pairing: Vec<PairingCheck>,
}

impl CriticalValueSet {
    pub fn weight(&self) -> u64 {
        self.m as u64 * (self.k as u64 - 1)
    }

    pub fn at(&self, s: u64) -> &CriticalValue {
        &self.values[(self.weight() - s) as usize]
    }

    /// Pairs `(s, w + 1 - s)` whose values differ by more than the summed
    /// budgets, together with failed independent checks.
    pub fn pairing_violations(&self) -> Vec<u64> {
        let w = self.weight();
        let mut bad = Vec::new();
        for s in 1..=w {
            let sp = w + 1 - s;
            if sp < s {
                continue;
            }
            let (a, b) = (self.at(s), self.at(sp));
            let eps = Mp::from_i64(a.value.prec(), self.epsilon as i64);
            let res = ErrBound::from_mp(&(a.value.clone() - eps * b.value.clone()));
            if res > a.budget.add(&b.budget) {
                bad.push(s);
            }
        }
        for p in &self.pairing {
            if p.residual > p.allowed {
                bad.push(p.s);
            }
        }
        bad.sort_unstable();
        bad.dedup();
        bad
    }

    pub fn to_json(&self) -> String {
        let digits = Mp::digits_for(self.precision);
        let file = ValueFile {
            label: self.label.clone(),
            m: self.m,
            k: Some(self.k),
            level: Some(self.level),
            precision: self.precision,
            epsilon: self.epsilon,
            values: self
                .values
                .iter()
                .map(|v| ValueRecord {
                    s: v.s,
                    value: v.value.to_decimal_digits(digits),
                    budget: v.budget.to_decimal(),
                    strategy: v.strategy,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("value set serializes")
    }

    /// Parses and validates a value file; `k` and `level` default to the
    /// ones implied by the entry count and 1.
    pub fn from_json(text: &str) -> Result<Self, LError> {
        let f: ValueFile = serde_json::from_str(text).map_err(|e| LError::Malformed(e.to_string()))?;
        if f.epsilon != 1 && f.epsilon != -1 {
            return Err(LError::Malformed(format!("epsilon {}", f.epsilon)));
        }
        if f.m == 0 || f.values.is_empty() || f.values.len() as u64 % f.m as u64 != 0 {
            return Err(LError::Malformed("entry count is not a multiple of m".into()));
        }
        let w = f.values.len() as u64;
        let k = f.k.unwrap_or((w / f.m as u64 + 1) as u32);
        if f.m as u64 * (k as u64 - 1) != w {
            return Err(LError::Malformed(format!("{} entries do not match m = {}, k = {k}", w, f.m)));
        }
        let mut values = Vec::with_capacity(f.values.len());
        for (n, r) in f.values.iter().enumerate() {
            if r.s != w - n as u64 {
                return Err(LError::Malformed(format!("entry {n} has s = {}", r.s)));
            }
            let value = Mp::parse(f.precision, &r.value)
                .filter(|v| v.is_finite())
                .ok_or_else(|| LError::Malformed(format!("value at s = {}", r.s)))?;
            let budget =
                ErrBound::parse(&r.budget).ok_or_else(|| LError::Malformed(format!("budget at s = {}", r.s)))?;
            values.push(CriticalValue { s: r.s, value, budget, strategy: r.strategy, parts: None });
        }
        Ok(CriticalValueSet {
            label: f.label,
            m: f.m,
            k,
            level: f.level.unwrap_or(1),
            precision: f.precision,
            epsilon: f.epsilon,
            values,
            pairing: Vec::new(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ValueRecord {
    s: u64,
    value: String,
    budget: String,
    strategy: Strategy,
}

#[derive(Serialize, Deserialize)]
struct ValueFile {
    label: String,
    m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<u64>,
    precision: u32,
    epsilon: i8,
    values: Vec<ValueRecord>,
}

/// `L_m(s)` from the Dirichlet series, with its budget and the number of
/// terms used.
#[derive(Clone, Debug)]
pub struct DirectValue {
    pub value: Mp,
    pub budget: ErrorBudget,
    pub cutoff: usize,
}

fn ln_target(target: &ErrBound) -> f64 {
    target.ln_f64()
}

/// Fewest terms whose Rankin tail bound is below `exp(budget)`, or `None`
/// past `limit`.
fn direct_terms(m: u32, sigma: f64, budget: f64, limit: usize) -> Option<usize> {
    let ok = |x: usize| rankin_tail_ln(m, sigma, x as f64) <= budget;
    let mut hi = 1usize;
    while !ok(hi) {
        hi *= 2;
        if hi > 2 * limit {
            return None;
        }
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Some(hi).filter(|&x| x <= limit);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi).filter(|&x| x <= limit)
}

/// `sum_{n <= x} lambda(n) n^-sigma` and its rounding bound.
fn dirichlet_partial(coeffs: &SymPowerCoefficients, sigma: &Mp, x: usize, wp: u32) -> (Mp, ErrBound) {
    let neg = Float::with_val(wp, -sigma.inner());
    let mut acc = Float::new(wp);
    let mut abs = ErrBound::zero();
    let mut weights = ErrBound::zero();
    let d = Weights::new(coeffs.m, x);
    for n in 1..=x {
        let mut t = Float::with_val(wp, n);
        t.pow_assign(&neg);
        weights = weights.add(&ErrBound::from_float_up(&t).scale(d.d(n) as f64 * (1.0 + 1e-15)));
        t *= coeffs.lambda(n).inner();
        abs = abs.add(&ErrBound::from_float_up(&t));
        acc += &t;
    }
    let rounding = abs
        .scale((x + 16) as f64)
        .mul(&ErrBound::pow2(2 - wp as i32))
        .add(&weights.mul(&ErrBound::pow2(5 - coeffs.precision as i32)));
    (Mp::from_float(acc), rounding)
}

/// `L_m(s)` by direct summation for `sigma = s - w/2 >= 1 + DIRECT_MARGIN`.
pub fn lseries_direct(coeffs: &SymPowerCoefficients, s: &Mp, target: &ErrBound) -> Result<DirectValue, LError> {
    let w = coeffs.weight();
    let wp = coeffs.precision.max(s.prec());
    let sigma = s.with_prec(wp + 8) - Mp::from_i64(wp + 8, w as i64) / Mp::from_i64(wp + 8, 2);
    let sf = sigma.to_f64();
    if sf < 1.0 + DIRECT_MARGIN {
        return Err(LError::NotConvergent { sigma: sf });
    }
    let half = target.scale(0.5);
    // Rankin gives a safe count; the exact tail usually allows fewer terms
    let rankin = direct_terms(coeffs.m, sf, half.ln_f64(), usize::MAX / 4).unwrap_or(usize::MAX);
    let mut hi = rankin.min(coeffs.cutoff());
    let mut tail = tail_bound(coeffs.m, &sigma, hi)?;
    if tail > half {
        return Err(LError::InsufficientCoefficients { have: coeffs.cutoff(), need: rankin });
    }
    let mut lo = 0usize;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let t = tail_bound(coeffs.m, &sigma, mid)?;
        if t <= half {
            hi = mid;
            tail = t;
        } else {
            lo = mid;
        }
    }
    let x = hi;
    let (value, rounding) = dirichlet_partial(coeffs, &sigma, x, wp);
    let budget = ErrorBudget { series_truncation: tail, rounding, ..ErrorBudget::zero() };
    Ok(DirectValue { value, budget, cutoff: x })
}

/// Shared state for evaluating the two-sum identity.
struct Engine<'a> {
    spec: GammaFactorSpec,
    coeffs: &'a SymPowerCoefficients,
    weights: Weights,
    wp: u32,
    ln_q: Mp,
    table: Arc<KernelTable>,
}

/// One planned sum of one job.
#[derive(Clone, Debug)]
struct SumJob {
    planned: PlannedSum,
    /// `tau = A / Q` if set, `1 / (Q A)` otherwise
    inverse: bool,
}

#[derive(Clone, Debug)]
struct Job {
    s: i64,
    a: Rational,
    plus: SumJob,
    minus: SumJob,
    target: ErrBound,
}

struct SumValue {
    value: Mp,
    budget: ErrorBudget,
}

/// `L*` pieces at one `(s, A)`: the value is `plus + eps minus`.
struct Pieces {
    plus: SumValue,
    minus: SumValue,
}

impl Pieces {
    fn value(&self, eps: i8) -> Mp {
        let m = self.minus.value.clone();
        if eps > 0 {
            self.plus.value.clone() + m
        } else {
            self.plus.value.clone() - m
        }
    }

    fn budget(&self) -> ErrorBudget {
        self.plus.budget.add(&self.minus.budget)
    }
}

impl<'a> Engine<'a> {
    fn q_pow(&self, s: i64) -> Mp {
        (self.ln_q.clone() * Mp::from_i64(self.wp, s)).exp()
    }

    fn eval_sum(&self, job: &SumJob, a: &Rational) -> SumValue {
        let wp = self.wp;
        let ps = &job.planned;
        let s = ps.shape.s;
        let w = self.spec.weight() as i64;
        let sigma = Mp::from_i64(wp, 2 * s - w) / Mp::from_i64(wp, 2);
        let neg_sigma = Float::with_val(wp, -sigma.inner());
        let a_mp = Mp::from_rational(wp, a);
        let q_inv = (-self.ln_q.clone()).exp();
        let tau = if job.inverse { a_mp * q_inv } else { q_inv / a_mp };

        let mut acc = Float::new(wp);
        let mut abs = ErrBound::zero();
        let mut g_round = ErrBound::zero();
        let mut g_coef = ErrBound::zero();
        for n in 1..=ps.terms {
            let t = tau.clone() * Mp::from_i64(wp, n as i64);
            let (g, gerr) = self.table.eval(s, &t);
            let mut ns = Float::with_val(wp, n);
            ns.pow_assign(&neg_sigma);
            let dn = self.weights.d(n) as f64 * (1.0 + 1e-15);
            let nsb = ErrBound::from_float_up(&ns).scale(dn);
            g_round = g_round.add(&nsb.mul(&gerr));
            g_coef = g_coef.add(&nsb.mul(&ErrBound::from_mp(&g)));
            let mut term = Float::with_val(wp, &ns * g.inner());
            term *= self.coeffs.lambda(n).inner();
            abs = abs.add(&ErrBound::from_float_up(&term));
            acc += &term;
        }
        let qs = self.q_pow(s);
        let value = Mp::from_float(acc) * qs.clone();
        let qsb = ErrBound::from_mp(&qs).scale(1.0 + 1e-15);
        let rounding = g_round
            .add(&g_coef.mul(&ErrBound::pow2(5 - self.coeffs.precision as i32)))
            .add(&abs.scale((ps.terms + 16) as f64).mul(&ErrBound::pow2(3 - wp as i32)))
            .mul(&qsb)
            .add(&ErrBound::ulps(&value, wp, 16 + (s.unsigned_abs() as f64 * self.ln_q.to_f64()) as u32));

        let p = &self.table.params;
        let shape = &ps.shape;
        let y = p.nodes as f64 * p.h;
        let budget = ErrorBudget {
            series_truncation: ErrBound::from_ln(shape.ln_tail(&self.spec, ps.terms)),
            quadrature_truncation: ErrBound::from_ln(shape.ln_truncation(&self.spec, &self.weights, ps.terms, p.c, y)),
            quadrature_discretization: discretization(shape, &self.spec, &self.weights, ps.terms, p),
            rounding,
        };
        SumValue { value, budget }
    }

    fn eval_job(&self, job: &Job) -> Pieces {
        Pieces { plus: self.eval_sum(&job.plus, &job.a), minus: self.eval_sum(&job.minus, &job.a) }
    }
}

/// Discretization bound for one sum: the planned strip and the widest
/// one this `s` allows (three quarters of the way to its nearest
/// singularity) both give valid bounds; keep the smaller.
fn discretization(shape: &SumShape, spec: &GammaFactorSpec, w: &Weights, terms: usize, p: &KernelParams) -> ErrBound {
    let pole = spec.rightmost_pole(shape.s as f64).max(0.0);
    let wide = 0.75 * (p.c - pole);
    let a = shape.ln_discretization(spec, w, terms, p.c, p.d, p.h);
    let b = shape.ln_discretization(spec, w, terms, p.c, wide.max(p.d), p.h);
    ErrBound::from_ln(a.min(b))
}

fn ln_scale(spec: &GammaFactorSpec, ln_q: f64, s: i64) -> f64 {
    s as f64 * ln_q + spec.ln_real(s as f64)
}

/// `Q^s gamma_m(s)` at `s` in the upper half, as a bound-ready value.
fn scale_mp(spec: &GammaFactorSpec, level: u64, s: i64, prec: u32) -> Result<Mp, LError> {
    let ln_q = level_ln_q(spec.m, level, prec);
    let qs = (ln_q * Mp::from_i64(prec, s)).exp();
    Ok(qs * spec.real_value(&Mp::from_i64(prec, s))?)
}

fn level_ln_q(m: u32, level: u64, prec: u32) -> Mp {
    Mp::from_i64(prec, level as i64).ln() * Mp::from_i64(prec, m as i64) / Mp::from_i64(prec, 2)
}

fn plan_job(spec: &GammaFactorSpec, ln_q: f64, s: i64, a: Rational, ln_target: f64, target: ErrBound) -> Result<Job, LError> {
    let w = spec.weight() as i64;
    let ln_a = a.to_f64().ln();
    let mk = |s: i64, ln_tau: f64, inverse: bool| -> Result<SumJob, LError> {
        let shape = SumShape { s, ln_q, ln_tau };
        let terms = shape.terms_for(spec, ln_target + plan::SHARE_SERIES.ln())?;
        Ok(SumJob { planned: PlannedSum { shape, terms, ln_target }, inverse })
    };
    let plus = mk(s, -ln_q - ln_a, false)?;
    let minus = mk(w + 1 - s, ln_a - ln_q, true)?;
    Ok(Job { s, a, plus, minus, target })
}

fn alt_a() -> Rational {
    Rational::from((A_ALT.0, A_ALT.1))
}

/// Everything decided before any coefficient is read.
#[derive(Clone, Debug)]
pub struct CriticalPlan {
    pub m: u32,
    pub k: u32,
    pub level: u64,
    pub precision: u32,
    pub target: f64,
    /// Upper-half points summed directly, with their term counts.
    pub direct: Vec<(u64, usize)>,
    /// Upper-half points evaluated by the two-sum identity.
    pub afe: Vec<u64>,
    pub kernel: KernelParams,
    /// Coefficients needed: count and precision.
    pub cutoff: usize,
    pub coeff_precision: u32,
    jobs: Vec<(JobKind, Job)>,
    ranges: Vec<(i64, i64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum JobKind {
    Main,
    Test,
    Pair,
}

/// Default relative target for a given precision: `2^(-3 prec / 4)`.
pub fn default_target(prec: u32) -> f64 {
    2f64.powi(-(3 * prec as i32) / 4)
}

/// Plans the evaluation of every critical value of `(m, k, level)`.
pub fn plan_critical(m: u32, k: u32, level: u64, prec: u32, target: f64) -> Result<CriticalPlan, LError> {
    assert!(target > 0.0 && target < 1.0, "relative target must lie in (0, 1)");
    let spec = GammaFactorSpec::new(m, k);
    let w = spec.weight() as i64;
    let ln_q = m as f64 / 2.0 * (level as f64).ln();
    let up = (w + 2) / 2;
    let ln_target = target.ln();

    let mut direct = Vec::new();
    let mut top_afe = up;
    for s in (up..=w).rev() {
        let sigma = s as f64 - w as f64 / 2.0;
        let x = if sigma >= 1.0 + DIRECT_MARGIN {
            direct_terms(m, sigma, ln_target + 0.4f64.ln(), DIRECT_MAX_TERMS)
        } else {
            None
        };
        match x {
            Some(x) => direct.push((s as u64, x)),
            None => {
                top_afe = s;
                break;
            }
        }
    }
    direct.reverse();
    let afe: Vec<u64> = (up..=top_afe).map(|s| s as u64).collect();

    let job_target = |s: i64| -> Result<(f64, ErrBound), LError> {
        let s0 = s.max(w + 1 - s);
        let ln_t = ln_target + ln_scale(&spec, ln_q, s0);
        let t = ErrBound::from_mp(&scale_mp(&spec, level, s0, 64)?).scale(target * 0.999);
        Ok((ln_t, t))
    };
    let mut jobs = Vec::new();
    for &s in &afe {
        let s = s as i64;
        let (lt, t) = job_target(s)?;
        jobs.push((JobKind::Main, plan_job(&spec, ln_q, s, Rational::from(1), lt, t.clone())?));
        if s < up + 2 {
            jobs.push((JobKind::Test, plan_job(&spec, ln_q, s, alt_a(), lt, t.clone())?));
        }
        if w + 1 - s != s {
            jobs.push((JobKind::Pair, plan_job(&spec, ln_q, w + 1 - s, alt_a(), lt, t)?));
        }
    }
    let sums: Vec<PlannedSum> =
        jobs.iter().flat_map(|(_, j)| [j.plus.planned.clone(), j.minus.planned.clone()]).collect();
    let afe_terms = sums.iter().map(|p| p.terms).max().unwrap_or(1);
    let weights = Weights::new(m, afe_terms.max(2));
    let kernel = plan::choose_kernel(&spec, &weights, &sums, prec + 16)?;
    let direct_terms_max = direct.iter().map(|d| d.1).max().unwrap_or(1);
    let cutoff = afe_terms.max(direct_terms_max);
    let coeff_precision = kernel.wp.max(prec + 64);
    let ranges = vec![(w + 1 - top_afe, top_afe)];
    Ok(CriticalPlan {
        m,
        k,
        level,
        precision: prec,
        target,
        direct,
        afe,
        kernel,
        cutoff,
        coeff_precision,
        jobs,
        ranges,
    })
}

/// Coefficient count and precision `critical_values` will ask for.
pub fn required_cutoff(m: u32, k: u32, level: u64, prec: u32, target: f64) -> Result<(usize, u32), LError> {
    let p = plan_critical(m, k, level, prec, target)?;
    Ok((p.cutoff, p.coeff_precision))
}

fn check_coeffs(coeffs: &SymPowerCoefficients, cutoff: usize, prec: u32) -> Result<(), LError> {
    if coeffs.cutoff() < cutoff {
        return Err(LError::InsufficientCoefficients { have: coeffs.cutoff(), need: cutoff });
    }
    if coeffs.precision < prec {
        return Err(LError::CoefficientPrecision { have: coeffs.precision, need: prec });
    }
    Ok(())
}

/// `eps` from the A-stability of the identity at test points: each sign
/// is stable when every `(A = 1, A = 6/5)` pair agrees within budgets.
fn decide_epsilon(tests: &[(&Pieces, &Pieces)], hint: Option<i8>) -> Result<i8, LError> {
    let mut stable = Vec::new();
    for eps in [1i8, -1] {
        let ok = tests.iter().all(|(a, b)| {
            let diff = ErrBound::from_mp(&(a.value(eps) - b.value(eps)));
            diff <= a.budget().total().add(&b.budget().total())
        });
        if ok {
            stable.push(eps);
        }
    }
    if stable.len() != 1 {
        return Err(LError::EpsilonUndetermined { stable });
    }
    let eps = stable[0];
    if let Some(h) = hint {
        if h != eps {
            return Err(LError::EpsilonHintMismatch { hint: h, computed: eps });
        }
    }
    Ok(eps)
}

fn engine<'a>(
    spec: &GammaFactorSpec,
    coeffs: &'a SymPowerCoefficients,
    level: u64,
    kernel: &KernelParams,
    ranges: &[(i64, i64)],
    cutoff: usize,
    cache: &KernelCache,
) -> Engine<'a> {
    let table = cache.get_or_build(spec, kernel, ranges);
    Engine {
        spec: spec.clone(),
        coeffs,
        weights: Weights::new(spec.m, cutoff.max(2)),
        wp: kernel.wp,
        ln_q: level_ln_q(spec.m, level, kernel.wp),
        table,
    }
}

/// Extra bits needed so each sum's rounding stays inside its share.
fn rounding_deficit(pieces: &[Pieces], jobs: &[&Job]) -> u32 {
    let mut need = 0u32;
    for (p, j) in pieces.iter().zip(jobs) {
        let share = j.target.scale(plan::SHARE_ROUND);
        for sv in [&p.plus, &p.minus] {
            if sv.budget.rounding > share {
                let ratio = sv.budget.rounding.ln_f64() - share.ln_f64();
                need = need.max((ratio / std::f64::consts::LN_2).ceil() as u32 + 8);
            }
        }
    }
    need
}

/// All critical values of `L_m` for a form, computing the coefficients the
/// plan requires.
pub fn critical_values(fm: &NewformData, m: u32, prec: u32, target: f64) -> Result<CriticalValueSet, LError> {
    let plan = plan_critical(m, fm.weight, fm.level, prec, target)?;
    if fm.coeff_cutoff() < plan.cutoff {
        return Err(LError::InsufficientCoefficients { have: fm.coeff_cutoff(), need: plan.cutoff });
    }
    let coeffs = sym_coeffs(fm, m, plan.cutoff, plan.coeff_precision)?;
    let hint = if m == 1 { fm.epsilon_hint_m1 } else { None };
    critical_values_from(&coeffs, fm.level, hint, &plan, global_cache())
}

/// All critical values from precomputed coefficients following `plan`.
pub fn critical_values_from(
    coeffs: &SymPowerCoefficients,
    level: u64,
    epsilon_hint: Option<i8>,
    plan: &CriticalPlan,
    cache: &KernelCache,
) -> Result<CriticalValueSet, LError> {
    let spec = GammaFactorSpec::new(plan.m, plan.k);
    assert_eq!((coeffs.m, coeffs.k), (plan.m, plan.k), "coefficients belong to another L-function");
    check_coeffs(coeffs, plan.cutoff, plan.coeff_precision)?;
    let w = spec.weight() as i64;
    let prec = plan.precision;

    let mut kernel = plan.kernel.clone();
    let jobs: Vec<&Job> = plan.jobs.iter().map(|(_, j)| j).collect();
    let mut pieces;
    let mut eng;
    let mut attempt = 0;
    loop {
        eng = engine(&spec, coeffs, level, &kernel, &plan.ranges, plan.cutoff, cache);
        pieces = jobs.par_iter().map(|j| eng.eval_job(j)).collect::<Vec<_>>();
        let extra = rounding_deficit(&pieces, &jobs);
        if extra == 0 || attempt == 2 {
            break;
        }
        kernel.wp += extra;
        attempt += 1;
    }

    let find = |kind: JobKind, s: i64| {
        plan.jobs.iter().position(|(k, j)| *k == kind && j.s == s).map(|i| &pieces[i])
    };
    let up = (w + 2) / 2;
    let mut tests = Vec::new();
    for &s in &plan.afe {
        if let Some(t) = find(JobKind::Test, s as i64) {
            tests.push((find(JobKind::Main, s as i64).expect("main job"), t));
        }
    }
    let eps = decide_epsilon(&tests, epsilon_hint)?;

    let wp = kernel.wp.max(coeffs.precision);
    let mut upper: Vec<(u64, Mp, ErrorBudget, Strategy)> = Vec::new();
    for &s in &plan.afe {
        let p = find(JobKind::Main, s as i64).expect("main job");
        upper.push((s, p.value(eps), p.budget(), Strategy::Afe));
    }
    for &(s, x) in &plan.direct {
        let sigma = Mp::from_i64(wp, 2 * s as i64 - w) / Mp::from_i64(wp, 2);
        let tail = tail_bound(spec.m, &sigma, x)?;
        let (l, rounding) = dirichlet_partial(coeffs, &sigma, x, wp);
        let scale = scale_mp(&spec, level, s as i64, wp)?;
        let value = scale.clone() * l;
        let sb = ErrBound::from_mp(&scale).scale(1.0 + 1e-15);
        let budget = ErrorBudget {
            series_truncation: tail.mul(&sb),
            rounding: rounding.mul(&sb).add(&ErrBound::ulps(&value, wp, 64 + 4 * s as u32)),
            ..ErrorBudget::zero()
        };
        upper.push((s, value, budget, Strategy::Direct));
    }

    // rounding to the output precision
    let mut out: Vec<Option<CriticalValue>> = vec![None; w as usize];
    for (s, v, mut b, strat) in upper {
        let rounded = v.with_prec(prec);
        b.rounding = b.rounding.add(&ErrBound::ulps(&v, prec, 1));
        let total = b.total();
        out[(w - s as i64) as usize] =
            Some(CriticalValue { s, value: rounded, budget: total, strategy: strat, parts: Some(b) });
    }
    let sign = Mp::from_i64(prec, eps as i64);
    for s in 1..up {
        let mirror = out[(w - (w + 1 - s)) as usize].clone().expect("upper value");
        out[(w - s) as usize] = Some(CriticalValue {
            s: s as u64,
            value: mirror.value.clone() * sign.clone(),
            budget: mirror.budget.clone(),
            strategy: Strategy::Reflect,
            parts: mirror.parts.clone(),
        });
    }
    let values: Vec<CriticalValue> = out.into_iter().map(|v| v.expect("every point filled")).collect();

    // independent lower-half evaluations
    let mut pairing = Vec::new();
    for (i, (kind, job)) in plan.jobs.iter().enumerate() {
        let lower = match kind {
            JobKind::Pair => true,
            JobKind::Test if 2 * job.s == w + 1 => true,
            _ => false,
        };
        if !lower {
            continue;
        }
        let s_low = job.s as u64;
        let mirror = (w + 1 - job.s) as u64;
        let up_val = &values[(w - mirror as i64) as usize];
        let p = &pieces[i];
        let e = Mp::from_i64(wp, eps as i64);
        let residual = ErrBound::from_mp(&(p.value(eps) - e * up_val.value.clone()));
        let allowed = p.budget().total().add(&up_val.budget);
        if residual > allowed {
            return Err(LError::PairingViolation {
                s: s_low,
                residual: residual.to_decimal(),
                budget: allowed.to_decimal(),
            });
        }
        pairing.push(PairingCheck { s: s_low, mirror, residual, allowed });
    }

    for v in &values {
        let s0 = v.s.max(w as u64 + 1 - v.s);
        let t = ErrBound::from_mp(&scale_mp(&spec, level, s0 as i64, 64)?).scale(plan.target);
        if v.budget >= t {
            return Err(LError::TargetMissed { s: v.s, budget: v.budget.to_decimal(), target: t.to_decimal() });
        }
    }

    Ok(CriticalValueSet {
        label: coeffs.label.clone(),
        m: plan.m,
        k: plan.k,
        level,
        precision: prec,
        epsilon: eps,
        values,
        pairing,
    })
}

/// `L*(s)` from the two-sum identity with sign `eps` and parameter `A`,
/// with an absolute target.
pub fn afe_value(
    coeffs: &SymPowerCoefficients,
    level: u64,
    s: i64,
    eps: i8,
    a: &Rational,
    target: &ErrBound,
) -> Result<(Mp, ErrorBudget), LError> {
    let spec = GammaFactorSpec::new(coeffs.m, coeffs.k);
    let w = spec.weight() as i64;
    if s < 1 || s > w {
        return Err(LError::InvalidPoint { s, weight: w as u64 });
    }
    assert!(eps == 1 || eps == -1);
    let ln_q = coeffs.m as f64 / 2.0 * (level as f64).ln();
    let job = plan_job(&spec, ln_q, s, a.clone(), ln_target(target), target.clone())?;
    let sums = [job.plus.planned.clone(), job.minus.planned.clone()];
    let cutoff = sums.iter().map(|p| p.terms).max().unwrap_or(1);
    if coeffs.cutoff() < cutoff {
        return Err(LError::InsufficientCoefficients { have: coeffs.cutoff(), need: cutoff });
    }
    let weights = Weights::new(spec.m, cutoff.max(2));
    let kernel = plan::choose_kernel(&spec, &weights, &sums, coeffs.precision.min(64))?;
    let (a0, b0) = (s.min(w + 1 - s), s.max(w + 1 - s));
    let ranges = if b0 - a0 <= 8 { vec![(a0, b0)] } else { vec![(a0, a0), (b0, b0)] };
    let eng = engine(&spec, coeffs, level, &kernel, &ranges, cutoff, global_cache());
    let p = eng.eval_job(&job);
    let budget = p.budget();
    if budget.total() > *target {
        return Err(LError::TargetUnreachable(format!("budget {} above target {target}", budget.total())));
    }
    Ok((p.value(eps), budget))
}

/// `eps` for `L_m` from the A-stability test at the two lowest upper-half
/// critical points; a contradicting hint is an error.
pub fn determine_epsilon(
    coeffs: &SymPowerCoefficients,
    level: u64,
    prec: u32,
    hint: Option<i8>,
) -> Result<i8, LError> {
    let spec = GammaFactorSpec::new(coeffs.m, coeffs.k);
    let w = spec.weight() as i64;
    let ln_q = coeffs.m as f64 / 2.0 * (level as f64).ln();
    let up = (w + 2) / 2;
    let target = default_target(prec);
    let mut jobs = Vec::new();
    for s in up..(up + 2).min(w + 1) {
        let s0 = s.max(w + 1 - s);
        let lt = target.ln() + ln_scale(&spec, ln_q, s0);
        let t = ErrBound::from_mp(&scale_mp(&spec, level, s0, 64)?).scale(target);
        jobs.push(plan_job(&spec, ln_q, s, Rational::from(1), lt, t.clone())?);
        jobs.push(plan_job(&spec, ln_q, s, alt_a(), lt, t)?);
    }
    let sums: Vec<PlannedSum> = jobs.iter().flat_map(|j| [j.plus.planned.clone(), j.minus.planned.clone()]).collect();
    let cutoff = sums.iter().map(|p| p.terms).max().unwrap_or(1);
    if coeffs.cutoff() < cutoff {
        return Err(LError::InsufficientCoefficients { have: coeffs.cutoff(), need: cutoff });
    }
    let weights = Weights::new(spec.m, cutoff.max(2));
    let kernel = plan::choose_kernel(&spec, &weights, &sums, prec + 16)?;
    let hi = (up + 1).min(w);
    let ranges = vec![(w + 1 - hi, hi)];
    let eng = engine(&spec, coeffs, level, &kernel, &ranges, cutoff, global_cache());
    let pieces: Vec<Pieces> = jobs.par_iter().map(|j| eng.eval_job(j)).collect();
    let tests: Vec<(&Pieces, &Pieces)> = pieces.chunks(2).map(|c| (&c[0], &c[1])).collect();
    decide_epsilon(&tests, hint)
}

/// `G_s(t)` by quadrature with an absolute target.
pub fn inverse_mellin_g(spec: &GammaFactorSpec, s: i64, t: &Mp, target: &ErrBound) -> Result<(Mp, ErrorBudget), LError> {
    assert!(t.to_f64() > 0.0, "t must be positive");
    let shape = SumShape { s, ln_q: 0.0, ln_tau: t.ln().to_f64() };
    let ln_target = target.ln_f64() - (plan::SHARE_DISC + plan::SHARE_TRUNC + plan::SHARE_ROUND).ln();
    let ps = PlannedSum { shape: shape.clone(), terms: 1, ln_target };
    let weights = Weights::new(spec.m, 2);
    let kernel = plan::choose_kernel(spec, &weights, &[ps], t.prec().min(64))?;
    let table = global_cache().get_or_build(spec, &kernel, &[(s, s)]);
    let (value, rounding) = table.eval(s, t);
    let y = kernel.nodes as f64 * kernel.h;
    let budget = ErrorBudget {
        series_truncation: ErrBound::zero(),
        quadrature_truncation: ErrBound::from_ln(shape.ln_truncation(spec, &weights, 1, kernel.c, y)),
        quadrature_discretization: discretization(&shape, spec, &weights, 1, &kernel),
        rounding,
    };
    if budget.total() > *target {
        return Err(LError::TargetUnreachable(format!("budget {} above target {target}", budget.total())));
    }
    Ok((value, budget))
}

/// Outcome of one sampled point.
#[derive(Clone, Debug, PartialEq)]
pub enum LemmaOutcome {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub s: u64,
    /// `|L(s) - 1|` and its error bound
    pub deviation: f64,
    pub error: f64,
    /// `(13/9) 2^(m - (k-1)/2)`
    pub bound: f64,
    pub outcome: LemmaOutcome,
    /// `L(s) / log^(m+1)(k + |s + w/2 - 1| + 2)`, reported only.
    pub growth_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub m: u32,
    pub k: u32,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.outcome == LemmaOutcome::Fail).count()
    }
}

/// Bound `(13/9) 2^(m - (k-1)/2)` on `|L_m(s) - 1|`.
pub fn lemma_bound(m: u32, k: u32) -> f64 {
    13.0 / 9.0 * 2f64.powf(m as f64 - (k as f64 - 1.0) / 2.0)
}

/// Checks `|L_m(s) - 1| < (13/9) 2^(m - (k-1)/2)` at sampled `s >=
/// (m+1)(k-1)/2` and reports the growth ratio against `log^(m+1)`.
pub fn check_lemma_bounds(coeffs: &SymPowerCoefficients, samples: &[u64]) -> Result<LemmaReport, LError> {
    let (m, k) = (coeffs.m, coeffs.k);
    let w = coeffs.weight() as f64;
    let bound = lemma_bound(m, k);
    let mut checks = Vec::new();
    for &s in samples {
        let mut c = LemmaCheck { s, deviation: f64::NAN, error: f64::NAN, bound, outcome: LemmaOutcome::Pass, growth_ratio: f64::NAN };
        if k < 6 {
            c.outcome = LemmaOutcome::Skipped("hypothesis k >= 6 unmet".into());
            checks.push(c);
            continue;
        }
        if 2 * s < (m as u64 + 1) * (k as u64 - 1) {
            c.outcome = LemmaOutcome::Skipped(format!("s = {s} below (m+1)(k-1)/2"));
            checks.push(c);
            continue;
        }
        let prec = coeffs.precision;
        let dv = lseries_direct(coeffs, &Mp::from_i64(prec, s as i64), &ErrBound::pow2(-60))?;
        let dev = (dv.value.clone() - Mp::from_i64(prec, 1)).abs();
        let err = dv.budget.total();
        let upper = ErrBound::from_mp(&dev).add(&err);
        c.deviation = dev.to_f64();
        c.error = err.to_f64();
        c.outcome = if upper < ErrBound::from_f64(bound * (1.0 - 1e-12)) { LemmaOutcome::Pass } else { LemmaOutcome::Fail };
        let lg = (k as f64 + (s as f64 + w / 2.0 - 1.0).abs() + 2.0).ln();
        c.growth_ratio = dv.value.to_f64() / lg.powi(m as i32 + 1);
        checks.push(c);
    }
    Ok(LemmaReport { m, k, checks })
}
