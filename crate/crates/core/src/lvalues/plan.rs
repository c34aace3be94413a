//! Bound bookkeeping in double precision: sum cutoffs, contour abscissa,
//! quadrature step and node count. Every quantity here is the logarithm of
//! an upper bound; the evaluation turns them into [`ErrBound`]s with an
//! outward cushion.
//!
//! With `I(x) = gamma_m(s + x) (s + x + 1) / (2x)` for real `x` right of all
//! poles, `(1/2 pi) int |gamma_m(s+x+iy)| / |x+iy| dy <= I(x)` (the shift-0
//! gamma term decays at least like `(1 + y^2/(s+x+1)^2)^-1`, the others are
//! bounded by their value on the real axis). Hence `|G_s(t)| <= t^-x I(x)`.

use super::gamma::GammaFactorSpec;
use super::kernel::KernelParams;
use super::LError;
use crate::symcoef::{divisor_power_table, rankin_tail_ln};

const LN_PI: f64 = 1.1447298858494002;

/// Largest `n` any plan may ask for.
pub const MAX_TERMS: usize = 1 << 17;

/// `d_{m+1}(n)` with partial sums of `d(n) n^-beta` in log space.
pub struct Weights {
    d: Vec<u64>,
}

impl Weights {
    pub fn new(m: u32, cap: usize) -> Self {
        Weights { d: divisor_power_table(m + 1, cap) }
    }

    pub fn d(&self, n: usize) -> u64 {
        self.d[n]
    }

    /// `ln sum_{n <= x} d(n) n^-beta`.
    pub fn ln_partial(&self, beta: f64, x: usize) -> f64 {
        assert!(x < self.d.len(), "weight table too short");
        let mut max = f64::NEG_INFINITY;
        for n in [1usize, x] {
            max = max.max((self.d[n] as f64).ln() - beta * (n as f64).ln());
        }
        let mut acc = 0.0;
        for n in 1..=x {
            acc += ((self.d[n] as f64).ln() - beta * (n as f64).ln() - max).exp();
        }
        max + acc.ln() + 1e-12 * (1.0 + max.abs())
    }
}

/// `ln(e^a + e^b)`.
fn lse(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln I(x)` at kernel argument `s`.
pub fn ln_i(spec: &GammaFactorSpec, s: f64, x: f64) -> f64 {
    spec.ln_real(s + x) + (s + x + 1.0).ln() - (2.0 * x).ln()
}

/// One Dirichlet sum `Q^s sum_{n <= terms} lambda(n) n^-sigma G_s(n tau)`.
#[derive(Clone, Debug)]
pub struct SumShape {
    pub s: i64,
    pub ln_q: f64,
    pub ln_tau: f64,
}

impl SumShape {
    pub fn sigma(&self, spec: &GammaFactorSpec) -> f64 {
        self.s as f64 - spec.weight() as f64 / 2.0
    }

    /// Smallest admissible shift for a bound `t^-x I(x)`.
    fn x_floor(&self, spec: &GammaFactorSpec) -> f64 {
        spec.rightmost_pole(self.s as f64).max(0.0)
    }

    /// `ln` of a bound on the terms `n > terms`.
    pub fn ln_tail(&self, spec: &GammaFactorSpec, terms: usize) -> f64 {
        let sigma = self.sigma(spec);
        let lo = self.x_floor(spec).max(1.0 - sigma) + 0.05;
        let mut best = f64::INFINITY;
        for i in 0..320 {
            let x = lo + 0.5 * i as f64;
            let v = self.s as f64 * self.ln_q - x * self.ln_tau
                + ln_i(spec, self.s as f64, x)
                + rankin_tail_ln(spec.m, sigma + x, terms as f64);
            best = best.min(v);
        }
        best
    }

    /// Fewest terms with tail bound below `exp(budget)`.
    pub fn terms_for(&self, spec: &GammaFactorSpec, budget: f64) -> Result<usize, LError> {
        let ok = |n: usize| self.ln_tail(spec, n) <= budget;
        let mut hi = 1usize;
        while !ok(hi) {
            hi *= 2;
            if hi > MAX_TERMS {
                return Err(LError::TargetUnreachable(format!(
                    "kernel sum at s = {} needs more than {MAX_TERMS} terms",
                    self.s
                )));
            }
        }
        let mut lo = hi / 2;
        if lo == 0 {
            return Ok(hi);
        }
        // ok(hi), !ok(lo)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `ln` of the discretization error of the whole sum for step `h`.
    pub fn ln_discretization(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64, d: f64, h: f64) -> f64 {
        let amp = self.ln_disc_amplitude(spec, w, terms, c, d);
        // 2 / (e^(2 pi d / h) - 1)
        let e = 2.0 * std::f64::consts::PI * d / h;
        let denom = if e > 40.0 { e } else { e.exp_m1().ln() };
        amp + std::f64::consts::LN_2 - denom
    }

    fn ln_disc_amplitude(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64, d: f64) -> f64 {
        let sigma = self.sigma(spec);
        let s = self.s as f64;
        let side = |x: f64| -x * self.ln_tau + ln_i(spec, s, x) + w.ln_partial(sigma + x, terms);
        s * self.ln_q + lse(side(c - d), side(c + d))
    }

    /// Largest step meeting `budget` for discretization.
    pub fn step_for(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64, d: f64, budget: f64) -> f64 {
        let x = self.ln_disc_amplitude(spec, w, terms, c, d) - budget + std::f64::consts::LN_2;
        // need e^(2 pi d/h) >= 1 + e^x
        let need = if x > 40.0 { x } else { x.exp().ln_1p() };
        2.0 * std::f64::consts::PI * d / (need * (1.0 + 1e-9) + 1e-12)
    }

    /// `ln` of the truncation error of the whole sum when the trapezoid
    /// stops at `y = Y`.
    pub fn ln_truncation(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64, y: f64) -> f64 {
        let partial = w.ln_partial(self.sigma(spec) + c, terms);
        self.ln_truncation_with(spec, partial, c, y)
    }

    fn ln_truncation_with(&self, spec: &GammaFactorSpec, partial: f64, c: f64, y: f64) -> f64 {
        let s = self.s as f64;
        let (k0, p, kappa) = stirling_envelope(spec, s, c, y);
        let pp = p.max(0.0);
        if kappa - pp / y <= 0.0 {
            return f64::INFINITY;
        }
        s * self.ln_q - c * self.ln_tau + partial - LN_PI + k0 + p * y.ln() - kappa * y
            - (kappa - pp / y).ln()
    }

    /// Smallest `Y` meeting `budget` for truncation.
    pub fn cutoff_for(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64, budget: f64) -> f64 {
        let s = self.s as f64;
        let (_, p, kappa) = stirling_envelope(spec, s, c, 1.0);
        let start = (2.0 * p.max(0.0) / kappa).max(1.0) + 1.0;
        let partial = w.ln_partial(self.sigma(spec) + c, terms);
        let ok = |y: f64| self.ln_truncation_with(spec, partial, c, y) <= budget;
        let mut hi = start;
        while !ok(hi) {
            hi *= 1.5;
            if hi > 1e9 {
                return f64::INFINITY;
            }
        }
        let mut lo = start.min(hi / 1.5);
        if ok(lo) {
            return lo;
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `ln` of `Q^s t^-c I(c) sum d(n) n^-sigma-c`, the scale of the terms.
    pub fn ln_magnitude(&self, spec: &GammaFactorSpec, w: &Weights, terms: usize, c: f64) -> f64 {
        let s = self.s as f64;
        s * self.ln_q - c * self.ln_tau + ln_i(spec, s, c) + w.ln_partial(self.sigma(spec) + c, terms)
    }
}

/// `(K0, P, kappa)` with `|gamma_m(s+c+iy)| / |c+iy| <= exp(K0) y^P
/// exp(-kappa y)` for `y >= y0`, from the Stirling bound on each term.
pub fn stirling_envelope(spec: &GammaFactorSpec, s: f64, c: f64, y0: f64) -> (f64, f64, f64) {
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut k0 = -spec.exp_rate_f64() * (s + c);
    let mut p = -1.0;
    let mut kappa = 0.0;
    for t in &spec.terms {
        let a = t.scale();
        let x = t.arg(s + c);
        k0 += (x - 0.5) * a.ln() + half_ln_2pi + 1.0 / (6.0 * a * y0);
        if x > 0.5 {
            k0 += (x - 0.5) * x * x / (2.0 * a * a * y0 * y0);
        }
        p += x - 0.5;
        kappa += std::f64::consts::PI * a / 2.0;
    }
    (k0 + 1e-9 * (1.0 + k0.abs()), p, kappa)
}

/// Error shares of one job's target, per sum (two sums per job).
pub const SHARE_SERIES: f64 = 0.15;
pub const SHARE_DISC: f64 = 0.1;
pub const SHARE_TRUNC: f64 = 0.1;
pub const SHARE_ROUND: f64 = 0.1;

/// A sum together with its term count and the `ln` of the job target.
#[derive(Clone, Debug)]
pub struct PlannedSum {
    pub shape: SumShape,
    pub terms: usize,
    pub ln_target: f64,
}

/// Shared quadrature parameters for a set of sums: the contour offset that
/// needs the fewest nodes among a few candidates.
pub fn choose_kernel(
    spec: &GammaFactorSpec,
    w: &Weights,
    sums: &[PlannedSum],
    min_prec: u32,
) -> Result<KernelParams, LError> {
    let p_max = sums
        .iter()
        .map(|ps| spec.rightmost_pole(ps.shape.s as f64))
        .fold(0.0f64, f64::max);
    let mut best: Option<(usize, f64, f64, f64, f64)> = None;
    for off in [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0] {
        let c = p_max + off;
        let d = off / 2.0;
        let mut h = f64::INFINITY;
        let mut y: f64 = 1.0;
        for ps in sums {
            let b_disc = ps.ln_target + SHARE_DISC.ln();
            let b_trunc = ps.ln_target + SHARE_TRUNC.ln();
            h = h.min(ps.shape.step_for(spec, w, ps.terms, c, d, b_disc));
            y = y.max(ps.shape.cutoff_for(spec, w, ps.terms, c, b_trunc));
        }
        if !y.is_finite() || !h.is_finite() || h <= 0.0 {
            continue;
        }
        let nodes = (y / h).ceil() as usize + 1;
        if best.map_or(true, |b| nodes < b.0) {
            best = Some((nodes, c, d, h, y));
        }
    }
    let Some((nodes, c, d, h, _)) = best else {
        return Err(LError::TargetUnreachable("no admissible contour".into()));
    };
    if nodes > 200_000 {
        return Err(LError::TargetUnreachable(format!("quadrature needs {nodes} nodes")));
    }
    let wp = working_precision(spec, w, sums, c, h, nodes).max(min_prec);
    Ok(KernelParams { c, d, h, nodes, wp })
}

/// Bits so the a posteriori rounding bound of every sum stays inside its
/// share, with margin.
pub fn working_precision(
    spec: &GammaFactorSpec,
    w: &Weights,
    sums: &[PlannedSum],
    c: f64,
    h: f64,
    nodes: usize,
) -> u32 {
    let mut need: f64 = 64.0;
    for ps in sums {
        let mag = ps.shape.ln_magnitude(spec, w, ps.terms, c);
        let phase = h * (spec.exp_rate_f64() + ps.shape.ln_tau.abs() + (ps.terms as f64).ln()) + 1.0;
        let ulps = (nodes as f64).powi(2) * phase + 1e5 + 8.0 * ps.terms as f64;
        let bits = (mag - ps.ln_target - SHARE_ROUND.ln()) / std::f64::consts::LN_2 + ulps.log2() + 24.0;
        need = need.max(bits);
    }
    need.ceil() as u32
}
