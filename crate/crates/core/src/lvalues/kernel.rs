//! Trapezoid quadrature for `G_s(t) = (1/2 pi i) int_(c) gamma_m(s+u) t^-u du/u`.
//!
//! On the line `u = c + iy` the integrand is `f(y) = gamma_m(s+c+iy)
//! t^(-c-iy) / (c+iy)` and `f(-y) = conj f(y)` for real `s`, so
//! `G = (h / 2 pi) [f(0) + 2 Re sum_{j=1..J} f(jh)]`. Writing the exponential
//! part of `gamma_m` and `t^(-iy)` as a common phase, the node values
//! `W_j = exp(-rate (s+c)) prod Gamma(...) / (c + i jh)` depend on `s` only,
//! and `G_s(t) = (h/2 pi) t^-c [2 Re sum_j W_j w^j - W_0]` with
//! `w = exp(-i h (rate + ln t))`, summed by Horner's rule.
//!
//! Tables for a contiguous run of integer `s` are built once per node by
//! walking `Gamma(z + 1) = z Gamma(z)` up from the smallest `s`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rug::{Assign, Float};

use super::gamma::GammaFactorSpec;
use crate::complex::Complex;
use crate::scalar::{ErrBound, Field, Mp, Real};
use crate::special::ln_gamma_complex;

/// Contour abscissa, step, node count and working precision.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub c: f64,
    /// strip half-width the step was planned for
    pub d: f64,
    pub h: f64,
    pub nodes: usize,
    pub wp: u32,
}

struct Row {
    re: Vec<Float>,
    im: Vec<Float>,
    abs_sum: ErrBound,
    /// relative error of each stored `W_j`, in units of `2^-wp`
    rel_ulps: f64,
}

pub struct KernelTable {
    pub params: KernelParams,
    rate: Mp,
    rows: BTreeMap<i64, Row>,
}

impl KernelTable {
    /// Tables for every integer `s` in the inclusive ranges.
    pub fn build(spec: &GammaFactorSpec, params: &KernelParams, ranges: &[(i64, i64)]) -> Self {
        let wp = params.wp;
        let rate = spec.exp_rate(wp);
        let mut rows = BTreeMap::new();
        for &(lo, hi) in ranges {
            assert!(lo <= hi);
            for (s, row) in build_range(spec, params, &rate, lo, hi) {
                rows.insert(s, row);
            }
        }
        KernelTable { params: params.clone(), rate, rows }
    }

    pub fn has(&self, s: i64) -> bool {
        self.rows.contains_key(&s)
    }

    /// `G_s(t)` and a bound on its rounding error.
    pub fn eval(&self, s: i64, t: &Mp) -> (Mp, ErrBound) {
        let row = self.rows.get(&s).expect("kernel row missing");
        let p = &self.params;
        let wp = p.wp;
        let lnt = Float::with_val(wp, t.inner().ln_ref());
        let h = Float::with_val(wp, p.h);
        let mut phase = Float::with_val(wp, self.rate.inner() + &lnt);
        phase *= &h;
        phase = -phase;
        let mut sin = phase;
        let mut cos = Float::new(wp);
        sin.sin_cos_mut(&mut cos);
        let j = p.nodes;
        let mut ar = row.re[j].clone();
        let mut ai = row.im[j].clone();
        let mut t1 = Float::new(wp);
        let mut t2 = Float::new(wp);
        for idx in (0..j).rev() {
            // (ar + i ai)(cos + i sin) + W_idx
            t1.assign(&ar * &cos);
            t2.assign(&ai * &sin);
            t1 -= &t2;
            t1 += &row.re[idx];
            t2.assign(&ar * &sin);
            ai *= &cos;
            ai += &t2;
            ai += &row.im[idx];
            std::mem::swap(&mut ar, &mut t1);
        }
        let mut sum = Float::with_val(wp, &ar * 2u32);
        sum -= &row.re[0];
        let mut scale = Float::with_val(wp, &lnt * -p.c);
        scale.exp_mut();
        let two_pi = Float::with_val(wp, rug::float::Constant::Pi) * 2u32;
        let mut val = Float::with_val(wp, &sum * &scale);
        val *= &h;
        val /= &two_pi;

        // Horner error <= (4J + 16) u sum|W|; the phase error grows like
        // j * |phase| u at node j
        let phase_abs = p.h * (self.rate.to_f64() + lnt.to_f64().abs()) + 1.0;
        let ulps = 4.0 * j as f64 + 16.0 + row.rel_ulps + j as f64 * (j as f64 * phase_abs + 4.0) + 64.0;
        let mag = ErrBound::from_f64(p.h / std::f64::consts::PI)
            .mul(&row.abs_sum)
            .mul(&ErrBound::from_float_up(&scale).scale(1.0 + 1e-10));
        let err = mag.mul(&ErrBound::pow2(-(wp as i32))).scale(ulps * 1.01);
        (Mp::from_float(val), err)
    }

    /// `(h / pi) sum |W_j|`: bounds `|G_s(t)| t^c` up to the quadrature error.
    pub fn magnitude(&self, s: i64) -> ErrBound {
        let row = self.rows.get(&s).expect("kernel row missing");
        ErrBound::from_f64(self.params.h / std::f64::consts::PI).mul(&row.abs_sum)
    }
}

fn mp(prec: u32, v: f64) -> Mp {
    Mp::from_f64(prec, v)
}

fn build_range(spec: &GammaFactorSpec, p: &KernelParams, rate: &Mp, lo: i64, hi: i64) -> Vec<(i64, Row)> {
    let wp = p.wp;
    let c = mp(wp, p.c);
    let count = (hi - lo + 1) as usize;
    // exp(-rate (s + c)) for each s
    let scales: Vec<Mp> = (lo..=hi)
        .map(|s| (-(rate.clone() * (Mp::from_i64(wp, s) + c.clone()))).exp())
        .collect();
    let half = mp(wp, 0.5);

    let columns: Vec<(Vec<Complex<Mp>>, f64)> = (0..=p.nodes)
        .into_par_iter()
        .map(|j| {
            let y = mp(wp, p.h) * Mp::from_i64(wp, j as i64);
            let denom = Complex::new(c.clone(), y.clone()).inv();
            let mut worst_ln = 0.0f64;
            // per term: the chains it needs (two parities for half terms)
            let mut chains: Vec<[Option<Complex<Mp>>; 2]> = Vec::new();
            for t in &spec.terms {
                let starts = if t.half { 2 } else { 1 };
                let mut ch = [None, None];
                for (par, slot) in ch.iter_mut().enumerate().take(starts.min(count)) {
                    let z = term_arg(t.half, t.shift, lo + par as i64, &c, &y, &half);
                    let lg = ln_gamma_complex(&z);
                    worst_ln = worst_ln.max(lg.re.to_f64().abs() + lg.im.to_f64().abs());
                    *slot = Some(lg.exp());
                }
                chains.push(ch);
            }
            let mut col = Vec::with_capacity(count);
            for (idx, s) in (lo..=hi).enumerate() {
                let mut prod = denom.scale(&scales[idx]);
                for (t, ch) in spec.terms.iter().zip(chains.iter_mut()) {
                    let par = if t.half { (s - lo) as usize % 2 } else { 0 };
                    let g = ch[par].as_ref().expect("chain start");
                    prod = prod * g.clone();
                    // step this chain to the next s it serves
                    let z = term_arg(t.half, t.shift, s, &c, &y, &half);
                    ch[par] = Some(g.clone() * z);
                }
                col.push(prod);
            }
            (col, worst_ln)
        })
        .collect();

    let steps = count as f64;
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut re = Vec::with_capacity(p.nodes + 1);
        let mut im = Vec::with_capacity(p.nodes + 1);
        let mut abs = ErrBound::zero();
        let mut worst = 0.0f64;
        for (col, wl) in &columns {
            let v = &col[idx];
            abs = abs.add(&ErrBound::from_mp(&v.re)).add(&ErrBound::from_mp(&v.im));
            re.push(v.re.inner().clone());
            im.push(v.im.inner().clone());
            worst = worst.max(*wl);
        }
        // lnGamma to ~ (|ln| + 64) ulps absolute; exp turns that into a
        // relative error; each chain step and product adds a few more
        let rel_ulps = spec.terms.len() as f64 * (4.0 * worst + 4096.0) + 8.0 * steps + 64.0;
        out.push((lo + idx as i64, Row { re, im, abs_sum: abs, rel_ulps }));
    }
    out
}

/// `a (s + c + iy) - shift`.
fn term_arg(half: bool, shift: u64, s: i64, c: &Mp, y: &Mp, halfc: &Mp) -> Complex<Mp> {
    let wp = c.prec();
    let re = Mp::from_i64(wp, s) + c.clone();
    let z = Complex::new(re, y.clone());
    let z = if half { z.scale(halfc) } else { z };
    Complex::new(z.re - Mp::from_i64(wp, shift as i64), z.im)
}

/// Identifies a table: gamma factor, quadrature parameters and `s` ranges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KernelKey {
    pub m: u32,
    pub k: u32,
    pub c_bits: u64,
    pub h_bits: u64,
    pub nodes: usize,
    pub wp: u32,
    pub ranges: Vec<(i64, i64)>,
}

impl KernelKey {
    pub fn new(spec: &GammaFactorSpec, p: &KernelParams, ranges: &[(i64, i64)]) -> Self {
        KernelKey {
            m: spec.m,
            k: spec.k,
            c_bits: p.c.to_bits(),
            h_bits: p.h.to_bits(),
            nodes: p.nodes,
            wp: p.wp,
            ranges: ranges.to_vec(),
        }
    }
}

type Slot = Arc<OnceLock<Arc<KernelTable>>>;

/// Memo of kernel tables. Concurrent requests for the same key share one
/// computation: the map hands out a slot, and the slot's `OnceLock` runs
/// the build at most once.
#[derive(Default)]
pub struct KernelCache {
    map: Mutex<HashMap<KernelKey, Slot>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, spec: &GammaFactorSpec, p: &KernelParams, ranges: &[(i64, i64)]) -> Arc<KernelTable> {
        let key = KernelKey::new(spec, p, ranges);
        let slot = {
            let mut map = self.map.lock().expect("kernel cache poisoned");
            map.entry(key).or_default().clone()
        };
        slot.get_or_init(|| Arc::new(KernelTable::build(spec, p, ranges))).clone()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("kernel cache poisoned").clear();
    }
}

/// Process-wide cache used when the caller does not supply one.
pub fn global_cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(KernelCache::new)
}
