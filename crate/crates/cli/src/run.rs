//! Grid instances and the per-command pipelines. Each instance runs in
//! isolation: any error ends that instance with a diagnostic and the grid
//! continues.

use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use symrh::circlezero::{certify_real_on_circle_capped, disk_certificate, rouche_margin, RoucheReport};
use symrh::formsrc::{builtin_newform, load_newform, NewformData};
use symrh::lvalues::{
    check_lemma_bounds, critical_values_from, global_cache, plan_critical, CriticalPlan, CriticalValueSet, LError,
    LemmaOutcome,
};
use symrh::perpoly::{build_h, build_h_m, decomposition_residuals, PeriodPolynomialBundle, RealPolynomial};
use symrh::symcoef::{sym_coeffs, SymPowerCoefficients};
use symrh::{ErrBound, Mp};

use crate::cache::{atomic_write, file_stem, Cache, Key, Lookup};
use crate::config::ExperimentConfig;
use crate::report::{
    CoefficientSummary, DecompositionSummary, InstanceRecord, InstanceTiming, LemmaRecord, Params, Regime,
    RoucheRecord, RunReport, StageTiming, Status, Timings, ValueSummary,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Lvalues,
    Polys,
    VerifyRh,
    VerifyLemmas,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Lvalues => "lvalues",
            Command::Polys => "polys",
            Command::VerifyRh => "verify-rh",
            Command::VerifyLemmas => "verify-lemmas",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormRef {
    Builtin(u32),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Form { form: FormRef, m: u32 },
    Auxiliary { m: u32, k: u32, level: u64 },
}

/// Form instances in config order (forms outer, `m` inner), then the
/// auxiliary grid for the lemma command.
pub fn instances(cfg: &ExperimentConfig, cmd: Command) -> Vec<Instance> {
    let forms = cfg
        .forms
        .builtin
        .iter()
        .map(|&k| FormRef::Builtin(k))
        .chain(cfg.forms.files.iter().map(|p| FormRef::File(p.clone())));
    let mut out: Vec<Instance> =
        forms.flat_map(|f| cfg.m.iter().map(move |&m| Instance::Form { form: f.clone(), m })).collect();
    if cmd == Command::VerifyLemmas {
        if let Some(a) = &cfg.auxiliary {
            for &m in &a.m {
                for &k in &a.k {
                    for &level in &a.levels {
                        out.push(Instance::Auxiliary { m, k, level });
                    }
                }
            }
        }
    }
    out
}

/// Stage timings for one instance.
struct Trace {
    stages: Vec<StageTiming>,
}

impl Trace {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> (T, Option<&'static str>)) -> T {
        let t = Instant::now();
        let (v, cache) = f();
        let seconds = t.elapsed().as_secs_f64();
        self.stages.push(StageTiming { stage: name.into(), seconds, cache: cache.map(String::from) });
        v
    }
}

/// A form known by its metadata; builtin coefficients are generated only
/// when a cache misses.
struct Form {
    label: String,
    source: String,
    k: u32,
    level: u64,
    epsilon_hint: Option<i8>,
    kind: FormKind,
}

enum FormKind {
    Builtin,
    File(NewformData),
}

impl Form {
    fn open(f: &FormRef) -> Result<Form, String> {
        match f {
            FormRef::Builtin(k) => Ok(Form {
                label: format!("1.{k}.a.a"),
                source: "builtin".into(),
                k: *k,
                level: 1,
                epsilon_hint: None,
                kind: FormKind::Builtin,
            }),
            FormRef::File(p) => {
                let fm = load_newform(p).map_err(|e| e.to_string())?;
                Ok(Form {
                    label: fm.label.clone(),
                    source: p.display().to_string(),
                    k: fm.weight,
                    level: fm.level,
                    epsilon_hint: fm.epsilon_hint_m1,
                    kind: FormKind::File(fm),
                })
            }
        }
    }

    fn data(&self, cutoff: usize) -> Result<NewformData, String> {
        match &self.kind {
            FormKind::Builtin => builtin_newform(self.k, cutoff).map_err(|e| e.to_string()),
            FormKind::File(fm) => fm.truncated(cutoff).map_err(|e| e.to_string()),
        }
    }

    fn key(&self, m: u32) -> Key<'_> {
        Key { label: &self.label, m, k: self.k, level: self.level }
    }
}

pub struct Runner<'a> {
    pub cfg: &'a ExperimentConfig,
    pub cache: Cache,
}

fn target_tag(cfg: &ExperimentConfig) -> String {
    match cfg.target {
        None => String::new(),
        Some(t) => format!(".t{t:e}"),
    }
}

fn rouche_record(pair: &str, r: &RoucheReport<Mp>) -> RoucheRecord {
    let d = r.dump();
    RoucheRecord {
        pair: pair.into(),
        samples: d.samples,
        margin: d.margin,
        slack: d.slack,
        outcome: if d.certified { "certified" } else { "indeterminate" }.into(),
    }
}

fn value_summary(v: &CriticalValueSet) -> ValueSummary {
    let mut worst = ErrBound::zero();
    let mut vanishing = Vec::new();
    for c in &v.values {
        if c.budget.covers(&c.value) {
            vanishing.push(c.s);
            continue;
        }
        let rel = c.budget.div(&ErrBound::from_mp(&c.value));
        worst = worst.max(&rel);
    }
    vanishing.sort_unstable();
    ValueSummary {
        count: v.values.len(),
        max_relative_budget: worst.to_decimal(),
        pairing_violations: v.pairing_violations(),
        vanishing,
    }
}

fn polynomial_names(m: u32, cmd: Command) -> Vec<String> {
    let odd = m % 2 == 1;
    let names: &[&str] = match (cmd, odd) {
        (Command::VerifyRh, true) => &["P", "Q"],
        (Command::VerifyRh, false) => &["p", "q"],
        (Command::VerifyLemmas, true) => &["H"],
        (Command::VerifyLemmas, false) => &["h"],
        (Command::Polys, true) => &["R", "P", "Q", "H", "M"],
        (Command::Polys, false) => &["R", "p", "q", "h"],
        _ => &[],
    };
    names.iter().map(|s| s.to_string()).collect()
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Runner { cfg, cache: Cache::new(cfg.cache_dir.clone()) }
    }

    /// Runs every instance on a pool of `jobs` threads; records keep grid order.
    pub fn run(&self, cmd: Command, jobs: usize) -> (RunReport, Timings) {
        let list = instances(self.cfg, cmd);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
        let results: Vec<(InstanceRecord, InstanceTiming)> =
            pool.install(|| list.par_iter().map(|inst| self.run_one(cmd, inst)).collect());
        let (records, times): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let report = RunReport::new(cmd.name(), self.cfg, records);
        (report, Timings { command: cmd.name().into(), instances: times })
    }

    fn run_one(&self, cmd: Command, inst: &Instance) -> (InstanceRecord, InstanceTiming) {
        let start = Instant::now();
        let mut trace = Trace { stages: Vec::new() };
        let rec = match inst {
            Instance::Form { form, m } => self.form_instance(cmd, form, *m, &mut trace),
            Instance::Auxiliary { m, k, level } => self.auxiliary_instance(*m, *k, *level, &mut trace),
        };
        let seconds = start.elapsed().as_secs_f64();
        match rec.status {
            Status::Failed => warn!("{} {}: failed: {}", cmd.name(), rec.id, rec.reason.as_deref().unwrap_or("")),
            _ => info!("{} {}: {:?} in {seconds:.2} s", cmd.name(), rec.id, rec.status),
        }
        (rec.clone(), InstanceTiming { id: rec.id, seconds, stages: trace.stages })
    }

    fn form_instance(&self, cmd: Command, fref: &FormRef, m: u32, trace: &mut Trace) -> InstanceRecord {
        let prec = self.cfg.precision;
        let fallback = match fref {
            FormRef::Builtin(k) => format!("1.{k}.a.a"),
            FormRef::File(p) => p.display().to_string(),
        };
        let form = match trace.stage("form", || (Form::open(fref), None)) {
            Ok(f) => f,
            Err(e) => {
                let source = match fref {
                    FormRef::Builtin(_) => "builtin".to_string(),
                    FormRef::File(p) => p.display().to_string(),
                };
                let params = Params { label: None, source, m, k: None, level: None, precision: prec };
                let mut rec = InstanceRecord::new(format!("{fallback}/m={m}"), params);
                rec.polynomials = polynomial_names(m, cmd);
                rec.fail(format!("ingestion: {e}"));
                return rec;
            }
        };
        let params = Params {
            label: Some(form.label.clone()),
            source: form.source.clone(),
            m,
            k: Some(form.k),
            level: Some(form.level),
            precision: prec,
        };
        let mut rec = InstanceRecord::new(format!("{}/m={m}", form.label), params);
        rec.polynomials = polynomial_names(m, cmd);
        let res = match cmd {
            Command::Coeffs => self.do_coeffs(&form, m, &mut rec, trace),
            Command::Lvalues => self.values(&form, m, trace).map(|v| {
                rec.epsilon = Some(v.epsilon);
                rec.critical_values = Some(value_summary(&v));
            }),
            Command::Polys => self.do_polys(&form, m, &mut rec, trace),
            Command::VerifyRh => self.do_verify_rh(&form, m, &mut rec, trace),
            Command::VerifyLemmas => self.do_verify_lemmas(&form, m, &mut rec, trace),
        };
        if let Err(e) = res {
            rec.fail(e);
        } else if let Some(v) = &rec.critical_values {
            if !v.pairing_violations.is_empty() {
                rec.fail(format!("functional equation violated at s = {:?}", v.pairing_violations));
            }
        }
        rec
    }

    fn plan(&self, form: &Form, m: u32) -> Result<CriticalPlan, String> {
        plan_critical(m, form.k, form.level, self.cfg.precision, self.cfg.target()).map_err(|e| e.to_string())
    }

    /// Coefficients with at least `cutoff` terms at `prec` bits, from the
    /// cache or computed and stored.
    fn coefficients(
        &self,
        form: &Form,
        m: u32,
        cutoff: usize,
        prec: u32,
        trace: &mut Trace,
    ) -> Result<SymPowerCoefficients, String> {
        let key = form.key(m);
        trace.stage("coefficients", || {
            let lookup = self.cache.load_coeffs(&key, cutoff, prec);
            let tag = lookup.label();
            match lookup {
                Lookup::Hit(c) => {
                    info!("coeffs {} m={m}: cache hit ({} terms)", form.label, c.cutoff());
                    return (Ok(c), Some("hit"));
                }
                Lookup::Corrupt(e) => warn!("coeffs {} m={m}: corrupt cache ({e}), recomputing", form.label),
                Lookup::Miss => info!("coeffs {} m={m}: cache miss, computing {cutoff} terms", form.label),
            }
            let res = form.data(cutoff).and_then(|fm| {
                let c = sym_coeffs(&fm, m, cutoff, prec).map_err(|e| e.to_string())?;
                self.cache.store_coeffs(&c).map_err(|e| format!("cache write: {e}"))?;
                SymPowerCoefficients::from_json(&c.to_json()).map_err(|e| e.to_string())
            });
            (res, Some(tag))
        })
    }

    fn do_coeffs(&self, form: &Form, m: u32, rec: &mut InstanceRecord, trace: &mut Trace) -> Result<(), String> {
        let plan = self.plan(form, m)?;
        let c = self.coefficients(form, m, plan.cutoff, plan.coeff_precision, trace)?;
        rec.coefficients = Some(CoefficientSummary { cutoff: c.cutoff(), precision: c.precision });
        Ok(())
    }

    /// Critical values from the cache, or computed from (cached) coefficients.
    fn values(&self, form: &Form, m: u32, trace: &mut Trace) -> Result<CriticalValueSet, String> {
        let prec = self.cfg.precision;
        let tag = target_tag(self.cfg);
        let key = form.key(m);
        let lookup = trace.stage("values-cache", || {
            let l = self.cache.load_values(&key, prec, &tag);
            let t = l.label();
            (l, Some(t))
        });
        match lookup {
            Lookup::Hit(v) => {
                info!("lvalues {} m={m}: cache hit", form.label);
                return Ok(v);
            }
            Lookup::Corrupt(e) => warn!("lvalues {} m={m}: corrupt cache ({e}), recomputing", form.label),
            Lookup::Miss => {}
        }
        let plan = self.plan(form, m)?;
        let coeffs = self.coefficients(form, m, plan.cutoff, plan.coeff_precision, trace)?;
        let hint = if m == 1 { form.epsilon_hint } else { None };
        let v = trace.stage("critical-values", || {
            (critical_values_from(&coeffs, form.level, hint, &plan, global_cache()).map_err(|e| e.to_string()), None)
        })?;
        let bad = v.pairing_violations();
        if !bad.is_empty() {
            return Err(format!("functional equation violated at s = {bad:?}"));
        }
        self.cache.store_values(&v, &tag).map_err(|e| format!("cache write: {e}"))?;
        // continue from the serialized form so cold and warm runs agree bit for bit
        CriticalValueSet::from_json(&v.to_json()).map_err(|e| e.to_string())
    }

    fn bundle(
        &self,
        form: &Form,
        m: u32,
        rec: &mut InstanceRecord,
        trace: &mut Trace,
    ) -> Result<PeriodPolynomialBundle, String> {
        let v = self.values(form, m, trace)?;
        rec.epsilon = Some(v.epsilon);
        rec.critical_values = Some(value_summary(&v));
        let b = trace.stage("polynomials", || (PeriodPolynomialBundle::build(&v).map_err(|e| e.to_string()), None))?;
        let d = decomposition_residuals(&b.p, &b.q, b.params.epsilon);
        let j = d.worst;
        rec.decomposition = Some(DecompositionSummary {
            worst_index: j,
            max_residual: d.residuals[j].to_decimal(),
            allowed_at_worst: d.allowed[j].to_decimal(),
            violations: d.violations(),
        });
        if !d.violations().is_empty() {
            return Err(format!("decomposition residual exceeds its bound at coefficients {:?}", d.violations()));
        }
        Ok(b)
    }

    fn do_polys(&self, form: &Form, m: u32, rec: &mut InstanceRecord, trace: &mut Trace) -> Result<(), String> {
        let b = self.bundle(form, m, rec, trace)?;
        let dir = self.cfg.out_dir.join("polys");
        for d in b.dumps() {
            let name = format!("{}.m{m}.{}.json", file_stem(&form.label), d.poly);
            atomic_write(&dir.join(&name), (d.to_json() + "\n").as_bytes()).map_err(|e| format!("write {name}: {e}"))?;
            rec.files.push(format!("polys/{name}"));
        }
        Ok(())
    }

    fn do_verify_rh(&self, form: &Form, m: u32, rec: &mut InstanceRecord, trace: &mut Trace) -> Result<(), String> {
        rec.regime = Some(Regime::for_params(m, form.k));
        let b = self.bundle(form, m, rec, trace)?;
        let params = b.params.to_json();
        let (pn, qn, _) = b.names();
        let cap = self.cfg.sign_samples;
        let pc = trace.stage("circle", || {
            (certify_real_on_circle_capped(&b.p, b.params.epsilon, cap).map_err(|e| format!("{pn}: {e}")), None)
        })?;
        rec.certificates.push(pc.named(pn, params.clone()).dump());
        let qc = trace.stage("disk", || (disk_certificate(&b.q.to_complex()).map_err(|e| format!("{qn}: {e}")), None))?;
        rec.certificates.push(qc.named(qn, params).dump());
        Ok(())
    }

    fn lemma_checks(&self, form: &Form, m: u32, rec: &mut InstanceRecord, trace: &mut Trace) -> Result<(), String> {
        let k = form.k as u64;
        let w = m as u64 * (k - 1);
        let s0 = ((m as u64 + 1) * (k - 1)).div_ceil(2);
        let samples: Vec<u64> = (s0..=w).take(self.cfg.lemma_points).collect();
        if samples.is_empty() {
            return Ok(());
        }
        let plan = self.plan(form, m)?;
        let mut cutoff = plan.cutoff;
        let mut attempts = 0;
        let rep = loop {
            let c = self.coefficients(form, m, cutoff, plan.coeff_precision, trace)?;
            match trace.stage("lemma", || (check_lemma_bounds(&c, &samples), None)) {
                Ok(r) => break r,
                Err(LError::InsufficientCoefficients { need, .. }) if attempts < 2 => {
                    cutoff = need;
                    attempts += 1;
                }
                Err(e) => return Err(format!("lemma check: {e}")),
            }
        };
        let finite = |x: f64| x.is_finite().then_some(x);
        for c in &rep.checks {
            let (outcome, reason) = match &c.outcome {
                LemmaOutcome::Pass => ("pass", None),
                LemmaOutcome::Fail => ("fail", None),
                LemmaOutcome::Skipped(r) => ("skipped", Some(r.clone())),
            };
            rec.lemmas.push(LemmaRecord {
                s: c.s,
                outcome: outcome.into(),
                reason,
                deviation: finite(c.deviation),
                error: finite(c.error),
                bound: c.bound,
                growth_ratio: finite(c.growth_ratio),
            });
        }
        if rep.failures() > 0 {
            return Err(format!("{} lemma bound violations", rep.failures()));
        }
        Ok(())
    }

    fn do_verify_lemmas(&self, form: &Form, m: u32, rec: &mut InstanceRecord, trace: &mut Trace) -> Result<(), String> {
        let lemma = self.lemma_checks(form, m, rec, trace);
        let b = self.bundle(form, m, rec, trace)?;
        let params = b.params.to_json();
        let (_, qn, hn) = b.names();
        let n = self.cfg.rouche_samples;
        let hc = trace.stage("disk", || (disk_certificate(&b.h.to_complex()).map_err(|e| format!("{hn}: {e}")), None))?;
        rec.certificates.push(hc.named(hn, params).dump());
        let h = b.h.to_complex();
        if let Some(mt) = &b.m_trunc {
            let r = trace.stage("rouche", || (rouche_margin(&h, &mt.to_complex(), n), None));
            rec.rouche.push(rouche_record(&format!("{hn}-M vs M"), &r));
        }
        let r = trace.stage("rouche", || (rouche_margin(&b.q.to_complex(), &h, n), None));
        rec.rouche.push(rouche_record(&format!("{hn}-{qn} vs {hn}"), &r));
        lemma
    }

    fn auxiliary_instance(&self, m: u32, k: u32, level: u64, trace: &mut Trace) -> InstanceRecord {
        let prec = self.cfg.precision;
        let params = Params { label: None, source: "auxiliary".into(), m, k: Some(k), level: Some(level), precision: prec };
        let mut rec = InstanceRecord::new(format!("auxiliary/m={m},k={k},N={level}"), params);
        rec.polynomials = polynomial_names(m, Command::VerifyLemmas);
        let pj = serde_json::json!({ "m": m, "k": k, "level": level, "precision": prec });
        let built: Result<(&str, RealPolynomial<Mp>, Option<RealPolynomial<Mp>>), String> = trace.stage("polynomials", || {
            let r = if m % 2 == 1 {
                build_h_m(m, k, level, prec).map(|(h, mt)| ("H", h, Some(mt)))
            } else {
                build_h(m, k, prec).map(|h| ("h", h, None))
            };
            (r.map_err(|e| e.to_string()), None)
        });
        let (hn, h, mt) = match built {
            Ok(x) => x,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        match trace.stage("disk", || (disk_certificate(&h.to_complex()), None)) {
            Ok(c) => rec.certificates.push(c.named(hn, pj).dump()),
            Err(e) => {
                rec.fail(format!("{hn}: {e}"));
                return rec;
            }
        }
        if let Some(mt) = mt {
            let r = trace.stage("rouche", || (rouche_margin(&h.to_complex(), &mt.to_complex(), self.cfg.rouche_samples), None));
            rec.rouche.push(rouche_record("H-M vs M", &r));
        }
        rec
    }
}
