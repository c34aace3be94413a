//! Writing run reports and the derived JSON/CSV/scatter files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use symrh::{Mp, Real};

use crate::cache::atomic_write;
use crate::config::{ExperimentConfig, Format};
use crate::report::{RunReport, Timings};

/// Commands whose reports carry certificates, in the order `report` reads them.
pub const CERTIFYING: [&str; 2] = ["verify-rh", "verify-lemmas"];

pub fn report_path(out: &Path, command: &str) -> PathBuf {
    out.join(format!("{command}.json"))
}

pub fn timings_path(out: &Path, command: &str) -> PathBuf {
    out.join(format!("{command}.timings.json"))
}

pub fn write_run(out: &Path, report: &RunReport, timings: &Timings) -> std::io::Result<()> {
    atomic_write(&report_path(out, &report.command), report.to_json().as_bytes())?;
    let t = serde_json::to_string_pretty(timings).expect("timings serialize") + "\n";
    atomic_write(&timings_path(out, &report.command), t.as_bytes())
}

/// Every certifying report found in the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub reports: Vec<RunReport>,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let list = v.get("reports").and_then(|r| r.as_array()).ok_or("missing reports array")?;
        let reports = list
            .iter()
            .map(|r| RunReport::from_json(&r.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReportBundle { reports })
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "command",
    "instance",
    "label",
    "m",
    "k",
    "level",
    "status",
    "poly",
    "degree",
    "circle_verdict",
    "disk_verdict",
    "sign_changes",
    "max_circle_deviation",
    "deviation_budget",
];

pub const SCATTER_HEADER: [&str; 9] = ["command", "instance", "poly", "index", "re", "im", "modulus", "m", "k"];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn verdict<T: Serialize>(v: &Option<T>) -> String {
    match v {
        None => String::new(),
        Some(x) => serde_json::to_value(x).ok().and_then(|j| j.as_str().map(String::from)).unwrap_or_default(),
    }
}

/// One row per instance and reported polynomial, empty where the
/// polynomial was never reached.
pub fn certificate_rows(bundle: &ReportBundle) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in &bundle.reports {
        for i in &r.instances {
            let status = serde_json::to_value(i.status).unwrap().as_str().unwrap().to_string();
            for name in &i.polynomials {
                let c = i.certificate(name);
                rows.push(vec![
                    r.command.clone(),
                    i.id.clone(),
                    i.params.label.clone().unwrap_or_default(),
                    i.params.m.to_string(),
                    opt(i.params.k),
                    opt(i.params.level),
                    status.clone(),
                    name.clone(),
                    opt(c.map(|c| c.degree)),
                    c.map(|c| verdict(&c.verdicts.circle)).unwrap_or_default(),
                    c.map(|c| verdict(&c.verdicts.disk)).unwrap_or_default(),
                    opt(c.and_then(|c| c.sign_changes)),
                    c.map(|c| c.max_circle_deviation.clone()).unwrap_or_default(),
                    opt(c.and_then(|c| c.deviation_budget.clone())),
                ]);
            }
        }
    }
    rows
}

/// Roots with their modulus at the working precision of each report.
pub fn scatter_rows(bundle: &ReportBundle) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in &bundle.reports {
        for i in &r.instances {
            let prec = i.params.precision;
            for c in &i.certificates {
                for (j, [re, im]) in c.roots.iter().enumerate() {
                    let modulus = match (Mp::parse(prec, re), Mp::parse(prec, im)) {
                        (Some(a), Some(b)) => (a.clone() * a + b.clone() * b).sqrt().to_decimal(),
                        _ => String::new(),
                    };
                    rows.push(vec![
                        r.command.clone(),
                        i.id.clone(),
                        c.poly.clone(),
                        j.to_string(),
                        re.clone(),
                        im.clone(),
                        modulus,
                        i.params.m.to_string(),
                        opt(i.params.k),
                    ]);
                }
            }
        }
    }
    rows
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    atomic_write(path, &bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads the certifying reports present in the output directory and
/// writes `report.json`, `certificates.csv` and `roots.csv` as configured.
pub fn emit_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, String> {
    let out = &cfg.out_dir;
    let mut reports = Vec::new();
    for cmd in CERTIFYING {
        let p = report_path(out, cmd);
        if p.exists() {
            reports.push(RunReport::load(&p)?);
        }
    }
    if reports.is_empty() {
        return Err(format!("no verify-rh or verify-lemmas report in {}", out.display()));
    }
    let bundle = ReportBundle { reports };
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        let p = out.join("report.json");
        atomic_write(&p, bundle.to_json().as_bytes()).map_err(|e| format!("{}: {e}", p.display()))?;
        written.push(p);
    }
    if cfg.wants(Format::Csv) {
        let p = out.join("certificates.csv");
        write_csv(&p, &CSV_HEADER, &certificate_rows(&bundle))?;
        written.push(p);
        let p = out.join("roots.csv");
        write_csv(&p, &SCATTER_HEADER, &scatter_rows(&bundle))?;
        written.push(p);
    }
    Ok(written)
}
