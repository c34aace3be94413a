//! Run reports. Everything here is a pure function of the config and the
//! caches; wall-clock data lives in [`Timings`], written to its own file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use symrh::circlezero::{proved_weight_threshold, CertificateDump};

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionStamp {
    pub tool: String,
    pub version: String,
    pub core: String,
    pub arch: String,
    pub os: String,
}

impl VersionStamp {
    pub fn current() -> Self {
        VersionStamp {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core: symrh::VERSION.into(),
            arch: std::env::consts::ARCH.into(),
            os: std::env::consts::OS.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Form label; absent for form-free instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// `builtin`, a file path, or `auxiliary`.
    pub source: String,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u64>,
    pub precision: u32,
}

/// Whether the weight exceeds the explicit threshold. Informational only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub threshold: f64,
    pub within: bool,
    pub note: String,
}

impl Regime {
    pub fn for_params(m: u32, k: u32) -> Self {
        let threshold = proved_weight_threshold(m);
        if m == 1 {
            return Regime { threshold, within: true, note: "m = 1: zeros on the circle for every k and N".into() };
        }
        let within = k as f64 > threshold;
        let note = if within {
            "within proved regime (k above threshold; the theorem also needs N large enough)".to_string()
        } else {
            format!("outside proved regime (k <= {threshold:.4}); verdicts are computational only")
        };
        Regime { threshold, within, note }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub cutoff: usize,
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub count: usize,
    /// Largest `budget / |L*(s)|` over nonzero values.
    pub max_relative_budget: String,
    pub pairing_violations: Vec<u64>,
    /// Points whose value is zero within its budget.
    pub vanishing: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub worst_index: usize,
    pub max_residual: String,
    pub allowed_at_worst: String,
    pub violations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub s: u64,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_ratio: Option<f64>,
}

/// `|B| - |A - B|` on the circle; `certified` or `indeterminate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoucheRecord {
    pub pair: String,
    pub samples: usize,
    pub margin: String,
    pub slack: String,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub params: Params,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_values: Option<ValueSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
    /// Names of the polynomials this command reports on, in CSV order.
    #[serde(default)]
    pub polynomials: Vec<String>,
    #[serde(default)]
    pub certificates: Vec<CertificateDump>,
    #[serde(default)]
    pub lemmas: Vec<LemmaRecord>,
    #[serde(default)]
    pub rouche: Vec<RoucheRecord>,
    /// Files written under the output directory.
    #[serde(default)]
    pub files: Vec<String>,
}

impl InstanceRecord {
    pub fn new(id: String, params: Params) -> Self {
        InstanceRecord {
            id,
            params,
            status: Status::Ok,
            reason: None,
            regime: None,
            epsilon: None,
            coefficients: None,
            critical_values: None,
            decomposition: None,
            polynomials: Vec::new(),
            certificates: Vec::new(),
            lemmas: Vec::new(),
            rouche: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.status = Status::Failed;
        self.reason = Some(reason.into());
    }

    pub fn certificate(&self, poly: &str) -> Option<&CertificateDump> {
        self.certificates.iter().find(|c| c.poly == poly)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ok: usize,
    pub skipped: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: VersionStamp,
    pub config: ExperimentConfig,
    pub instances: Vec<InstanceRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig, instances: Vec<InstanceRecord>) -> Self {
        let mut summary = Summary::default();
        for i in &instances {
            match i.status {
                Status::Ok => summary.ok += 1,
                Status::Skipped => summary.skipped += 1,
                Status::Failed => summary.failed += 1,
            }
        }
        RunReport { command: command.into(), version: VersionStamp::current(), config: config.clone(), instances, summary }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Parses and checks that the summary matches the records and that
    /// every failed or skipped record says why.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let again = RunReport::new(&r.command, &r.config, r.instances.clone());
        if again.summary != r.summary {
            return Err("summary does not match the instance records".into());
        }
        if let Some(i) = r.instances.iter().find(|i| i.status != Status::Ok && i.reason.is_none()) {
            return Err(format!("instance {} has status {:?} without a reason", i.id, i.status));
        }
        let mut ids: Vec<&str> = r.instances.iter().map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate instance id".into());
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn any_failed(&self) -> bool {
        self.summary.failed > 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceTiming {
    pub id: String,
    pub seconds: f64,
    pub stages: Vec<StageTiming>,
}

/// Wall-clock data for one run, kept apart from the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub command: String,
    pub instances: Vec<InstanceTiming>,
}
