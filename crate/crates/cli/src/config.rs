//! Experiment configuration: which forms, which powers, and how hard to try.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use symrh::circlezero::CIRCLE_GRID_CAP;
use symrh::formsrc::BUILTIN_WEIGHTS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config is not valid JSON for this schema: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where the newforms come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSources {
    /// Level-1 weights with a one-dimensional cusp space.
    #[serde(default)]
    pub builtin: Vec<u32>,
    /// Coefficient files, resolved against the config's directory.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

/// Form-free `(m, k, N)` grid for the comparison polynomials only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliaryGrid {
    pub m: Vec<u32>,
    pub k: Vec<u32>,
    pub levels: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn default_precision() -> u32 {
    128
}

fn default_rouche_samples() -> usize {
    1024
}

fn default_sign_samples() -> usize {
    CIRCLE_GRID_CAP
}

fn default_lemma_points() -> usize {
    1
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

fn default_cache() -> PathBuf {
    PathBuf::from("cache")
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub forms: FormSources,
    pub m: Vec<u32>,
    #[serde(default = "default_precision")]
    pub precision: u32,
    /// Relative error target per critical value; `2^(-3 prec / 4)` when absent.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default = "default_rouche_samples")]
    pub rouche_samples: usize,
    /// Largest sign-change grid tried on the circle.
    #[serde(default = "default_sign_samples")]
    pub sign_samples: usize,
    /// Points `s0, s0 + 1, ...` checked against the lemma bound, `s0 = ceil((m+1)(k-1)/2)`.
    #[serde(default = "default_lemma_points")]
    pub lemma_points: usize,
    #[serde(default)]
    pub auxiliary: Option<AuxiliaryGrid>,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub precision: Option<u32>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads, resolves relative paths against the file's directory, applies
    /// overrides and validates.
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        cfg.forms.files = cfg.forms.files.iter().map(|p| resolve(p)).collect();
        cfg.cache_dir = resolve(&cfg.cache_dir);
        cfg.out_dir = resolve(&cfg.out_dir);
        if let Some(p) = ov.precision {
            cfg.precision = p;
        }
        if let Some(o) = &ov.out {
            cfg.out_dir = o.clone();
        }
        if let Some(c) = &ov.cache {
            cfg.cache_dir = c.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: String| Err(ConfigError::Invalid(s));
        if self.precision < 64 {
            return bad(format!("precision {} below 64 bits", self.precision));
        }
        if self.m.contains(&0) {
            return bad("every m must be at least 1".into());
        }
        if let Some(t) = self.target {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("target {t} outside (0, 1)"));
            }
        }
        if self.rouche_samples < 64 {
            return bad(format!("rouche_samples {} below 64", self.rouche_samples));
        }
        if self.sign_samples < 64 {
            return bad(format!("sign_samples {} below 64", self.sign_samples));
        }
        if self.formats.is_empty() {
            return bad("no report format".into());
        }
        for &k in &self.forms.builtin {
            if !BUILTIN_WEIGHTS.iter().any(|w| w.0 == k) {
                return bad(format!("no built-in newform of weight {k}"));
            }
        }
        if self.forms.builtin.iter().collect::<BTreeSet<_>>().len() != self.forms.builtin.len()
            || self.forms.files.iter().collect::<BTreeSet<_>>().len() != self.forms.files.len()
            || self.m.iter().collect::<BTreeSet<_>>().len() != self.m.len()
        {
            return bad("duplicate grid entries".into());
        }
        let forms = self.forms.builtin.len() + self.forms.files.len();
        let aux = self.auxiliary.as_ref().map_or(0, |a| a.m.len() * a.k.len() * a.levels.len());
        if forms * self.m.len() + aux == 0 {
            return bad("empty grid".into());
        }
        if let Some(a) = &self.auxiliary {
            if a.m.contains(&0) {
                return bad("auxiliary m must be at least 1".into());
            }
            if a.k.iter().any(|&k| k < 2 || k % 2 == 1) {
                return bad("auxiliary weights must be even and at least 2".into());
            }
            if a.levels.iter().any(|&n| n == 0 || !symrh::formsrc::level_is_squarefree(n)) {
                return bad("auxiliary levels must be squarefree".into());
            }
        }
        Ok(())
    }

    pub fn target(&self) -> f64 {
        self.target.unwrap_or_else(|| symrh::lvalues::default_target(self.precision))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
