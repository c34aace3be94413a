//! Root location for the constructed polynomials: simultaneous root
//! finding with inclusion radii, sign-change certificates for zeros on the
//! unit circle, Schur–Cohn certificates for zeros inside the unit disk, and
//! sampled Rouché margins.
//!
//! Everything here is generic over [`Real`]; the pipeline runs it on
//! [`Mp`](crate::scalar::Mp), the unit tests also on `f64`.

mod circle;
mod disk;
mod rouche;
mod roots;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::Complex;
use crate::scalar::{ErrBound, Real};

pub use circle::{
    certify_on_circle, certify_on_circle_capped, certify_real_on_circle, certify_real_on_circle_capped, CIRCLE_GRID_CAP,
};
pub use disk::{certify_in_disk, disk_certificate, schur_cohn};
pub use rouche::{lalin_smyth_construct, rouche_margin, RoucheReport, CLOSED_DISK_SLACK};
pub use roots::{find_roots, RootSet, MAX_ITERATIONS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiskVerdict {
    AllInside,
    NotAllInside,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircleVerdict {
    Certified,
    NumericOnly,
    Failed,
}

#[derive(Debug, Error)]
pub enum CircleError<T: std::fmt::Debug> {
    #[error("leading coefficient is not certainly nonzero")]
    UncertainDegree,
    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize, partial: Box<RootSet<T>> },
    #[error("coefficient {index} breaks the self-inversive symmetry")]
    NotSelfInversive { index: usize },
    #[error("|lambda| differs from 1")]
    NotUnimodular,
    #[error("target degree {d} is below deg h = {n}")]
    DegreeTooSmall { d: usize, n: usize },
    #[error("h is not certified to have its roots in the closed unit disk ({verdict:?})")]
    RootOutsideDisk { verdict: DiskVerdict },
}

/// Root location summary for one polynomial.
#[derive(Clone, Debug)]
pub struct ZeroCertificate<T> {
    pub name: String,
    pub params: serde_json::Value,
    pub degree: usize,
    pub roots: Vec<Complex<T>>,
    pub residuals: Vec<T>,
    pub radii: Vec<Option<ErrBound>>,
    /// `max | |z| - 1 |` over the computed roots.
    pub max_circle_deviation: T,
    /// Largest root radius, when every radius is known.
    pub deviation_budget: Option<ErrBound>,
    pub sign_changes: Option<usize>,
    pub circle: Option<CircleVerdict>,
    pub disk: Option<DiskVerdict>,
    pub rouche: Option<RoucheReport<T>>,
}

impl<T: Real> ZeroCertificate<T> {
    pub(crate) fn from_roots(set: &RootSet<T>) -> Self {
        let budget = set.radii.iter().try_fold(ErrBound::zero(), |a, r| r.as_ref().map(|r| a.max(r)));
        ZeroCertificate {
            name: String::new(),
            params: serde_json::Value::Null,
            degree: set.roots.len(),
            roots: set.roots.clone(),
            residuals: set.residuals.clone(),
            radii: set.radii.clone(),
            max_circle_deviation: set.circle_deviation(),
            deviation_budget: budget,
            sign_changes: None,
            circle: None,
            disk: None,
            rouche: None,
        }
    }

    pub fn named(mut self, name: &str, params: serde_json::Value) -> Self {
        self.name = name.to_string();
        self.params = params;
        self
    }

    pub fn dump(&self) -> CertificateDump {
        let dec = |x: &T| x.to_mp().to_decimal();
        CertificateDump {
            poly: self.name.clone(),
            params: self.params.clone(),
            degree: self.degree,
            roots: self.roots.iter().map(|z| [dec(&z.re), dec(&z.im)]).collect(),
            residuals: self.residuals.iter().map(dec).collect(),
            radii: self.radii.iter().map(|r| r.as_ref().map(|r| r.to_decimal())).collect(),
            max_circle_deviation: dec(&self.max_circle_deviation),
            deviation_budget: self.deviation_budget.as_ref().map(|b| b.to_decimal()),
            sign_changes: self.sign_changes,
            verdicts: Verdicts { circle: self.circle, disk: self.disk },
            rouche_margin: self.rouche.as_ref().map(|r| r.dump()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub circle: Option<CircleVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub disk: Option<DiskVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoucheDump {
    pub samples: usize,
    pub margin: String,
    pub slack: String,
    pub certified: bool,
}

/// Serialized certificate; decimals carry the digit count of the working
/// precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDump {
    pub poly: String,
    pub params: serde_json::Value,
    pub degree: usize,
    pub roots: Vec<[String; 2]>,
    pub residuals: Vec<String>,
    pub radii: Vec<Option<String>>,
    pub max_circle_deviation: String,
    pub deviation_budget: Option<String>,
    pub sign_changes: Option<usize>,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rouche_margin: Option<RoucheDump>,
}

impl CertificateDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let d: CertificateDump = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if d.roots.len() != d.degree || d.residuals.len() != d.degree || d.radii.len() != d.degree {
            return Err(format!("expected {} roots, residuals and radii", d.degree));
        }
        if d.verdicts.circle == Some(CircleVerdict::Certified) && d.sign_changes != Some(d.degree) {
            return Err("certified circle verdict without a full sign-change count".into());
        }
        Ok(d)
    }
}

/// The explicit weight bound `2 (log2(13 e^(2 pi) / 9) + m) + 1`. Above it the
/// zeros of `P` are known to lie on the unit circle once the level is large
/// enough; this is an annotation only, verdicts come from certificates.
pub fn proved_weight_threshold(m: u32) -> f64 {
    let c = (13.0 * (2.0 * std::f64::consts::PI).exp() / 9.0).log2();
    2.0 * (c + m as f64) + 1.0
}

pub fn in_proved_regime(m: u32, k: u32) -> bool {
    k as f64 > proved_weight_threshold(m)
}
