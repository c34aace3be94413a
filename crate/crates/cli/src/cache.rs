//! On-disk caches for coefficients and critical values. Files appear only
//! through a rename of a finished temporary file; anything that fails
//! schema validation is reported as corrupt and recomputed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use symrh::lvalues::CriticalValueSet;
use symrh::symcoef::SymPowerCoefficients;

/// Result of a cache lookup.
#[derive(Debug)]
pub enum Lookup<T> {
    Hit(T),
    Miss,
    Corrupt(String),
}

impl<T> Lookup<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Lookup::Hit(_) => "hit",
            Lookup::Miss => "miss",
            Lookup::Corrupt(_) => "corrupt",
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Keeps `[A-Za-z0-9._-]` and maps everything else to `_`.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Cache {
    pub root: PathBuf,
}

/// What a cached object must match to be reused.
#[derive(Clone, Debug)]
pub struct Key<'a> {
    pub label: &'a str,
    pub m: u32,
    pub k: u32,
    pub level: u64,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn coeffs_path(&self, key: &Key, prec: u32) -> PathBuf {
        self.root.join("coeffs").join(format!("{}.m{}.p{prec}.json", file_stem(key.label), key.m))
    }

    /// `tag` separates value sets computed for different targets.
    pub fn values_path(&self, key: &Key, prec: u32, tag: &str) -> PathBuf {
        self.root.join("lvalues").join(format!("{}.m{}.p{prec}{tag}.json", file_stem(key.label), key.m))
    }

    /// Coefficients with at least `cutoff` terms at `prec` bits.
    pub fn load_coeffs(&self, key: &Key, cutoff: usize, prec: u32) -> Lookup<SymPowerCoefficients> {
        let path = self.coeffs_path(key, prec);
        let text = match read(&path) {
            Ok(Some(t)) => t,
            Ok(None) => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(e),
        };
        let c = match SymPowerCoefficients::from_json(&text) {
            Ok(c) => c,
            Err(e) => return Lookup::Corrupt(e.to_string()),
        };
        if c.label != key.label || c.m != key.m || c.k != key.k || c.level != key.level || c.precision != prec {
            return Lookup::Corrupt(format!("{} belongs to another instance", path.display()));
        }
        if c.cutoff() < cutoff {
            return Lookup::Miss;
        }
        Lookup::Hit(c)
    }

    pub fn store_coeffs(&self, c: &SymPowerCoefficients) -> io::Result<PathBuf> {
        let key = Key { label: &c.label, m: c.m, k: c.k, level: c.level };
        let path = self.coeffs_path(&key, c.precision);
        atomic_write(&path, c.to_json().as_bytes())?;
        Ok(path)
    }

    pub fn load_values(&self, key: &Key, prec: u32, tag: &str) -> Lookup<CriticalValueSet> {
        let path = self.values_path(key, prec, tag);
        let text = match read(&path) {
            Ok(Some(t)) => t,
            Ok(None) => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(e),
        };
        let v = match CriticalValueSet::from_json(&text) {
            Ok(v) => v,
            Err(e) => return Lookup::Corrupt(e.to_string()),
        };
        if v.label != key.label || v.m != key.m || v.k != key.k || v.level != key.level || v.precision != prec {
            return Lookup::Corrupt(format!("{} belongs to another instance", path.display()));
        }
        Lookup::Hit(v)
    }

    pub fn store_values(&self, v: &CriticalValueSet, tag: &str) -> io::Result<PathBuf> {
        let key = Key { label: &v.label, m: v.m, k: v.k, level: v.level };
        let path = self.values_path(&key, v.precision, tag);
        atomic_write(&path, v.to_json().as_bytes())?;
        Ok(path)
    }
}

fn read(path: &Path) -> Result<Option<String>, String> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}
