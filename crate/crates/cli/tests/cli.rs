use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use symrh_cli::cache::{Cache, Key, Lookup};
use symrh_cli::output::{certificate_rows, scatter_rows, ReportBundle};
use symrh_cli::report::{RunReport, Status, Timings};
use symrh_cli::{ExperimentConfig, Overrides};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn write_config(dir: &Path, body: Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    p
}

fn symrh(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symrh"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn timings(dir: &Path, cmd: &str) -> Timings {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(format!("{cmd}.timings.json"))).unwrap()).unwrap()
}

fn cache_states(t: &Timings) -> Vec<String> {
    t.instances.iter().flat_map(|i| i.stages.iter().filter_map(|s| s.cache.clone())).collect()
}

#[test]
fn invalid_configs_exit_3() {
    let dir = TempDir::new().unwrap();
    let cases = [
        serde_json::json!({"forms": {"builtin": [12]}, "m": [1], "precision": 32}),
        serde_json::json!({"forms": {"builtin": [12]}, "m": [0]}),
        serde_json::json!({"forms": {"builtin": []}, "m": [1]}),
        serde_json::json!({"forms": {"builtin": [14]}, "m": [1]}),
        serde_json::json!({"forms": {"builtin": [12]}, "m": [1], "colour": "blue"}),
        serde_json::json!({"forms": {"builtin": [12]}, "m": [1], "target": 2.0}),
        serde_json::json!({"forms": {"builtin": [12]}, "m": [1], "rouche_samples": 8}),
    ];
    for body in cases {
        let cfg = write_config(dir.path(), body.clone());
        let o = symrh("coeffs", &cfg, &[]);
        assert_eq!(code(&o), 3, "{body}");
    }
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [12]}, "m": [1]}));
    assert_eq!(code(&symrh("coeffs", &cfg, &["--precision", "48"])), 3);
    assert_eq!(code(&symrh("coeffs", &dir.path().join("missing.json"), &[])), 3);
    assert_eq!(code(&symrh("coeffs", &cfg, &["--jobs", "0"])), 3);
}

#[test]
fn config_overrides_and_relative_paths() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"files": ["forms/a.json"]}, "m": [1], "cache_dir": "c"}),
    );
    let ov = Overrides { precision: Some(96), out: Some(PathBuf::from("/tmp/elsewhere")), cache: None };
    let c = ExperimentConfig::load(&cfg, &ov).unwrap();
    assert_eq!(c.precision, 96);
    assert_eq!(c.out_dir, PathBuf::from("/tmp/elsewhere"));
    assert_eq!(c.cache_dir, dir.path().join("c"));
    assert_eq!(c.forms.files, vec![dir.path().join("forms/a.json")]);
    assert_eq!(c.rouche_samples, 1024);
}

#[test]
fn coeffs_writes_two_caches_idempotently() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [12]}, "m": [1, 2]}));
    let o = symrh("coeffs", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut files: Vec<PathBuf> =
        fs::read_dir(dir.path().join("cache/coeffs")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 2);
    let before: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(cache_states(&timings(dir.path(), "coeffs")), vec!["miss", "miss"]);
    let report = fs::read(dir.path().join("out/coeffs.json")).unwrap();

    let o = symrh("coeffs", &cfg, &[]);
    assert_eq!(code(&o), 0);
    let after: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(before, after);
    assert_eq!(cache_states(&timings(dir.path(), "coeffs")), vec!["hit", "hit"]);
    assert_eq!(fs::read(dir.path().join("out/coeffs.json")).unwrap(), report);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cache hit"));
    // no temporary files left behind
    assert_eq!(fs::read_dir(dir.path().join("cache/coeffs")).unwrap().count(), 2);
}

#[test]
fn missing_file_fails_only_its_instance() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"builtin": [12], "files": ["nope.json"]}, "m": [1]}),
    );
    let o = symrh("lvalues", &cfg, &[]);
    assert_eq!(code(&o), 2);
    let r = RunReport::load(&dir.path().join("out/lvalues.json")).unwrap();
    assert_eq!(r.instances.len(), 2);
    assert_eq!(r.instances[0].status, Status::Ok);
    assert_eq!(r.instances[0].epsilon, Some(1));
    assert_eq!(r.instances[0].critical_values.as_ref().unwrap().count, 11);
    assert_eq!(r.instances[1].status, Status::Failed);
    assert!(r.instances[1].reason.as_ref().unwrap().contains("nope.json"));
    assert_eq!((r.summary.ok, r.summary.failed), (1, 1));
}

#[test]
fn truncated_cache_is_recomputed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [12]}, "m": [1]}));
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 0);
    let report = fs::read(dir.path().join("out/verify-rh.json")).unwrap();
    let values = dir.path().join("cache/lvalues/1.12.a.a.m1.p128.json");
    let full = fs::read(&values).unwrap();
    fs::write(&values, &full[..full.len() / 2]).unwrap();

    let o = symrh("verify-rh", &cfg, &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt cache"));
    assert!(cache_states(&timings(dir.path(), "verify-rh")).contains(&"corrupt".to_string()));
    assert_eq!(fs::read(&values).unwrap(), full);
    assert_eq!(fs::read(dir.path().join("out/verify-rh.json")).unwrap(), report);

    // library view of the same contract
    let cache = Cache::new(dir.path().join("cache"));
    let key = Key { label: "1.12.a.a", m: 1, k: 12, level: 1 };
    assert!(matches!(cache.load_values(&key, 128, ""), Lookup::Hit(_)));
    fs::write(&values, b"{\"label\": \"1.12.a.a\"").unwrap();
    assert!(matches!(cache.load_values(&key, 128, ""), Lookup::Corrupt(_)));
    let other = Key { label: "1.12.a.a", m: 1, k: 16, level: 1 };
    fs::write(&values, &full).unwrap();
    assert!(matches!(cache.load_values(&other, 128, ""), Lookup::Corrupt(_)));
    assert!(matches!(cache.load_values(&key, 192, ""), Lookup::Miss));
}

#[test]
fn verify_rh_is_deterministic_and_reports_delta() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [12]}, "m": [1, 2]}));
    assert_eq!(code(&symrh("verify-rh", &cfg, &["--jobs", "2"])), 0);
    let first = fs::read(dir.path().join("out/verify-rh.json")).unwrap();
    assert_eq!(code(&symrh("verify-rh", &cfg, &["--jobs", "1"])), 0);
    assert_eq!(fs::read(dir.path().join("out/verify-rh.json")).unwrap(), first);
    fs::remove_dir_all(dir.path().join("cache")).unwrap();
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 0);
    assert_eq!(fs::read(dir.path().join("out/verify-rh.json")).unwrap(), first);

    let r = RunReport::load(&dir.path().join("out/verify-rh.json")).unwrap();
    let text = String::from_utf8(first).unwrap();
    assert!(!text.contains("seconds"));
    let p1 = r.instances[0].certificate("P").unwrap();
    assert_eq!(p1.degree, 10);
    assert_eq!(p1.sign_changes, Some(10));
    assert_eq!(serde_json::to_value(p1.verdicts.circle).unwrap(), "certified");
    assert!(p1.max_circle_deviation.parse::<f64>().unwrap() < 1e-10);
    let p2 = r.instances[1].certificate("p").unwrap();
    assert_eq!(p2.degree, 21);
    assert!(p2.max_circle_deviation.parse::<f64>().unwrap() < 1e-10);
    assert!(r.instances[0].regime.as_ref().unwrap().within);
    assert!(!r.instances[1].regime.as_ref().unwrap().within);
    assert!(r.instances.iter().all(|i| i.decomposition.as_ref().unwrap().violations.is_empty()));
    assert_eq!(r.version.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(r.config.m, vec![1, 2]);
}

#[test]
fn weight_26_is_annotated_as_proved_regime() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [26]}, "m": [2]}));
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 0);
    let r = RunReport::load(&dir.path().join("out/verify-rh.json")).unwrap();
    let reg = r.instances[0].regime.as_ref().unwrap();
    assert!(reg.within && reg.note.starts_with("within proved regime"));
    assert!((reg.threshold - 24.19).abs() < 0.01);
}

#[test]
fn report_emits_csv_json_and_scatter() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"builtin": [12], "files": ["missing.json"]}, "m": [1, 3],
                           "auxiliary": {"m": [3], "k": [20], "levels": [2]}}),
    );
    assert_eq!(code(&symrh("report", &cfg, &[])), 1);
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 2);
    assert_eq!(code(&symrh("verify-lemmas", &cfg, &[])), 2);
    let o = symrh("report", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");

    let bundle = ReportBundle::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(bundle.to_json(), fs::read_to_string(out.join("report.json")).unwrap());
    assert_eq!(bundle.reports.len(), 2);

    // 4 form instances x (P, Q), then 5 instances x H
    let mut rd = csv::Reader::from_path(out.join("certificates.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4 * 2 + 5);
    assert_eq!(rows.len(), certificate_rows(&bundle).len());
    assert!(rows.iter().filter(|r| &r[6] == "failed").all(|r| r[8].is_empty()));

    let mut rd = csv::Reader::from_path(out.join("roots.csv")).unwrap();
    let pts: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(pts.len(), scatter_rows(&bundle).len());
    let delta_p: Vec<&csv::StringRecord> =
        pts.iter().filter(|r| &r[0] == "verify-rh" && &r[1] == "1.12.a.a/m=1" && &r[2] == "P").collect();
    assert_eq!(delta_p.len(), 10);
    for r in delta_p {
        assert!((r[6].parse::<f64>().unwrap() - 1.0).abs() < 1e-20);
    }

    // JSON-only config skips the CSV files
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"builtin": [12]}, "m": [1], "formats": ["json"], "out_dir": "json_only"}),
    );
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 0);
    assert_eq!(code(&symrh("report", &cfg, &[])), 0);
    assert!(dir.path().join("json_only/report.json").exists());
    assert!(!dir.path().join("json_only/certificates.csv").exists());
}

#[test]
fn report_schema_rejects_inconsistent_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"forms": {"builtin": [12]}, "m": [1]}));
    assert_eq!(code(&symrh("verify-rh", &cfg, &[])), 0);
    let text = fs::read_to_string(dir.path().join("out/verify-rh.json")).unwrap();
    assert!(RunReport::from_json(&text).is_ok());
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["summary"]["failed"] = 1.into();
    assert!(RunReport::from_json(&v.to_string()).is_err());
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["instances"][0]["status"] = "failed".into();
    v["summary"] = serde_json::json!({"ok": 0, "skipped": 0, "failed": 1});
    assert!(RunReport::from_json(&v.to_string()).is_err());
    assert!(RunReport::from_json(&text[..text.len() / 2]).is_err());
}

#[test]
fn polys_dumps_every_polynomial() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"files": [data("2.8.a.a.json")]}, "m": [1, 2]}),
    );
    assert_eq!(code(&symrh("polys", &cfg, &[])), 0);
    let r = RunReport::load(&dir.path().join("out/polys.json")).unwrap();
    assert_eq!(r.instances[0].files.len(), 5);
    assert_eq!(r.instances[1].files.len(), 4);
    for f in r.instances.iter().flat_map(|i| &i.files) {
        let d = symrh::perpoly::PolyDump::from_json(&fs::read_to_string(dir.path().join("out").join(f)).unwrap())
            .unwrap();
        assert_eq!(d.params["level"], 2);
    }
    let p = symrh::perpoly::PolyDump::from_json(
        &fs::read_to_string(dir.path().join("out/polys/2.8.a.a.m1.P.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(p.coeffs.len(), 7);
}

#[test]
fn lemma_grid_and_small_weight_margins() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"forms": {"builtin": [12, 16, 20]}, "m": [2, 3],
                           "auxiliary": {"m": [3], "k": [6, 20], "levels": [1]}}),
    );
    let o = symrh("verify-lemmas", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = RunReport::load(&dir.path().join("out/verify-lemmas.json")).unwrap();
    assert_eq!(r.instances.len(), 8);
    for i in &r.instances[..6] {
        assert_eq!(i.lemmas.len(), 1, "{}", i.id);
        assert_eq!(i.lemmas[0].outcome, "pass", "{}", i.id);
        assert!(i.lemmas[0].deviation.unwrap() < i.lemmas[0].bound);
    }
    // k = 20 forms and the k = 20 auxiliary instance: H inside the disk
    for i in r.instances.iter().filter(|i| i.params.k == Some(20) && i.params.m == 3) {
        assert_eq!(serde_json::to_value(i.certificate("H").unwrap().verdicts.disk).unwrap(), "all-inside");
    }
    // the tiny instance is reported whatever its margins are
    let tiny = r.instances.iter().find(|i| i.id == "auxiliary/m=3,k=6,N=1").unwrap();
    assert_eq!(tiny.status, Status::Ok);
    assert!(matches!(tiny.rouche[0].outcome.as_str(), "certified" | "indeterminate"));
}
