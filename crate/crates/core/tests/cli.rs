use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rdslab");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rdslab(args: &[&str], out_root: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RDSLAB_OUT", out_root)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|_| panic!("stdout: {}", String::from_utf8_lossy(&o.stdout)))
}

fn j0(x: f64) -> f64 {
    let m = 256;
    (0..m)
        .map(|j| (x * (TAU * j as f64 / m as f64).sin()).cos())
        .sum::<f64>()
        / m as f64
}

const TRANSLATION: &str = r#"
[model]
variant = "affine-torus"
matrices = [[[1.0, 0.0], [0.0, 1.0]]]
offsets = [[0.1, 0.3]]

[experiment]
kind = "expansion"
n = 1
"#;

#[test]
fn translation_expansion_is_zero_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "translation.toml", TRANSLATION);
    let o = rdslab(&["run", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = PathBuf::from(stdout_json(&o)["dir"].as_str().unwrap());
    assert!(dir.starts_with(tmp.path()));
    let name = dir.file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("translation-"), "{name}");
    let r = report(&dir);
    assert_eq!(r["results"]["value"], 0.0);
    assert_eq!(r["results"]["witness"]["direction"].as_array().unwrap().len(), 2);
    assert_eq!(r["experiment"], "expansion");
    let hash = r["provenance"]["config_hash"].as_str().unwrap();
    assert!(name.ends_with(&hash[..8]));
    let csv = std::fs::read_to_string(dir.join("table.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("config_hash,seed,"));
    for line in lines {
        assert!(line.starts_with(&format!("{hash},0,")), "{line}");
    }
}

#[test]
fn pierrehumbert_spectrum_matches_bessel_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("pierrehumbert_spectrum.toml");
    let out = tmp.path().join("run");
    let o = rdslab(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let got = r["results"]["subleading_modulus"].as_f64().unwrap();
    let mut want: f64 = 0.0;
    for a in -16i64..=16 {
        for b in -16i64..=16 {
            if (a, b) != (0, 0) {
                want = want.max((j0(a as f64) * j0(b as f64)).abs());
            }
        }
    }
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    assert!(out.join("series.csv").is_file());
}

#[test]
fn misspelt_key_is_named_in_the_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "[modle]\nvariant = \"pierrehumbert\"\ntau = 1.0\n\n[experiment]\nkind = \"spectrum\"\nk = 4\n",
    );
    let o = rdslab(&["run", cfg.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("modle") && msg.contains("line 1"), "{msg}");
}

#[test]
fn budget_errors_name_the_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "big.toml",
        "[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\n\n[experiment]\nkind = \"spectrum\"\nk = 80\n",
    );
    let o = rdslab(&["run", cfg.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "budget-exceeded");
    assert!(err["error"]["message"].as_str().unwrap().contains("limit is 20000"));
}

#[test]
fn empty_manifest_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write(tmp.path(), "empty.toml", "");
    let out = tmp.path().join("suite");
    let o = rdslab(
        &["suite", m.to_str().unwrap(), "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1);
    assert_eq!(stdout_json(&o)["rows"], 0);
}

#[test]
fn failing_assertion_fails_the_suite() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "rotation.toml",
        r#"
[model]
variant = "affine-torus"
matrices = [[[1.0, 0.0], [0.0, 1.0]]]
offsets = [[0.6180339887498949, 0.41421356237309515]]

[experiment]
kind = "spectrum"
k = 3
"#,
    );
    let m = write(
        tmp.path(),
        "suite.toml",
        r#"
[[case]]
name = "gap-from-translation"
config = "rotation.toml"
assert = ["results.subleading_modulus < 0.99", "results.weak_mixing_obstruction == true"]
"#,
    );
    let out = tmp.path().join("suite");
    let o = rdslab(
        &["suite", m.to_str().unwrap(), "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(out.join("suite.json")).unwrap()).unwrap();
    assert_eq!(s["passed"], false);
    assert_eq!(s["rows"][0]["status"], "fail");
    assert_eq!(s["rows"][1]["status"], "pass");
    assert!((s["rows"][0]["measured"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(out.join("gap-from-translation/report.json").is_file());
}

#[test]
fn suite_errors_on_missing_config_and_bad_assertion() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write(tmp.path(), "a.toml", "[[case]]\nname = \"x\"\nconfig = \"nope.toml\"\n");
    let o = rdslab(&["suite", m.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing config"));

    write(tmp.path(), "t.toml", TRANSLATION);
    let m = write(
        tmp.path(),
        "b.toml",
        "[[case]]\nname = \"x\"\nconfig = \"t.toml\"\nassert = [\"results.value ~= 0\"]\n",
    );
    let o = rdslab(&["suite", m.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unparseable assertion"));
}

#[test]
fn thread_count_does_not_change_the_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "mc.toml",
        r#"
seed = 5

[model]
variant = "pierrehumbert"
tau = 1.0

[experiment]
kind = "correlation"
method = "monte-carlo"
n_max = 6
samples = 5000
phi = { kind = "cos", mode = [1, 0] }
"#,
    );
    let mut csvs = Vec::new();
    let mut results = Vec::new();
    for t in ["1", "8", "8"] {
        let out = tmp.path().join(format!("t{t}-{}", csvs.len()));
        let o = rdslab(
            &[
                "run",
                cfg.to_str().unwrap(),
                "--threads",
                t,
                "--out",
                out.to_str().unwrap(),
            ],
            tmp.path(),
        );
        assert!(o.status.success());
        csvs.push(std::fs::read(out.join("series.csv")).unwrap());
        results.push(report(&out)["results"].to_string());
    }
    assert!(csvs.windows(2).all(|w| w[0] == w[1]));
    assert!(results.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "t.toml", TRANSLATION);
    let out = tmp.path().join("run");
    let o = rdslab(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--seed",
            "77",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(o.status.success());
    let r = report(&out);
    assert_eq!(r["provenance"]["seed"], 77);
    assert_eq!(r["config"]["seed"], 77);
}

#[test]
fn export_operator_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\n\n[experiment]\nkind = \"spectrum\"\nk = 3\ns = 0.5\n",
    );
    let file = tmp.path().join("op.bin");
    let o = rdslab(
        &[
            "export-operator",
            cfg.to_str().unwrap(),
            "--out",
            file.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&file).unwrap();
    assert_eq!(stdout_json(&o)["bytes"], bytes.len());
    let op = rdslab::spectral::read_operator(&bytes[..]).unwrap();
    assert_eq!(op.radius, 3);
    assert_eq!(op.s, 0.5);

    let o = rdslab(
        &[
            "export-operator",
            write(tmp.path(), "t.toml", TRANSLATION).to_str().unwrap(),
            "--out",
            "x.bin",
        ],
        tmp.path(),
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("spectrum"));
}

#[test]
fn version_prints_formats() {
    let o = Command::new(BIN).arg("--version").output().unwrap();
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains("report format") && s.contains("operator format"));
}

#[test]
fn shipped_configs_parse() {
    let mut seen = 0;
    for dir in [configs(), configs().join("acceptance")] {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "toml") && p.file_name().unwrap() != "suite.toml" {
                rdslab::cli::ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
                seen += 1;
            }
        }
    }
    assert!(seen > 20);
    let m = rdslab::cli::Manifest::load(&configs().join("acceptance/suite.toml")).unwrap();
    for c in &m.case {
        assert!(configs().join("acceptance").join(&c.config).is_file(), "{}", c.name);
        for a in &c.assertions {
            rdslab::cli::Assertion::parse(a).unwrap();
        }
    }
}
