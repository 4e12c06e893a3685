use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::{run_to_dir, Flat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub case: Vec<Case>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    /// Relative to the manifest's directory.
    pub config: PathBuf,
    /// Expressions `path op value [tol]` over the report.
    #[serde(default, rename = "assert")]
    pub assertions: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `|a - b| <= tol`.
    Approx,
}

/// A parsed assertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub path: String,
    pub op: Op,
    pub value: Value,
    pub tol: Option<f64>,
}

impl Assertion {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let bad = || {
            Error::Config(format!(
                "unparseable assertion `{text}` (expected `path op value [tol]`)"
            ))
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let op = match parts[1] {
            "==" => Op::Eq,
            "!=" => Op::Ne,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "~=" => Op::Approx,
            _ => return Err(bad()),
        };
        let value: Value = serde_json::from_str(parts[2]).map_err(|_| bad())?;
        let tol = match parts.get(3) {
            Some(t) => Some(t.parse::<f64>().map_err(|_| bad())?),
            None if op == Op::Approx => return Err(bad()),
            None => None,
        };
        if tol.is_some() && op != Op::Approx {
            return Err(bad());
        }
        Ok(Assertion {
            path: parts[0].to_string(),
            op,
            value,
            tol,
        })
    }

    /// The verdict and the measured value.
    pub fn check(&self, report: &Value) -> Result<(bool, Value)> {
        let got = lookup(report, &self.path)
            .ok_or_else(|| Error::Config(format!("report has no value at `{}`", self.path)))?
            .clone();
        let verdict = match (self.op, got.as_f64(), self.value.as_f64()) {
            (Op::Approx, Some(a), Some(b)) => (a - b).abs() <= self.tol.unwrap_or(0.0),
            (Op::Lt, Some(a), Some(b)) => a < b,
            (Op::Le, Some(a), Some(b)) => a <= b,
            (Op::Gt, Some(a), Some(b)) => a > b,
            (Op::Ge, Some(a), Some(b)) => a >= b,
            (Op::Eq, Some(a), Some(b)) => a == b,
            (Op::Ne, Some(a), Some(b)) => a != b,
            (Op::Eq, _, _) => got == self.value,
            (Op::Ne, _, _) => got != self.value,
            _ => {
                return Err(Error::Config(format!(
                    "`{}` compares non-numbers with an ordering",
                    self.path
                )))
            }
        };
        Ok((verdict, got))
    }
}

/// Dotted path lookup; numeric segments index arrays.
pub fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |cur, seg| match cur {
        Value::Array(a) => a.get(seg.parse::<usize>().ok()?),
        Value::Object(m) => m.get(seg),
        _ => None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub case: String,
    pub assertion: String,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub measured: Option<Value>,
    pub threshold: Option<Value>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    pub passed: bool,
}

fn row(case: &str, assertion: &str, status: &str) -> SuiteRow {
    SuiteRow {
        case: case.into(),
        assertion: assertion.into(),
        status: status.into(),
        measured: None,
        threshold: None,
        message: None,
    }
}

/// Run every case and write `table.csv` and `suite.json` into `out`.
pub fn run_suite(manifest_path: &Path, out: &Path, threads: Option<usize>) -> Result<SuiteReport> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let parsed: Vec<Vec<Assertion>> = manifest
        .case
        .iter()
        .map(|c| {
            c.assertions
                .iter()
                .map(|a| Assertion::parse(a))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for (case, asserts) in manifest.case.iter().zip(&parsed) {
        let path = base.join(&case.config);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "case {}: missing config {}",
                case.name,
                path.display()
            )));
        }
        let outcome = ExperimentConfig::load(&path).and_then(|cfg| run_to_dir(&cfg, &out.join(&case.name), threads));
        let rec = match outcome {
            Ok(r) => r,
            Err(e) => {
                let mut r = row(&case.name, "run", "error");
                r.message = Some(e.to_string());
                rows.push(r);
                continue;
            }
        };
        for (text, a) in case.assertions.iter().zip(asserts) {
            let mut r = row(&case.name, text, "error");
            r.threshold = Some(a.value.clone());
            match a.check(&rec.report) {
                Ok((ok, got)) => {
                    r.status = if ok { "pass" } else { "fail" }.into();
                    r.measured = Some(got);
                }
                Err(e) => r.message = Some(e.to_string()),
            }
            rows.push(r);
        }
    }
    let passed = rows.iter().all(|r| r.status == "pass");
    let flat = Flat {
        file: "table.csv",
        header: ["case", "assertion", "status", "measured", "threshold"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: rows
            .iter()
            .map(|r| {
                let show = |v: &Option<Value>| v.as_ref().map(|v| v.to_string()).unwrap_or_default();
                vec![
                    r.case.clone(),
                    r.assertion.clone(),
                    r.status.clone(),
                    show(&r.measured),
                    show(&r.threshold),
                ]
            })
            .collect(),
    };
    let report = SuiteReport { rows, passed };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&flat.header)
        .map_err(|e| Error::Internal(e.to_string()))?;
    for r in &flat.rows {
        w.write_record(r).map_err(|e| Error::Internal(e.to_string()))?;
    }
    std::fs::write(
        out.join("table.csv"),
        w.into_inner().map_err(|e| Error::Internal(e.to_string()))?,
    )?;
    std::fs::write(
        out.join("suite.json"),
        serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))? + "\n",
    )?;
    Ok(report)
}
