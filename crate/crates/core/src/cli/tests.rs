use serde_json::json;

use super::*;
use crate::spectral::FORMAT_VERSION;

#[test]
fn version_line_names_the_formats() {
    assert!(VERSION.starts_with(env!("CARGO_PKG_VERSION")));
    assert!(VERSION.contains(&format!("report format {REPORT_FORMAT}")));
    assert!(VERSION.contains(&format!("operator format {FORMAT_VERSION}")));
}

#[test]
fn assertions_parse_and_check() {
    let a = Assertion::parse("results.value ~= 0.5 1e-3").unwrap();
    assert_eq!(a.op, Op::Approx);
    let report = json!({ "results": { "value": 0.5004, "rows": [1, 2], "status": "ok" } });
    assert!(a.check(&report).unwrap().0);
    assert!(
        !Assertion::parse("results.value > 0.6")
            .unwrap()
            .check(&report)
            .unwrap()
            .0
    );
    assert!(
        Assertion::parse("results.rows.1 == 2")
            .unwrap()
            .check(&report)
            .unwrap()
            .0
    );
    assert!(
        Assertion::parse("results.status == \"ok\"")
            .unwrap()
            .check(&report)
            .unwrap()
            .0
    );
    assert!(Assertion::parse("results.missing == 1")
        .unwrap()
        .check(&report)
        .is_err());
    assert!(Assertion::parse("results.status < 1").unwrap().check(&report).is_err());
    for bad in [
        "results.value",
        "results.value ~= 1",
        "a >> 1",
        "a < 1 0.1",
        "a == nope",
    ] {
        assert!(Assertion::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_toml(
        "[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\ntua = 2.0\n[experiment]\nkind = \"spectrum\"\nk = 2\n",
    )
    .unwrap_err();
    assert_eq!(err.kind(), "config");
    assert!(err.to_string().contains("tua"), "{err}");
    let err = ExperimentConfig::from_toml("[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\n").unwrap_err();
    assert!(err.to_string().contains("experiment"), "{err}");
}

#[test]
fn observable_specs_build() {
    let spec: ObservableSpec = toml::from_str(
        "kind = \"sum\"\nparts = [{ kind = \"cos\", mode = [1, 0] }, { kind = \"sin\", mode = [0, 1], amplitude = 2.0 }]",
    )
    .unwrap();
    let o = spec.build().unwrap();
    assert!(o.is_real() && o.is_zero_mean());
    assert!((o.l2_norm_sq() - 2.5).abs() < 1e-15);
}

#[test]
fn config_hash_tracks_content() {
    let text = "[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\n[experiment]\nkind = \"spectrum\"\nk = 2\n";
    let a = ExperimentConfig::from_toml(text).unwrap();
    let mut b = a.clone();
    assert_eq!(config_hash(&a), config_hash(&b));
    b.seed = 1;
    assert_ne!(config_hash(&a), config_hash(&b));
    assert_eq!(config_hash(&a).len(), 64);
    let name = run_dir_name("spec", &config_hash(&a));
    assert!(name.starts_with("spec-") && name.ends_with(&config_hash(&a)[..8]));
}
