use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use rdslab::cli::ExperimentConfig;

const BASE: &str =
    "seed = 1\n\n[model]\nvariant = \"pierrehumbert\"\ntau = 1.0\n\n[experiment]\nkind = \"spectrum\"\nk = 4\n";

const KNOWN: &[&str] = &[
    "seed",
    "model",
    "measure",
    "experiment",
    "variant",
    "tau",
    "kind",
    "k",
    "s",
    "budget",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_seed: RngSeed::Fixed(0xc0f1), ..ProptestConfig::default() })]

    #[test]
    fn unknown_keys_are_rejected(key in "[a-z][a-z_]{2,12}", table in 0usize..3) {
        prop_assume!(!KNOWN.contains(&key.as_str()));
        ExperimentConfig::from_toml(BASE).unwrap();
        let text = match table {
            0 => format!("{key} = 3\n{BASE}"),
            1 => BASE.replace("tau = 1.0\n", &format!("tau = 1.0\n{key} = 3\n")),
            _ => format!("{BASE}{key} = 3\n"),
        };
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        prop_assert!(err.contains(&key), "{err}");
    }
}
