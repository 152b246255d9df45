use std::collections::BTreeMap;
use std::path::PathBuf;

use ccl_cli::{CheckName, Format, SuiteConfig};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = SuiteConfig> {
    let space = prop_oneof![
        (3usize..6).prop_map(|d| format!("euclidean:{d}")),
        (2usize..5, 0.1f64..4.0).prop_map(|(d, k)| format!("hyperbolic:{d},kappa={k}")),
        (2usize..4, 0.5f64..2.0).prop_map(|(n, l)| format!("spd:{n},lambda={l}")),
    ];
    let surface = prop_oneof![
        Just(None),
        (0.01f64..3.0).prop_map(|r| Some(format!("geodesic-sphere:r={r}"))),
        (0.1f64..2.0, -0.9f64..0.9).prop_map(|(b, a)| Some(format!("radial-graph:base={b},mode=zonal,amp={a}"))),
    ];
    let grid = prop_oneof![Just(None), (2usize..40, 2usize..80).prop_map(|(a, b)| Some(format!("{a}x{b}")))];
    let checks = proptest::collection::vec(proptest::sample::select(CheckName::ALL.to_vec()), 0..6);
    let tolerances = proptest::collection::btree_map(
        (proptest::sample::select(CheckName::ALL.to_vec()), "[a-z]{1,8}").prop_map(|(c, n)| format!("{c}.{n}")),
        1e-14f64..1.0,
        0..4,
    );
    (
        space,
        surface,
        grid,
        checks,
        any::<u64>(),
        proptest::option::of(0usize..5000),
        proptest::option::of(1usize..1000),
        tolerances,
        proptest::option::of("[a-z]{1,8}\\.json"),
        any::<bool>(),
    )
        .prop_map(|(space, surface, grid, checks, seed, samples, directions, tolerances, output, csv)| SuiteConfig {
            space,
            surface,
            grid,
            checks,
            seed,
            samples,
            directions,
            audit_dim: samples.map(|s| s % 10 + 1),
            tolerances: tolerances.into_iter().collect::<BTreeMap<_, _>>(),
            output: output.map(PathBuf::from),
            format: if csv { Format::Csv } else { Format::Json },
        })
}

proptest! {
    #[test]
    fn toml_round_trip(c in config()) {
        let text = c.to_toml();
        prop_assert_eq!(SuiteConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn check_names_round_trip(c in proptest::sample::select(CheckName::ALL.to_vec())) {
        prop_assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
    }
}
