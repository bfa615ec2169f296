use hartree_cli::config::parse;
use hartree_cli::{presets, RunError};
use proptest::prelude::*;

const TABLES: &[&str] = &["", "grid", "initial", "time", "output", "tolerances"];

fn free_decay() -> &'static str {
    presets::find("free_decay_1d").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unknown_keys_are_rejected(key in "zz[a-z_]{1,12}", table in 0..TABLES.len()) {
        let name = TABLES[table];
        let text = if name.is_empty() {
            format!("{key} = 1\n{}", free_decay())
        } else if free_decay().contains(&format!("[{name}]")) {
            free_decay().replace(&format!("[{name}]\n"), &format!("[{name}]\n{key} = 1\n"))
        } else {
            format!("{}\n[{name}]\n{key} = 1\n", free_decay())
        };
        let err = parse(&text, &[]).unwrap_err();
        prop_assert!(matches!(err, RunError::Parse { .. }), "{err}");
        prop_assert!(err.to_string().contains(&key));
    }

    #[test]
    fn odd_or_tiny_grids_are_rejected(points in 0usize..64) {
        prop_assume!(points % 2 == 1 || points < 4);
        let err = parse(free_decay(), &[format!("grid.points={points}")]).unwrap_err();
        prop_assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn nonpositive_steps_are_rejected(dt in -1.0f64..=0.0) {
        let err = parse(free_decay(), &[format!("time.dt={dt:?}")]).unwrap_err();
        prop_assert!(matches!(err, RunError::Invalid { .. }), "{err}");
    }

    #[test]
    fn even_grids_parse(half in 4usize..512, length in 1.0f64..200.0) {
        let cfg = parse(
            free_decay(),
            &[format!("grid.points={}", 2 * half), format!("grid.half_length={length:?}")],
        );
        prop_assert!(cfg.is_ok(), "{:?}", cfg.err());
    }
}

#[test]
fn every_preset_declares_distinct_checks() {
    for (name, text) in presets::PRESETS {
        let cfg = parse(text, &[]).unwrap();
        let mut checks = cfg.declared_checks();
        let n = checks.len();
        checks.sort();
        checks.dedup();
        assert_eq!(checks.len(), n, "{name}");
    }
}
