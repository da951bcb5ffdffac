use std::path::PathBuf;

use simulband::config::{resolve, Command, ConfigError, Overrides, DEFAULT_SEED};

fn file(text: &str) -> (tempfile::TempDir, Overrides) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    let o = Overrides::from_file(&path).unwrap();
    (dir, o)
}

#[test]
fn defaults_apply_without_file_or_flags() {
    let cfg = resolve(Command::Simulate, None, Overrides::default(), None).unwrap();
    assert_eq!(cfg.alpha, 0.05);
    assert_eq!(cfg.m, 10_000);
    assert_eq!(cfg.seed, DEFAULT_SEED);
    assert_eq!(cfg.simulate.reps, 10_000);
    assert_eq!(cfg.spline.percentiles, vec![5.0, 35.0, 65.0, 95.0]);
}

#[test]
fn flags_override_file_which_overrides_env_and_defaults() {
    let (dir, f) = file("data = \"d.csv\"\nalpha = 0.1\nseed = 5\nm = 2000\n[columns]\naction = \"trt\"\n");
    let cfg = resolve(Command::Effects, Some(f.clone()), Overrides::default(), Some("9")).unwrap();
    assert_eq!(cfg.alpha, 0.1);
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.data_path, Some(dir.path().join("d.csv")));
    assert_eq!(cfg.columns.action, "trt");
    // untouched column keys keep their defaults
    assert_eq!(cfg.columns.outcomes, vec!["cd420", "cd820"]);

    let flags = Overrides { alpha: Some(0.01), seed: Some(77), ..Default::default() };
    let cfg = resolve(Command::Effects, Some(f), flags, Some("9")).unwrap();
    assert_eq!((cfg.alpha, cfg.seed, cfg.m), (0.01, 77, 2000));
}

#[test]
fn env_seed_is_a_fallback() {
    let cfg = resolve(Command::Simulate, None, Overrides::default(), Some("123")).unwrap();
    assert_eq!(cfg.seed, 123);
    assert!(matches!(
        resolve(Command::Simulate, None, Overrides::default(), Some("abc")),
        Err(ConfigError::Invalid(_))
    ));
}

#[test]
fn invalid_values_are_rejected() {
    for flags in [
        Overrides { alpha: Some(1.0), ..Default::default() },
        Overrides { alpha: Some(0.0), ..Default::default() },
        Overrides { m: Some(10), ..Default::default() },
        Overrides { grid_size: Some(0), ..Default::default() },
    ] {
        assert!(resolve(Command::Simulate, None, flags, None).is_err());
    }
    assert!(resolve(Command::Effects, None, Overrides::default(), None).is_err(), "data is required");
}

#[test]
fn unknown_keys_and_bad_toml_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "alpah = 0.1\n").unwrap();
    assert!(matches!(Overrides::from_file(&path), Err(ConfigError::Parse { .. })));
    assert!(matches!(Overrides::from_file(&PathBuf::from("/nonexistent.toml")), Err(ConfigError::Io { .. })));
}

#[test]
fn reference_config_parses() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/actg175.toml");
    let o = Overrides::from_file(&path).unwrap();
    let cfg = resolve(Command::EmmContinuous, Some(o), Overrides::default(), None).unwrap();
    assert_eq!(cfg.columns.action, "two_drug");
    assert_eq!(cfg.derive.len(), 2);
    assert_eq!(cfg.m, 200_000);
    assert!(cfg.data_path.unwrap().ends_with("data/actg175.csv"));
}
