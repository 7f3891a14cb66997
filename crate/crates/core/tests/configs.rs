use std::path::PathBuf;

use ams_core::experiment::ExperimentConfig;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_load_and_expand() {
    let mut seen = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut variants = vec![cfg.clone()];
        for point in cfg.sweep_points() {
            variants.push(cfg.with_point(&point).unwrap_or_else(|e| panic!("{}: {e}", path.display())));
        }
        for v in &variants {
            let model = v.build_model().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            v.gams_config(&model).unwrap().validate().unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 8, "found {seen} configs");
}

#[test]
fn reference_sweep_has_six_columns() {
    let cfg = ExperimentConfig::load(&config_dir().join("table1.toml")).unwrap();
    let points = cfg.sweep_points();
    assert_eq!(points.len(), 6);
    let pairs: Vec<(i64, i64)> = points
        .iter()
        .map(|p| (p["n_rep"].as_integer().unwrap(), p["k"].as_integer().unwrap()))
        .collect();
    assert_eq!(pairs, [(10, 1), (50, 1), (50, 10), (50, 20), (100, 1), (200, 1)]);
}
