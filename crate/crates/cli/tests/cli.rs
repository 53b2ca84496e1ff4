//! Driver-level behavior: determinism, multi-mode output, config echo
//! round-trips, and sweep aggregation, all on small fast scenarios.

use std::path::PathBuf;

use clap::Parser;
use plbp_cli::{config_from_output, execute, resolve, Cli};
use tempfile::TempDir;

fn parse(args: &[&str]) -> Cli {
    Cli::parse_from(std::iter::once("plbp").chain(args.iter().copied()))
}

fn small_config(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"n_vehicles": 14, "n_anchors": 3, "K": 4, "M": 2, "seed": 11}"#,
    )
    .unwrap();
    path
}

#[test]
fn run_is_deterministic_bytewise() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let args = ["--config", config.to_str().unwrap(), "--seed", "7"];

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let cfg_a = resolve(&parse(&args)).unwrap();
    execute(&cfg_a, &out_a).unwrap();
    let cfg_b = resolve(&parse(&args)).unwrap();
    execute(&cfg_b, &out_b).unwrap();

    for file in ["metrics.csv", "vehicle_errors.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn two_modes_in_one_csv() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let cli = parse(&[
        "--config",
        config.to_str().unwrap(),
        "--mode",
        "prior",
        "--mode",
        "posterior",
    ]);
    let cfg = resolve(&cli).unwrap();
    let out = dir.path().join("out");
    execute(&cfg, &out).unwrap();

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let data_rows: Vec<&str> = metrics
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("k,"))
        .collect();
    // K rows per mode.
    assert_eq!(data_rows.len(), 2 * 4);
    assert_eq!(
        data_rows.iter().filter(|l| l.contains(",prior,")).count(),
        4
    );
    assert_eq!(
        data_rows
            .iter()
            .filter(|l| l.contains(",posterior,"))
            .count(),
        4
    );
}

#[test]
fn metrics_row_count_equals_k() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let cfg = resolve(&parse(&["--config", config.to_str().unwrap(), "--K", "6"])).unwrap();
    let out = dir.path().join("out");
    execute(&cfg, &out).unwrap();
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows = metrics
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("k,"))
        .count();
    assert_eq!(rows, 6);
}

#[test]
fn config_echo_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let cfg = resolve(&parse(&["--config", config.to_str().unwrap()])).unwrap();
    let out = dir.path().join("out");
    execute(&cfg, &out).unwrap();

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let echoed = config_from_output(&metrics).unwrap();
    assert_eq!(echoed, cfg);

    let out2 = dir.path().join("again");
    execute(&echoed, &out2).unwrap();
    assert_eq!(
        std::fs::read(out.join("metrics.csv")).unwrap(),
        std::fs::read(out2.join("metrics.csv")).unwrap()
    );
}

#[test]
fn sweep_produces_aggregated_rows() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let cli = parse(&[
        "--config",
        config.to_str().unwrap(),
        "--sweep",
        "r",
        "--values",
        "15,30",
        "--seeds",
        "2",
        "--M",
        "2",
    ]);
    let cfg = resolve(&cli).unwrap();
    assert_eq!(cfg.m, 2);
    let out = dir.path().join("out");
    execute(&cfg, &out).unwrap();

    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("param,"))
        .collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.starts_with("r,"));
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[2], "2");
        assert!(fields[3].parse::<f64>().unwrap() > 0.0);
    }
    // Echo round-trip also applies to sweeps.
    let echoed = config_from_output(&sweep).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn sweep_defaults_to_m10_and_fig6_values() {
    let cfg = resolve(&parse(&["--sweep", "sigma_theta"])).unwrap();
    assert_eq!(cfg.m, 10);
    assert_eq!(cfg.k, 10);
    let spec = cfg.sweep.unwrap();
    assert_eq!(spec.values.len(), 5);
    assert_eq!(spec.seeds, 10);
}

#[test]
fn from_file_scenario_runs() {
    let dir = TempDir::new().unwrap();
    // Generate and save a small scenario, then drive the run from it.
    let params = plbp_core::scenario::ScenarioParams {
        n_vehicles: 12,
        n_anchors: 2,
        ..Default::default()
    };
    use rand::SeedableRng;
    let sc = plbp_core::scenario::generate_scenario(
        &params,
        &mut rand_chacha::ChaCha8Rng::seed_from_u64(3),
    )
    .unwrap();
    let path = dir.path().join("scenario.json");
    plbp_core::scenario::save_scenario(&sc, &path).unwrap();

    let arg = format!("from-file:{}", path.display());
    let cfg = resolve(&parse(&["--scenario", &arg, "--K", "3", "--M", "2"])).unwrap();
    let out = dir.path().join("out");
    execute(&cfg, &out).unwrap();
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("k,"))
            .count(),
        3
    );
}

#[test]
fn errors_are_reported() {
    // Missing config file.
    assert!(resolve(&parse(&["--config", "/nonexistent/config.json"])).is_err());
    // Unknown config key.
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    assert!(resolve(&parse(&["--config", bad.to_str().unwrap()])).is_err());
    // Sweep over a from-file scenario.
    let cfg = resolve(&parse(&["--scenario", "from-file:x.json", "--sweep", "r"])).unwrap();
    assert!(execute(&cfg, dir.path()).is_err());
    // Invalid parameter via file.
    let neg = dir.path().join("neg.json");
    std::fs::write(&neg, r#"{"r": -3.0}"#).unwrap();
    let cfg = resolve(&parse(&["--config", neg.to_str().unwrap()])).unwrap();
    assert!(execute(&cfg, dir.path()).is_err());
}
