use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn magband(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magband"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn butterfly_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = magband(
        dir.path(),
        &[
            "butterfly",
            "--model",
            "harper",
            "--n-side",
            "40",
            "--flux-steps",
            "101",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("butterfly.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1\n"));
    assert!(csv.contains("# n_side=40\n"));
    assert!(csv.lines().any(|l| l == "b,eigen_index,eigenvalue"));
    assert_eq!(data_rows(&csv).len(), 101 * 1600);
}

#[test]
fn zero_flux_steps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = magband(dir.path(), &["butterfly", "--flux-steps", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n_side = 6\ncolour = red\n").unwrap();
    let out = magband(
        dir.path(),
        &["butterfly", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nn_side = 6\nflux_steps = 3\n").unwrap();
    let out = magband(
        dir.path(),
        &[
            "butterfly",
            "--config",
            cfg.to_str().unwrap(),
            "--n-side",
            "4",
        ],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("butterfly.csv")).unwrap();
    assert!(csv.contains("# n_side=4\n"));
    assert_eq!(data_rows(&csv).len(), 3 * 16);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("b.svg");
    let butterfly = [
        "butterfly",
        "--n-side",
        "6",
        "--flux-steps",
        "7",
        "--svg",
        svg.to_str().unwrap(),
    ];
    // on an 8×8 box the edges are still quadratic in b, so the verdict may fail
    let edges = ["edges", "--model", "staggered", "--n-side", "8"];
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    let run = || {
        assert!(magband(dir.path(), &butterfly).status.success());
        assert!(matches!(
            magband(dir.path(), &edges).status.code(),
            Some(0 | 1)
        ));
        [
            read("butterfly.csv"),
            read("edges.csv"),
            read("edges.json"),
            read("b.svg"),
        ]
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
    let svg = String::from_utf8(first[3].clone()).unwrap();
    assert!(svg.contains("viewBox=\"0 0 800 600\""));
}

#[test]
fn edges_csv_lists_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = magband(
        dir.path(),
        &["edges", "--model", "staggered", "--n-side", "10"],
    );
    assert!(
        matches!(out.status.code(), Some(0 | 1)),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("b,e_minus,e_plus,gap_count,gap_1_lower,gap_1_upper"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("edges.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["model"], "staggered");
    assert_eq!(json["command"], "edges");
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = magband(dir.path(), &["verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    let probes: Vec<&str> = json["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["probe"].as_str().unwrap())
        .collect();
    for p in [
        "phase_identities",
        "factorization",
        "projector_identities",
        "heat_semigroup",
    ] {
        assert!(probes.contains(&p), "{p} missing");
    }
}

#[test]
fn failed_check_exits_one_with_report() {
    // a bound factor of 1 makes the Lipschitz verdict fail unless all quotients coincide
    let dir = tempfile::tempdir().unwrap();
    let out = magband(
        dir.path(),
        &["edges", "--n-side", "8", "--bound-factor", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"probe\""), "{stderr}");
    assert!(dir.path().join("edges.json").exists());
}

#[test]
fn gaptrack_on_a_deformed_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let out = magband(
        dir.path(),
        &[
            "gaptrack",
            "--n-side",
            "8",
            "--amplitude",
            "0.3",
            "--flux-steps",
            "6",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("integer_box_equivalence"));
}
