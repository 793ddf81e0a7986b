use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn flatspace(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatspace"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("FLATSPACE_JOBS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(doc).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(doc: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(doc["space"]["dist"].clone()).unwrap()
}

fn without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# generated:") && !l.contains("\"generated\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Rows of a CSV file written by the tool, header comments skipped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn geodesic_and_chordal_distances_on_the_circle() {
    let dir = TempDir::new().unwrap();
    let circle = serde_json::json!({"kind": "torus", "circumference": std::f64::consts::TAU});
    let points = serde_json::json!([[0.0], [1.0], [3.0]]);
    let geo = write_config(
        dir.path(),
        "geo.json",
        &serde_json::json!({"space": "geodesic", "group": circle, "points": points}),
    );
    let out = flatspace(&["distance", "--config", &geo], &dir.path().join("geo"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let geodesic = matrix(&read_json(&dir.path().join("geo/distance.json")));
    assert_eq!(geodesic.len(), 3);
    assert!((geodesic[0][2] - 3.0).abs() < 1e-12);

    let chord = write_config(
        dir.path(),
        "chord.json",
        &serde_json::json!({"space": "chordal", "group": circle, "points": points}),
    );
    let out = flatspace(&["distance", "--config", &chord], &dir.path().join("chord"));
    assert!(out.status.success());
    let chordal = matrix(&read_json(&dir.path().join("chord/distance.json")));
    for i in 0..3 {
        for j in 0..3 {
            assert!(chordal[i][j] <= geodesic[i][j] + 1e-12);
            let exact = 2.0 * (geodesic[i][j] / 2.0).sin();
            assert!((chordal[i][j] - exact).abs() < 1e-12);
        }
    }
    let rows = csv_rows(&dir.path().join("chord/distance.csv"));
    assert_eq!(rows[0], ["label_i", "label_j", "distance"]);
    assert_eq!(rows.len(), 4);
}

#[test]
fn permutation_quotient_matches_swap_search() {
    let dir = TempDir::new().unwrap();
    let tuples = vec![
        vec![vec![0.0, 0.0], vec![1.0, 2.0]],
        vec![vec![1.5, 2.0], vec![-0.5, 0.0]],
        vec![vec![3.0, -1.0], vec![0.0, 4.0]],
    ];
    let cfg = write_config(
        dir.path(),
        "perm.json",
        &serde_json::json!({"space": "permutation_quotient", "points": tuples}),
    );
    let out = flatspace(&["distance", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got = matrix(&read_json(&dir.path().join("distance.json")));
    let d2 = |a: &[f64], b: &[f64]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    for i in 0..3 {
        for j in 0..3 {
            let (x, y) = (&tuples[i], &tuples[j]);
            let keep = d2(&x[0], &y[0]) + d2(&x[1], &y[1]);
            let swap = d2(&x[0], &y[1]) + d2(&x[1], &y[0]);
            assert!((got[i][j] - keep.min(swap).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn malformed_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &serde_json::json!({"space": "geodesic", "points": [[0.0]]}));
    let out = flatspace(&["distance", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("group"));

    let cfg = write_config(dir.path(), "typo.json", &serde_json::json!({"trails": 5}));
    let out = flatspace(&["markov", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    let out = flatspace(&["distance"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_tower_sweep_improves_with_depth() {
    let dir = TempDir::new().unwrap();
    let out = flatspace(&["tower"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("tower.csv"));
    assert_eq!(rows[0][5], "distortion");
    let distortion: Vec<f64> = rows[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert_eq!(distortion.len(), 3);
    assert!((distortion[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    assert!(distortion[1] <= distortion[0] && distortion[2] <= distortion[1], "{distortion:?}");
    for i in 0..3 {
        assert!(dir.path().join(format!("tower_cell{i}.json")).exists());
        assert!(dir.path().join(format!("tower_cell{i}_pairs.csv")).exists());
    }
}

#[test]
fn tower_sweep_continues_past_the_cap() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "su2.json",
        &serde_json::json!({
            "group": {"kind": "su2"},
            "random": 4,
            "sweep": [{"depth": 0}, {"depth": 2, "nets": [8, 8]}, {"depth": 2, "nets": [40, 40]}],
            "seed": 3,
        }),
    );
    let out = flatspace(&["tower", "--config", &cfg, "--cap", "1000"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("tower.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1].last().unwrap(), "ok");
    assert_eq!(rows[2].last().unwrap(), "ok");
    assert!(rows[3].last().unwrap().contains("exceeds cap 1000"), "{:?}", rows[3]);
    assert!(!dir.path().join("tower_cell2.json").exists());
}

#[test]
fn empty_sweep_gives_a_header_only_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "empty.json",
        &serde_json::json!({"group": {"kind": "torus", "circumference": 1.0}, "points": [[0.0], [0.5]], "sweep": []}),
    );
    let out = flatspace(&["tower", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("tower.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "cell");
}

#[test]
fn markov_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = flatspace(&["markov"], &dir.path().join("ok"));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));

    let out = flatspace(&["markov", "--k", "0.5"], &dir.path().join("tight"));
    assert_eq!(out.status.code(), Some(1));

    let cfg = write_config(dir.path(), "vac.json", &serde_json::json!({"target": "vacuous", "trials": 5}));
    let out = flatspace(&["markov", "--config", &cfg], &dir.path().join("vac"));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all 5 trials vacuous"));
}

#[test]
fn outputs_reproduce_from_their_header() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let out = flatspace(&["markov", "--seed", "42", "--config", &write_config(dir.path(), "m.json", &serde_json::json!({"target": "torus", "trials": 10}))], &first);
    assert!(out.status.success());
    let header_source = first.join("markov.csv").to_string_lossy().into_owned();
    let second = dir.path().join("second");
    assert!(flatspace(&["markov", "--config", &header_source], &second).status.success());
    for name in ["markov.csv", "markov.json"] {
        assert_eq!(without_timestamp(&first.join(name)), without_timestamp(&second.join(name)), "{name}");
    }
    assert!(std::fs::read_to_string(first.join("markov.csv")).unwrap().contains("# seed: 42"));

    let tower_first = dir.path().join("t1");
    assert!(flatspace(&["tower", "--jobs", "2"], &tower_first).status.success());
    let json = tower_first.join("tower_cell1.json").to_string_lossy().into_owned();
    let tower_second = dir.path().join("t2");
    assert!(flatspace(&["tower", "--config", &json, "--jobs", "1"], &tower_second).status.success());
    for name in ["tower.csv", "tower_cell1.json", "tower_cell2_pairs.csv"] {
        assert_eq!(
            without_timestamp(&tower_first.join(name)),
            without_timestamp(&tower_second.join(name)),
            "{name}"
        );
    }
}

#[test]
fn job_count_comes_from_the_environment_unless_overridden() {
    let dir = TempDir::new().unwrap();
    let run = |env: &str, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_flatspace"))
            .arg("selftest")
            .args(extra)
            .env("FLATSPACE_JOBS", env)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("0", &[]).status.code(), Some(2));
    assert_eq!(run("0", &["--jobs", "2"]).status.code(), Some(0));
    assert_eq!(run("2", &[]).status.code(), Some(0));
}

#[test]
fn selftest_passes() {
    let dir = TempDir::new().unwrap();
    let out = flatspace(&["selftest"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("6 of 6 suites passed"), "{stdout}");
}
