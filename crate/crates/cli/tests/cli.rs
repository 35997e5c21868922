use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alpha-flow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn geodesic(dir: &Path, alpha: &str, points: &str, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let o = run(&[
        "geodesic",
        "--alpha",
        alpha,
        "--mu0",
        "0.98,0.01,0.01",
        "--mu1",
        "0.01,0.98,0.01",
        "--points",
        points,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn geodesic_table_hits_both_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let path = geodesic(dir.path(), "0", "101", "c.csv");
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,mu_1,mu_2,mu_3");
    let table = rows(&path);
    assert_eq!(table.len(), 101);
    for (row, target) in [(&table[0], [0.98, 0.01, 0.01]), (&table[100], [0.01, 0.98, 0.01])] {
        for (a, b) in row[1..].iter().zip(target) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    for row in &table {
        assert!((row[1..].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "geodesic");
}

#[test]
fn two_point_table_and_byte_identical_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let two = geodesic(dir.path(), "0.5", "2", "two.csv");
    assert_eq!(rows(&two).len(), 2);
    let a = std::fs::read(geodesic(dir.path(), "-0.5", "51", "a.csv")).unwrap();
    let b = std::fs::read(geodesic(dir.path(), "-0.5", "51", "b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn alpha_sweep_midpoints_differ() {
    let dir = tempfile::tempdir().unwrap();
    let alphas = ["-1", "-0.5", "0", "0.5", "1"];
    let mids: Vec<Vec<f64>> = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| rows(&geodesic(dir.path(), a, "101", &format!("s{i}.csv")))[50].clone())
        .collect();
    for i in 0..mids.len() {
        for j in i + 1..mids.len() {
            let gap = mids[i][1..]
                .iter()
                .zip(&mids[j][1..])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap > 1e-3, "alphas {} and {}: {gap}", alphas[i], alphas[j]);
        }
    }
}

#[test]
fn out_of_range_alpha_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "0.2,0.3,0.5\n").unwrap();
    let model = dir.path().join("m.json");
    let o = run(&[
        "train",
        "--alpha",
        "1.5",
        "--data",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[-1, 1]"));
    assert!(!model.exists());
}

#[test]
fn bad_invocations_exit_with_one() {
    assert_eq!(run(&["verify", "--frobnicate"]).status.code(), Some(1));
    let o = run(&["eval-kde", "--data", "/nonexistent/a.csv", "--generated", "/nonexistent/b.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "huge"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["verify", "--suite", "core", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn train_sample_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let ok = |args: &[&str]| {
        let o = run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    ok(&["swiss-roll", "--n", "64", "--seed", "1", "--out", &p("data.csv")]);
    let config = p("cfg.json");
    std::fs::write(&config, r#"{"alpha": 0.5, "epochs": 3, "hidden": [8, 8]}"#).unwrap();
    for model in ["m1.json", "m2.json"] {
        ok(&["train", "--config", &config, "--seed", "4", "--data", &p("data.csv"), "--out", &p(model)]);
    }
    assert_eq!(std::fs::read(p("m1.json")).unwrap(), std::fs::read(p("m2.json")).unwrap());
    let model: serde_json::Value = serde_json::from_slice(&std::fs::read(p("m1.json")).unwrap()).unwrap();
    assert_eq!(model["alpha"], 0.5);
    assert_eq!(model["config"]["epochs"], 3);
    assert_eq!(rows(Path::new(&p("m1.json.history.csv"))).len(), 3);
    ok(&["sample", "--model", &p("m1.json"), "--n", "16", "--steps", "20", "--seed", "2", "--out", &p("gen.csv")]);
    let generated = rows(Path::new(&p("gen.csv")));
    assert_eq!(generated.len(), 16);
    assert!(generated.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    ok(&["eval-kde", "--data", &p("data.csv"), "--generated", &p("gen.csv"), "--grid", "30", "--out", &p("kl.json")]);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(p("kl.json")).unwrap()).unwrap();
    assert!(report["kl"].as_f64().unwrap().is_finite());
    for out in ["data.csv", "m1.json", "gen.csv", "kl.json"] {
        let manifest = std::fs::read(format!("{}.manifest.json", p(out))).unwrap();
        serde_json::from_slice::<serde_json::Value>(&manifest).unwrap();
    }
}
