use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn dphh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dphh")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = dphh(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON document")
}

// Small sketch shapes and relaxed constants keep L2 runs fast.
const FAST_L2: &[&str] = &[
    "--kappa",
    "6000",
    "--kappa-w",
    "0",
    "--ams-rows",
    "16",
    "--ams-reps",
    "5",
    "--cs-rows",
    "5",
    "--cs-buckets",
    "64",
];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    extra.iter().chain(base).map(|s| s.to_string()).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn generate_then_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("s.txt");
    let bin = dir.path().join("s.bin");
    for (path, format) in [(&text, "text"), (&bin, "binary")] {
        let out = dphh(&[
            "generate",
            "--generator",
            "zipf:1.2",
            "--length",
            "500",
            "--universe",
            "50",
            "--seed",
            "4",
            "--format",
            format,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert!(std::fs::read(&bin).unwrap().starts_with(b"DPHHSTR1"));
    let oracle = |path: &std::path::Path| {
        ok_json(&[
            "run",
            "--mode",
            "oracle",
            "--input",
            path.to_str().unwrap(),
            "--universe",
            "50",
            "--window",
            "200",
        ])
    };
    let (a, b) = (oracle(&text), oracle(&bin));
    assert_eq!(a["l2_heavy"], b["l2_heavy"]);
    assert_eq!(a["processed"], 500);
    assert_eq!(a["l1"], 200.0);
}

#[test]
fn reruns_are_byte_identical() {
    let l2 = with(
        FAST_L2,
        &[
            "run",
            "--mode",
            "oneshot-l2",
            "--generator",
            "planted:3:0.3",
            "--length",
            "3000",
            "--universe",
            "100",
            "--window",
            "1500",
            "--alpha",
            "0.2",
            "--seed",
            "11",
        ],
    );
    let l1 = [
        "run",
        "--mode",
        "oneshot-l1",
        "--generator",
        "zipf:1.1",
        "--length",
        "3000",
        "--universe",
        "100",
        "--window",
        "1500",
        "--seed",
        "11",
    ];
    let cont = [
        "run",
        "--mode",
        "continual",
        "--generator",
        "uniform",
        "--length",
        "300",
        "--universe",
        "10",
        "--window",
        "64",
        "--seed",
        "2",
    ];
    for args in [refs(&l2), l1.to_vec(), cont.to_vec()] {
        let (a, b) = (dphh(&args), dphh(&args));
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
    }
    // The embedded config reproduces the run.
    let doc: Value = serde_json::from_slice(&dphh(&refs(&l2)).stdout).unwrap();
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["config"]["mode"], "oneshot-l2");
}

#[test]
fn config_errors_exit_2() {
    let short = ["run", "--generator", "uniform", "--length", "100", "--window", "200", "--universe", "5"];
    assert_eq!(dphh(&short).status.code(), Some(2));
    assert_eq!(
        dphh(&["run", "--alpha", "1.5", "--generator", "uniform", "--length", "10"]).status.code(),
        Some(2)
    );
    assert_eq!(dphh(&["run", "--no-such-flag", "1"]).status.code(), Some(2));
    assert_eq!(dphh(&["run", "--mode", "sideways"]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("range", "1\n2\n9\n"), ("junk", "1\nx\n"), ("empty", "")] {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let out = dphh(&[
            "run",
            "--mode",
            "oracle",
            "--input",
            p.to_str().unwrap(),
            "--universe",
            "5",
            "--window",
            "1",
        ]);
        assert_eq!(out.status.code(), Some(3), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let missing = dphh(&["run", "--mode", "oracle", "--input", "/nonexistent/stream", "--window", "1"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn stdin_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# oracle on stdin\nmode = oracle\nuniverse = 4\nwindow = 3\nalpha = 0.4\n")
        .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_dphh"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--input", "-", "--window", "4"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"3\n3\n1\n2\n3\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["window"], 4, "flags override the file");
    assert_eq!(doc["config"]["alpha"], 0.4);
    assert_eq!(doc["l1_heavy"]["must_report"][0]["item"], 3);
}

fn continual_lines(generator: &str, length: &str, window: &str, universe: &str) -> Vec<Value> {
    let out = dphh(&[
        "run",
        "--mode",
        "continual",
        "--generator",
        generator,
        "--length",
        length,
        "--universe",
        universe,
        "--window",
        window,
        "--alpha",
        "0.5",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn continual_constant_and_distinct() {
    let lines = continual_lines("planted:2:1.0", "1024", "256", "8");
    assert_eq!(lines.len(), 1024);
    assert!(lines[0]["config"].is_object() && lines[1].get("config").is_none());
    assert!(lines.iter().enumerate().all(|(i, l)| l["t"] == i as u64 + 1));
    let late = &lines[255..];
    let hits =
        late.iter().filter(|l| l["entries"].as_array().unwrap().iter().any(|e| e["item"] == 2)).count();
    assert!(hits * 100 >= late.len() * 95);

    let lines = continual_lines("distinct", "3000", "1024", "5000");
    assert_eq!(lines.len(), 3000);
    let empty = lines.iter().filter(|l| l["entries"].as_array().unwrap().is_empty()).count();
    assert!(empty * 100 >= 3000 * 95, "{empty}");
}

#[test]
fn oneshot_planted_noise_off_matches_oracle() {
    let common = [
        "--generator",
        "planted:7:0.25",
        "--length",
        "4000",
        "--universe",
        "200",
        "--window",
        "2000",
        "--alpha",
        "0.2",
        "--seed",
        "3",
    ];
    let run = ok_json(&refs(&with(
        FAST_L2,
        &[&["run", "--mode", "oneshot-l2", "--noise", "false"][..], &common].concat(),
    )));
    let oracle = ok_json(&[&["run", "--mode", "oracle"][..], &common].concat());
    let norm = oracle["l2"].as_f64().unwrap();
    let truth = oracle["l2_heavy"]["must_report"][0]["freq"].as_f64().unwrap();
    let entry =
        run["entries"].as_array().unwrap().iter().find(|e| e["item"] == 7).expect("planted item reported");
    assert!((entry["noisy_freq"].as_f64().unwrap() - truth).abs() <= 0.2 / 4.0 * norm);
    assert!(run["released_norm"].is_number());
    assert!(run["space"]["instances"].as_u64().unwrap() >= 1);
    assert!(run.get("wall_time_ms").is_none());
}

#[test]
fn experiment_document_schema() {
    let args = with(
        FAST_L2,
        &[
            "experiment",
            "--mode",
            "oneshot-l2",
            "--generator",
            "planted:1:0.3",
            "--length",
            "3000",
            "--universe",
            "150",
            "--window",
            "1500",
            "--alpha",
            "0.2",
            "--noise",
            "false",
            "--trials",
            "20",
            "--emit-timing",
        ],
    );
    let doc = ok_json(&refs(&args));
    for key in [
        "config",
        "trials",
        "precision",
        "recall",
        "error_normalizer",
        "max_error",
        "mean_error",
        "failures",
        "failure_rate",
        "failure_target",
        "instances",
        "per_trial",
        "wall_time_ms",
    ] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["recall"], 1.0);
    assert_eq!(doc["precision"], 1.0);
    assert_eq!(doc["error_normalizer"], "l2");
    assert!((doc["failure_target"].as_f64().unwrap() - 1.0 / 3000.0).abs() < 1e-12);
    let per = doc["per_trial"].as_array().unwrap();
    assert_eq!(per.len(), 20);
    for (i, t) in per.iter().enumerate() {
        assert_eq!(t["trial"], i as u64);
        assert_eq!(t["violations"], 0);
        for key in
            ["seed", "reported", "must_report", "missed", "max_error", "mean_error", "instances", "failed"]
        {
            assert!(t.get(key).is_some(), "per_trial missing {key}");
        }
    }
    let q = &doc["instances"];
    assert!(q["min"].as_f64() <= q["median"].as_f64() && q["median"].as_f64() <= q["max"].as_f64());
    // Distinct trials use distinct seeds.
    assert_ne!(per[0]["seed"], per[1]["seed"]);

    let l1 = ok_json(&[
        "experiment",
        "--mode",
        "oneshot-l1",
        "--generator",
        "planted:1:0.3",
        "--length",
        "3000",
        "--universe",
        "150",
        "--window",
        "1500",
        "--alpha",
        "0.2",
        "--trials",
        "5",
    ]);
    assert_eq!(l1["error_normalizer"], "window");
    assert_eq!(
        dphh(&[
            "experiment",
            "--mode",
            "continual",
            "--generator",
            "uniform",
            "--length",
            "10",
            "--window",
            "5"
        ])
        .status
        .code(),
        Some(2)
    );
}
