use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsmi"))
        .args(args)
        .env_remove("GSMI_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gsmi(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    gsmi(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pairs(tsv: &str) -> BTreeSet<(u64, u64)> {
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("poi_id\tuser_id"));
    lines
        .map(|l| {
            let (p, u) = l.split_once('\t').unwrap();
            (p.parse().unwrap(), u.parse().unwrap())
        })
        .collect()
}

/// Generates the toy dataset and indexes it; returns (dataset dir, index path).
fn toy(dir: &Path, oracle: &str) -> (String, String) {
    let ds = dir.join("ds");
    let idx = dir.join(format!("{oracle}.bin"));
    ok(&["gen", "--seed", "3", "--out", s(&ds)]);
    ok(&[
        "build-index",
        "--dataset",
        s(&ds),
        "--oracle",
        oracle,
        "--fanout",
        "2",
        "--leaf-capacity",
        "2",
        "--out",
        s(&idx),
    ]);
    (s(&ds).to_string(), s(&idx).to_string())
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["solve", "--help"]), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&["--no-such-flag"]), 1);
    assert_eq!(code(&["solve"]), 1);
    assert_eq!(
        code(&["--threads", "0", "gen", "--out", "/nonexistent/x"]),
        1
    );
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bin");
    assert_eq!(code(&["brknn", "--index", s(&missing), "--pois", "0"]), 2);

    let ds = dir.path().join("ds");
    ok(&["gen", "--out", s(&ds)]);
    fs::write(
        ds.join("pois.tsv"),
        "# id\tvertex\toffset\tkeywords\tcheckins\n0\tnot-a-vertex\t0\t\t\n",
    )
    .unwrap();
    assert_eq!(
        code(&["oracle", "topk", "--dataset", s(&ds), "--user", "0"]),
        2
    );
}

#[test]
fn bad_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = toy(dir.path(), "dijkstra");
    assert_eq!(
        code(&["solve", "--index", &idx, "--pois", "0,1", "--b", "3"]),
        1
    );
    assert_eq!(
        code(&["solve", "--index", &idx, "--pois", "0,1", "--method", "nope"]),
        1
    );
    assert_eq!(
        code(&["brknn", "--index", &idx, "--pois", "0", "--alpha", "1.5"]),
        1
    );
}

#[test]
fn toy_pipeline_agrees_with_oracles() {
    let dir = tempfile::tempdir().unwrap();
    for oracle in ["dijkstra", "hub-labels"] {
        let (ds, idx) = toy(dir.path(), oracle);
        let pois = "0,1,2,3,4";
        for k in ["1", "2", "3"] {
            let fast = ok(&[
                "brknn",
                "--index",
                &idx,
                "--pois",
                pois,
                "--k",
                k,
                "--stats",
                s(&dir.path().join("st.json")),
            ]);
            let slow = ok(&[
                "oracle",
                "brknn",
                "--dataset",
                &ds,
                "--pois",
                pois,
                "--k",
                k,
            ]);
            assert_eq!(pairs(&fast), pairs(&slow), "k = {k}, {oracle}");
        }
        let stats: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("st.json")).unwrap()).unwrap();
        assert!(stats["stats"]["users_scored"].as_u64().is_some());
    }

    let (ds, idx) = toy(dir.path(), "hub-labels");
    for method in [
        "ap",
        "ba",
        "he",
        "relevance",
        "influencer",
        "maxbrknn",
        "random",
    ] {
        let out: serde_json::Value = serde_json::from_str(&ok(&[
            "solve",
            "--index",
            &idx,
            "--pois",
            "0,1,2,3,4",
            "--method",
            method,
            "--b",
            "2",
            "--k",
            "2",
        ]))
        .unwrap();
        let picked: BTreeSet<u64> = out["P_s"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        assert_eq!(picked.len(), 2, "{method}");
        assert!(picked.iter().all(|&p| p < 5));
        assert_eq!(out["method"], method);
    }

    // Exact enumeration is limited to 20 social edges; the toy has more.
    assert_eq!(
        code(&[
            "oracle",
            "influence",
            "--dataset",
            &ds,
            "--seeds",
            "0",
            "--mode",
            "exact"
        ]),
        1
    );
    let mc: serde_json::Value = serde_json::from_str(&ok(&[
        "oracle",
        "influence",
        "--dataset",
        &ds,
        "--seeds",
        "0,1",
        "--sims",
        "2000",
    ]))
    .unwrap();
    let (m, se) = (
        mc["influence"].as_f64().unwrap(),
        mc["stderr"].as_f64().unwrap(),
    );
    assert!((2.0..=8.0).contains(&m) && se >= 0.0, "{m} ± {se}");
}

#[test]
fn solve_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = toy(dir.path(), "hub-labels");
    let run = |threads: &str| -> serde_json::Value {
        let text = ok(&[
            "--threads",
            threads,
            "solve",
            "--index",
            &idx,
            "--pois",
            "0,1,2,3,4",
            "--b",
            "2",
            "--k",
            "2",
            "--seed",
            "9",
        ]);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn bench_writes_one_row_per_method_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = toy(dir.path(), "hub-labels");
    let out = dir.path().join("sweep");
    ok(&[
        "bench",
        "--index",
        &idx,
        "--sweep",
        "b",
        "--values",
        "1,2",
        "--methods",
        "ap,random,maxbrknn",
        "--pois",
        "0,1,2,3,4",
        "--k",
        "2",
        "--mc-sims",
        "200",
        "--out",
        s(&out),
    ]);
    let tsv = fs::read_to_string(out.with_extension("tsv")).unwrap();
    let mut lines = tsv.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert!(header.contains(&"influence_se") && header.contains(&"manifest_hash"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
}
