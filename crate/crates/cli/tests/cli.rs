use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wds_core::measures::io::{family_to_json, measure_from_json, measure_to_json};
use wds_core::measures::Measure;
use wds_core::transforms::{example_family, Example};

fn wds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wds"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_example(dir: &Path, name: &str, ex: Example, times: &[f64]) {
    let fam = example_family(&ex, times).unwrap();
    fs::write(dir.join(name), family_to_json(&fam, None)).unwrap();
}

#[test]
fn order_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = wds(d, &["order", "check", "--relation", "wds", "--example", "discrete-k1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&d.join("verdict.json"))["holds"], true);
    let manifest = read_json(&d.join("verdict.manifest.json"));
    let bytes = fs::read(d.join("verdict.json")).unwrap();
    assert_eq!(manifest["outputs"][0]["sha256"], wds_sha(&bytes));

    let out = wds(
        d,
        &[
            "order",
            "check",
            "--relation",
            "st-decreasing",
            "--example",
            "discrete-k1",
            "--out",
            "st.json",
        ],
    );
    assert_eq!(code(&out), 1);
    let v = read_json(&d.join("st.json"));
    assert_eq!(v["holds"], false);
    assert_eq!(v["witness"]["x"], 0.0);

    fs::write(d.join("bad.json"), "{not json").unwrap();
    assert_eq!(
        code(&wds(
            d,
            &["order", "check", "--relation", "wds", "--family", "bad.json"]
        )),
        2
    );
    assert_eq!(
        code(&wds(
            d,
            &["order", "check", "--relation", "nope", "--example", "two-atom"]
        )),
        2
    );
    assert_eq!(code(&wds(d, &["order", "check", "--relation", "wds"])), 2);
    assert_eq!(
        code(&wds(
            d,
            &["order", "check", "--relation", "wds", "--example", "translated"]
        )),
        1
    );
}

fn wds_sha(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn psi_and_barrier_exports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("dirac.json"), measure_to_json(&Measure::dirac(-1.0), None)).unwrap();
    let out = wds(d, &["barrier", "export", "--measure", "dirac.json", "--out", "b.csv"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(d.join("b.csv")).unwrap();
    let knots: Vec<&str> = csv.lines().skip(1).filter(|l| !l.ends_with(",sample")).collect();
    assert_eq!(knots, vec!["0,-1,step"]);

    let out = wds(
        d,
        &[
            "psi",
            "eval",
            "--measure",
            "dirac.json",
            "--grid=-2:0:5",
            "--out",
            "psi.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let rows: Vec<String> = fs::read_to_string(d.join("psi.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(rows[0], "x,value,is_infinite");
    assert_eq!(rows[1], "-2.0,0.0,false");
    assert_eq!(rows[3], "-1.0,inf,true");
    let out = wds(
        d,
        &[
            "psi",
            "eval",
            "--measure",
            "dirac.json",
            "--function",
            "k",
            "--grid",
            "0",
            "--out",
            "k.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(d.join("k.csv")).unwrap().contains("0.0,1.0,false"));
    assert!(d.join("k.manifest.json").exists());

    fs::write(d.join("pos.json"), measure_to_json(&Measure::dirac(1.0), None)).unwrap();
    assert_eq!(
        code(&wds(d, &["psi", "eval", "--measure", "pos.json", "--out", "p.csv"])),
        2
    );
    assert_eq!(
        code(&wds(
            d,
            &[
                "psi",
                "eval",
                "--measure",
                "dirac.json",
                "--grid",
                "x",
                "--out",
                "p.csv"
            ]
        )),
        2
    );
}

#[test]
fn embedding_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_example(d, "fam.json", Example::Discrete { k: 1 }, &[0.2, 0.5, 0.8]);
    let args = |out: &'static str| {
        vec![
            "embed", "simulate", "--family", "fam.json", "--dt", "1e-3", "--paths", "2000", "--seed", "9", "--out", out,
        ]
    };
    let one = wds(d, &args("a"));
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stdout));
    let two = Command::new(env!("CARGO_BIN_EXE_wds"))
        .args(args("b"))
        .current_dir(d)
        .env("WDS_EMBED_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&two), 0);
    let hashes = |dir: &str| -> Vec<Value> {
        let m = read_json(&d.join(dir).join("manifest.json"));
        assert_eq!(m["seed"], 9);
        m["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["sha256"].clone())
            .collect()
    };
    assert_eq!(hashes("a"), hashes("b"));
    assert_eq!(hashes("a").len(), 4);
    let header = fs::read_to_string(d.join("a/time_0.csv")).unwrap();
    assert!(header.starts_with("path_id,T,BT,ST,censored\n"));
    let summary = read_json(&d.join("a/summary.json"));
    assert_eq!(summary["monotone"]["violating_paths"], 0);

    write_example(d, "hat.json", Example::Translated, &[0.25, 0.5, 0.75]);
    let base = [
        "embed", "simulate", "--family", "hat.json", "--dt", "1e-3", "--paths", "2000", "--out",
    ];
    assert_eq!(code(&wds(d, &[&base[..], &["c"]].concat())), 1);
    assert!(!d.join("c").exists());
    assert_eq!(code(&wds(d, &[&base[..], &["c", "--allow-non-wds"]].concat())), 1);
    assert!(
        read_json(&d.join("c/summary.json"))["monotone"]["violating_paths"]
            .as_u64()
            .unwrap()
            > 0
    );
    assert_eq!(
        code(&wds(
            d,
            &["embed", "simulate", "--family", "fam.json", "--dt", "-1", "--out", "e"]
        )),
        2
    );
}

#[test]
fn transforms_write_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap();
    fs::write(d.join("m.json"), measure_to_json(&m, None)).unwrap();
    write_example(d, "fam.json", Example::Discrete { k: 1 }, &[0.2, 0.4, 0.6]);

    let out = wds(
        d,
        &[
            "transform",
            "apply",
            "--name",
            "censor",
            "--params",
            r#"{"a": -3, "b": 0}"#,
            "--in",
            "m.json",
            "--out",
            "c.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(d.join("c.json")).unwrap();
    assert_eq!(measure_from_json(&text).unwrap().mean(), -0.5);
    assert_eq!(
        serde_json::from_str::<Value>(&text).unwrap()["provenance"]["transform"],
        "censor"
    );

    fs::write(d.join("tri.json"), r#"{"triangular": {"w": 0.5, "n": 40}}"#).unwrap();
    let out = wds(
        d,
        &[
            "transform",
            "apply",
            "--name",
            "random-translate",
            "--params",
            "tri.json",
            "--in",
            "fam.json",
            "--out",
            "rt.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&d.join("rt.json"));
    assert!(v["provenance"]["renormalization"].as_f64().unwrap() >= 0.999);
    assert_eq!(
        read_json(&d.join("rt.manifest.json"))["inputs"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    assert_eq!(
        code(&wds(
            d,
            &[
                "order",
                "check",
                "--relation",
                "wds",
                "--family",
                "rt.json",
                "--out",
                "v.json"
            ]
        )),
        0
    );

    let kernel = r#"{"t_grid": [1, 2], "lambda_grid": [0.2, 0.4, 0.6], "values": [[0.5, 0.5, 0], [0, 0.5, 0.5]]}"#;
    let out = wds(
        d,
        &[
            "transform",
            "apply",
            "--name",
            "subordinate",
            "--params",
            kernel,
            "--in",
            "fam.json",
            "--out",
            "s.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = wds(
        d,
        &[
            "transform",
            "apply",
            "--name",
            "convex-combine",
            "--params",
            r#"{"tau": [0.2, 0.6]}"#,
            "--in",
            "fam.json",
            "--out",
            "cc.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let out = wds(
        d,
        &[
            "transform",
            "apply",
            "--name",
            "scale-mix",
            "--params",
            r#"{"lognormal": {"mu": 0, "sigma": 0.1, "n": 100}}"#,
            "--in",
            "m.json",
            "--out",
            "sm.json",
        ],
    );
    assert_eq!(code(&out), 0);

    let bimodal = r#"{"density": {"grid": [-1, 0, 1], "log_values": [0, -2, 0]}}"#;
    let bad = [
        ("random-translate", bimodal, "fam.json"),
        ("convex-combine", r#"{"tau": [0.2, 0.6]}"#, "m.json"),
        ("censor", r#"{"a": 1}"#, "m.json"),
        ("rotate", "{}", "m.json"),
    ];
    for (name, params, input) in bad {
        let out = wds(
            d,
            &[
                "transform",
                "apply",
                "--name",
                name,
                "--params",
                params,
                "--in",
                input,
                "--out",
                "x.json",
            ],
        );
        assert_eq!(code(&out), 2, "{name}");
    }
    assert!(!d.join("x.json").exists());
}

#[test]
fn examples_run_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = wds(d, &["examples", "run", "--name", "prop42", "--out", "ex"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let summary = fs::read_to_string(d.join("ex/summary.txt")).unwrap();
    assert!(summary.starts_with("PASS  1 discrete-closed-form"), "{summary}");
    assert_eq!(
        read_json(&d.join("ex/manifest.json"))["outputs"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    assert_eq!(code(&wds(d, &["examples", "run", "--name", "9", "--out", "ex9"])), 0);
    assert_eq!(code(&wds(d, &["examples", "run", "--name", "nope"])), 2);
    assert_eq!(code(&wds(d, &["examples", "run"])), 2);
}
