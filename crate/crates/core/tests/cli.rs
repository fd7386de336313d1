mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rashomon::dataset::read_csv;
use rashomon::vocabulary::mine_terms;
use serde_json::Value;
use tempfile::TempDir;

const TOY: &str = "a,b,y\n1,0,1\n1,1,1\n0,1,0\n0,0,0\n";
const TOY_Z: &str = "a,b,z,y\n1,0,1,1\n1,1,0,1\n0,1,1,0\n0,0,0,0\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rashomon"))
}

struct Run {
    code: i32,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = bin().args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(path: PathBuf) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// `name:label,...|default` using term names, as the oracle keys use ids.
fn name_key(v: &Value) -> String {
    let mut k = String::new();
    for r in v["rules"].as_array().unwrap() {
        k.push_str(&format!("{}:{},", r["term"].as_str().unwrap(), r["label"]));
    }
    k.push_str(&format!("|{}", v["default"]));
    k
}

fn toy_instance(max_len: usize) -> common::Instance {
    let (data, _) = read_csv(TOY.as_bytes(), "y", None).unwrap();
    let vocab = mine_terms(&data, 1, 0.0).unwrap();
    common::Instance {
        seed: 0,
        data,
        vocab,
        max_len,
    }
}

fn oracle_names(inst: &common::Instance, max_errors: u64) -> BTreeSet<String> {
    common::rashomon_set(inst, max_errors)
        .into_iter()
        .map(|k| {
            let (rules, default) = k.split_once('|').unwrap();
            let mut out = String::new();
            for r in rules.split(',').filter(|r| !r.is_empty()) {
                let (t, y) = r.split_once(':').unwrap();
                out.push_str(&format!(
                    "{}:{y},",
                    inst.vocab.term(t.parse().unwrap()).name
                ));
            }
            format!("{out}|{default}")
        })
        .collect()
}

#[test]
fn mine_writes_terms_and_manifest() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("out");
    let r = run(&[
        "mine",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--max-conj",
        "1",
        "--min-pos-coverage",
        "0.5",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let terms = std::fs::read_to_string(out.join("terms.txt")).unwrap();
    assert_eq!(terms, "{a} 1 1 0 0\n{b} 0 1 1 0\n");
    let m = json(out.join("manifest.json"));
    assert_eq!(m["command"], "mine");
    assert_eq!(m["parameters"]["min_pos_coverage"], 0.5);
    assert_eq!(m["n_terms"], 2);
}

#[test]
fn mine_rejects_bad_coverage_and_empty_data() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("out");
    let r = run(&[
        "mine",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--min-pos-coverage",
        "1.01",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);

    let empty = write(dir.path(), "empty.csv", "a,b,y\n");
    let r = run(&[
        "mine",
        "--data",
        s(&empty),
        "--label-col",
        "y",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);

    let bad = write(dir.path(), "bad.csv", "a,b,y\n1,2,1\n");
    let r = run(&[
        "mine",
        "--data",
        s(&bad),
        "--label-col",
        "y",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("non-binary"), "{}", r.stderr);
}

#[test]
fn terms_source_is_required_exactly_once() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("out");
    let r = run(&[
        "fit",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 2);
    let terms = write(dir.path(), "t.txt", "{a} 1 1 0 0\n");
    let r = run(&[
        "fit",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--terms",
        s(&terms),
        "--mine",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 2);
    let r = run(&["frobnicate"]);
    assert_eq!(r.code, 2);
}

#[test]
fn fit_and_topk_on_toy() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("out");
    let r = run(&[
        "fit",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "2",
        "--lambda",
        "0.1",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let fit = json(out.join("fit.json"));
    assert_eq!(fit["result"]["rules"][0]["term"], "a");
    assert_eq!(fit["result"]["risk"], 0.0);
    assert_eq!(fit["result"]["complete"], true);
    assert_eq!(fit["manifest"]["parameters"]["lambda"], 0.1);

    let r = run(&[
        "topk",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "2",
        "--lambda",
        "0.1",
        "--k",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = json(out.join("topk.json"));
    let answers = t["answers"].as_array().unwrap();
    assert_eq!(answers.len(), 3);
    assert_eq!(answers[0]["rank"], 1);
    assert!(answers
        .windows(2)
        .all(|w| w[0]["score"].as_f64() <= w[1]["score"].as_f64()));
}

#[test]
fn enumerate_matches_oracle_on_files() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let inst = toy_instance(3);

    let out = dir.path().join("eps0");
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "3",
        "--epsilon",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let got: BTreeSet<String> = lines(out.join("solutions.jsonl"))
        .iter()
        .map(name_key)
        .collect();
    assert_eq!(got, oracle_names(&inst, 0));
    let stats = json(out.join("stats.json"));
    assert_eq!(stats["tolerances"][0]["count"], got.len());
    assert_eq!(stats["stats"]["complete"], true);
    assert_eq!(stats["reference"]["risk"], 0.0);

    let out = dir.path().join("eps1");
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "3",
        "--epsilon",
        "1.0",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let all = lines(out.join("solutions.jsonl"));
    assert_eq!(all.len(), oracle_names(&inst, 4).len());
}

#[test]
fn enumerate_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (d, z) = rashomon::synthetic::planted(&rashomon::synthetic::SyntheticConfig {
        n_examples: 300,
        n_features: 8,
        ..Default::default()
    });
    let mut buf = Vec::new();
    d.write_csv(&mut buf, Some(&z)).unwrap();
    let data = write(dir.path(), "syn.csv", std::str::from_utf8(&buf).unwrap());
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let r = run(&[
            "enumerate",
            "--data",
            s(&data),
            "--label-col",
            "y",
            "--sensitive-col",
            "z",
            "--mine",
            "--max-conj",
            "2",
            "--max-len",
            "3",
            "--epsilon",
            "0.02",
            "--epsilon",
            "0.05",
            "--threads",
            threads,
            "--out",
            s(&out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        outputs.push(std::fs::read(out.join("solutions.jsonl")).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn enumerate_timeout_exits_4_with_partial_output() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("o");
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-errors",
        "4",
        "--timeout-s",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    let stats = json(out.join("stats.json"));
    assert_eq!(stats["stats"]["complete"], false);
    assert!(out.join("solutions.jsonl").exists());
}

#[test]
fn enumerate_needs_a_threshold() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("o");
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 2);
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--epsilon",
        "1.5",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn compare_on_toy() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("o");
    let r = run(&[
        "compare",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "3",
        "--lambda",
        "0.015",
        "--k",
        "5",
        "--timeout-s",
        "10",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = json(out.join("compare.json"));
    assert_eq!(c["enumerator"]["complete"], true);
    assert_eq!(c["lawler"]["complete"], true);
    assert_eq!(c["agreement"]["agree"], true);
    // Only four term sets exist on the toy: {}, {a}, {b}, {a, b}.
    assert_eq!(c["lawler"]["models"], 4);
    assert_eq!(c["enumerator"]["term_sets"], 4);
    assert!(c["enumerator"]["models"].as_u64() >= c["lawler"]["models"].as_u64());
    let csv = std::fs::read_to_string(out.join("rank_objective.csv")).unwrap();
    assert!(csv.starts_with("rank,objective,method\n"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",lawler")).count(), 4);

    let out = dir.path().join("zero");
    let r = run(&[
        "compare",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--mine",
        "--k",
        "5",
        "--timeout-s",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = json(out.join("compare.json"));
    assert_eq!(c["enumerator"]["complete"], false);
    assert_eq!(c["lawler"]["complete"], false);
    assert_eq!(c["enumerator"]["models"], 0);
    assert_eq!(c["lawler"]["models"], 0);
}

fn reference_file(dir: &Path) -> PathBuf {
    write(
        dir,
        "ref.json",
        r#"{"rules":[{"term":"a","label":1}],"default":0,"risk":0.0,"objective":0.0,"length":2}"#,
    )
}

fn analyze(dir: &Path, data: &Path, solutions: &str, extra: &[&str]) -> (Run, PathBuf) {
    let sol = write(dir, "sol.jsonl", solutions);
    let reference = reference_file(dir);
    let out = dir.join("analysis");
    let mut args = vec![
        "analyze",
        "--data",
        s(data),
        "--label-col",
        "y",
        "--mine",
        "--max-len",
        "2",
        "--solutions",
        s(&sol),
        "--reference",
        s(&reference),
        "--epsilon",
        "0.5",
        "--out",
        s(&out),
    ];
    args.extend_from_slice(extra);
    (run(&args), out)
}

const HA: &str =
    r#"{"rules":[{"term":"a","label":1}],"default":0,"risk":0.0,"objective":0.0,"length":2}"#;
const HB: &str =
    r#"{"rules":[{"term":"b","label":1}],"default":0,"risk":0.5,"objective":0.5,"length":2}"#;

#[test]
fn analyze_singleton_has_no_multiplicity() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let (r, out) = analyze(dir.path(), &data, &format!("{HA}\n"), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = json(out.join("metrics.json"));
    assert_eq!(m["reports"][0]["n_models"], 1);
    assert_eq!(m["reports"][0]["ambiguity"], 0.0);
    assert_eq!(m["reports"][0]["discrepancy"], 0.0);
}

#[test]
fn analyze_toy_pair_matches_definitions() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY_Z);
    let (r, out) = analyze(
        dir.path(),
        &data,
        &format!("{HA}\n{HB}\n"),
        &["--sensitive-col", "z", "--fairness"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = json(out.join("metrics.json"));
    let rep = &m["reports"][0];
    assert_eq!(rep["n_models"], 2);
    assert_eq!(rep["ambiguity"], 0.5);
    assert_eq!(rep["discrepancy"], 0.5);
    // z = 1010. ha = 1100: P(1|z=1) = 1/2, P(1|z=0) = 1/2. hb = 0110: 1/2 and 1/2.
    assert_eq!(rep["dp_range"], serde_json::json!([0.0, 0.0]));
    // Positives are rows 0 (z=1) and 1 (z=0). ha: 1 and 1 -> 0. hb: 0 and 1 -> -1.
    assert_eq!(rep["eo_range"], serde_json::json!([-1.0, 0.0]));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("epsilon,metric,value\n"));
    assert!(csv.contains("0.5,ambiguity,0.5\n"));
    let per_model = std::fs::read_to_string(out.join("per_model.csv")).unwrap();
    assert_eq!(per_model.lines().count(), 3);
}

#[test]
fn analyze_fairness_needs_sensitive_column() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let (r, _) = analyze(dir.path(), &data, &format!("{HA}\n"), &["--fairness"]);
    assert_eq!(r.code, 2);
}

#[test]
fn analyze_empty_group_is_a_warning() {
    let dir = TempDir::new().unwrap();
    let data = write(
        dir.path(),
        "toy.csv",
        "a,b,z,y\n1,0,0,1\n1,1,0,1\n0,1,0,0\n0,0,0,0\n",
    );
    let (r, out) = analyze(
        dir.path(),
        &data,
        &format!("{HA}\n{HB}\n"),
        &["--sensitive-col", "z", "--fairness"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.contains("warning"));
    let m = json(out.join("metrics.json"));
    assert_eq!(m["reports"][0]["discrepancy"], 0.5);
    assert!(m["reports"][0].get("dp_range").is_none());
    assert_eq!(m["warnings"].as_array().unwrap().len(), 2);
}

#[test]
fn enumerate_then_analyze_pipeline() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY_Z);
    let enum_out = dir.path().join("enum");
    let r = run(&[
        "enumerate",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--sensitive-col",
        "z",
        "--mine",
        "--max-len",
        "2",
        "--epsilon",
        "0.25",
        "--epsilon",
        "0.5",
        "--out",
        s(&enum_out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = dir.path().join("an");
    let r = run(&[
        "analyze",
        "--data",
        s(&data),
        "--label-col",
        "y",
        "--sensitive-col",
        "z",
        "--mine",
        "--max-len",
        "2",
        "--solutions",
        s(&enum_out.join("solutions.jsonl")),
        "--reference",
        s(&enum_out.join("stats.json")),
        "--epsilon",
        "0.25",
        "--epsilon",
        "0.5",
        "--fairness",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let stats = json(enum_out.join("stats.json"));
    let m = json(out.join("metrics.json"));
    for i in 0..2 {
        assert_eq!(m["reports"][i]["n_models"], stats["tolerances"][i]["count"]);
    }
}
