use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frechet_coreset::curve::io::{load_dataset, load_weighted_set, Format};
use frechet_coreset::frechet::{frechet_distance, DistanceQueryOptions};
use frechet_coreset::verify::{parse_frechet_cases, BUNDLED_FRECHET_CASES};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frechet-coreset")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn distance_of_identical_files_is_zero() {
    let dir = Dir::new();
    let a = dir.write("a.jsonl", r#"{"id":"a","vertices":[[0,0],[1,2],[3,1]]}"#);
    let b = dir.write("b.jsonl", r#"{"id":"b","vertices":[[0,0],[1,2],[3,1]]}"#);
    let o = run(&["distance", &a, &b]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);
}

#[test]
fn distance_of_points_is_euclidean_with_17_digits() {
    let dir = Dir::new();
    let a = dir.write("a.csv", "id,x1,x2\np,0,0\n");
    let b = dir.write("b.csv", "id,x1,x2\nq,3,4\n");
    let o = run(&["distance", &a, &b]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "5.0000000000000000e0");
}

#[test]
fn distance_matches_the_library() {
    let dir = Dir::new();
    let data = dir.path("d.jsonl");
    assert_eq!(run(&["--seed", "2", "generate", "--per-cluster", "2", "--output", s(&data)]).status.code(), Some(0));
    let t = load_dataset(std::fs::File::open(&data).unwrap(), Format::Jsonl).unwrap();
    let text = std::fs::read_to_string(&data).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let a = dir.write("a.jsonl", lines[0]);
    let b = dir.write("b.jsonl", lines[3]);
    let o = run(&["distance", &a, &b]);
    let printed: f64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(printed, frechet_distance(t.get(0), t.get(3), &DistanceQueryOptions::default()));
}

#[test]
fn coreset_output_loads_and_has_sidecar() {
    let dir = Dir::new();
    let data = dir.path("d.csv");
    let out = dir.path("core.jsonl");
    assert_eq!(run(&["--seed", "4", "generate", "--output", s(&data)]).status.code(), Some(0));
    let o = run(&[
        "--seed",
        "9",
        "coreset",
        "--input",
        s(&data),
        "--k",
        "3",
        "--ell",
        "3",
        "--coreset-size",
        "15",
        "--output",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let set = load_weighted_set(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(set.len(), 15);
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path("core.jsonl.meta.json")).unwrap()).unwrap();
    for key in ["seed", "n", "k", "ell", "epsilon", "sample_size", "Gamma", "Lambda", "alpha_hat", "profile_sha256"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["n"], 30);
}

#[test]
fn cluster_with_k_equal_n_has_zero_cost() {
    let dir = Dir::new();
    let data = dir.write(
        "d.jsonl",
        "{\"id\":\"a\",\"vertices\":[[0],[1]]}\n{\"id\":\"b\",\"vertices\":[[5],[7]]}\n{\"id\":\"c\",\"vertices\":[[2]]}\n",
    );
    let o = run(&["--seed", "1", "cluster", "--input", &data, "--k", "3", "--ell", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["total_cost"], 0.0);
    assert_eq!(doc["centers"].as_array().unwrap().len(), 3);
}

#[test]
fn median1_emits_curve_and_trace() {
    let dir = Dir::new();
    let data = dir.write(
        "d.jsonl",
        "{\"id\":\"a\",\"vertices\":[[0],[1]]}\n{\"id\":\"b\",\"vertices\":[[0.2],[1.1]]}\n{\"id\":\"c\",\"vertices\":[[0.1],[0.8]]}\n",
    );
    let o = run(&["--seed", "3", "median1", "--input", &data, "--ell", "2", "--coreset-size", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["median"].as_array().unwrap().len() <= 2);
    for key in ["Delta", "Delta_l", "Delta_u", "epsilon_prime", "pivot", "radius", "cell_width"] {
        assert!(doc["trace"].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn missing_seed_is_drawn_and_reported() {
    let o = run(&["generate", "--per-cluster", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    let seed = err.lines().find_map(|l| l.strip_prefix("seed: ")).expect("seed line");
    let again = run(&["--seed", seed, "generate", "--per-cluster", "1"]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn verify_reports_json_and_names_corrupted_fixture() {
    let o = run(&["--seed", "1", "verify", "--suite", "frechet"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);

    let mut cases = parse_frechet_cases(BUNDLED_FRECHET_CASES).unwrap();
    cases[5].distance *= 1.5;
    let dir = Dir::new();
    let fx = dir.write("bad.json", &serde_json::json!({ "cases": cases }).to_string());
    let o = run(&["--seed", "1", "verify", "--suite", "frechet", "--fixtures", &fx]);
    assert_eq!(o.status.code(), Some(4));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], false);
    let name = format!("case:{}", cases[5].name);
    assert!(stderr(&o).contains(&name));
    let failed: Vec<&str> = report["suites"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec![name.as_str()]);
}

#[test]
fn exit_codes() {
    let dir = Dir::new();
    assert_eq!(run(&["distance", s(&dir.path("missing")), s(&dir.path("missing"))]).status.code(), Some(2));
    let bad = dir.write("bad.csv", "id,x1\na,zero\n");
    let o = run(&["distance", &bad, &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(run(&["--seed", "1", "verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["cluster"]).status.code(), Some(2));

    let data = dir.write("d.jsonl", "{\"id\":\"a\",\"vertices\":[[0],[1]]}\n{\"id\":\"b\",\"vertices\":[[3],[5]]}\n");
    let o = run(&["--seed", "1", "median1", "--input", &data, "--ell", "2", "--candidate-cap", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(&["--seed", "1", "median1", "--input", &data, "--ell", "2", "--epsilon", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
}
