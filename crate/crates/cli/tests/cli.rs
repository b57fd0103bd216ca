use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn blockip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockip"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The run report is the last JSON object on stderr.
fn report(out: &Output) -> Value {
    let err = stderr(out);
    let start = err.rfind("\n{").map_or(0, |i| i + 1);
    serde_json::from_str(&err[start..]).expect("report is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn nfold_file_routes_to_nfold_solver() {
    let dir = TempDir::new().unwrap();
    let gen = blockip(dir.path(), &["generate", "random-snf", "--seed", "7", "--t-b", "0", "--out", "n.json"]);
    assert_eq!(code(&gen), 0, "{}", stderr(&gen));
    let out = blockip(dir.path(), &["solve", "n.json", "--out", "s.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["structure"], "nfold_snf_eligible");
    assert_eq!(r["solver"], "nfold_snf");
    assert_eq!(r["status"], "optimal");
    let sol = read_json(&dir.path().join("s.json"));
    assert_eq!(sol["solver_tag"], "nfold_snf");
    assert_eq!(r["objective"], sol["objective"]);
}

#[test]
fn hard_class_is_unsupported_without_override() {
    let dir = TempDir::new().unwrap();
    blockip(dir.path(), &["generate", "theorem1", "--betas", "3,5,8", "--target", "8", "--out", "t.json"]);
    let out = blockip(dir.path(), &["solve", "t.json"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("t_A ≥ s_A+2: NP-hard class"), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["status"], "unsupported");
    assert!(r.get("objective").is_none());
}

#[test]
fn bruteforce_matches_sidecar() {
    let dir = TempDir::new().unwrap();
    for (i, (betas, target)) in [("3,5,8", "8"), ("2,4", "7"), ("4,6,9", "11"), ("1,2,4,8", "15")]
        .iter()
        .enumerate()
    {
        for kind in ["theorem1", "theorem2a", "theorem2b"] {
            let file = format!("{kind}-{i}.json");
            let gen = blockip(
                dir.path(),
                &["generate", kind, "--betas", betas, "--target", target, "--out", &file],
            );
            assert_eq!(code(&gen), 0, "{}", stderr(&gen));
            let answer = read_json(&dir.path().join(format!("{file}.answer.json")));
            let out = blockip(
                dir.path(),
                &["solve", &file, "--solver", "bruteforce", "--budget", "1000000000000"],
            );
            let feasible = answer["feasible"].as_bool().unwrap();
            assert_eq!(code(&out), if feasible { 0 } else { 4 }, "{kind} {betas} {target}");
            let r = report(&out);
            assert_eq!(r["status"], if feasible { "optimal" } else { "infeasible" });
        }
    }
    // about 1.3·10⁷ lattice points against the default budget of 10⁷
    let out = blockip(dir.path(), &["solve", "theorem1-3.json", "--solver", "bruteforce"]);
    assert_eq!(code(&out), 3);
    assert_eq!(report(&out)["status"], "budget_exceeded");
}

#[test]
fn verify_round_trip_and_tampering() {
    let dir = TempDir::new().unwrap();
    blockip(dir.path(), &["generate", "random-ones", "--seed", "3", "--n", "4", "--out", "o.json"]);
    let out = blockip(dir.path(), &["solve", "o.json", "--out", "s.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report(&out)["solver"], "ones");
    assert_eq!(code(&blockip(dir.path(), &["verify", "o.json", "s.json"])), 0);

    let sol = read_json(&dir.path().join("s.json"));
    let mut moved = sol.clone();
    let x0: i64 = moved["x"][0].as_str().unwrap().parse().unwrap();
    moved["x"][0] = Value::String((x0 + 1).to_string());
    fs::write(dir.path().join("moved.json"), moved.to_string()).unwrap();
    let out = blockip(dir.path(), &["verify", "o.json", "moved.json"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("violated"), "{}", stderr(&out));
    assert!(stderr(&out).contains("row"), "{}", stderr(&out));

    let mut tampered = sol;
    let obj: i64 = tampered["objective"].as_str().unwrap().parse().unwrap();
    tampered["objective"] = Value::String((obj + 1).to_string());
    fs::write(dir.path().join("tampered.json"), tampered.to_string()).unwrap();
    let out = blockip(dir.path(), &["verify", "o.json", "tampered.json"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("objective mismatch"), "{}", stderr(&out));
}

#[test]
fn every_solver_output_verifies() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &[&str]); 3] = [
        ("random-ones", &["--t-b", "1"]),
        ("random-snf", &["--t-b", "0"]),
        ("random-snf", &["--t-b", "1", "--n", "3"]),
    ];
    for (kind, extra) in cases {
        for seed in 0..6 {
            let seed = seed.to_string();
            let mut args = vec!["generate", kind, "--seed", &seed, "--out", "i.json"];
            args.extend_from_slice(extra);
            assert_eq!(code(&blockip(dir.path(), &args)), 0);
            let out = blockip(dir.path(), &["solve", "i.json", "--out", "s.json"]);
            match code(&out) {
                0 => assert_eq!(code(&blockip(dir.path(), &["verify", "i.json", "s.json"])), 0),
                4 => assert_eq!(report(&out)["status"], "infeasible"),
                c => panic!("{kind} seed {seed}: exit {c}: {}", stderr(&out)),
            }
        }
    }
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| blockip(dir.path(), &["generate", "random-snf", "--seed", "7"]).stdout)
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(!runs[0].is_empty());

    let t1 = |seed: &str| {
        blockip(dir.path(), &["generate", "theorem1", "--betas", "3,5,8", "--target", "8", "--seed", seed]).stdout
    };
    assert_eq!(t1("1"), t1("2"));
    let inst: Value = serde_json::from_slice(&t1("1")).unwrap();
    assert_eq!(inst["n"], 3);
}

#[test]
fn random_kinds_classify_as_promised() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let seed = seed.to_string();
        for (kind, structure) in [("random-ones", "all_ones_row"), ("random-snf", "snf_eligible")] {
            blockip(dir.path(), &["generate", kind, "--seed", &seed, "--out", "i.json"]);
            let out = blockip(dir.path(), &["solve", "i.json", "--solver", "bruteforce"]);
            assert_eq!(report(&out)["structure"], structure, "{kind} seed {seed}");
        }
    }
}

#[test]
fn bench_shapes() {
    let dir = TempDir::new().unwrap();
    let out = blockip(dir.path(), &["bench", "nfold-linear", "--repeat", "1", "--csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, n) in rows.iter().zip(["1000", "10000", "100000"]) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[2], n);
        assert_eq!(cells[5], "optimal");
    }

    let out = blockip(dir.path(), &["bench", "logdelta", "--repeat", "1", "--n", "10", "--csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row.contains(",optimal,"), "{row}");
    }

    let out = blockip(dir.path(), &["bench", ""]);
    assert_eq!(code(&out), 2);
}

#[test]
fn parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"n\": 1").unwrap();
    assert_eq!(code(&blockip(dir.path(), &["solve", "bad.json"])), 2);
    assert_eq!(code(&blockip(dir.path(), &["solve", "missing.json"])), 2);
    assert_eq!(code(&blockip(dir.path(), &["solve", "bad.json", "--solver", "simplex"])), 2);
}
