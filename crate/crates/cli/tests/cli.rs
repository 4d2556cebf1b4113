use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use cohest_core::oracle::{relaxed_direct, OracleConfig};
use cohest_core::{record_from_state, werner, PauliString};

fn cohest() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cohest"));
    c.env("COHEST_THREADS", "1");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn json_stdout(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

#[test]
fn estimate_uniform_qubit() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = cohest().arg("estimate").arg(data("uniform_d2.json")).arg("--out").arg(&report).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_abs_diff_eq!(v["beta"].as_f64().unwrap(), 0.0, epsilon = 1e-6);
    assert_eq!(v["status"], "Converged");
    let lambda = v["lambda_star"][0].as_f64().unwrap();
    assert_abs_diff_eq!(lambda, -std::f64::consts::LOG2_E, epsilon = 1e-4);
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(written, v);
}

#[test]
fn estimate_singlet_matches_oracle() {
    let out = cohest().arg("estimate").arg(data("werner_p1_xx_yy.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let beta = json_stdout(&out)["beta"].as_f64().unwrap();
    let ops: Vec<_> = ["XX", "YY"].iter().map(|l| l.parse::<PauliString>().unwrap().operator()).collect();
    let record = record_from_state(&werner(1.0).unwrap(), &ops).unwrap();
    let oracle = relaxed_direct(&record, &OracleConfig { restarts: 4, ..OracleConfig::default() }).unwrap();
    assert_abs_diff_eq!(beta, oracle.value, epsilon = 1e-3);
}

#[test]
fn estimate_flags_override_file() {
    let out = cohest().arg("estimate").arg(data("werner_p06_xx.json")).args(["--max-iters", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = json_stdout(&out);
    assert_eq!(v["status"], "MaxIters");
    assert_eq!(v["iterations"], 5);
    assert_eq!(v["primal_constraint_residuals"].as_array().unwrap().len(), 2);
}

#[test]
fn estimate_reports_infeasible_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("infeasible.json");
    std::fs::write(
        &path,
        r#"{"dimension": 4, "basis_probs": [0.25, 0.25, 0.25, 0.25],
            "observables": [{"pauli": "XX"}, {"pauli": "YY"}, {"pauli": "ZZ"}],
            "expectations": [1.0, 1.0, 1.0],
            "solver": {"divergence_bound": 50, "max_iters": 200000}}"#,
    )
    .unwrap();
    let out = cohest().arg("estimate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_stdout(&out)["status"], "Diverged");
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", r#"{"dimension": 2, "basis_probs": [0.5,"#, "basis_probs"),
        ("type.json", r#"{"dimension": 2, "basis_probs": [0.5, true]}"#, "basis_probs[1]"),
        (
            "pauli.json",
            r#"{"dimension": 2, "basis_probs": [0.5, 0.5], "observables": [{"pauli": "Q"}], "expectations": [0]}"#,
            "observables[0].pauli",
        ),
    ];
    for (name, text, field) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = cohest().arg("estimate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{name}: {err}");
    }
    let out = cohest().arg("estimate").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = cohest()
            .args(["bench", "--qubits", "1,2", "--lambdas", "1,2", "--trials", "3", "--seed", "9"])
            .args(["--threads", threads])
            .arg("--out")
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        path
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "2");
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,lambda_count,trial,seed,T,beta,status"));
    assert_eq!(lines.count(), 12);
    let summary = std::fs::read_to_string(dir.path().join("a_summary.csv")).unwrap();
    assert!(summary.starts_with("N,lambda_count,mean_T,std_T\n"));
    assert_eq!(summary.lines().count(), 5);
    assert!(dir.path().join("a.csv.manifest.json").exists());
    assert!(dir.path().join("a_summary.csv.manifest.json").exists());
}

#[test]
fn bench_rejects_impossible_multiplier_counts() {
    let out = cohest().args(["bench", "--qubits", "1", "--lambdas", "4", "--trials", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_scatter_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = cohest()
            .args(["oracle-scatter", "--points", "10", "--dim", "4", "--observables", "XX", "--seed", "3"])
            .args(["--restarts", "8"])
            .arg("--out")
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (path, json_stdout(&out))
    };
    let (a, summary) = run("a.csv");
    let (b, _) = run("b.csv");
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(b).unwrap());
    assert_eq!(summary["violations"], 0);
    let mut rdr = csv::Reader::from_path(&a).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["seed", "alpha", "beta", "gap"]);
    let mut n = 0;
    for row in rdr.records() {
        let gap: f64 = row.unwrap()[3].parse().unwrap();
        assert!(gap >= -1e-4);
        n += 1;
    }
    assert_eq!(n, 10);
}

#[test]
fn oracle_scatter_rejects_large_dimension() {
    let out = cohest().args(["oracle-scatter", "--points", "1", "--dim", "16"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_noiseless_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let out = cohest().arg("simulate").arg(data("fig3_noiseless.json")).arg("--out").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["p", "obs_set", "beta_mean", "beta_std", "rec_qst_mean", "rec_qst_std", "rec_ideal"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    let f = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    for pair in rows.chunks(2) {
        assert_eq!(&pair[0][1], "{ZZ,XX}");
        assert_eq!(&pair[1][1], "{ZZ,XX,YY}");
        assert!(f(&pair[1], 2) >= f(&pair[0], 2) - 1e-6);
        let p = f(&pair[0], 0);
        assert_eq!(f(&pair[0], 6), cohest_core::werner_rec_closed_form(p).unwrap());
    }
    for r in &rows[..2] {
        for i in [2, 4, 6] {
            assert!(f(r, i).abs() <= 1e-4);
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"][0].as_str().unwrap(), path.to_str().unwrap());
}

#[test]
fn simulate_small_noisy_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, r#"{"p_values": [0.4], "shots": 20000, "repetitions": 20, "seed": 5}"#).unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = cohest().arg("simulate").arg(&scenario).arg("--out").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}
