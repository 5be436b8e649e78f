//! End-to-end CLI checks: exit-code contract, determinism, and the
//! gen -> recover -> eval round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relurec"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relurec-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn gen_recover_eval_round_trip() {
    let root = tempdir("roundtrip");
    let inst = root.join("inst");
    let status = bin()
        .args(["gen", "--m", "3", "--k", "2", "--d", "4", "--n", "30"])
        .args(["--activation", "relu", "--noise", "none"])
        .args(["--seed", "42"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["X.mat", "A.mat", "E.mat", "U.mat", "V.mat", "manifest.txt"] {
        assert!(inst.join(f).exists(), "missing {f}");
    }

    let rec = root.join("rec");
    let out = bin()
        .args(["recover", "--algo", "worstcase", "--seed", "1"])
        .arg("--dir")
        .arg(&inst)
        .arg("--out")
        .arg(&rec)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8_lossy(&out.stdout);
    let rel: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("functional_rel "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rel <= 1e-6, "functional_rel {rel}");

    let out = bin()
        .args(["eval"])
        .arg("--dir")
        .arg(&inst)
        .arg("--weights")
        .arg(&rec)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let v_err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("v_error "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(v_err <= 1e-6, "v_error {v_err}");
}

#[test]
fn gen_is_deterministic() {
    let root = tempdir("determinism");
    for tag in ["a", "b"] {
        let status = bin()
            .args(["gen", "--m", "2", "--k", "2", "--d", "3", "--n", "20"])
            .args(["--noise", "gaussian:0.2", "--seed", "7"])
            .arg("--out")
            .arg(root.join(tag))
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(tree_bytes(&root.join("a")), tree_bytes(&root.join("b")));
}

#[test]
fn usage_errors_exit_2() {
    let root = tempdir("usage");
    // invalid shape
    let status = bin()
        .args(["gen", "--m", "2", "--k", "9", "--d", "3", "--n", "10", "--seed", "1"])
        .arg("--out")
        .arg(root.join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // missing instance directory
    let status = bin()
        .args(["eval"])
        .arg("--dir")
        .arg(root.join("missing"))
        .arg("--weights")
        .arg(root.join("missing"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn algorithm_failure_exits_3() {
    let root = tempdir("algofail");
    let inst = root.join("inst");
    // rank-1 labels but k = 2 requested: the worst-case solver refuses
    bin()
        .args(["gen", "--m", "3", "--k", "1", "--d", "3", "--n", "15", "--seed", "3"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap();
    // rewrite manifest k to 2
    let manifest = inst.join("manifest.txt");
    let text = std::fs::read_to_string(&manifest)
        .unwrap()
        .replace("k 1", "k 2");
    std::fs::write(&manifest, text).unwrap();
    let status = bin()
        .args(["recover", "--algo", "worstcase", "--seed", "1"])
        .arg("--dir")
        .arg(&inst)
        .arg("--out")
        .arg(root.join("rec"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn hardness_reduce_verify_brute() {
    let root = tempdir("hardness");
    let cnf = root.join("f.cnf");
    std::fs::write(&cnf, "p cnf 2 1\n1 -2 1 -2 1 -2 0\n").unwrap();
    let inst = root.join("reduced");
    let status = bin()
        .args(["hardness", "reduce"])
        .arg("--cnf")
        .arg(&cnf)
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["hardness", "brute"])
        .arg("--instance")
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["hardness", "verify"])
        .arg("--instance")
        .arg(&inst)
        .arg("--witness")
        .arg(inst.join("witness.mat"))
        .status()
        .unwrap();
    assert!(status.success());
    // an all-zero witness must be rejected with code 3
    let zero = root.join("zero.mat");
    std::fs::write(&zero, "2 4\n0 0 0 0\n0 0 0 0\n").unwrap();
    let status = bin()
        .args(["hardness", "verify"])
        .arg("--instance")
        .arg(&inst)
        .arg("--witness")
        .arg(&zero)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn config_file_flag_precedence() {
    let root = tempdir("config");
    let cfg = root.join("run.cfg");
    std::fs::write(&cfg, "m = 2\nk = 2\nd = 3\nn = 25\nseed = 5\nnoise = none\n").unwrap();
    // flag --n overrides the config's n
    let inst = root.join("inst");
    let status = bin()
        .args(["gen", "--n", "30"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());
    let x = std::fs::read_to_string(inst.join("X.mat")).unwrap();
    assert!(x.starts_with("3 30\n"), "header: {}", x.lines().next().unwrap());
}

#[test]
fn selftest_and_empty_bench() {
    assert!(bin().arg("selftest").status().unwrap().success());
    let status = bin().args(["bench", "--suite", ""]).status().unwrap();
    assert!(status.success(), "empty suite should no-op with exit 0");
}
