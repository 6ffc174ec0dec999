//! End-to-end CLI checks against golden outputs in `tests/golden/`.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the golden files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_infpdo"));
    c.env("INFPDO_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn infpdo")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() || !path.exists() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn golden(name: &str, args: &[&str]) {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(name, &String::from_utf8(out.stdout).unwrap());
}

fn symbol_file(dir: &Path) -> PathBuf {
    let p = dir.join("demo.sym");
    std::fs::write(&p, "# demo symbols\na = x*xi\nb = exp(-xi^2/2)\n").unwrap();
    p
}

#[test]
fn weights_commands() {
    golden(
        "weights_validate",
        &["weights", "validate", "--gevrey", "2"],
    );
    golden(
        "weights_assoc",
        &["weights", "assoc", "--gevrey", "1", "--rho", "0.5,1,10,100"],
    );
    golden(
        "weights_fixture",
        &["weights", "fixture", "counterexample", "--horizon", "32"],
    );
}

#[test]
fn ultrapoly_commands() {
    golden(
        "ultrapoly_build",
        &[
            "ultrapoly",
            "build",
            "--k",
            "2",
            "--strip",
            "1",
            "--grid",
            "0:10:2.5",
        ],
    );
    golden(
        "ultrapoly_check",
        &[
            "ultrapoly",
            "check",
            "--l",
            "1",
            "--q",
            "1",
            "--k",
            "2",
            "--grid",
            "0:10:2.5",
        ],
    );
}

#[test]
fn mollify_partition() {
    golden(
        "mollify_partition",
        &[
            "mollify",
            "partition",
            "--gevrey",
            "2",
            "--R",
            "4",
            "--N",
            "3",
            "--points",
            "9",
        ],
    );
}

#[test]
fn symbols_commands() {
    let dir = tempfile::tempdir().unwrap();
    let f = symbol_file(dir.path());
    let f = f.to_str().unwrap();
    golden(
        "symbols_parse",
        &["symbols", "parse", "x*xi^2", "--diff", "xi"],
    );
    golden("symbols_list", &["symbols", "list", f]);
    golden(
        "symbols_norm",
        &[
            "symbols", "norm", "--file", f, "--name", "b", "--K", "3", "--points", "17",
        ],
    );
}

#[test]
fn quantize_commands() {
    golden(
        "quantize_apply",
        &[
            "quantize",
            "apply",
            "--symbol",
            "xi",
            "--tau",
            "0.5",
            "--grid",
            "64,10",
            "--testfn",
            "hermite:1",
        ],
    );
    golden(
        "quantize_kernel",
        &[
            "quantize",
            "kernel",
            "--symbol",
            "gaussian-ξ",
            "--tau",
            "0",
            "--grid",
            "32,8",
        ],
    );
}

#[test]
fn calculus_commands() {
    golden(
        "calculus_change_quant",
        &[
            "calculus",
            "change-quant",
            "--symbol",
            "x-xi",
            "--tau1",
            "0",
            "--tau",
            "1",
            "--N",
            "3",
        ],
    );
    golden(
        "calculus_compose",
        &["calculus", "compose", "--a", "xi", "--b", "x", "--N", "3"],
    );
    golden(
        "calculus_transpose",
        &[
            "calculus",
            "transpose",
            "--symbol",
            "x-xi",
            "--tau",
            "0",
            "--N",
            "3",
        ],
    );
}

#[test]
fn verify_listing_commands() {
    golden("verify_fixtures", &["verify", "fixtures"]);
    golden("verify_config", &["verify", "config", "--set", "seed=7"]);
}

fn read_tables(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn verify_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sym = symbol_file(dir.path());
    let mut runs = Vec::new();
    for id in ["r1", "r2"] {
        let out = run(&[
            "verify",
            "run",
            "ultrapoly-suite",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            &format!("symbol_file={}", sym.display()),
            "--set",
            "symbols=a,b",
            "--set",
            "budget_k=3",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        // run_id stays "default"; move the tree aside so the second run writes fresh
        let src = dir.path().join("default");
        let dst = dir.path().join(id);
        std::fs::rename(&src, &dst).unwrap();
        runs.push(read_tables(&dst));
    }
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "c02_lower.tsv",
            "c02_sinh.tsv",
            "summary.txt",
            "symbols.tsv"
        ]
    );
}

#[test]
fn verify_run_summary_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "run",
        "partition-suite",
        "--set",
        "run_id=golden",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // drop the temp path
    let text: String = text
        .lines()
        .filter(|l| !l.starts_with("wrote\t"))
        .map(|l| format!("{l}\n"))
        .collect();
    check_golden("verify_run_partition", &text);
    assert!(dir.path().join("golden/summary.txt").is_file());
}

#[test]
fn quasianalytic_order_fails_fast() {
    for args in [
        &["mollify", "partition", "--gevrey", "0.8"][..],
        &[
            "verify",
            "run",
            "--set",
            "bump_s=0.8",
            "--out",
            "/nonexistent-infpdo",
        ][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("quasianalytic"), "{err}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn exit_codes() {
    // a failed check is 1
    let out = run(&["weights", "validate", "--gevrey", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    // bad input is 2
    for args in [
        &["bogus"][..],
        &["verify", "config", "--set", "no_such_key=1"][..],
        &["verify", "run", "nonsense-suite"][..],
        &["symbols", "parse", "x +* xi"][..],
        &[
            "quantize",
            "apply",
            "--symbol",
            "xi",
            "--testfn",
            "hermite:99",
        ][..],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}
