//! Driver-level tests: exit codes and file handling.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_blockqp")
}

#[test]
fn missing_input_exits_3() {
    let out = Command::new(bin())
        .args(["solve", "/nonexistent/missing.bap"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_input_exits_3_with_line_number() {
    let dir = std::env::temp_dir().join("blockqp-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.bap");
    std::fs::write(&path, "bap 1\nname x\nfamily y\nseed 0\nrng chacha8\nblocks oops\n").unwrap();
    let out = Command::new(bin()).arg("solve").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "parse error should cite a line: {err}");
}

#[test]
fn iteration_limit_exits_2() {
    let dir = std::env::temp_dir().join("blockqp-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("limit.bap");
    let status = Command::new(bin())
        .args(["gen", "cta", "--rows", "4", "--cols", "4", "--blocks", "3", "--seed", "1"])
        .arg("-o")
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(bin())
        .arg("solve")
        .arg(&path)
        .args(["--tol", "1e-9", "--max-iter", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_both_tables() {
    let dir = std::env::temp_dir().join("blockqp-cli-bench-test");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    for seed in 1..=3u64 {
        let path = dir.join(format!("p{seed}.bap"));
        let status = Command::new(bin())
            .args(["gen", "rand-t1", "--blocks", "2", "--mi", "2", "--ni", "4"])
            .args(["--seed", &seed.to_string()])
            .arg("-o")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let out_stem = dir.join("table");
    let status = Command::new(bin())
        .args(["bench", "--solvers", "sgs-admm,spalm", "--dir"])
        .arg(&dir)
        .arg("--out")
        .arg(&out_stem)
        .status()
        .unwrap();
    assert!(status.success());
    let md = std::fs::read_to_string(out_stem.with_extension("md")).unwrap();
    // header + separator + 3 instances x 2 solvers
    assert_eq!(md.lines().count(), 8, "table:\n{md}");
    assert!(md.lines().next().unwrap().contains("| Data | Solver |"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_stem.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 6);
}
