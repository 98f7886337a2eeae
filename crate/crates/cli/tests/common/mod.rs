#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn dbcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbcsp"))
        .args(args)
        .env("DBCSP_THREADS", "2")
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it exits with `code`.
pub fn dbcsp_expect(args: &[&str], code: i32) -> String {
    let out = dbcsp(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "dbcsp {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Small seeded dataset with imperfect separation so accuracies vary.
pub fn small_dataset(dir: &Path) -> PathBuf {
    let out = dir.join("data");
    dbcsp_expect(
        &[
            "generate",
            "--out",
            path_str(&out),
            "--channels",
            "5",
            "--samples",
            "30",
            "--n1",
            "12",
            "--n2",
            "12",
            "--variance-ratio",
            "1.4",
            "--noise-sd",
            "1",
            "--seed",
            "11",
        ],
        0,
    );
    out.join("manifest.json")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
}
