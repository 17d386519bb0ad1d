#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_glace"));
    c.env("RUST_LOG", "warn");
    c
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Two-community graph with string ids, block-revealing attributes and labels.
pub fn write_fixture(dir: &Path, block: usize, seed: u64) -> (PathBuf, PathBuf, PathBuf) {
    let n = 2 * block;
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut edges = String::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if (i < block) == (j < block) { 0.5 } else { 0.02 };
            if next() < p {
                edges += &format!("v{i} v{j}\n");
            }
        }
    }
    let mut attrs = format!("{n} 6\n");
    let mut labels = String::new();
    for i in 0..n {
        let c = usize::from(i >= block);
        attrs += &format!("v{i} {c} 1.0\nv{i} {} 0.5\n", 2 + i % 4);
        labels += &format!("v{i} {}\n", if c == 0 { "alpha" } else { "beta" });
    }
    let (e, a, l) = (dir.join("edges.txt"), dir.join("attrs.txt"), dir.join("labels.txt"));
    std::fs::write(&e, edges).unwrap();
    std::fs::write(&a, attrs).unwrap();
    std::fs::write(&l, labels).unwrap();
    (e, a, l)
}

pub const SMALL: [&str; 10] = ["--dim", "4", "--hidden", "8", "--batch", "32", "--iters", "40", "--lr", "0.01"];
