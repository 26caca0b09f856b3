#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

pub const SEED: &str = "3442";
/// Pairs drawn by the golden noise stage.
pub const NOISE_COUNT: &str = "120";
pub const BLESS_ENV: &str = "DIALSUM_BLESS";

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn samples() -> PathBuf {
    repo_root().join("samples")
}

pub fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub fn run(args: &[String]) -> i32 {
    let mut argv = vec!["dialsum".to_string()];
    argv.extend(args.iter().cloned());
    dialsum_cli::run(argv)
}

pub fn run_ok(args: &[String]) {
    let code = run(args);
    assert_eq!(code, 0, "dialsum {} exited with {code}", args.join(" "));
}

macro_rules! argv {
    ($($a:expr),* $(,)?) => { [$($a.to_string()),*] };
}
#[allow(unused_imports)]
pub(crate) use argv;

/// ingest, clean, roles, noise and stats on the bundled raw sample, plus
/// stats on the parallel sample. Each stage writes to its own directory.
pub fn run_pipeline(out: &Path, jobs: usize) {
    let sm = samples();
    let j = jobs.to_string();
    let d = |name: &str| out.join(name);
    run_ok(&argv![
        "--jobs",
        j,
        "ingest",
        "--input",
        s(&sm.join("raw/chat_rows.jsonl")),
        "--spec",
        s(&sm.join("chat_rows.toml")),
        "--input",
        s(&sm.join("raw/meetings.jsonl")),
        "--spec",
        s(&sm.join("meetings.toml")),
        "--out",
        s(&d("ingest"))
    ]);
    run_ok(&argv![
        "--jobs",
        j,
        "clean",
        "--in",
        s(&d("ingest").join("dialogues.jsonl")),
        "--eval",
        s(&sm.join("eval_dialogues.jsonl")),
        "--out",
        s(&d("clean"))
    ]);
    run_ok(&argv![
        "--jobs",
        j,
        "roles",
        "--in",
        s(&d("clean").join("cleaned.jsonl")),
        "--seed",
        SEED,
        "--out",
        s(&d("roles"))
    ]);
    run_ok(&argv![
        "--jobs",
        j,
        "noise",
        "--in",
        s(&d("roles").join("roles.jsonl")),
        "--config",
        s(&sm.join("noise.toml")),
        "--mix",
        s(&sm.join("mix.toml")),
        "--seed",
        SEED,
        "--count",
        NOISE_COUNT,
        "--out",
        s(&d("noise"))
    ]);
    run_ok(&argv![
        "--jobs",
        j,
        "stats",
        "--in",
        s(&d("roles").join("roles.jsonl")),
        "--out",
        s(&d("stats"))
    ]);
    run_ok(&argv![
        "--jobs",
        j,
        "stats",
        "--in",
        s(&sm.join("parallel.jsonl")),
        "--out",
        s(&d("parallel_stats"))
    ]);
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Byte comparison of two directory trees; returns a description of the
/// first differences.
pub fn compare_trees(expected: &Path, actual: &Path) -> Result<(), String> {
    let a = files_under(expected);
    let b = files_under(actual);
    if a != b {
        return Err(format!("file lists differ: expected {a:?}, got {b:?}"));
    }
    let mut diffs = Vec::new();
    for f in &a {
        if fs::read(expected.join(f)).unwrap() != fs::read(actual.join(f)).unwrap() {
            diffs.push(f.display().to_string());
        }
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(format!("contents differ: {}", diffs.join(", ")))
    }
}

/// Replaces the golden tree with `actual`.
pub fn bless(actual: &Path) {
    let g = golden();
    if g.exists() {
        fs::remove_dir_all(&g).unwrap();
    }
    for f in files_under(actual) {
        let dst = g.join(&f);
        fs::create_dir_all(dst.parent().unwrap()).unwrap();
        fs::copy(actual.join(&f), dst).unwrap();
    }
}

pub fn blessing() -> bool {
    std::env::var_os(BLESS_ENV).is_some()
}
