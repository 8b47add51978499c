#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Runs the `refpose` binary in `dir` with a clean environment.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refpose"))
        .args(args)
        .current_dir(dir)
        .env_remove("REFPOSE_SEED")
        .env_remove("REFPOSE_THREADS")
        .output()
        .expect("spawn refpose")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "refpose {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub const SYNTH: &[&str] = &["synth", "--out", "scene", "--seed", "7"];

pub fn refine_args(iterations: &str) -> Vec<&str> {
    vec![
        "refine", "--mesh", "scene/scene.ply", "--cameras", "scene/cameras.txt", "--poses", "scene/poses_init.txt",
        "--matches", "matches", "--out", "refined", "--seed", "1", "--iterations", iterations,
    ]
}

pub const SIMULATE: &[&str] = &[
    "simulate-matches", "--points", "scene/points.txt", "--cameras", "scene/cameras.txt", "--truth",
    "scene/poses_true.txt", "--checkpoints", "refined/checkpoints", "--matches", "matches", "--seed", "3",
];

/// Alternates `refine` and `simulate-matches` until the simulator has
/// nothing left to answer. Returns the number of `refine` invocations.
pub fn refine_loop(dir: &Path, iterations: &str) -> usize {
    for round in 1..=iterations.parse::<usize>().unwrap() + 2 {
        run_ok(dir, &refine_args(iterations));
        if run_ok(dir, SIMULATE).starts_with("wrote 0 ") {
            return round;
        }
    }
    panic!("refinement never completed");
}
