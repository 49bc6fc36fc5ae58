#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

/// Runs the CLI with a clean seed environment.
pub fn blurbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blurbench"))
        .args(args)
        .env_remove("BLURBENCH_SEED")
        .output()
        .expect("spawn blurbench")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
