#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssmseg::SynthScript;

pub fn ssmseg(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ssmseg"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("SSMSEG_THREADS", n.to_string()),
        None => cmd.env_remove("SSMSEG_THREADS"),
    };
    cmd.output().expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = ssmseg(args, None);
    assert!(
        out.status.success(),
        "ssmseg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Writes a library-voice script into `dir` and renders it through the
/// `synth` subcommand. Returns the WAV and reference paths.
pub fn synth(dir: &Path, name: &str, schedule: &[(&str, f64)], seed: u64) -> (PathBuf, PathBuf) {
    let script = dir.join(format!("{name}.txt"));
    std::fs::write(&script, SynthScript::with_library(schedule, seed).to_text()).unwrap();
    let wav = dir.join(format!("{name}.wav"));
    let reference = dir.join(format!("{name}.ref"));
    ok(&[
        "synth",
        path_str(&script),
        "--out-wav",
        path_str(&wav),
        "--out-ref",
        path_str(&reference),
    ]);
    (wav, reference)
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
