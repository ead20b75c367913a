use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn avmark(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avmark"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn simulate(dir: &Path, videos: &str) {
    let out = avmark(dir, &["simulate", "--videos", videos, "--frames", "50", "-o", "ds"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_one_score_file_per_video() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "7");
    let ds = tmp.path().join("ds");
    assert!(ds.join("dataset.toml").is_file());
    assert!(ds.join("run.toml").is_file());
    assert_eq!(fs::read_dir(ds.join("scores")).unwrap().count(), 7);
    let first = fs::read_to_string(ds.join("scores/v0000.csv")).unwrap();
    assert_eq!(first.lines().next(), Some("video_id,frame_index,visual_score,audio_score,label"));
    assert_eq!(first.lines().count(), 51);
}

#[test]
fn fuse_then_evaluate_reports_each_run() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "10");
    for variant in ["full", "naive", "offset_gate"] {
        let out = avmark(
            tmp.path(),
            &["fuse", "-i", "ds", "-o", "runs", "-d", "jpeg-q23", "--condition", "jpeg", "--variant", variant],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let frames = fs::read_to_string(tmp.path().join("runs/jpeg__full.frames.csv")).unwrap();
    assert_eq!(frames.lines().count(), 1 + 10 * 50);
    let out = avmark(
        tmp.path(),
        &[
            "evaluate",
            "runs/jpeg__full.frames.csv",
            "runs/jpeg__naive.frames.csv",
            "runs/jpeg__offset_gate.frames.csv",
            "-o",
            "report.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "table,condition,variant,ap,temporal_iou,ece,fpr,auc");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with(",jpeg,full,"));
}

#[test]
fn attribute_gate_maps_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "10");
    let pass = avmark(tmp.path(), &["attribute", "-i", "ds", "-o", "att", "--min-accuracy", "0.5"]);
    assert_eq!(code(&pass), 0, "{}", String::from_utf8_lossy(&pass.stderr));
    assert!(tmp.path().join("att/clean__full.attribution.csv").is_file());
    let strict = avmark(
        tmp.path(),
        &["attribute", "-i", "ds", "-o", "att", "-d", "compress:1", "--min-accuracy", "1"],
    );
    assert_eq!(code(&strict), 1, "{}", String::from_utf8_lossy(&strict.stdout));
}

#[test]
fn input_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "3");
    fs::write(tmp.path().join("bad.toml"), "stages = [\"gate\", \"stretch_correction\"]\n").unwrap();
    for args in [
        vec!["fuse", "-i", "missing"],
        vec!["fuse", "-i", "ds", "-d", "warp:2"],
        vec!["fuse", "-i", "ds", "--variant", "mystery"],
        vec!["fuse", "bad.toml", "-i", "ds"],
        vec!["reproduce", "--table", "T9"],
        vec!["attribute", "-i", "ds", "--min-accuracy", "1.5"],
        vec!["simulate", "--videos", "0"],
        vec!["no-such-command"],
    ] {
        let out = avmark(tmp.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_scores_report_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "2");
    let path = tmp.path().join("ds/scores/v0001.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let fields: Vec<&str> = lines[4].split(',').collect();
    lines[4] = format!("{},{},1.5,{},{}", fields[0], fields[1], fields[3], fields[4]);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = avmark(tmp.path(), &["fuse", "-i", "ds", "-o", "runs"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("v0001.csv:5:"), "{err}");
}
