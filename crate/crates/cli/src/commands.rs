use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use avmark_core::experiments::{run_table, table_benchmark_config, Condition, TableId, TableOutcome};
use avmark_core::fusion::{GateDecision, OffsetMeasure};
use avmark_core::io::{self, FrameOutputRow, ReportRow, VideoOutputRow};
use avmark_core::model::FrameLabels;
use avmark_core::pipeline::{distort_benchmark, evaluate_run, run_stages, ConditionRun, Variant, VideoOutput};
use avmark_core::simulate::{generate_benchmark_with, parse_distortion};
use avmark_core::Execution;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{Outcome, Overrides};

fn load(path: Option<&Path>, o: &Overrides) -> Result<RunManifest> {
    let mut m = RunManifest::load(path)?;
    if let Some(s) = o.seed {
        m.benchmark.seed = s;
    }
    if let Some(n) = o.videos {
        m.benchmark.video_count = n;
    }
    if let Some(n) = o.frames {
        m.benchmark.frames_per_video = n;
    }
    if let Some(s) = o.split_seed {
        m.pipeline.split.seed = s;
    }
    if let Some(f) = o.validation_fraction {
        m.pipeline.split.validation_fraction = f;
    }
    if o.oracle_calibration {
        m.pipeline.split.oracle = true;
    }
    if let Some(t) = o.tau {
        m.pipeline.gate.tau = t;
    }
    if o.cross_correlation {
        m.pipeline.offset_measure = OffsetMeasure::CrossCorrelation;
    }
    m.validate()?;
    Ok(m)
}

fn execution(o: &Overrides) -> Execution {
    if o.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn output_dir(flag: Option<PathBuf>, m: &RunManifest) -> PathBuf {
    flag.or_else(|| m.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn conditions(m: &RunManifest, distortions: &[String], label: Option<String>) -> Result<Vec<Condition>> {
    if distortions.is_empty() {
        return Ok(m.conditions.clone());
    }
    let mut ds = Vec::new();
    for d in distortions {
        ds.extend(parse_distortion(d)?);
    }
    Ok(vec![Condition::new(label.unwrap_or_else(|| distortions.join("+")), ds)])
}

pub fn simulate(manifest: Option<&Path>, out: Option<PathBuf>, o: &Overrides) -> Result<Outcome> {
    let m = load(manifest, o)?;
    let dir = output_dir(out, &m);
    let records = generate_benchmark_with(&m.benchmark, execution(o))?;
    io::write_dataset(&dir, &records)?;
    io::write_text(&dir.join("run.toml"), &m.to_toml()?)?;
    println!("wrote {} videos to {}", records.len(), dir.display());
    Ok(Outcome::Pass)
}

pub fn fuse(
    manifest: Option<&Path>,
    input: &Path,
    out: Option<PathBuf>,
    variant: &str,
    distortions: &[String],
    label: Option<String>,
    o: &Overrides,
) -> Result<Outcome> {
    let m = load(manifest, o)?;
    let variant: Variant = variant.parse()?;
    let stages = if variant == Variant::Full { m.full_stages()? } else { variant.stages() };
    let dir = output_dir(out, &m);
    let exec = execution(o);
    let records = io::read_dataset(input)?;
    for c in conditions(&m, distortions, label)? {
        let distorted = distort_benchmark(&records, &c.distortions, exec)?;
        let run = run_stages(&distorted, &stages, &m.pipeline, &c.label, variant.as_str(), exec)?;
        let (frames, _) = io::write_run(&dir, &run)?;
        let t = run.calibration.map_or("-".to_string(), |c| format!("{:.4}", c.temperature));
        println!("{}: {} videos, T* = {t}", frames.display(), run.videos.len());
    }
    Ok(Outcome::Pass)
}

fn videos_path(frames: &Path) -> Result<PathBuf> {
    let name = frames.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match name.strip_suffix(".frames.csv") {
        Some(stem) => Ok(frames.with_file_name(format!("{stem}.videos.csv"))),
        None => bail!("{}: expected a *.frames.csv file", frames.display()),
    }
}

/// Rebuilds a run from its two output files.
fn load_run(frames_path: &Path) -> Result<ConditionRun> {
    let frame_rows: Vec<FrameOutputRow> = io::read_csv(frames_path)?;
    let videos_file = videos_path(frames_path)?;
    let video_rows: Vec<VideoOutputRow> =
        io::read_csv(&videos_file).with_context(|| format!("pairing {}", frames_path.display()))?;
    let first = video_rows
        .first()
        .with_context(|| format!("{}: no videos", videos_file.display()))?;
    let mut videos = Vec::with_capacity(video_rows.len());
    let mut rows = frame_rows.iter().peekable();
    for v in &video_rows {
        let mut frames = Vec::new();
        while let Some(r) = rows.next_if(|r| r.video_id == v.video_id) {
            frames.push(r);
        }
        if frames.is_empty() {
            bail!("{}: no frames for video {}", frames_path.display(), v.video_id);
        }
        if frames.iter().any(|r| r.label > 1) {
            bail!("{}: labels for {} must be 0 or 1", frames_path.display(), v.video_id);
        }
        videos.push(VideoOutput {
            id: v.video_id.clone(),
            visual: frames.iter().map(|r| r.visual_score).collect(),
            audio: frames.iter().map(|r| r.audio_score).collect(),
            fused: frames.iter().map(|r| r.fused).collect(),
            calibrated: frames.iter().map(|r| r.calibrated_p).collect(),
            labels: FrameLabels::new(frames.iter().map(|r| r.label == 1).collect()),
            stretch: None,
            gate: v.gate.map(|g| GateDecision {
                g: g == 1,
                visual_mean: v.visual_mean.unwrap_or(f64::NAN),
            }),
            offset_seconds: v.offset_seconds,
            manipulation: v.truth,
            validation: v.split == "validation",
            attribution: None,
        });
    }
    if let Some(r) = rows.next() {
        bail!("{}: frame rows for unknown video {}", frames_path.display(), r.video_id);
    }
    Ok(ConditionRun {
        condition: first.condition.clone(),
        variant: first.variant.clone(),
        calibration: None,
        videos,
    })
}

pub fn evaluate(frames: &[PathBuf], manifest: Option<&Path>, out: &Path, o: &Overrides) -> Result<Outcome> {
    let m = load(manifest, o)?;
    let mut report = Vec::new();
    for f in frames {
        let run = load_run(f)?;
        let r = evaluate_run(&run, &m.pipeline).with_context(|| format!("evaluating {}", f.display()))?;
        report.push(ReportRow::new("", &r));
    }
    io::write_csv(out, &report)?;
    print!("{}", io::to_csv_string(&report)?);
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct CheckRow<'a> {
    table: &'a str,
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

fn write_outcomes(dir: &Path, outcomes: &[TableOutcome]) -> Result<()> {
    for o in outcomes {
        let rows: Vec<ReportRow> = o.rows.iter().map(|r| ReportRow::new(o.table.as_str(), r)).collect();
        io::write_csv(&dir.join(format!("report_{}.csv", o.table.as_str())), &rows)?;
    }
    let checks: Vec<CheckRow> = outcomes
        .iter()
        .flat_map(|o| {
            o.checks.iter().map(move |c| CheckRow {
                table: o.table.as_str(),
                check: &c.name,
                passed: c.passed,
                detail: &c.detail,
            })
        })
        .collect();
    io::write_csv(&dir.join("checks.csv"), &checks)?;
    Ok(())
}

pub fn reproduce(manifest: Option<&Path>, table: &str, out: Option<PathBuf>, o: &Overrides) -> Result<Outcome> {
    let m = load(manifest, o)?;
    let tables: Vec<TableId> = if table.eq_ignore_ascii_case("all") {
        TableId::ALL.to_vec()
    } else {
        vec![table.parse()?]
    };
    let exec = execution(o);
    let gen = avmark_core::simulate::GenConfig {
        scenario_mix: table_benchmark_config(0).scenario_mix,
        ..m.benchmark.clone()
    };
    let benchmark = generate_benchmark_with(&gen, exec)?;
    let mut outcomes = Vec::new();
    for t in tables {
        let outcome = run_table(t, &benchmark, &m.pipeline, exec)?;
        for c in &outcome.checks {
            println!(
                "{} {:<4} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                t.as_str(),
                c.name,
                c.detail
            );
        }
        outcomes.push(outcome);
    }
    let dir = output_dir(out, &m);
    write_outcomes(&dir, &outcomes)?;
    let failed: usize = outcomes.iter().map(|o| o.checks.iter().filter(|c| !c.passed).count()).sum();
    let total: usize = outcomes.iter().map(|o| o.checks.len()).sum();
    println!("{} of {total} checks passed; reports in {}", total - failed, dir.display());
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::AssertionFailed })
}

pub fn attribute(
    manifest: Option<&Path>,
    input: &Path,
    out: Option<PathBuf>,
    distortions: &[String],
    min_accuracy: Option<f64>,
    o: &Overrides,
) -> Result<Outcome> {
    if let Some(min) = min_accuracy {
        anyhow::ensure!((0.0..=1.0).contains(&min), "--min-accuracy {min} must lie in [0, 1]");
    }
    let m = load(manifest, o)?;
    let exec = execution(o);
    let dir = output_dir(out, &m);
    let records = io::read_dataset(input)?;
    let mut ok = true;
    for c in conditions(&m, distortions, None)? {
        let distorted = distort_benchmark(&records, &c.distortions, exec)?;
        let run = run_stages(&distorted, &m.full_stages()?, &m.pipeline, &c.label, "full", exec)?;
        let rows = io::video_rows(&run);
        let path = dir.join(format!("{}.attribution.csv", io::run_stem(&c.label, "full")));
        io::write_csv(&path, &rows)?;
        let known: Vec<_> = rows.iter().filter_map(|r| Some((r.truth?, r.verdict?))).collect();
        if known.is_empty() {
            println!("{}: {} videos attributed (no ground truth)", c.label, rows.len());
            continue;
        }
        let correct = known.iter().filter(|(t, v)| t.as_str() == v.as_str()).count();
        let accuracy = correct as f64 / known.len() as f64;
        println!("{}: accuracy {accuracy:.4} ({correct}/{})", c.label, known.len());
        if let Some(min) = min_accuracy {
            if accuracy < min {
                println!("FAIL {}: accuracy {accuracy:.4} < {min}", c.label);
                ok = false;
            }
        }
    }
    Ok(if ok { Outcome::Pass } else { Outcome::AssertionFailed })
}
