//! Score files, dataset manifests, pipeline outputs and reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attribution::AttributionLabel;
use crate::error::{Error, Result};
use crate::model::{FrameLabels, Manipulation, Modality, ScoreSequence, VideoMeta, VideoRecord};
use crate::pipeline::{ConditionRun, EvalReport};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| parse_err("<csv>", 0, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| parse_err("<csv>", 0, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses CSV with a header row; errors carry 1-based line numbers.
pub fn from_csv_str<T: DeserializeOwned>(text: &str, source: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: T = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_err(source, line, message)
        })?;
        out.push(row);
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_text(path, &to_csv_string(rows)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    from_csv_str(&read_text(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub video_id: String,
    pub frame_index: usize,
    pub visual_score: f64,
    pub audio_score: f64,
    pub label: u8,
}

pub fn score_rows(record: &VideoRecord) -> Vec<ScoreRow> {
    (0..record.frame_count())
        .map(|t| ScoreRow {
            video_id: record.id.clone(),
            frame_index: t,
            visual_score: record.visual.values()[t],
            audio_score: record.audio.values()[t],
            label: record.labels.values()[t] as u8,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub frame_count: usize,
    pub frame_rate: f64,
    pub audio_sample_count: u64,
    pub audio_sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manipulation: Option<Manipulation>,
    /// Score file, relative to the manifest.
    pub scores: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    #[serde(default, rename = "video")]
    pub videos: Vec<DatasetEntry>,
}

pub const DATASET_FORMAT: &str = "avmark-dataset-1";
pub const DATASET_FILE: &str = "dataset.toml";

pub fn dataset_manifest(records: &[VideoRecord]) -> DatasetManifest {
    DatasetManifest {
        format: DATASET_FORMAT.to_string(),
        videos: records
            .iter()
            .map(|r| DatasetEntry {
                id: r.id.clone(),
                frame_count: r.meta.frame_count,
                frame_rate: r.meta.frame_rate,
                audio_sample_count: r.meta.audio_sample_count,
                audio_sample_rate: r.meta.audio_sample_rate,
                manipulation: r.manipulation,
                scores: format!("scores/{}.csv", r.id),
            })
            .collect(),
    }
}

pub fn manifest_to_string(manifest: &DatasetManifest) -> Result<String> {
    toml::to_string(manifest).map_err(|e| parse_err("<dataset manifest>", 0, e.to_string()))
}

pub fn manifest_from_str(text: &str, source: &str) -> Result<DatasetManifest> {
    let m: DatasetManifest = toml::from_str(text).map_err(|e| toml_err(text, source, e))?;
    if m.format != DATASET_FORMAT {
        return Err(parse_err(source, 1, format!("unsupported format {:?}", m.format)));
    }
    Ok(m)
}

pub(crate) fn toml_err(text: &str, source: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    parse_err(source, line, e.message().to_string())
}

/// Writes `dataset.toml` and one score file per video under `dir`.
pub fn write_dataset(dir: &Path, records: &[VideoRecord]) -> Result<()> {
    let manifest = dataset_manifest(records);
    for (entry, record) in manifest.videos.iter().zip(records) {
        if record.audio.len() != record.frame_count() {
            return Err(Error::LengthMismatch {
                what: "audio scores",
                expected: record.frame_count(),
                found: record.audio.len(),
            });
        }
        write_csv(&dir.join(&entry.scores), &score_rows(record))?;
    }
    write_text(&dir.join(DATASET_FILE), &manifest_to_string(&manifest)?)
}

/// Builds a record from its manifest entry and score rows.
pub fn record_from_rows(entry: &DatasetEntry, rows: &[ScoreRow], source: &str) -> Result<VideoRecord> {
    let meta = VideoMeta::new(entry.frame_count, entry.frame_rate, entry.audio_sample_count, entry.audio_sample_rate)
        .map_err(|e| parse_err(source, 0, e.to_string()))?;
    if rows.len() != entry.frame_count {
        return Err(parse_err(
            source,
            rows.len() + 1,
            format!("expected {} frames, found {}", entry.frame_count, rows.len()),
        ));
    }
    for (t, row) in rows.iter().enumerate() {
        let line = t + 2;
        if row.video_id != entry.id {
            return Err(parse_err(source, line, format!("video_id {:?} does not match {:?}", row.video_id, entry.id)));
        }
        if row.frame_index != t {
            return Err(parse_err(source, line, format!("frame_index {} out of sequence, expected {t}", row.frame_index)));
        }
        for (name, v) in [("visual_score", row.visual_score), ("audio_score", row.audio_score)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(parse_err(source, line, format!("{name} {v} is outside [0, 1]")));
            }
        }
        if row.label > 1 {
            return Err(parse_err(source, line, format!("label {} is not 0 or 1", row.label)));
        }
    }
    let mut record = VideoRecord::new(
        entry.id.clone(),
        meta,
        ScoreSequence::new(Modality::Visual, rows.iter().map(|r| r.visual_score).collect())?,
        ScoreSequence::new(Modality::Audio, rows.iter().map(|r| r.audio_score).collect())?,
        FrameLabels::new(rows.iter().map(|r| r.label == 1).collect()),
    )?;
    record.manipulation = entry.manipulation;
    Ok(record)
}

/// Reads a dataset written by [`write_dataset`]; `path` is the directory or the manifest.
pub fn read_dataset(path: &Path) -> Result<Vec<VideoRecord>> {
    let manifest_path: PathBuf = if path.is_dir() { path.join(DATASET_FILE) } else { path.to_path_buf() };
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let text = read_text(&manifest_path)?;
    let manifest = manifest_from_str(&text, &manifest_path.display().to_string())?;
    let mut records = Vec::with_capacity(manifest.videos.len());
    for entry in &manifest.videos {
        let file = base.join(&entry.scores);
        let rows: Vec<ScoreRow> = read_csv(&file)?;
        records.push(record_from_rows(entry, &rows, &file.display().to_string())?);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutputRow {
    pub video_id: String,
    pub frame: usize,
    pub visual_score: f64,
    pub audio_score: f64,
    pub fused: f64,
    pub calibrated_p: f64,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoOutputRow {
    pub video_id: String,
    pub condition: String,
    pub variant: String,
    pub split: String,
    pub gate: Option<u8>,
    pub visual_mean: Option<f64>,
    pub offset_seconds: f64,
    pub temperature: Option<f64>,
    pub verdict: Option<AttributionLabel>,
    pub visual_evidence: Option<f64>,
    pub audio_evidence: Option<f64>,
    pub low_confidence: Option<u8>,
    pub truth: Option<Manipulation>,
}

pub fn frame_rows(run: &ConditionRun) -> Vec<FrameOutputRow> {
    run.videos
        .iter()
        .flat_map(|v| {
            (0..v.fused.len()).map(move |t| FrameOutputRow {
                video_id: v.id.clone(),
                frame: t,
                visual_score: v.visual[t],
                audio_score: v.audio[t],
                fused: v.fused[t],
                calibrated_p: v.calibrated[t],
                label: v.labels.values()[t] as u8,
            })
        })
        .collect()
}

pub fn video_rows(run: &ConditionRun) -> Vec<VideoOutputRow> {
    run.videos
        .iter()
        .map(|v| VideoOutputRow {
            video_id: v.id.clone(),
            condition: run.condition.clone(),
            variant: run.variant.clone(),
            split: if v.validation { "validation" } else { "test" }.to_string(),
            gate: v.gate.map(|g| g.g as u8),
            visual_mean: v.gate.map(|g| g.visual_mean),
            offset_seconds: v.offset_seconds,
            temperature: run.calibration.map(|c| c.temperature),
            verdict: v.attribution.map(|a| a.label),
            visual_evidence: v.attribution.map(|a| a.visual_evidence),
            audio_evidence: v.attribution.map(|a| a.audio_evidence),
            low_confidence: v.attribution.map(|a| a.low_confidence as u8),
            truth: v.manipulation,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub table: String,
    pub condition: String,
    pub variant: String,
    pub ap: f64,
    pub temporal_iou: f64,
    pub ece: f64,
    pub fpr: Option<f64>,
    pub auc: Option<f64>,
}

impl ReportRow {
    pub fn new(table: &str, r: &EvalReport) -> Self {
        Self {
            table: table.to_string(),
            condition: r.condition.clone(),
            variant: r.variant.clone(),
            ap: r.ap,
            temporal_iou: r.temporal_iou,
            ece: r.ece,
            fpr: r.fpr,
            auc: r.auc,
        }
    }
}

/// Output file stem for a run: `<condition>__<variant>`.
pub fn run_stem(condition: &str, variant: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.+".contains(c) { c } else { '_' })
            .collect()
    };
    format!("{}__{}", clean(condition), clean(variant))
}

pub fn write_run(dir: &Path, run: &ConditionRun) -> Result<(PathBuf, PathBuf)> {
    let stem = run_stem(&run.condition, &run.variant);
    let frames = dir.join(format!("{stem}.frames.csv"));
    let videos = dir.join(format!("{stem}.videos.csv"));
    write_csv(&frames, &frame_rows(run))?;
    write_csv(&videos, &video_rows(run))?;
    Ok((frames, videos))
}
