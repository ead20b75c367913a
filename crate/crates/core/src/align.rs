//! Stretch estimation and correction, and the frame-shift operator.

use crate::error::{invalid, Result};
use crate::model::{VideoMeta, VideoRecord};

pub const STRETCH_DEAD_ZONE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchEstimate {
    pub alpha_hat: f64,
    pub triggered: bool,
}

/// Ratio of audio duration to visual duration.
pub fn estimate_stretch(meta: &VideoMeta) -> Result<StretchEstimate> {
    estimate_stretch_with(meta, STRETCH_DEAD_ZONE)
}

pub fn estimate_stretch_with(meta: &VideoMeta, dead_zone: f64) -> Result<StretchEstimate> {
    let nominal = meta.nominal_duration();
    if !(nominal > 0.0 && nominal.is_finite()) {
        return Err(invalid("video meta", "nominal duration must be positive"));
    }
    let alpha_hat = meta.audio_duration() / nominal;
    if !(alpha_hat > 0.0) {
        return Err(invalid("video meta", "audio duration must be positive to estimate stretch"));
    }
    Ok(StretchEstimate {
        alpha_hat,
        triggered: (alpha_hat - 1.0).abs() > dead_zone,
    })
}

/// Rounds half away from zero.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}

pub fn offset_frames(delta_seconds: f64, frame_rate: f64) -> i64 {
    round_half_away(delta_seconds * frame_rate)
}

fn interpolate_at(values: &[f64], pos: f64) -> f64 {
    let last = values.len() - 1;
    if pos <= 0.0 {
        return values[0];
    }
    let lo = pos.floor() as usize;
    if lo >= last {
        return values[last];
    }
    let w = pos - lo as f64;
    if w == 0.0 {
        return values[lo];
    }
    values[lo] + w * (values[lo + 1] - values[lo])
}

fn resample_to_len(values: &[f64], beta: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| interpolate_at(values, i as f64 * beta)).collect()
}

/// Linear-interpolation resampling: `out[i] = x(i * beta)`, tail clamped.
pub fn resample(values: &[f64], beta: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(invalid("resample input", "sequence is empty"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("resample ratio", format!("{beta} must be positive")));
    }
    let len = ((values.len() as f64 / beta).round() as usize).max(1);
    Ok(resample_to_len(values, beta, len))
}

/// Undoes a detected stretch: the audio track is resampled back to one
/// score per video frame.
pub fn correct_stretch(record: &VideoRecord) -> Result<VideoRecord> {
    correct_stretch_with(record, STRETCH_DEAD_ZONE)
}

pub fn correct_stretch_with(record: &VideoRecord, dead_zone: f64) -> Result<VideoRecord> {
    let est = estimate_stretch_with(&record.meta, dead_zone)?;
    if !est.triggered {
        return Ok(record.clone());
    }
    let audio = resample_to_len(record.audio.values(), est.alpha_hat, record.frame_count());
    let mut out = record.with_audio(audio);
    out.meta.audio_sample_count = (record.meta.audio_sample_count as f64 / est.alpha_hat).round() as u64;
    Ok(out)
}

/// `out[t] = values[clamp(t - delta_frames)]`.
pub fn shift_scores(values: &[f64], delta_frames: i64) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let last = values.len() as i64 - 1;
    (0..values.len() as i64)
        .map(|t| values[(t - delta_frames).clamp(0, last) as usize])
        .collect()
}
