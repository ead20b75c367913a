//! Rule-based manipulation-type attribution from channel survival patterns.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fusion::GateDecision;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionConfig {
    /// Threshold on calibrated probability and on audio scores.
    pub elevation_threshold: f64,
    /// Threshold on visual scores; matches the gate's tau by default.
    pub visual_threshold: f64,
    /// Share of segment frames that must exceed a channel's threshold.
    pub min_elevated_fraction: f64,
    /// Shorter candidate runs are treated as noise.
    pub min_run_frames: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            elevation_threshold: 0.5,
            visual_threshold: 0.1,
            min_elevated_fraction: 0.5,
            min_run_frames: 3,
        }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("elevation_threshold", self.elevation_threshold),
            ("visual_threshold", self.visual_threshold),
        ] {
            if !(0.0 < v && v < 1.0) {
                return Err(invalid("attribution config", format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(0.0 < self.min_elevated_fraction && self.min_elevated_fraction <= 1.0) {
            return Err(invalid("attribution config", "min_elevated_fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionLabel {
    Authentic,
    FaceSwap,
    VoiceClone,
    JointDeepfake,
    Indeterminate,
}

impl AttributionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionLabel::Authentic => "authentic",
            AttributionLabel::FaceSwap => "face_swap",
            AttributionLabel::VoiceClone => "voice_clone",
            AttributionLabel::JointDeepfake => "joint",
            AttributionLabel::Indeterminate => "indeterminate",
        }
    }
}

impl std::str::FromStr for AttributionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "authentic" => AttributionLabel::Authentic,
            "face_swap" => AttributionLabel::FaceSwap,
            "voice_clone" => AttributionLabel::VoiceClone,
            "joint" => AttributionLabel::JointDeepfake,
            "indeterminate" => AttributionLabel::Indeterminate,
            other => return Err(invalid("attribution label", format!("unknown label {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributionVerdict {
    pub label: AttributionLabel,
    /// Segment means; zero when no candidate segment exists.
    pub visual_evidence: f64,
    pub audio_evidence: f64,
    /// Visual evidence was unavailable when the label was chosen.
    pub low_confidence: bool,
    pub segment_frames: usize,
}

fn candidate_frames(
    visual: &[f64],
    audio: &[f64],
    calibrated: &[f64],
    gate: &GateDecision,
    cfg: &AttributionConfig,
) -> Vec<bool> {
    let raw: Vec<bool> = (0..visual.len())
        .map(|t| {
            calibrated[t] >= cfg.elevation_threshold
                || (!gate.g && visual[t] > cfg.visual_threshold)
                || audio[t] > cfg.elevation_threshold
        })
        .collect();
    let mut keep = vec![false; raw.len()];
    let mut t = 0;
    while t < raw.len() {
        if !raw[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < raw.len() && raw[t] {
            t += 1;
        }
        if t - start >= cfg.min_run_frames {
            keep[start..t].iter_mut().for_each(|k| *k = true);
        }
    }
    keep
}

fn elevation(values: &[f64], segment: &[bool], threshold: f64, min_fraction: f64) -> (f64, bool) {
    let picked: Vec<f64> = values.iter().zip(segment).filter(|(_, &s)| s).map(|(&v, _)| v).collect();
    if picked.is_empty() {
        return (0.0, false);
    }
    let n = picked.len() as f64;
    let mean = picked.iter().sum::<f64>() / n;
    let above = picked.iter().filter(|&&v| v > threshold).count() as f64 / n;
    (mean, mean > threshold && above >= min_fraction)
}

/// Maps which channels are elevated over candidate segments to a manipulation type.
///
/// `audio` must already be stretch-corrected and offset-aligned.
pub fn attribute(
    visual: &[f64],
    audio: &[f64],
    calibrated: &[f64],
    gate: &GateDecision,
    config: &AttributionConfig,
) -> Result<AttributionVerdict> {
    config.validate()?;
    if audio.len() != visual.len() || calibrated.len() != visual.len() {
        return Err(Error::LengthMismatch {
            what: "attribution inputs",
            expected: visual.len(),
            found: audio.len().max(calibrated.len()),
        });
    }
    let segment = candidate_frames(visual, audio, calibrated, gate, config);
    let segment_frames = segment.iter().filter(|&&s| s).count();
    let (visual_evidence, v_up) = elevation(visual, &segment, config.visual_threshold, config.min_elevated_fraction);
    let (audio_evidence, a_up) = elevation(audio, &segment, config.elevation_threshold, config.min_elevated_fraction);
    let v_up = v_up && !gate.g;
    let (label, low_confidence) = match (gate.g, v_up, a_up) {
        (true, _, true) => (AttributionLabel::VoiceClone, true),
        (true, _, false) => (AttributionLabel::Indeterminate, true),
        (false, true, false) => (AttributionLabel::FaceSwap, false),
        (false, false, true) => (AttributionLabel::VoiceClone, false),
        (false, true, true) => (AttributionLabel::JointDeepfake, false),
        (false, false, false) => (AttributionLabel::Authentic, false),
    };
    Ok(AttributionVerdict {
        label,
        visual_evidence,
        audio_evidence,
        low_confidence,
        segment_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open() -> GateDecision {
        GateDecision { g: false, visual_mean: 0.05 }
    }

    fn closed() -> GateDecision {
        GateDecision { g: true, visual_mean: 0.9 }
    }

    fn run(v: f64, a: f64, p: f64, gate: GateDecision) -> AttributionLabel {
        let n = 20;
        let mut visual = vec![0.05; n];
        let mut audio = vec![0.05; n];
        let mut probs = vec![0.05; n];
        for t in 5..12 {
            visual[t] = v;
            audio[t] = a;
            probs[t] = p;
        }
        attribute(&visual, &audio, &probs, &gate, &AttributionConfig::default()).unwrap().label
    }

    #[test]
    fn survival_patterns() {
        assert_eq!(run(0.9, 0.1, 0.9, open()), AttributionLabel::FaceSwap);
        assert_eq!(run(0.9, 0.9, 0.9, open()), AttributionLabel::JointDeepfake);
        assert_eq!(run(0.05, 0.05, 0.05, open()), AttributionLabel::Authentic);
        assert_eq!(run(0.05, 0.9, 0.9, open()), AttributionLabel::VoiceClone);
    }

    #[test]
    fn gated_visual_is_never_elevated() {
        assert_eq!(run(0.9, 0.9, 0.9, closed()), AttributionLabel::VoiceClone);
        assert_eq!(run(0.9, 0.1, 0.9, closed()), AttributionLabel::Indeterminate);
    }

    #[test]
    fn short_runs_are_ignored() {
        let mut visual = vec![0.05; 20];
        visual[4] = 0.9;
        visual[5] = 0.9;
        let v = attribute(&visual, &[0.05; 20], &[0.05; 20], &open(), &AttributionConfig::default()).unwrap();
        assert_eq!(v.label, AttributionLabel::Authentic);
        assert_eq!(v.segment_frames, 0);
    }
}
