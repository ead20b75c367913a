//! Reliability gate, offset bank search and confidence-weighted fusion.

use serde::{Deserialize, Serialize};

use crate::align::{offset_frames, shift_scores};
use crate::error::{invalid, Error, Result};
use crate::metrics::average_precision;
use crate::model::{TamperMap, VideoRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub tau: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { tau: 0.1 }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.tau && self.tau < 1.0) {
            return Err(invalid("gate config", format!("tau {} must lie in (0, 1)", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateDecision {
    /// Visual channel judged globally collapsed.
    pub g: bool,
    pub visual_mean: f64,
}

pub fn reliability_gate(visual: &[f64], config: &GateConfig) -> GateDecision {
    let visual_mean = if visual.is_empty() {
        0.0
    } else {
        visual.iter().sum::<f64>() / visual.len() as f64
    };
    GateDecision {
        g: visual_mean > config.tau,
        visual_mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffsetBank {
    pub offsets_seconds: Vec<f64>,
}

impl Default for OffsetBank {
    fn default() -> Self {
        Self {
            offsets_seconds: vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

impl OffsetBank {
    pub fn zero_only() -> Self {
        Self {
            offsets_seconds: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.offsets_seconds.contains(&0.0) {
            return Err(invalid("offset bank", "must contain 0"));
        }
        if self.offsets_seconds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("offset bank", "offsets must be strictly ascending"));
        }
        Ok(())
    }

    /// Offsets in tie-break order: smallest magnitude first, negative before positive.
    fn search_order(&self) -> Vec<f64> {
        let mut order = self.offsets_seconds.clone();
        order.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceConfig {
    pub half_window: usize,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        Self { half_window: 3 }
    }
}

impl ConfidenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.half_window == 0 {
            return Err(invalid("confidence config", "half_window must be at least 1"));
        }
        Ok(())
    }
}

/// Objective used to pick an offset from the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMeasure {
    /// Frame-level AP against the video's labels.
    OracleAp,
    /// Pearson correlation between shifted audio and visual. Labels unused.
    CrossCorrelation,
}

/// How the two channels are combined when the gate is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Confidence,
    Equal,
}

/// `max(0, 1 - 4 var)` over the truncated window around `t`.
pub fn frame_confidence(values: &[f64], t: usize, config: &ConfidenceConfig) -> f64 {
    let w = config.half_window;
    let lo = t.saturating_sub(w);
    let hi = (t + w).min(values.len() - 1);
    let window = &values[lo..=hi];
    let n = window.len();
    if n < 2 {
        return 1.0;
    }
    let mean = window.iter().sum::<f64>() / n as f64;
    let var = window.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (1.0 - 4.0 * var).max(0.0)
}

pub fn confidence_profile(values: &[f64], config: &ConfidenceConfig) -> Vec<f64> {
    (0..values.len()).map(|t| frame_confidence(values, t, config)).collect()
}

fn weighted(a: f64, v: f64, ca: f64, cv: f64) -> f64 {
    let den = ca + cv;
    if den > 0.0 {
        (ca * a + cv * v) / den
    } else {
        0.5 * (a + v)
    }
}

/// Per-frame confidence-weighted mean of the two channels.
pub fn fuse_frames(audio_shifted: &[f64], visual: &[f64], config: &ConfidenceConfig) -> Result<Vec<f64>> {
    Ok(fuse_with_confidence(audio_shifted, visual, config)?.0)
}

type Confidences = (Vec<f64>, Vec<f64>);

fn fuse_with_confidence(
    audio_shifted: &[f64],
    visual: &[f64],
    config: &ConfidenceConfig,
) -> Result<(Vec<f64>, Confidences)> {
    if audio_shifted.len() != visual.len() {
        return Err(Error::LengthMismatch {
            what: "audio vs visual scores",
            expected: visual.len(),
            found: audio_shifted.len(),
        });
    }
    let ca = confidence_profile(audio_shifted, config);
    let cv = confidence_profile(visual, config);
    let fused = (0..visual.len())
        .map(|t| weighted(audio_shifted[t], visual[t], ca[t], cv[t]))
        .collect();
    Ok((fused, (ca, cv)))
}

pub fn equal_fusion(audio: &[f64], visual: &[f64]) -> Vec<f64> {
    audio.iter().zip(visual).map(|(&a, &v)| 0.5 * v + 0.5 * a).collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetChoice {
    pub delta_seconds: f64,
    pub objective: f64,
    pub aligned_audio: Vec<f64>,
    pub fused: Vec<f64>,
    pub confidence: Option<Confidences>,
    /// The measure was undefined and the zero offset was used.
    pub fell_back: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn select_offset(
    audio: &[f64],
    visual: &[f64],
    labels: &[bool],
    gate: &GateDecision,
    bank: &OffsetBank,
    frame_rate: f64,
    measure: OffsetMeasure,
    weighting: Weighting,
    conf: &ConfidenceConfig,
) -> Result<OffsetChoice> {
    if audio.len() != visual.len() || labels.len() != visual.len() {
        return Err(Error::LengthMismatch {
            what: "audio, visual and labels",
            expected: visual.len(),
            found: audio.len().max(labels.len()),
        });
    }
    bank.validate()?;
    let candidate = |delta: f64| -> Result<(Vec<f64>, Vec<f64>, Option<Confidences>)> {
        let shifted = shift_scores(audio, offset_frames(delta, frame_rate));
        if gate.g {
            return Ok((shifted.clone(), shifted, None));
        }
        match weighting {
            Weighting::Confidence => {
                let (fused, c) = fuse_with_confidence(&shifted, visual, conf)?;
                Ok((shifted, fused, Some(c)))
            }
            Weighting::Equal => {
                let fused = equal_fusion(&shifted, visual);
                Ok((shifted, fused, None))
            }
        }
    };
    let positives = labels.iter().filter(|&&y| y).count();
    if measure == OffsetMeasure::OracleAp && (positives == 0 || positives == labels.len()) {
        log::debug!("offset search skipped: average precision undefined for single-class labels");
        let (aligned_audio, fused, confidence) = candidate(0.0)?;
        return Ok(OffsetChoice {
            delta_seconds: 0.0,
            objective: f64::NAN,
            aligned_audio,
            fused,
            confidence,
            fell_back: true,
        });
    }
    let mut best: Option<OffsetChoice> = None;
    for delta in bank.search_order() {
        let (aligned_audio, fused, confidence) = candidate(delta)?;
        let objective = match measure {
            OffsetMeasure::OracleAp => average_precision(&fused, labels)?,
            OffsetMeasure::CrossCorrelation => pearson(&aligned_audio, visual),
        };
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(OffsetChoice {
                delta_seconds: delta,
                objective,
                aligned_audio,
                fused,
                confidence,
                fell_back: false,
            });
        }
    }
    Ok(best.expect("bank contains zero"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub fused: Vec<f64>,
    pub gate: GateDecision,
    pub chosen_offset_seconds: f64,
    pub aligned_audio: Vec<f64>,
    /// `(audio, visual)` confidences; only when the gate is open.
    pub per_frame_confidence: Option<Confidences>,
    pub fell_back: bool,
}

impl FusionResult {
    /// Spatial maps, or `None` when the visual channel is gated out.
    pub fn maps<'a>(&self, record: &'a VideoRecord) -> Option<&'a [TamperMap]> {
        if self.gate.g {
            None
        } else {
            record.maps.as_deref()
        }
    }
}

pub fn run_fusion(
    record: &VideoRecord,
    gate_cfg: &GateConfig,
    bank: &OffsetBank,
    conf_cfg: &ConfidenceConfig,
    measure: OffsetMeasure,
) -> Result<FusionResult> {
    gate_cfg.validate()?;
    conf_cfg.validate()?;
    let visual = record.visual.values();
    let gate = reliability_gate(visual, gate_cfg);
    let choice = select_offset(
        &record.frame_audio(),
        visual,
        record.labels.values(),
        &gate,
        bank,
        record.meta.frame_rate,
        measure,
        Weighting::Confidence,
        conf_cfg,
    )?;
    Ok(FusionResult {
        fused: choice.fused,
        gate,
        chosen_offset_seconds: choice.delta_seconds,
        aligned_audio: choice.aligned_audio,
        per_frame_confidence: choice.confidence,
        fell_back: choice.fell_back,
    })
}
