//! Domain types shared by every pipeline stage.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub frame_count: usize,
    pub frame_rate: f64,
    pub audio_sample_count: u64,
    pub audio_sample_rate: f64,
}

impl VideoMeta {
    pub fn new(
        frame_count: usize,
        frame_rate: f64,
        audio_sample_count: u64,
        audio_sample_rate: f64,
    ) -> Result<Self> {
        let meta = Self {
            frame_count,
            frame_rate,
            audio_sample_count,
            audio_sample_rate,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(invalid("video meta", "frame_count must be at least 1"));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(invalid("video meta", format!("frame_rate {} must be positive", self.frame_rate)));
        }
        if !(self.audio_sample_rate > 0.0 && self.audio_sample_rate.is_finite()) {
            return Err(invalid(
                "video meta",
                format!("audio_sample_rate {} must be positive", self.audio_sample_rate),
            ));
        }
        Ok(())
    }

    /// Duration implied by the visual track, in seconds.
    pub fn nominal_duration(&self) -> f64 {
        self.frame_count as f64 / self.frame_rate
    }

    /// Duration implied by the audio track, in seconds.
    pub fn audio_duration(&self) -> f64 {
        self.audio_sample_count as f64 / self.audio_sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    Visual,
    Audio,
}

/// Per-frame integrity scores. High means the watermark is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSequence {
    modality: Modality,
    values: Vec<f64>,
}

impl ScoreSequence {
    /// Rejects values outside [0, 1] (NaN included) instead of clamping.
    pub fn new(modality: Modality, values: Vec<f64>) -> Result<Self> {
        check_unit_range(
            match modality {
                Modality::Visual => "visual score",
                Modality::Audio => "audio score",
            },
            &values,
        )?;
        Ok(Self { modality, values })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub(crate) fn check_unit_range(what: &'static str, values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { what, index, value });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameLabels(Vec<bool>);

impl FrameLabels {
    pub fn new(values: Vec<bool>) -> Self {
        Self(values)
    }

    pub fn zeros(frame_count: usize) -> Self {
        Self(vec![false; frame_count])
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .enumerate()
            .map(|(i, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(invalid("frame label", format!("label {b} at frame {i} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&y| y).count()
    }

    pub fn is_authentic(&self) -> bool {
        self.0.iter().all(|&y| !y)
    }
}

/// Half-open frame range `[start_frame, end_frame)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TamperInterval {
    pub start_frame: usize,
    pub end_frame: usize,
}

impl TamperInterval {
    pub fn new(start_frame: usize, end_frame: usize) -> Self {
        Self {
            start_frame,
            end_frame,
        }
    }

    pub fn len(&self) -> usize {
        self.end_frame.saturating_sub(self.start_frame)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Maximal runs of tampered frames, in order.
pub fn labels_to_intervals(labels: &FrameLabels) -> Vec<TamperInterval> {
    let mut out = Vec::new();
    let mut start = None;
    for (t, &y) in labels.values().iter().enumerate() {
        match (y, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                out.push(TamperInterval::new(s, t));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(TamperInterval::new(s, labels.len()));
    }
    out
}

pub fn intervals_to_labels(intervals: &[TamperInterval], frame_count: usize) -> Result<FrameLabels> {
    let mut labels = vec![false; frame_count];
    for iv in intervals {
        if iv.start_frame >= iv.end_frame || iv.end_frame > frame_count {
            return Err(invalid(
                "tamper interval",
                format!(
                    "[{}, {}) is empty or outside [0, {frame_count})",
                    iv.start_frame, iv.end_frame
                ),
            ));
        }
        for (t, slot) in labels[iv.start_frame..iv.end_frame].iter_mut().enumerate() {
            if *slot {
                return Err(invalid(
                    "tamper interval",
                    format!(
                        "[{}, {}) overlaps another interval at frame {}",
                        iv.start_frame,
                        iv.end_frame,
                        iv.start_frame + t
                    ),
                ));
            }
            *slot = true;
        }
    }
    Ok(FrameLabels(labels))
}

/// Pixel-level tamper likelihood, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TamperMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl TamperMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid("tamper map", "height and width must be positive"));
        }
        if values.len() != height * width {
            return Err(Error::LengthMismatch {
                what: "tamper map",
                expected: height * width,
                found: values.len(),
            });
        }
        check_unit_range("tamper map", &values)?;
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Binary pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::LengthMismatch {
                what: "binary mask",
                expected: height * width,
                found: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Which channels a generated video manipulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manipulation {
    Authentic,
    FaceSwap,
    VoiceClone,
    Joint,
}

impl Manipulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Manipulation::Authentic => "authentic",
            Manipulation::FaceSwap => "face_swap",
            Manipulation::VoiceClone => "voice_clone",
            Manipulation::Joint => "joint",
        }
    }

    pub fn visual(self) -> bool {
        matches!(self, Manipulation::FaceSwap | Manipulation::Joint)
    }

    pub fn audio(self) -> bool {
        matches!(self, Manipulation::VoiceClone | Manipulation::Joint)
    }
}

impl std::str::FromStr for Manipulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "authentic" => Ok(Manipulation::Authentic),
            "face_swap" => Ok(Manipulation::FaceSwap),
            "voice_clone" => Ok(Manipulation::VoiceClone),
            "joint" => Ok(Manipulation::Joint),
            other => Err(invalid("manipulation", format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub meta: VideoMeta,
    pub visual: ScoreSequence,
    pub audio: ScoreSequence,
    pub labels: FrameLabels,
    pub maps: Option<Vec<TamperMap>>,
    /// Ground-truth manipulated region, when maps are present.
    pub region: Option<BinaryMask>,
    /// Ground-truth manipulation kind, when known.
    pub manipulation: Option<Manipulation>,
}

impl VideoRecord {
    pub fn new(
        id: impl Into<String>,
        meta: VideoMeta,
        visual: ScoreSequence,
        audio: ScoreSequence,
        labels: FrameLabels,
    ) -> Result<Self> {
        let record = Self {
            id: id.into(),
            meta,
            visual,
            audio,
            labels,
            maps: None,
            region: None,
            manipulation: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        let t = self.meta.frame_count;
        if self.visual.modality() != Modality::Visual {
            return Err(invalid("video record", "visual sequence has audio modality"));
        }
        if self.audio.modality() != Modality::Audio {
            return Err(invalid("video record", "audio sequence has visual modality"));
        }
        if self.audio.is_empty() {
            return Err(invalid("video record", "audio sequence is empty"));
        }
        for (what, found) in [("visual scores", self.visual.len()), ("frame labels", self.labels.len())] {
            if found != t {
                return Err(Error::LengthMismatch {
                    what,
                    expected: t,
                    found,
                });
            }
        }
        if let Some(maps) = &self.maps {
            if maps.len() != t {
                return Err(Error::LengthMismatch {
                    what: "tamper maps",
                    expected: t,
                    found: maps.len(),
                });
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        self.meta.frame_count
    }

    /// Audio scores indexed by video frame. A stretched track is cut or
    /// edge-extended to the frame count.
    pub fn frame_audio(&self) -> Vec<f64> {
        let a = self.audio.values();
        let last = a.len() - 1;
        (0..self.frame_count()).map(|t| a[t.min(last)]).collect()
    }

    pub(crate) fn with_audio(&self, values: Vec<f64>) -> Self {
        Self {
            audio: ScoreSequence {
                modality: Modality::Audio,
                values,
            },
            ..self.clone()
        }
    }

    pub(crate) fn with_visual(&self, values: Vec<f64>) -> Self {
        Self {
            visual: ScoreSequence {
                modality: Modality::Visual,
                values,
            },
            ..self.clone()
        }
    }
}
