//! Synthetic benchmark generation and score-level deployment distortions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::align::{offset_frames, shift_scores};
use crate::error::{invalid, Result};
use crate::model::{
    check_unit_range, intervals_to_labels, BinaryMask, FrameLabels, Manipulation, Modality,
    ScoreSequence, TamperInterval, TamperMap, VideoMeta, VideoRecord,
};
use crate::par::{map_range, Execution};

/// Which manipulation kinds tampered videos are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMix {
    /// Face swap, voice clone and joint, uniformly.
    Balanced,
    FaceSwapOnly,
    VoiceCloneOnly,
    JointOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub video_count: usize,
    pub frames_per_video: usize,
    pub frame_rate: f64,
    pub audio_sample_rate: f64,
    pub tamper_fraction_range: (f64, f64),
    pub authentic_video_fraction: f64,
    pub authentic_score_mean: f64,
    pub tampered_score_mean: f64,
    pub score_noise_std: f64,
    /// Share of the frame area a face manipulation touches.
    pub visual_region_fraction: f64,
    /// Frame-level noise of the visual channel (spatially averaged).
    pub visual_noise_std: f64,
    pub scenario_mix: ScenarioMix,
    /// Emit per-frame tamper maps of this `(height, width)`.
    pub map_size: Option<(usize, usize)>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            video_count: 500,
            frames_per_video: 300,
            frame_rate: 25.0,
            audio_sample_rate: 16_000.0,
            tamper_fraction_range: (0.05, 0.30),
            authentic_video_fraction: 0.2,
            authentic_score_mean: 0.05,
            tampered_score_mean: 0.95,
            score_noise_std: 0.05,
            visual_region_fraction: 0.12,
            visual_noise_std: 0.02,
            scenario_mix: ScenarioMix::Balanced,
            map_size: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(invalid("gen config", format!("seed {} does not fit a signed 64-bit integer", self.seed)));
        }
        let (lo, hi) = self.tamper_fraction_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid(
                "gen config",
                format!("tamper_fraction_range ({lo}, {hi}) must satisfy 0 <= low <= high <= 1"),
            ));
        }
        if self.frames_per_video == 0 {
            return Err(invalid("gen config", "frames_per_video must be positive"));
        }
        if self.video_count == 0 {
            return Err(invalid("gen config", "video_count must be positive"));
        }
        if self.authentic_video_fraction < 1.0
            && (hi * self.frames_per_video as f64).round() < 1.0
        {
            return Err(invalid(
                "gen config",
                format!(
                    "tamper_fraction_range high {hi} gives fewer than one tampered frame out of {}",
                    self.frames_per_video
                ),
            ));
        }
        if !(self.frame_rate > 0.0) || !(self.audio_sample_rate > 0.0) {
            return Err(invalid("gen config", "frame and sample rates must be positive"));
        }
        for (name, v) in [
            ("authentic_video_fraction", self.authentic_video_fraction),
            ("authentic_score_mean", self.authentic_score_mean),
            ("tampered_score_mean", self.tampered_score_mean),
            ("visual_region_fraction", self.visual_region_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid("gen config", format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if !(self.score_noise_std >= 0.0) || !(self.visual_noise_std >= 0.0) {
            return Err(invalid("gen config", "noise standard deviations must be non-negative"));
        }
        if let Some((h, w)) = self.map_size {
            if h == 0 || w == 0 {
                return Err(invalid("gen config", "map_size must be positive"));
            }
        }
        Ok(())
    }
}

const STREAM_VIDEO: u64 = 0x5649_4445;
const STREAM_COMPRESSION: u64 = 0x434f_4d50;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream seed for `(seed, index, purpose)`.
pub fn stream_seed(seed: u64, index: u64, purpose: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ index) ^ purpose)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn clip_normal(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (mean + std * z).clamp(0.0, 1.0)
}

fn video_id(index: usize, count: usize) -> String {
    let width = (count.saturating_sub(1).max(1).ilog10() as usize + 1).max(4);
    format!("v{index:0width$}")
}

pub fn generate_benchmark(config: &GenConfig) -> Result<Vec<VideoRecord>> {
    generate_benchmark_with(config, Execution::default())
}

/// Each video draws from its own stream, so the result does not depend on `exec`.
pub fn generate_benchmark_with(config: &GenConfig, exec: Execution) -> Result<Vec<VideoRecord>> {
    config.validate()?;
    map_range(exec, config.video_count, |i| generate_video(config, i))
        .into_iter()
        .collect()
}

fn draw_manipulation(config: &GenConfig, rng: &mut ChaCha8Rng) -> Manipulation {
    if rng.gen::<f64>() < config.authentic_video_fraction {
        return Manipulation::Authentic;
    }
    match config.scenario_mix {
        ScenarioMix::Balanced => {
            [Manipulation::FaceSwap, Manipulation::VoiceClone, Manipulation::Joint][rng.gen_range(0..3)]
        }
        ScenarioMix::FaceSwapOnly => Manipulation::FaceSwap,
        ScenarioMix::VoiceCloneOnly => Manipulation::VoiceClone,
        ScenarioMix::JointOnly => Manipulation::Joint,
    }
}

fn place_intervals(config: &GenConfig, rng: &mut ChaCha8Rng) -> Vec<TamperInterval> {
    let t = config.frames_per_video;
    let (lo, hi) = config.tamper_fraction_range;
    let frac = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
    let total = ((frac * t as f64).round() as usize).clamp(1, t);
    let pieces = if total >= 2 && total < t { rng.gen_range(1..=2) } else { 1 };
    let lengths = if pieces == 2 {
        let first = rng.gen_range(1..total);
        vec![first, total - first]
    } else {
        vec![total]
    };
    // Pieces are kept at least one frame apart so they stay distinct runs.
    let free = t - total - (pieces - 1);
    let mut offsets: Vec<usize> = (0..pieces).map(|_| rng.gen_range(0..=free)).collect();
    offsets.sort_unstable();
    let mut out = Vec::with_capacity(pieces);
    let mut consumed = 0;
    for (j, (&off, &len)) in offsets.iter().zip(&lengths).enumerate() {
        let start = off + consumed + j;
        out.push(TamperInterval::new(start, start + len));
        consumed += len;
    }
    out
}

fn place_region(config: &GenConfig, rng: &mut ChaCha8Rng, h: usize, w: usize) -> BinaryMask {
    let area = (config.visual_region_fraction * (h * w) as f64).max(1.0);
    let rh = ((area.sqrt()).round() as usize).clamp(1, h);
    let rw = ((area / rh as f64).round() as usize).clamp(1, w);
    let top = rng.gen_range(0..=h - rh);
    let left = rng.gen_range(0..=w - rw);
    let mut mask = BinaryMask::empty(h, w);
    for r in top..top + rh {
        for c in left..left + rw {
            mask.set(r, c, true);
        }
    }
    mask
}

fn generate_video(config: &GenConfig, index: usize) -> Result<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, index as u64, STREAM_VIDEO));
    let t = config.frames_per_video;
    let manipulation = draw_manipulation(config, &mut rng);
    let labels = if manipulation == Manipulation::Authentic {
        FrameLabels::zeros(t)
    } else {
        intervals_to_labels(&place_intervals(config, &mut rng), t)?
    };
    let (mu_a, mu_t) = (config.authentic_score_mean, config.tampered_score_mean);
    let sigma = config.score_noise_std;

    let mut maps = None;
    let mut region = None;
    let visual: Vec<f64> = if let Some((h, w)) = config.map_size {
        let mask = place_region(config, &mut rng, h, w);
        let mut frame_maps = Vec::with_capacity(t);
        let mut scores = Vec::with_capacity(t);
        for &y in labels.values() {
            let elevated = y && manipulation.visual();
            let pixels: Vec<f64> = mask
                .bits()
                .iter()
                .map(|&inside| {
                    let mean = if elevated && inside { mu_t } else { mu_a };
                    clip_normal(&mut rng, mean, sigma)
                })
                .collect();
            let map = TamperMap::new(h, w, pixels)?;
            scores.push(aggregate_visual(&map));
            frame_maps.push(map);
        }
        maps = Some(frame_maps);
        region = Some(mask);
        scores
    } else {
        let rho = config.visual_region_fraction;
        let sv = config.visual_noise_std;
        labels
            .values()
            .iter()
            .map(|&y| {
                if y && manipulation.visual() {
                    let inside = clip_normal(&mut rng, mu_t, sv);
                    let outside = clip_normal(&mut rng, mu_a, sv);
                    (rho * inside + (1.0 - rho) * outside).clamp(0.0, 1.0)
                } else {
                    clip_normal(&mut rng, mu_a, sv)
                }
            })
            .collect()
    };
    let audio: Vec<f64> = labels
        .values()
        .iter()
        .map(|&y| {
            let mean = if y && manipulation.audio() { mu_t } else { mu_a };
            clip_normal(&mut rng, mean, sigma)
        })
        .collect();

    let audio_sample_count = (t as f64 / config.frame_rate * config.audio_sample_rate).round() as u64;
    let meta = VideoMeta::new(t, config.frame_rate, audio_sample_count, config.audio_sample_rate)?;
    let mut record = VideoRecord::new(
        video_id(index, config.video_count),
        meta,
        ScoreSequence::new(Modality::Visual, visual)?,
        ScoreSequence::new(Modality::Audio, audio)?,
        labels,
    )?;
    record.maps = maps;
    record.region = region;
    record.manipulation = Some(manipulation);
    Ok(record)
}

/// Spatial mean of a tamper map.
pub fn aggregate_visual(map: &TamperMap) -> f64 {
    map.values().iter().sum::<f64>() / map.values().len() as f64
}

/// Per-sample watermark presence; high means detected.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit_range("audio sample", &values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Frame score from the samples falling inside frame `frame_index` (1-based).
///
/// Returns 0.5 when the frame covers no samples.
pub fn aggregate_audio(samples: &SampleVector, meta: &VideoMeta, frame_index: usize) -> Result<f64> {
    if frame_index == 0 || frame_index > meta.frame_count {
        return Err(invalid(
            "frame index",
            format!("{frame_index} is outside 1..={}", meta.frame_count),
        ));
    }
    let per_frame = meta.audio_sample_rate / meta.frame_rate;
    let n = samples.values().len();
    let lo = (((frame_index - 1) as f64 * per_frame).ceil() as usize).min(n);
    let hi = ((frame_index as f64 * per_frame).ceil() as usize).min(n);
    if hi <= lo {
        return Ok(0.5);
    }
    let window = &samples.values()[lo..hi];
    Ok(1.0 - window.iter().sum::<f64>() / window.len() as f64)
}

fn default_compression_noise() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distortion {
    /// Audio plays at `factor` times the visual rate.
    Stretch { factor: f64 },
    /// Lossy visual compression destroying the visual watermark.
    CompressionCollapse {
        severity: f64,
        #[serde(default = "default_compression_noise")]
        noise_std: f64,
    },
    /// Audio leads the video by `delta_seconds`.
    AvOffset { delta_seconds: f64 },
}

impl Distortion {
    pub fn stretch(factor: f64) -> Self {
        Distortion::Stretch { factor }
    }

    pub fn compression(severity: f64) -> Self {
        Distortion::CompressionCollapse {
            severity,
            noise_std: default_compression_noise(),
        }
    }

    pub fn offset(delta_seconds: f64) -> Self {
        Distortion::AvOffset { delta_seconds }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distortion::Stretch { factor } if !(factor > 0.0 && factor.is_finite()) => {
                Err(invalid("stretch factor", format!("{factor} must be positive")))
            }
            Distortion::CompressionCollapse { severity, noise_std } => {
                if !(0.0..=1.0).contains(&severity) {
                    Err(invalid("compression severity", format!("{severity} must lie in [0, 1]")))
                } else if !(noise_std >= 0.0) {
                    Err(invalid("compression noise", format!("{noise_std} must be non-negative")))
                } else {
                    Ok(())
                }
            }
            Distortion::AvOffset { delta_seconds } if !delta_seconds.is_finite() => {
                Err(invalid("offset", "delta must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Named codec conditions. Audio codecs leave scores untouched.
pub const PRESETS: &[(&str, &[Distortion])] = &[
    ("clean", &[]),
    ("jpeg-q23", &[Distortion::CompressionCollapse { severity: 0.85, noise_std: 0.05 }]),
    ("h264-crf23", &[Distortion::CompressionCollapse { severity: 0.90, noise_std: 0.05 }]),
    ("h264-crf28", &[Distortion::CompressionCollapse { severity: 0.95, noise_std: 0.05 }]),
    ("mp3-128k", &[]),
    ("mp3-32k", &[]),
];

pub fn preset(name: &str) -> Option<Vec<Distortion>> {
    let key = name.trim().to_ascii_lowercase().replace([' ', '=', '.', '_'], "-");
    let key = match key.as_str() {
        "jpeg-q-23" => "jpeg-q23",
        "h-264-crf-23" | "h264-crf-23" | "crf-23" | "crf23" => "h264-crf23",
        "h-264-crf-28" | "h264-crf-28" | "crf-28" | "crf28" => "h264-crf28",
        "mp3-32k" | "mp3-32" => "mp3-32k",
        "mp3-128k" | "mp3-128" => "mp3-128k",
        other => other,
    };
    PRESETS
        .iter()
        .find(|(n, _)| *n == key)
        .map(|(_, d)| d.to_vec())
}

/// Parses a preset name or one of `stretch:A`, `compress:S`, `offset:D`.
pub fn parse_distortion(text: &str) -> Result<Vec<Distortion>> {
    if let Some(ds) = preset(text) {
        return Ok(ds);
    }
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| invalid("distortion", format!("unknown preset {text:?}")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| invalid("distortion", format!("{value:?} is not a number")))?;
    let d = match kind.trim() {
        "stretch" => Distortion::stretch(value),
        "compress" | "compression" => Distortion::compression(value),
        "offset" => Distortion::offset(value),
        other => return Err(invalid("distortion", format!("unknown kind {other:?}"))),
    };
    d.validate()?;
    Ok(vec![d])
}

pub fn apply_distortion(record: &VideoRecord, d: &Distortion) -> Result<VideoRecord> {
    d.validate()?;
    Ok(match *d {
        Distortion::Stretch { factor } => {
            let a = record.audio.values();
            let last = a.len() - 1;
            let len = ((a.len() as f64 / factor).round() as usize).max(1);
            let stretched = (0..len)
                .map(|t| a[((factor * t as f64).floor() as usize).min(last)])
                .collect();
            let mut out = record.with_audio(stretched);
            out.meta.audio_sample_count = (record.meta.audio_sample_count as f64 / factor).round() as u64;
            out
        }
        Distortion::CompressionCollapse { severity, noise_std } => {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(fnv1a(&record.id), 0, STREAM_COMPRESSION));
            let collapsed = record
                .visual
                .values()
                .iter()
                .map(|&s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let eps = (noise_std * z).abs().min(1.0);
                    let target = s.max(1.0 - eps);
                    ((1.0 - severity) * s + severity * target).clamp(0.0, 1.0)
                })
                .collect();
            record.with_visual(collapsed)
        }
        Distortion::AvOffset { delta_seconds } => {
            let k = offset_frames(delta_seconds, record.meta.frame_rate);
            record.with_audio(shift_scores(record.audio.values(), -k))
        }
    })
}

pub fn apply_distortions(record: &VideoRecord, ds: &[Distortion]) -> Result<VideoRecord> {
    let mut out = record.clone();
    for d in ds {
        out = apply_distortion(&out, d)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            video_count: 20,
            ..GenConfig::default()
        }
    }

    #[test]
    fn deterministic_and_parallel_agnostic() {
        let a = generate_benchmark_with(&small(3), Execution::Sequential).unwrap();
        let b = generate_benchmark_with(&small(3), Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = generate_benchmark(&small(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_authentic_video() {
        let cfg = GenConfig {
            video_count: 1,
            authentic_video_fraction: 1.0,
            ..GenConfig::default()
        };
        let v = &generate_benchmark(&cfg).unwrap()[0];
        assert!(v.labels.is_authentic());
        assert!(v.visual.values().iter().chain(v.audio.values()).all(|&s| s < 0.5));
    }

    #[test]
    fn degenerate_noise_gives_exact_tampered_scores() {
        let cfg = GenConfig {
            video_count: 30,
            authentic_video_fraction: 0.0,
            tampered_score_mean: 1.0,
            score_noise_std: 0.0,
            visual_noise_std: 0.0,
            visual_region_fraction: 1.0,
            ..GenConfig::default()
        };
        for v in generate_benchmark(&cfg).unwrap() {
            let m = v.manipulation.unwrap();
            for (t, &y) in v.labels.values().iter().enumerate() {
                if y && m.visual() {
                    assert_eq!(v.visual.values()[t], 1.0);
                }
                if y && m.audio() {
                    assert_eq!(v.audio.values()[t], 1.0);
                }
            }
        }
    }

    #[test]
    fn tamper_intervals_obey_fraction_range() {
        let cfg = GenConfig {
            video_count: 200,
            ..GenConfig::default()
        };
        for v in generate_benchmark(&cfg).unwrap() {
            let runs = crate::model::labels_to_intervals(&v.labels);
            if v.manipulation == Some(Manipulation::Authentic) {
                assert!(runs.is_empty());
                continue;
            }
            assert!((1..=2).contains(&runs.len()));
            let total = v.labels.positives() as f64;
            assert!(total >= (0.05 * 300.0_f64).round() && total <= (0.30 * 300.0_f64).round());
        }
    }

    #[test]
    fn rejects_sub_frame_tamper_range() {
        let cfg = GenConfig {
            frames_per_video: 10,
            tamper_fraction_range: (0.0, 0.04),
            ..GenConfig::default()
        };
        assert!(generate_benchmark(&cfg).is_err());
    }

    #[test]
    fn visual_aggregation() {
        let zeros = TamperMap::new(4, 4, vec![0.0; 16]).unwrap();
        assert_eq!(aggregate_visual(&zeros), 0.0);
        let ones = TamperMap::new(2, 3, vec![1.0; 6]).unwrap();
        assert_eq!(aggregate_visual(&ones), 1.0);
        let one = TamperMap::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(aggregate_visual(&one), 0.25);
    }

    #[test]
    fn audio_aggregation() {
        let meta = VideoMeta::new(2, 2.0, 4, 4.0).unwrap();
        let present = SampleVector::new(vec![1.0; 4]).unwrap();
        let absent = SampleVector::new(vec![0.0; 4]).unwrap();
        for t in 1..=2 {
            assert_eq!(aggregate_audio(&present, &meta, t).unwrap(), 0.0);
            assert_eq!(aggregate_audio(&absent, &meta, t).unwrap(), 1.0);
        }
        let mixed = SampleVector::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(aggregate_audio(&mixed, &meta, 2).unwrap(), 1.0);
        assert_eq!(aggregate_audio(&mixed, &meta, 1).unwrap(), 0.0);
        assert!(aggregate_audio(&mixed, &meta, 0).is_err());
        assert!(aggregate_audio(&mixed, &meta, 3).is_err());
        let sparse = VideoMeta::new(4, 4.0, 2, 2.0).unwrap();
        let two = SampleVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(aggregate_audio(&two, &sparse, 2).unwrap(), 0.5);
    }

    #[test]
    fn full_collapse_without_noise_saturates() {
        let v = generate_benchmark(&small(1)).unwrap().remove(0);
        let d = Distortion::CompressionCollapse {
            severity: 1.0,
            noise_std: 0.0,
        };
        let out = apply_distortion(&v, &d).unwrap();
        assert!(out.visual.values().iter().all(|&s| s == 1.0));
        assert_eq!(out.audio, v.audio);
        assert_eq!(out.labels, v.labels);
    }

    #[test]
    fn zero_offset_is_identity() {
        let v = generate_benchmark(&small(1)).unwrap().remove(0);
        assert_eq!(apply_distortion(&v, &Distortion::offset(0.0)).unwrap(), v);
    }

    #[test]
    fn opposite_offsets_cancel_on_interior() {
        let v = generate_benchmark(&small(2)).unwrap().remove(1);
        let there = apply_distortion(&v, &Distortion::offset(0.5)).unwrap();
        let back = apply_distortion(&there, &Distortion::offset(-0.5)).unwrap();
        let t = v.frame_count();
        assert_eq!(&back.audio.values()[13..=t - 14], &v.audio.values()[13..=t - 14]);
    }

    #[test]
    fn stretch_scales_sample_count() {
        let v = generate_benchmark(&small(2)).unwrap().remove(0);
        let out = apply_distortion(&v, &Distortion::stretch(0.95)).unwrap();
        assert_eq!(out.meta.audio_sample_count, 202_105);
        assert_eq!(out.audio.len(), (v.frame_count() as f64 / 0.95).round() as usize);
        assert_eq!(out.visual, v.visual);
        assert!(apply_distortion(&v, &Distortion::stretch(0.0)).is_err());
    }

    #[test]
    fn stretch_then_correct_restores_smooth_audio() {
        use crate::align::{correct_stretch, estimate_stretch};
        use crate::model::{FrameLabels, Modality, ScoreSequence, VideoMeta, VideoRecord};
        let t = 250;
        let smooth: Vec<f64> = (0..t).map(|i| 0.5 + 0.3 * (i as f64 / 40.0).sin()).collect();
        let v = VideoRecord::new(
            "smooth",
            VideoMeta::new(t, 25.0, 160_000, 16_000.0).unwrap(),
            ScoreSequence::new(Modality::Visual, vec![0.05; t]).unwrap(),
            ScoreSequence::new(Modality::Audio, smooth.clone()).unwrap(),
            FrameLabels::zeros(t),
        )
        .unwrap();
        for alpha in [0.95, 1.10] {
            let stretched = apply_distortion(&v, &Distortion::stretch(alpha)).unwrap();
            let est = estimate_stretch(&stretched.meta).unwrap();
            assert!((est.alpha_hat - 1.0 / alpha).abs() < 1e-3);
            let fixed = correct_stretch(&stretched).unwrap();
            assert_eq!(fixed.audio.len(), t);
            assert_eq!(fixed.visual, v.visual);
            for i in 13..t - 13 {
                assert!((fixed.audio.values()[i] - smooth[i]).abs() < 0.05, "alpha {alpha} frame {i}");
            }
            assert!(!estimate_stretch(&fixed.meta).unwrap().triggered);
        }
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(preset("JPEG q=23").unwrap(), vec![Distortion::compression(0.85)]);
        assert_eq!(preset("H.264 CRF 23").unwrap(), vec![Distortion::compression(0.90)]);
        assert_eq!(preset("CRF 28").unwrap(), vec![Distortion::compression(0.95)]);
        assert_eq!(preset("MP3 32k").unwrap(), vec![]);
        assert_eq!(parse_distortion("offset:0.5").unwrap(), vec![Distortion::offset(0.5)]);
        assert!(parse_distortion("bogus").is_err());
        assert!(parse_distortion("compress:1.5").is_err());
    }
}
