//! Four-stage per-video pipeline, variants, and per-condition evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{correct_stretch_with, estimate_stretch_with, StretchEstimate, STRETCH_DEAD_ZONE};
use crate::attribution::{attribute, AttributionConfig, AttributionVerdict};
use crate::calibration::{apply_calibration, fit_temperature_with, CalibrationConfig, CalibrationModel};
use crate::error::{invalid, Error, Result};
use crate::fusion::{
    equal_fusion, reliability_gate, select_offset, ConfidenceConfig, GateConfig, GateDecision, OffsetBank,
    OffsetMeasure, Weighting,
};
use crate::metrics::{average_precision, expected_calibration_error, false_positive_rate, roc_auc, temporal_iou};
use crate::model::{FrameLabels, Manipulation, VideoRecord};
use crate::par::{map_slice, Execution};
use crate::simulate::{apply_distortions, stream_seed, Distortion};

/// Pipeline stages in their only valid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    StretchCorrection,
    Gate,
    Fusion,
    Calibration,
}

impl StageName {
    pub const ALL: [StageName; 4] = [
        StageName::StretchCorrection,
        StageName::Gate,
        StageName::Fusion,
        StageName::Calibration,
    ];
}

/// Rejects repeated or out-of-order stages.
pub fn validate_stage_order(stages: &[StageName]) -> Result<()> {
    for w in stages.windows(2) {
        if w[0] >= w[1] {
            return Err(invalid(
                "stage order",
                format!("{:?} cannot run after {:?}; order is stretch_correction, gate, fusion, calibration", w[1], w[0]),
            ));
        }
    }
    Ok(())
}

/// Which score the pipeline reports per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Fused,
    Visual,
    Audio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub stretch_correction: bool,
    pub offset_search: bool,
    pub gate: bool,
    pub weighting: Weighting,
    pub calibration: bool,
    pub channel: Channel,
}

impl Stages {
    /// Full pipeline restricted to `names`; a missing fusion stage means equal weights, zero offset.
    pub fn from_names(names: &[StageName]) -> Result<Self> {
        validate_stage_order(names)?;
        let fusion = names.contains(&StageName::Fusion);
        Ok(Self {
            stretch_correction: names.contains(&StageName::StretchCorrection),
            offset_search: fusion,
            gate: names.contains(&StageName::Gate),
            weighting: if fusion { Weighting::Confidence } else { Weighting::Equal },
            calibration: names.contains(&StageName::Calibration),
            channel: Channel::Fused,
        })
    }

    /// Audio channel alone, optionally stretch-corrected.
    pub fn audio_channel(corrected: bool) -> Self {
        Self {
            stretch_correction: corrected,
            ..Variant::AudioOnly.stages()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    Naive,
    VisualOnly,
    AudioOnly,
    OffsetOnly,
    OffsetPlusGate,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::Naive,
        Variant::VisualOnly,
        Variant::AudioOnly,
        Variant::OffsetOnly,
        Variant::OffsetPlusGate,
    ];

    pub fn stages(self) -> Stages {
        let bare = Stages {
            stretch_correction: false,
            offset_search: false,
            gate: false,
            weighting: Weighting::Equal,
            calibration: false,
            channel: Channel::Fused,
        };
        match self {
            Variant::Full => Stages::from_names(&StageName::ALL).expect("canonical order"),
            Variant::Naive => bare,
            Variant::VisualOnly => Stages {
                channel: Channel::Visual,
                ..bare
            },
            Variant::AudioOnly => Stages {
                channel: Channel::Audio,
                ..bare
            },
            Variant::OffsetOnly => Stages::from_names(&[StageName::Fusion]).expect("canonical order"),
            Variant::OffsetPlusGate => {
                Stages::from_names(&[StageName::Gate, StageName::Fusion, StageName::Calibration]).expect("canonical order")
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Naive => "naive",
            Variant::VisualOnly => "visual_only",
            Variant::AudioOnly => "audio_only",
            Variant::OffsetOnly => "offset_only",
            Variant::OffsetPlusGate => "offset_gate",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == key)
            .or(match key.as_str() {
                "offset_plus_gate" => Some(Variant::OffsetPlusGate),
                "visual" => Some(Variant::VisualOnly),
                "audio" => Some(Variant::AudioOnly),
                _ => None,
            })
            .ok_or_else(|| invalid("variant", format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One ranking over every test frame.
    Frames,
    /// Mean of per-video AP over videos where it is defined.
    PerVideo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub iou_threshold: f64,
    pub fpr_threshold: f64,
    pub pooling: Pooling,
    pub closing_radius: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            fpr_threshold: 0.5,
            pooling: Pooling::Frames,
            closing_radius: crate::metrics::DEFAULT_CLOSING_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: u64,
    pub validation_fraction: f64,
    /// Fit calibration on the evaluated videos themselves.
    pub oracle: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 11,
            validation_fraction: 0.3,
            oracle: false,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(invalid("split config", "validation_fraction must lie in (0, 1)"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(invalid("split config", format!("seed {} does not fit a signed 64-bit integer", self.seed)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stretch_dead_zone: f64,
    pub gate: GateConfig,
    pub offset_bank: OffsetBank,
    pub offset_measure: OffsetMeasure,
    pub confidence: ConfidenceConfig,
    pub calibration: CalibrationConfig,
    pub attribution: AttributionConfig,
    pub metrics: MetricsConfig,
    pub split: SplitConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stretch_dead_zone: STRETCH_DEAD_ZONE,
            gate: GateConfig::default(),
            offset_bank: OffsetBank::default(),
            offset_measure: OffsetMeasure::OracleAp,
            confidence: ConfidenceConfig::default(),
            calibration: CalibrationConfig::default(),
            attribution: AttributionConfig::default(),
            metrics: MetricsConfig::default(),
            split: SplitConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.gate.validate()?;
        self.offset_bank.validate()?;
        self.confidence.validate()?;
        self.calibration.validate()?;
        self.attribution.validate()?;
        self.split.validate()
    }
}

/// Everything the pipeline produced for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoOutput {
    pub id: String,
    pub visual: Vec<f64>,
    /// Audio after stretch correction and offset alignment.
    pub audio: Vec<f64>,
    pub fused: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub labels: FrameLabels,
    pub stretch: Option<StretchEstimate>,
    pub gate: Option<GateDecision>,
    pub offset_seconds: f64,
    pub manipulation: Option<Manipulation>,
    pub validation: bool,
    pub attribution: Option<AttributionVerdict>,
}

/// One variant run over one distorted benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRun {
    pub condition: String,
    pub variant: String,
    pub calibration: Option<CalibrationModel>,
    pub videos: Vec<VideoOutput>,
}

impl ConditionRun {
    pub fn test_videos(&self) -> impl Iterator<Item = &VideoOutput> {
        self.videos.iter().filter(|v| !v.validation)
    }
}

/// Video-level split by id; true marks validation membership.
pub fn split_validation(ids: &[&str], config: &SplitConfig) -> Vec<bool> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]));
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, 0, 0x53504c54));
    order.shuffle(&mut rng);
    let take = (config.validation_fraction * ids.len() as f64).round() as usize;
    let mut out = vec![false; ids.len()];
    for &i in &order[..take.min(ids.len())] {
        out[i] = true;
    }
    out
}

pub fn distort_benchmark(
    benchmark: &[VideoRecord],
    distortions: &[Distortion],
    exec: Execution,
) -> Result<Vec<VideoRecord>> {
    map_slice(exec, benchmark, |r| apply_distortions(r, distortions))
        .into_iter()
        .collect()
}

/// Runs every stage except calibration on one video.
pub fn process_video(record: &VideoRecord, stages: &Stages, config: &PipelineConfig) -> Result<VideoOutput> {
    let (record, stretch) = if stages.stretch_correction {
        let est = estimate_stretch_with(&record.meta, config.stretch_dead_zone)?;
        (correct_stretch_with(record, config.stretch_dead_zone)?, Some(est))
    } else {
        (record.clone(), None)
    };
    let visual = record.visual.values();
    let audio = record.frame_audio();
    let audio = audio.as_slice();
    let mut gate = None;
    let mut offset_seconds = 0.0;
    let (aligned, fused) = match stages.channel {
        Channel::Visual => (audio.to_vec(), visual.to_vec()),
        Channel::Audio => (audio.to_vec(), audio.to_vec()),
        Channel::Fused => {
            let decision = if stages.gate {
                reliability_gate(visual, &config.gate)
            } else {
                GateDecision {
                    g: false,
                    visual_mean: f64::NAN,
                }
            };
            if stages.gate {
                gate = Some(decision);
            }
            if stages.offset_search || decision.g {
                let bank = if stages.offset_search {
                    config.offset_bank.clone()
                } else {
                    OffsetBank::zero_only()
                };
                let choice = select_offset(
                    audio,
                    visual,
                    record.labels.values(),
                    &decision,
                    &bank,
                    record.meta.frame_rate,
                    config.offset_measure,
                    stages.weighting,
                    &config.confidence,
                )?;
                offset_seconds = choice.delta_seconds;
                (choice.aligned_audio, choice.fused)
            } else {
                let fused = match stages.weighting {
                    Weighting::Equal => equal_fusion(audio, visual),
                    Weighting::Confidence => crate::fusion::fuse_frames(audio, visual, &config.confidence)?,
                };
                (audio.to_vec(), fused)
            }
        }
    };
    Ok(VideoOutput {
        id: record.id.clone(),
        visual: visual.to_vec(),
        audio: aligned,
        calibrated: fused.clone(),
        fused,
        labels: record.labels.clone(),
        stretch,
        gate,
        offset_seconds,
        manipulation: record.manipulation,
        validation: false,
        attribution: None,
    })
}

/// Runs `stages` over an already distorted benchmark.
pub fn run_stages(
    distorted: &[VideoRecord],
    stages: &Stages,
    config: &PipelineConfig,
    condition: &str,
    variant: &str,
    exec: Execution,
) -> Result<ConditionRun> {
    config.validate()?;
    let mut videos: Vec<VideoOutput> = map_slice(exec, distorted, |r| process_video(r, stages, config))
        .into_iter()
        .collect::<Result<_>>()?;
    let ids: Vec<&str> = videos.iter().map(|v| v.id.as_str()).collect();
    let split = split_validation(&ids, &config.split);
    for (v, s) in videos.iter_mut().zip(split) {
        v.validation = s;
    }
    videos.sort_by(|a, b| a.id.cmp(&b.id));

    let calibration = if stages.calibration {
        let fit_on = |v: &&VideoOutput| config.split.oracle || v.validation;
        let fused: Vec<f64> = videos.iter().filter(fit_on).flat_map(|v| v.fused.iter().copied()).collect();
        let labels: Vec<bool> = videos
            .iter()
            .filter(fit_on)
            .flat_map(|v| v.labels.values().iter().copied())
            .collect();
        let model = if fused.is_empty() {
            CalibrationModel::identity()
        } else {
            fit_temperature_with(&fused, &labels, &config.calibration, exec)?
        };
        for v in &mut videos {
            v.calibrated = apply_calibration(&v.fused, &model, &config.calibration);
        }
        Some(model)
    } else {
        None
    };

    if stages.gate && stages.channel == Channel::Fused {
        let verdicts = map_slice(exec, &videos, |v| {
            attribute(
                &v.visual,
                &v.audio,
                &v.calibrated,
                v.gate.as_ref().expect("gate ran"),
                &config.attribution,
            )
        });
        for (v, verdict) in videos.iter_mut().zip(verdicts) {
            v.attribution = Some(verdict?);
        }
    }

    Ok(ConditionRun {
        condition: condition.to_string(),
        variant: variant.to_string(),
        calibration,
        videos,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub condition: String,
    pub variant: String,
    pub ap: f64,
    pub temporal_iou: f64,
    pub ece: f64,
    /// Undefined without authentic test videos.
    pub fpr: Option<f64>,
    /// Video-level AUC over max frame probability; undefined without both classes.
    pub auc: Option<f64>,
}

/// Metrics over the test videos of a run, or over all videos when `split.oracle` is set.
pub fn evaluate_run(run: &ConditionRun, config: &PipelineConfig) -> Result<EvalReport> {
    let videos: Vec<&VideoOutput> = if config.split.oracle {
        run.videos.iter().collect()
    } else {
        run.test_videos().collect()
    };
    if videos.is_empty() {
        return Err(invalid("evaluation", "no test videos"));
    }
    let m = &config.metrics;
    let scores: Vec<f64> = videos.iter().flat_map(|v| v.calibrated.iter().copied()).collect();
    let labels: Vec<bool> = videos.iter().flat_map(|v| v.labels.values().iter().copied()).collect();
    let ap = match m.pooling {
        Pooling::Frames => average_precision(&scores, &labels)?,
        Pooling::PerVideo => {
            let aps: Vec<f64> = videos
                .iter()
                .filter_map(|v| average_precision(&v.calibrated, v.labels.values()).ok())
                .collect();
            if aps.is_empty() {
                return Err(Error::UndefinedAp { missing: "mixed-label videos" });
            }
            aps.iter().sum::<f64>() / aps.len() as f64
        }
    };
    let ece = expected_calibration_error(&scores, &labels, config.calibration.bin_count)?;
    let mut iou = 0.0;
    for v in &videos {
        iou += temporal_iou(&v.calibrated, &v.labels, m.iou_threshold)?;
    }
    let temporal_iou = iou / videos.len() as f64;
    let pairs: Vec<(&[f64], &FrameLabels)> = videos.iter().map(|v| (v.calibrated.as_slice(), &v.labels)).collect();
    let fpr = match false_positive_rate(&pairs, m.fpr_threshold) {
        Ok(f) => Some(f),
        Err(Error::NoAuthenticVideos) => None,
        Err(e) => return Err(e),
    };
    let video_scores: Vec<f64> = videos
        .iter()
        .map(|v| v.calibrated.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let tampered: Vec<bool> = videos.iter().map(|v| !v.labels.is_authentic()).collect();
    let auc = roc_auc(&video_scores, &tampered).ok();
    Ok(EvalReport {
        condition: run.condition.clone(),
        variant: run.variant.clone(),
        ap,
        temporal_iou,
        ece,
        fpr,
        auc,
    })
}

/// Distorts, runs one variant, and evaluates on the test split.
pub fn run_condition(
    benchmark: &[VideoRecord],
    distortions: &[Distortion],
    variant: Variant,
    config: &PipelineConfig,
    label: &str,
) -> Result<EvalReport> {
    let exec = Execution::default();
    let distorted = distort_benchmark(benchmark, distortions, exec)?;
    let run = run_stages(&distorted, &variant.stages(), config, label, variant.as_str(), exec)?;
    evaluate_run(&run, config)
}
