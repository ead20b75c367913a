//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion with
//! its individual checks beneath, and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use avmark_core::align::{correct_stretch, estimate_stretch, resample, shift_scores};
use avmark_core::calibration::{apply_calibration, fit_temperature, CalibrationConfig, CalibrationModel};
use avmark_core::experiments::{reproduce, TableId, TableOutcome};
use avmark_core::fusion::{reliability_gate, GateConfig};
use avmark_core::io;
use avmark_core::metrics::{
    average_precision, expected_calibration_error, false_positive_rate, mask_metrics, morphological_close,
};
use avmark_core::model::{BinaryMask, FrameLabels, Manipulation};
use avmark_core::pipeline::{distort_benchmark, run_stages, PipelineConfig, Variant};
use avmark_core::simulate::{apply_distortion, generate_benchmark, Distortion, GenConfig, ScenarioMix};
use avmark_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

struct Criterion {
    id: u8,
    title: &'static str,
    lines: Vec<String>,
    failed: usize,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            lines: Vec::new(),
            failed: 0,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        self.lines.push(format!("    {} {name}: {detail}", if ok { "ok  " } else { "FAIL" }));
        self.failed += !ok as usize;
    }

    fn table(&mut self, outcome: &TableOutcome) {
        for c in &outcome.checks {
            self.check(&format!("{} {}", outcome.table.as_str(), c.name), c.passed, &c.detail);
        }
    }

    fn passed(&self) -> bool {
        self.failed == 0
    }

    fn report(&self) {
        let total = self.lines.len();
        println!(
            "[{}] C{:02} {} ({} of {total} checks)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            total - self.failed,
        );
        for l in &self.lines {
            println!("{l}");
        }
    }
}

fn brute_force_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&y| y).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &th in &thresholds {
        let mut tp = 0.0;
        let mut k = 0.0;
        for (&s, &y) in scores.iter().zip(labels) {
            if s >= th {
                k += 1.0;
                if y {
                    tp += 1.0;
                }
            }
        }
        let recall = tp / positives;
        ap += (recall - prev_recall) * (tp / k);
        prev_recall = recall;
    }
    ap
}

fn brute_force_ece(probs: &[f64], labels: &[bool], bins: usize) -> f64 {
    let n = probs.len() as f64;
    let mut ece = 0.0;
    for k in 0..bins {
        let lo = k as f64 / bins as f64;
        let hi = (k + 1) as f64 / bins as f64;
        let members: Vec<usize> = (0..probs.len())
            .filter(|&i| probs[i] >= lo && (probs[i] < hi || (k == bins - 1 && probs[i] <= 1.0)))
            .collect();
        if members.is_empty() {
            continue;
        }
        let c = members.len() as f64;
        let mut sp = 0.0;
        let mut sy = 0.0;
        for &i in &members {
            sp += probs[i];
            sy += labels[i] as u8 as f64;
        }
        ece += (c / n) * (sp / c - sy / c).abs();
    }
    ece
}

fn random_instance(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.gen_range(2..=max_len);
    let coarse = rng.gen_bool(0.5);
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            let s: f64 = rng.gen();
            if coarse { (s * 10.0).round() / 10.0 } else { s }
        })
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

fn c01_metric_oracles() -> Criterion {
    let mut c = Criterion::new(1, "metric oracles");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_ap: f64 = 0.0;
    let mut worst_ece: f64 = 0.0;
    for _ in 0..500 {
        let (s, y) = random_instance(&mut rng, 40);
        worst_ap = worst_ap.max((average_precision(&s, &y).unwrap() - brute_force_ap(&s, &y)).abs());
    }
    for _ in 0..500 {
        let (s, y) = random_instance(&mut rng, 50);
        worst_ece = worst_ece.max((expected_calibration_error(&s, &y, 10).unwrap() - brute_force_ece(&s, &y, 10)).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check("AP matches enumeration", worst_ap <= 1e-12, format!("max |diff| {worst_ap:e} <= 1e-12"));
    c.check("ECE matches per-bin enumeration", worst_ece <= 1e-12, format!("max |diff| {worst_ece:e} <= 1e-12"));
    c.check("runtime", elapsed < 5.0, format!("{elapsed:.3} s < 5 s"));
    c
}

fn c02_calibration_invariants() -> Criterion {
    let mut c = Criterion::new(2, "calibration invariants");
    let cfg = CalibrationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut regressions, mut ap_drift) = (0, 0.0f64);
    let instances = 200;
    for _ in 0..instances {
        let n = rng.gen_range(20..=200);
        let spread = rng.gen_range(0.05..0.4);
        let gap = rng.gen_range(0.0..0.6);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let fused: Vec<f64> = labels
            .iter()
            .map(|&y| {
                let centre = 0.5 + if y { gap / 2.0 } else { -gap / 2.0 };
                (centre + spread * (rng.gen::<f64>() * 2.0 - 1.0)).clamp(0.001, 0.999)
            })
            .collect();
        let before = expected_calibration_error(&fused, &labels, cfg.bin_count).unwrap();
        let model = fit_temperature(&fused, &labels, &cfg).unwrap();
        let calibrated = apply_calibration(&fused, &model, &cfg);
        let after = expected_calibration_error(&calibrated, &labels, cfg.bin_count).unwrap();
        if after > before {
            regressions += 1;
        }
        let drift = (average_precision(&fused, &labels).unwrap() - average_precision(&calibrated, &labels).unwrap()).abs();
        ap_drift = ap_drift.max(drift);
    }
    c.check("ECE never increases", regressions == 0, format!("{regressions} of {instances} instances regressed"));
    c.check("AP unchanged by calibration", ap_drift <= 1e-12, format!("max |diff| {ap_drift:e} <= 1e-12"));
    c
}

fn c03_compression_grid() -> Criterion {
    let mut c = Criterion::new(3, "T1 compression grid");
    let start = Instant::now();
    let outcome = reproduce(TableId::T1, SEED, &PipelineConfig::default(), Execution::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    c.table(&outcome);
    c.check("runtime", elapsed < 30.0, format!("{elapsed:.2} s < 30 s"));
    c
}

fn c04_layer_ablation() -> Criterion {
    let mut c = Criterion::new(4, "T2 layer ablation");
    c.table(&reproduce(TableId::T2, SEED, &PipelineConfig::default(), Execution::default()).unwrap());
    c
}

fn c05_offset_sweep() -> Criterion {
    let mut c = Criterion::new(5, "T3a offset sweep");
    c.table(&reproduce(TableId::T3a, SEED, &PipelineConfig::default(), Execution::default()).unwrap());
    c
}

fn c06_tempo_sweep() -> Criterion {
    let mut c = Criterion::new(6, "T3b tempo sweep");
    c.table(&reproduce(TableId::T3b, SEED, &PipelineConfig::default(), Execution::default()).unwrap());
    c
}

fn c07_joint_degradation() -> Criterion {
    let mut c = Criterion::new(7, "T4a joint degradation");
    c.table(&reproduce(TableId::T4a, SEED, &PipelineConfig::default(), Execution::default()).unwrap());
    c
}

fn c08_gate_correctness() -> Criterion {
    let mut c = Criterion::new(8, "gate correctness");
    let gate = GateConfig::default();
    let bench = generate_benchmark(&GenConfig { seed: SEED, ..GenConfig::default() }).unwrap();
    let authentic: Vec<_> = bench.iter().filter(|r| r.labels.is_authentic()).collect();
    let open = authentic.iter().filter(|r| !reliability_gate(r.visual.values(), &gate).g).count();
    c.check(
        "clean authentic videos keep the gate open",
        open == authentic.len(),
        format!("{open} of {} with g=0", authentic.len()),
    );
    for severity in [0.85, 0.90, 0.95] {
        let d = distort_benchmark(&bench, &[Distortion::compression(severity)], Execution::default()).unwrap();
        let closed = d.iter().filter(|r| reliability_gate(r.visual.values(), &gate).g).count();
        let share = closed as f64 / d.len() as f64;
        c.check(&format!("severity {severity} closes the gate"), share >= 0.99, format!("{share:.4} >= 0.99"));
    }
    let heavy = generate_benchmark(&GenConfig {
        seed: SEED,
        tamper_fraction_range: (0.8, 0.8),
        authentic_video_fraction: 0.0,
        ..GenConfig::default()
    })
    .unwrap();
    let mut by_kind: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &heavy {
        let e = by_kind.entry(r.manipulation.unwrap().as_str()).or_default();
        e.0 += reliability_gate(r.visual.values(), &gate).g as usize;
        e.1 += 1;
    }
    let summary: Vec<String> = by_kind.iter().map(|(k, (g, n))| format!("{k} {g}/{n}")).collect();
    c.lines.push(format!("    info stress at tamper fraction 0.8, clean, videos with g=1: {}", summary.join(", ")));
    c
}

fn c09_attribution() -> Criterion {
    let mut c = Criterion::new(9, "attribution");
    let cfg = GenConfig {
        seed: SEED,
        scenario_mix: ScenarioMix::Balanced,
        ..GenConfig::default()
    };
    let bench = generate_benchmark(&cfg).unwrap();
    let pipeline = PipelineConfig::default();
    let run = run_stages(&bench, &Variant::Full.stages(), &pipeline, "clean", "full", Execution::default()).unwrap();
    let mut correct = 0;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &run.videos {
        let truth = v.manipulation.unwrap();
        *counts.entry(truth.as_str()).or_default() += 1;
        correct += (v.attribution.unwrap().label.as_str() == truth.as_str()) as usize;
    }
    let accuracy = correct as f64 / run.videos.len() as f64;
    c.lines.push(format!("    info kinds {counts:?}"));
    c.check("4-way accuracy", accuracy >= 0.99, format!("{accuracy:.4} >= 0.99 over {} videos", run.videos.len()));
    let pairs: Vec<(&[f64], &FrameLabels)> = run
        .videos
        .iter()
        .filter(|v| v.manipulation == Some(Manipulation::Authentic))
        .map(|v| (v.calibrated.as_slice(), &v.labels))
        .collect();
    let fpr = false_positive_rate(&pairs, 0.5).unwrap();
    c.check("authentic FPR", fpr == 0.0, format!("{fpr:.4} == 0 over {} videos", pairs.len()));
    c
}

fn rect(h: usize, w: usize, top: usize, left: usize, rh: usize, rw: usize) -> BinaryMask {
    let mut m = BinaryMask::empty(h, w);
    for r in top..top + rh {
        for col in left..left + rw {
            m.set(r, col, true);
        }
    }
    m
}

fn c10_spatial_refinement() -> Criterion {
    let mut c = Criterion::new(10, "spatial refinement");
    let gt = rect(24, 24, 6, 6, 12, 12);
    let mut striped = gt.clone();
    for r in 6..18 {
        for col in (7..18).step_by(3) {
            striped.set(r, col, false);
        }
    }
    let mut split = gt.clone();
    for r in 6..18 {
        split.set(r, 11, false);
        split.set(r, 12, false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut speckled = gt.clone();
    for r in 6..18 {
        for col in 6..18 {
            if rng.gen_bool(0.3) {
                speckled.set(r, col, false);
            }
        }
    }
    for (name, pred, radius) in [("striped", &striped, 1), ("split", &split, 2), ("speckled", &speckled, 1)] {
        let base = mask_metrics(pred, &gt, false).unwrap();
        let refined = mask_metrics(&morphological_close(pred, radius), &gt, true).unwrap();
        c.check(
            &format!("{name} IoU improves"),
            refined.iou > base.iou,
            format!("{:.3} -> {:.3}", base.iou, refined.iou),
        );
        c.check(&format!("{name} F1 improves"), refined.f1 > base.f1, format!("{:.3} -> {:.3}", base.f1, refined.f1));
        c.check(
            &format!("{name} recall drop"),
            base.recall - refined.recall < 0.05,
            format!("{:.3} -> {:.3}", base.recall, refined.recall),
        );
    }
    let (mut extensive, mut idempotent) = (0, 0);
    for _ in 0..1000 {
        let h = rng.gen_range(1..=24);
        let w = rng.gen_range(1..=24);
        let density = rng.gen_range(0.0..1.0);
        let bits = (0..h * w).map(|_| rng.gen_bool(density)).collect();
        let m = BinaryMask::new(h, w, bits).unwrap();
        let r = rng.gen_range(1..=3);
        let once = morphological_close(&m, r);
        extensive += m.is_subset_of(&once) as usize;
        idempotent += (morphological_close(&once, r) == once) as usize;
    }
    c.check("closing is extensive", extensive == 1000, format!("{extensive} of 1000"));
    c.check("closing is idempotent", idempotent == 1000, format!("{idempotent} of 1000"));
    c
}

fn c11_alignment_round_trips() -> Criterion {
    let mut c = Criterion::new(11, "alignment round-trips");
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut shift_ok = true;
    for _ in 0..300 {
        let len = rng.gen_range(60..=200);
        let x: Vec<f64> = (0..len).map(|_| rng.gen()).collect();
        let k = rng.gen_range(0..=25i64);
        let back = shift_scores(&shift_scores(&x, k), -k);
        let ku = k as usize;
        shift_ok &= back[ku..len - 1 - ku] == x[ku..len - 1 - ku];
    }
    c.check("shift(+k) then shift(-k) restores interior", shift_ok, "300 arrays, k <= 25");

    let mut worst: f64 = 0.0;
    for step in 0..=20 {
        let alpha = 0.9 + 0.01 * step as f64;
        for _ in 0..5 {
            let phases: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let x: Vec<f64> = (0..200)
                .map(|i| {
                    let t = i as f64 / 200.0;
                    0.5 + (1..=3)
                        .zip(&phases)
                        .map(|(f, p)| 0.15 / f as f64 * (std::f64::consts::TAU * f as f64 * t + p).sin())
                        .sum::<f64>()
                })
                .collect();
            let back = resample(&resample(&x, alpha).unwrap(), 1.0 / alpha).unwrap();
            for i in 10..190 {
                worst = worst.max((back[i] - x[i]).abs());
            }
        }
    }
    c.check("resample self-inverse on smooth sequences", worst < 0.02, format!("max deviation {worst:.5} < 0.02"));

    let bench = generate_benchmark(&GenConfig {
        seed: SEED,
        video_count: 300,
        ..GenConfig::default()
    })
    .unwrap();
    let mut outside = 0;
    for r in &bench {
        let alpha = if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(0.8..1.25) };
        let stretched = apply_distortion(r, &Distortion::stretch(alpha)).unwrap();
        let est = estimate_stretch(&correct_stretch(&stretched).unwrap().meta).unwrap();
        outside += ((est.alpha_hat - 1.0).abs() > 0.01) as usize;
    }
    c.check("re-estimated stretch inside dead-zone", outside == 0, format!("{outside} of {} outside", bench.len()));
    c
}

fn avmark(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_avmark")).args(args).output().expect("binary runs")
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c12_determinism_and_round_trip() -> Criterion {
    let mut c = Criterion::new(12, "determinism and serialization round-trips");
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let out = avmark(&["reproduce", "--table", "all", "--out", d.to_str().unwrap()]);
        assert!(matches!(out.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    c.check(
        "reproduce twice gives byte-identical CSVs",
        !ca.is_empty() && ca == cb,
        format!("{} files compared", ca.len()),
    );

    let ds = tmp.path().join("ds");
    let out = avmark(&["simulate", "--videos", "12", "--out", ds.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = generate_benchmark(&GenConfig {
        video_count: 12,
        ..GenConfig::default()
    })
    .unwrap();
    let read = io::read_dataset(&ds).unwrap();
    c.check("dataset files round-trip", read == expected, format!("{} records", read.len()));

    let ds2 = tmp.path().join("ds2");
    let manifest = ds.join("run.toml");
    let out = avmark(&["simulate", manifest.to_str().unwrap(), "--out", ds2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    c.check("run manifest round-trips", dir_contents(&ds) == dir_contents(&ds2), "simulate from written run.toml");

    let pipeline = PipelineConfig::default();
    let distorted = distort_benchmark(&read, &[Distortion::compression(0.85), Distortion::offset(0.25)], Execution::default()).unwrap();
    let run = run_stages(&distorted, &Variant::Full.stages(), &pipeline, "jpeg", "full", Execution::default()).unwrap();
    let (fp, vp) = io::write_run(&tmp.path().join("fused"), &run).unwrap();
    let frames: Vec<io::FrameOutputRow> = io::read_csv(&fp).unwrap();
    let videos: Vec<io::VideoOutputRow> = io::read_csv(&vp).unwrap();
    c.check("per-frame output round-trips", frames == io::frame_rows(&run), format!("{} rows", frames.len()));
    c.check("per-video output round-trips", videos == io::video_rows(&run), format!("{} rows", videos.len()));

    let model = run.calibration.unwrap();
    let text = toml::to_string(&model).unwrap();
    let back: CalibrationModel = toml::from_str(&text).unwrap();
    c.check("calibration model round-trips", back == model, format!("T* = {}", model.temperature));

    let report = std::fs::read_to_string(a.join("report_T2.csv")).unwrap();
    let rows: Vec<io::ReportRow> = io::from_csv_str(&report, "report").unwrap();
    c.check("report round-trips", io::to_csv_string(&rows).unwrap() == report, format!("{} rows", rows.len()));
    c
}

fn main() {
    let criteria: [fn() -> Criterion; 12] = [
        c01_metric_oracles,
        c02_calibration_invariants,
        c03_compression_grid,
        c04_layer_ablation,
        c05_offset_sweep,
        c06_tempo_sweep,
        c07_joint_degradation,
        c08_gate_correctness,
        c09_attribution,
        c10_spatial_refinement,
        c11_alignment_round_trips,
        c12_determinism_and_round_trip,
    ];
    let mut failed = 0;
    for run in criteria {
        let c = run();
        c.report();
        failed += !c.passed() as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
