//! Scripted table experiments and their qualitative checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::VideoRecord;
use crate::par::Execution;
use crate::pipeline::{distort_benchmark, evaluate_run, run_stages, EvalReport, PipelineConfig, Stages, Variant};
use crate::simulate::{generate_benchmark_with, preset, Distortion, GenConfig, ScenarioMix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3a,
    T3b,
    T4a,
}

impl TableId {
    pub const ALL: [TableId; 5] = [TableId::T1, TableId::T2, TableId::T3a, TableId::T3b, TableId::T4a];

    pub fn as_str(self) -> &'static str {
        match self {
            TableId::T1 => "T1",
            TableId::T2 => "T2",
            TableId::T3a => "T3a",
            TableId::T3b => "T3b",
            TableId::T4a => "T4a",
        }
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("table id", format!("{s:?} is not one of T1, T2, T3a, T3b, T4a")))
    }
}

/// A named condition: a label and the distortions applied in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub distortions: Vec<Distortion>,
}

impl Condition {
    pub fn new(label: impl Into<String>, distortions: Vec<Distortion>) -> Self {
        Self {
            label: label.into(),
            distortions,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableOutcome {
    pub table: TableId,
    pub rows: Vec<EvalReport>,
    pub checks: Vec<Check>,
}

impl TableOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn row(&self, condition: &str, variant: &str) -> Option<&EvalReport> {
        self.rows.iter().find(|r| r.condition == condition && r.variant == variant)
    }

    fn ap(&self, condition: &str, variant: &str) -> f64 {
        self.row(condition, variant).map_or(f64::NAN, |r| r.ap)
    }
}

/// Benchmark used by the tables: both channels carry every manipulation.
pub fn table_benchmark_config(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        scenario_mix: ScenarioMix::JointOnly,
        ..GenConfig::default()
    }
}

pub const TABLE3A_OFFSETS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0];
pub const TABLE3B_FACTORS: [f64; 4] = [0.90, 0.95, 1.05, 1.10];

fn compression(name: &str) -> Vec<Distortion> {
    preset(name).expect("known preset")
}

fn offset_label(delta: f64) -> String {
    format!("offset_{delta:+.2}s")
}

fn stretch_label(alpha: f64) -> String {
    format!("stretch_{alpha:.2}")
}

/// Conditions and variants that make up a table.
pub fn table_plan(table: TableId) -> (Vec<Condition>, Vec<(String, Stages)>) {
    let variants = |vs: &[Variant]| vs.iter().map(|v| (v.as_str().to_string(), v.stages())).collect();
    match table {
        TableId::T1 => (
            vec![Condition::new("clean", vec![]), Condition::new("jpeg-q23", compression("jpeg-q23"))],
            variants(&[Variant::VisualOnly, Variant::AudioOnly, Variant::Naive, Variant::Full]),
        ),
        TableId::T2 => (
            ["clean", "jpeg-q23", "h264-crf23", "h264-crf28"]
                .iter()
                .map(|n| Condition::new(*n, compression(n)))
                .collect(),
            variants(&[Variant::Naive, Variant::OffsetOnly, Variant::OffsetPlusGate, Variant::Full]),
        ),
        TableId::T3a => (
            TABLE3A_OFFSETS
                .iter()
                .map(|&d| Condition::new(offset_label(d), vec![Distortion::offset(d)]))
                .collect(),
            variants(&[Variant::Naive, Variant::Full]),
        ),
        TableId::T3b => (
            TABLE3B_FACTORS
                .iter()
                .map(|&a| Condition::new(stretch_label(a), vec![Distortion::stretch(a)]))
                .collect(),
            vec![
                ("raw".to_string(), Stages::audio_channel(false)),
                ("corrected".to_string(), Stages::audio_channel(true)),
            ],
        ),
        TableId::T4a => {
            let mut conditions = Vec::new();
            for visual in ["clean", "jpeg-q23"] {
                for (audio, extra) in [
                    ("clean", vec![]),
                    ("mp3-32k", compression("mp3-32k")),
                    ("stretch-0.95", vec![Distortion::stretch(0.95)]),
                ] {
                    let mut ds = vec![Distortion::offset(0.5)];
                    ds.extend(compression(visual));
                    ds.extend(extra);
                    conditions.push(Condition::new(format!("{visual}+{audio}"), ds));
                }
            }
            (conditions, variants(&[Variant::Naive, Variant::Full]))
        }
    }
}

/// Evaluates every (condition, variant) pair of a plan.
pub fn run_grid(
    benchmark: &[VideoRecord],
    conditions: &[Condition],
    variants: &[(String, Stages)],
    config: &PipelineConfig,
    exec: Execution,
) -> Result<Vec<EvalReport>> {
    let mut rows = Vec::new();
    for c in conditions {
        let distorted = distort_benchmark(benchmark, &c.distortions, exec)?;
        for (name, stages) in variants {
            let run = run_stages(&distorted, stages, config, &c.label, name, exec)?;
            rows.push(evaluate_run(&run, config)?);
        }
    }
    Ok(rows)
}

pub fn run_table(table: TableId, benchmark: &[VideoRecord], config: &PipelineConfig, exec: Execution) -> Result<TableOutcome> {
    let (conditions, variants) = table_plan(table);
    let rows = run_grid(benchmark, &conditions, &variants, config, exec)?;
    let mut outcome = TableOutcome {
        table,
        rows,
        checks: Vec::new(),
    };
    outcome.checks = table_checks(&outcome);
    Ok(outcome)
}

/// Generates the table benchmark for `seed` and runs the table.
pub fn reproduce(table: TableId, seed: u64, config: &PipelineConfig, exec: Execution) -> Result<TableOutcome> {
    let benchmark = generate_benchmark_with(&table_benchmark_config(seed), exec)?;
    run_table(table, &benchmark, config, exec)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
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

fn at_least(name: String, value: f64, bound: f64) -> Check {
    Check::new(name, value >= bound, format!("{value:.4} >= {bound}"))
}

fn at_most(name: String, value: f64, bound: f64) -> Check {
    Check::new(name, value <= bound, format!("{value:.4} <= {bound}"))
}

fn below(name: String, value: f64, bound: f64) -> Check {
    Check::new(name, value < bound, format!("{value:.4} < {bound:.4}"))
}

/// The qualitative pattern each table must show.
pub fn table_checks(outcome: &TableOutcome) -> Vec<Check> {
    let o = outcome;
    let full = Variant::Full.as_str();
    let naive = Variant::Naive.as_str();
    let mut checks = Vec::new();
    match o.table {
        TableId::T1 => {
            checks.push(at_least("clean full AP".into(), o.ap("clean", full), 0.99));
            checks.push(at_most("jpeg visual-only AP".into(), o.ap("jpeg-q23", "visual_only"), 0.60));
            checks.push(at_least("jpeg audio-only AP".into(), o.ap("jpeg-q23", "audio_only"), 0.99));
            checks.push(at_least("jpeg full AP".into(), o.ap("jpeg-q23", full), 0.99));
            let (f, n) = (
                o.row("jpeg-q23", full).map_or(f64::NAN, |r| r.temporal_iou),
                o.row("jpeg-q23", naive).map_or(f64::NAN, |r| r.temporal_iou),
            );
            checks.push(at_least("jpeg full IoU vs naive".into(), f, n));
        }
        TableId::T2 => {
            for c in ["jpeg-q23", "h264-crf23", "h264-crf28"] {
                checks.push(below(
                    format!("{c} offset-only AP below naive"),
                    o.ap(c, "offset_only"),
                    o.ap(c, naive),
                ));
                checks.push(at_least(format!("{c} offset+gate AP"), o.ap(c, "offset_gate"), 0.99));
                let ece = o.row(c, "offset_gate").map_or(f64::NAN, |r| r.ece);
                checks.push(at_most(format!("{c} offset+gate ECE"), ece, 0.02));
            }
            for c in ["clean", "jpeg-q23", "h264-crf23", "h264-crf28"] {
                let rows: Vec<&EvalReport> = o.rows.iter().filter(|r| r.condition == c).collect();
                let best = rows.iter().map(|r| r.temporal_iou).fold(f64::NEG_INFINITY, f64::max);
                let f = o.row(c, full).map_or(f64::NAN, |r| r.temporal_iou);
                checks.push(at_least(format!("{c} full IoU best or tied"), f, best));
            }
        }
        TableId::T3a => {
            let in_bank = [0.25, 0.5, 0.75, 1.0];
            for d in in_bank {
                checks.push(at_least(format!("{} full AP", offset_label(d)), o.ap(&offset_label(d), full), 0.99));
            }
            let naive_ap: Vec<f64> = in_bank.iter().map(|&d| o.ap(&offset_label(d), naive)).collect();
            let rho = spearman(&in_bank, &naive_ap);
            checks.push(Check::new(
                "naive AP falls with |offset| (spearman)",
                rho < 0.0,
                format!("{rho:.3} < 0"),
            ));
            let l = offset_label(2.0);
            checks.push(below(format!("{l} naive AP below full"), o.ap(&l, naive), o.ap(&l, full)));
        }
        TableId::T3b => {
            for a in [0.90, 0.95, 1.05] {
                checks.push(below(format!("{} raw AP", stretch_label(a)), o.ap(&stretch_label(a), "raw"), 0.7));
            }
            for a in TABLE3B_FACTORS {
                checks.push(at_least(
                    format!("{} corrected AP", stretch_label(a)),
                    o.ap(&stretch_label(a), "corrected"),
                    0.99,
                ));
            }
        }
        TableId::T4a => {
            let mut gains: Vec<(String, f64)> = Vec::new();
            let mut seen = Vec::new();
            for r in &o.rows {
                if !seen.contains(&r.condition) {
                    seen.push(r.condition.clone());
                    gains.push((r.condition.clone(), o.ap(&r.condition, full) - o.ap(&r.condition, naive)));
                }
            }
            for (c, g) in &gains {
                checks.push(at_least(format!("{c} gain"), *g, 0.0));
            }
            let strict = gains.iter().filter(|(_, g)| *g > 0.0).count();
            checks.push(Check::new(
                "strictly positive gains",
                strict >= 5,
                format!("{strict} of {} > 0", gains.len()),
            ));
            let best_any = gains.iter().map(|(_, g)| *g).fold(f64::NEG_INFINITY, f64::max);
            let best_degraded = gains
                .iter()
                .filter(|(c, _)| c.starts_with("jpeg-q23+") && !c.ends_with("+clean"))
                .map(|(_, g)| *g)
                .fold(f64::NEG_INFINITY, f64::max);
            let leader = gains
                .iter()
                .filter(|(_, g)| *g == best_any)
                .map(|(c, _)| c.as_str())
                .collect::<Vec<_>>()
                .join(", ");
            checks.push(Check::new(
                "largest gain under compression plus audio degradation",
                best_degraded >= best_any,
                format!("best {best_any:.4} at {leader}; compression+audio best {best_degraded:.4}"),
            ));
        }
    }
    checks
}
