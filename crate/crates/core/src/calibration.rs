//! Temperature scaling fitted by ECE minimization.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::expected_calibration_error;
use crate::par::{map_slice, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub bin_count: usize,
    pub grid_low: f64,
    pub grid_high: f64,
    pub grid_size: usize,
    pub logit_clip_epsilon: f64,
    pub include_identity: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            bin_count: 10,
            grid_low: 0.01,
            grid_high: 10.0,
            grid_size: 300,
            logit_clip_epsilon: 1e-6,
            include_identity: true,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.grid_low && self.grid_low < self.grid_high) {
            return Err(invalid("calibration config", "need 0 < grid_low < grid_high"));
        }
        if self.bin_count == 0 || self.grid_size == 0 {
            return Err(invalid("calibration config", "bin_count and grid_size must be positive"));
        }
        if !(0.0 < self.logit_clip_epsilon && self.logit_clip_epsilon < 0.5) {
            return Err(invalid("calibration config", "logit_clip_epsilon must lie in (0, 0.5)"));
        }
        Ok(())
    }

    /// Candidate temperatures, log-spaced, plus 1 when requested.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.grid_low.ln(), self.grid_high.ln());
        let mut grid: Vec<f64> = if self.grid_size == 1 {
            vec![self.grid_low]
        } else {
            (0..self.grid_size)
                .map(|i| (lo + (hi - lo) * i as f64 / (self.grid_size - 1) as f64).exp())
                .collect()
        };
        if self.include_identity && !grid.contains(&1.0) {
            grid.push(1.0);
        }
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub temperature: f64,
    pub achieved_ece: f64,
}

impl CalibrationModel {
    pub fn identity() -> Self {
        Self {
            temperature: 1.0,
            achieved_ece: f64::NAN,
        }
    }
}

pub fn logit(s: f64, eps: f64) -> f64 {
    let s = s.clamp(eps, 1.0 - eps);
    (s / (1.0 - s)).ln()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn scale(logits: &[f64], temperature: f64) -> Vec<f64> {
    logits.iter().map(|&l| sigmoid(l / temperature)).collect()
}

pub fn fit_temperature(fused: &[f64], labels: &[bool], config: &CalibrationConfig) -> Result<CalibrationModel> {
    fit_temperature_with(fused, labels, config, Execution::default())
}

/// Grid search for the ECE-minimizing temperature; ties go to the one nearest 1.
pub fn fit_temperature_with(
    fused: &[f64],
    labels: &[bool],
    config: &CalibrationConfig,
    exec: Execution,
) -> Result<CalibrationModel> {
    config.validate()?;
    let logits: Vec<f64> = fused.iter().map(|&s| logit(s, config.logit_clip_epsilon)).collect();
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        log::warn!("calibration skipped: labels contain a single class");
        let ece = expected_calibration_error(&scale(&logits, 1.0), labels, config.bin_count)?;
        return Ok(CalibrationModel {
            temperature: 1.0,
            achieved_ece: ece,
        });
    }
    let grid = config.grid();
    let eces = map_slice(exec, &grid, |&t| {
        expected_calibration_error(&scale(&logits, t), labels, config.bin_count)
    });
    let mut best: Option<CalibrationModel> = None;
    for (&t, ece) in grid.iter().zip(eces) {
        let ece = ece?;
        let better = match best {
            None => true,
            Some(b) => {
                ece < b.achieved_ece
                    || (ece == b.achieved_ece && (t - 1.0).abs() < (b.temperature - 1.0).abs())
            }
        };
        if better {
            best = Some(CalibrationModel {
                temperature: t,
                achieved_ece: ece,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

pub fn apply_calibration(fused: &[f64], model: &CalibrationModel, config: &CalibrationConfig) -> Vec<f64> {
    fused
        .iter()
        .map(|&s| sigmoid(logit(s, config.logit_clip_epsilon) / model.temperature))
        .collect()
}
