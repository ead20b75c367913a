//! Detection, localization and calibration metrics.

use crate::error::{Error, Result};
use crate::model::{BinaryMask, FrameLabels, TamperMap};

fn order_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Non-interpolated AP evaluated at distinct score thresholds.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "scores vs labels",
            expected: labels.len(),
            found: scores.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::UndefinedAp { missing: "positives" });
    }
    if positives == labels.len() {
        return Err(Error::UndefinedAp { missing: "negatives" });
    }
    let order = order_desc(scores);
    let mut ap = 0.0;
    let (mut tp, mut seen, mut prev_recall) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += labels[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Framewise set IoU after thresholding.
pub fn temporal_iou(probs: &[f64], labels: &FrameLabels, threshold: f64) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "probabilities vs labels",
            expected: labels.len(),
            found: probs.len(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &y) in probs.iter().zip(labels.values()) {
        let pred = p >= threshold;
        inter += (pred && y) as usize;
        union += (pred || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Share of authentic videos with any frame at or above `threshold`.
pub fn false_positive_rate(videos: &[(&[f64], &FrameLabels)], threshold: f64) -> Result<f64> {
    let mut authentic = 0usize;
    let mut flagged = 0usize;
    for (probs, labels) in videos {
        if !labels.is_authentic() {
            continue;
        }
        authentic += 1;
        flagged += probs.iter().any(|&p| p >= threshold) as usize;
    }
    if authentic == 0 {
        return Err(Error::NoAuthenticVideos);
    }
    Ok(flagged as f64 / authentic as f64)
}

/// Video-level ROC-AUC with ties counted as one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|(_, &y)| y).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|(_, &y)| !y).map(|(&s, _)| s).collect();
    if pos.is_empty() {
        return Err(Error::UndefinedAp { missing: "positives" });
    }
    if neg.is_empty() {
        return Err(Error::UndefinedAp { missing: "negatives" });
    }
    let mut neg_sorted = neg.clone();
    neg_sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in &pos {
        let below = neg_sorted.partition_point(|&n| n < p);
        let not_above = neg_sorted.partition_point(|&n| n <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Bin index with `[k/B, (k+1)/B)` membership and the last bin closed.
pub(crate) fn ece_bin(p: f64, bins: usize) -> usize {
    let b = bins as f64;
    let mut k = ((p * b).floor().max(0.0) as usize).min(bins - 1);
    while k > 0 && p < k as f64 / b {
        k -= 1;
    }
    while k + 1 < bins && p >= (k + 1) as f64 / b {
        k += 1;
    }
    k
}

pub fn expected_calibration_error(probs: &[f64], labels: &[bool], bins: usize) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "probabilities vs labels",
            expected: labels.len(),
            found: probs.len(),
        });
    }
    if probs.is_empty() || bins == 0 {
        return Err(crate::error::invalid("ece input", "needs at least one frame and one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut sum_p = vec![0.0; bins];
    let mut sum_y = vec![0.0; bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let k = ece_bin(p, bins);
        count[k] += 1;
        sum_p[k] += p;
        sum_y[k] += y as u8 as f64;
    }
    let n = probs.len() as f64;
    let mut ece = 0.0;
    for k in 0..bins {
        if count[k] == 0 {
            continue;
        }
        let c = count[k] as f64;
        ece += (c / n) * (sum_p[k] / c - sum_y[k] / c).abs();
    }
    Ok(ece)
}

fn sweep_rows(mask: &BinaryMask, r: usize, any: bool) -> BinaryMask {
    let (h, w) = (mask.height(), mask.width());
    let mut out = BinaryMask::empty(h, w);
    for row in 0..h {
        for col in 0..w {
            let lo = col.saturating_sub(r);
            let hi = (col + r).min(w - 1);
            let mut window = (lo..=hi).map(|c| mask.get(row, c));
            let v = if any { window.any(|b| b) } else { window.all(|b| b) };
            out.set(row, col, v);
        }
    }
    out
}

fn sweep_cols(mask: &BinaryMask, r: usize, any: bool) -> BinaryMask {
    let (h, w) = (mask.height(), mask.width());
    let mut out = BinaryMask::empty(h, w);
    for row in 0..h {
        let lo = row.saturating_sub(r);
        let hi = (row + r).min(h - 1);
        for col in 0..w {
            let mut window = (lo..=hi).map(|rr| mask.get(rr, col));
            let v = if any { window.any(|b| b) } else { window.all(|b| b) };
            out.set(row, col, v);
        }
    }
    out
}

fn pad(mask: &BinaryMask, r: usize) -> BinaryMask {
    let (h, w) = (mask.height(), mask.width());
    let mut out = BinaryMask::empty(h + 2 * r, w + 2 * r);
    for row in 0..h {
        for col in 0..w {
            out.set(row + r, col + r, mask.get(row, col));
        }
    }
    out
}

fn crop(mask: &BinaryMask, r: usize, h: usize, w: usize) -> BinaryMask {
    let mut out = BinaryMask::empty(h, w);
    for row in 0..h {
        for col in 0..w {
            out.set(row, col, mask.get(row + r, col + r));
        }
    }
    out
}

/// Closing with a square of side `2r+1`, computed as if the mask sat on an
/// unbounded zero background.
pub fn morphological_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if mask.bits().is_empty() || radius == 0 {
        return mask.clone();
    }
    let padded = pad(mask, radius);
    let dilated = sweep_cols(&sweep_rows(&padded, radius, true), radius, true);
    let closed = sweep_cols(&sweep_rows(&dilated, radius, false), radius, false);
    crop(&closed, radius, mask.height(), mask.width())
}

pub const DEFAULT_CLOSING_RADIUS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialReport {
    pub iou: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub refined: bool,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn binarize(map: &TamperMap, threshold: f64) -> BinaryMask {
    let bits = map.values().iter().map(|&v| v >= threshold).collect();
    BinaryMask::new(map.height(), map.width(), bits).expect("map dimensions are consistent")
}

pub fn mask_metrics(pred: &BinaryMask, gt: &BinaryMask, refined: bool) -> Result<SpatialReport> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::LengthMismatch {
            what: "predicted mask vs ground truth",
            expected: gt.bits().len(),
            found: pred.bits().len(),
        });
    }
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        tp += (p && g) as usize;
        fp += (p && !g) as usize;
        fnn += (!p && g) as usize;
    }
    let union = tp + fp + fnn;
    let iou = if union == 0 { 1.0 } else { tp as f64 / union as f64 };
    let recall = ratio(tp, tp + fnn);
    let precision = ratio(tp, tp + fp);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SpatialReport {
        iou,
        recall,
        precision,
        f1,
        refined,
    })
}

pub fn spatial_metrics(
    pred_map: &TamperMap,
    gt_mask: &BinaryMask,
    threshold: f64,
    refine: bool,
    radius: usize,
) -> Result<SpatialReport> {
    let mut pred = binarize(pred_map, threshold);
    if refine {
        pred = morphological_close(&pred, radius);
    }
    mask_metrics(&pred, gt_mask, refine)
}
