//! First pass: segment-level BIC self-similarity matrix, diagonal
//! checkerboard novelty and coarse change-point picking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::refine::{ChangePoint, Stage};
use crate::stats::{accumulate_stats, bic_penalty, bic_similarity, BicParams, GaussianStats};

/// Symmetric matrix of pairwise BIC values over non-overlapping segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Vec<f64>,
    size: usize,
    pub segment_len_s: f64,
    /// Frames per segment.
    pub segment_frames: usize,
    /// Feature dimension the segments were modelled in.
    pub dim: usize,
    /// Start time of each segment.
    pub segment_times: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wraps a square row-major matrix. Intended for constructed test inputs.
    pub fn from_values(values: Vec<f64>, size: usize, segment_len_s: f64) -> Self {
        assert_eq!(values.len(), size * size);
        Self {
            values,
            size,
            segment_len_s,
            segment_frames: 0,
            dim: 0,
            segment_times: (0..size).map(|i| i as f64 * segment_len_s).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Partitions frames into consecutive segments of `segment_len_s` (the
/// ragged tail is dropped) and fills the pairwise BIC matrix.
///
/// Only the upper triangle is evaluated; the lower one is its mirror. The
/// fill is parallel over rows and equal to the sequential result.
pub fn build_ssm(features: &FeatureMatrix, segment_len_s: f64, params: BicParams) -> Result<SimilarityMatrix> {
    let seg = (segment_len_s / features.hop_s + 1e-9).floor() as usize;
    if seg < 2 {
        return Err(Error::InvalidConfig(format!(
            "segment of {segment_len_s} s holds fewer than 2 frames"
        )));
    }
    let s = features.n_frames() / seg;
    if s < 2 {
        return Err(Error::AudioTooShort(format!(
            "{} frames give {s} segment(s) of {seg} frames; need at least 2",
            features.n_frames()
        )));
    }
    let stats: Vec<GaussianStats> = (0..s)
        .into_par_iter()
        .map(|i| accumulate_stats(features, i * seg, (i + 1) * seg))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..s)
        .into_par_iter()
        .map(|i| {
            (i..s)
                .map(|j| bic_similarity(&stats[i], &stats[j], params))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; s * s];
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[i * s + j] = v;
            values[j * s + i] = v;
        }
    }
    Ok(SimilarityMatrix {
        values,
        size: s,
        segment_len_s,
        segment_frames: seg,
        dim: features.dim(),
        segment_times: (0..s).map(|i| (i * seg) as f64 * features.hop_s).collect(),
    })
}

/// Novelty score per segment boundary; `scores[i]` rates a boundary at the
/// start of segment `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyCurve {
    pub scores: Vec<f64>,
    pub kernel_half_width: usize,
}

impl NoveltyCurve {
    /// CSV with header `segment_index,time_s,score`.
    pub fn to_csv(&self, ssm: &SimilarityMatrix) -> String {
        let mut out = String::from("segment_index,time_s,score\n");
        for (i, s) in self.scores.iter().enumerate() {
            out.push_str(&format!("{i},{:.3},{s:.6}\n", ssm.segment_times[i]));
        }
        out
    }
}

/// Checkerboard-kernel novelty along the diagonal.
///
/// For boundary `i` the `2w x 2w` block over segments `[i - w, i + w)` is
/// split into quadrants. The score is the mean of the cross-side quadrant
/// minus the mean of the two same-side quadrants (diagonal entries
/// excluded), floored at zero. BIC rises with dissimilarity, so a boundary
/// between homogeneous blocks scores high. Scores closer than `w` to either
/// border are zero.
pub fn novelty_curve(ssm: &SimilarityMatrix, kernel_half_width: usize) -> Result<NoveltyCurve> {
    let s = ssm.size();
    let w = kernel_half_width;
    if w == 0 || 2 * w > s {
        return Err(Error::KernelTooLarge {
            half_width: w,
            segments: s,
        });
    }
    let mut scores = vec![0.0; s];
    for (i, score) in scores.iter_mut().enumerate().take(s - w).skip(w) {
        let mut cross = 0.0;
        for a in i - w..i {
            for b in i..i + w {
                cross += ssm.get(a, b);
            }
        }
        cross /= (w * w) as f64;

        let mut same = 0.0;
        let mut count = 0usize;
        for (lo, hi) in [(i - w, i), (i, i + w)] {
            for a in lo..hi {
                for b in lo..hi {
                    if a != b {
                        same += ssm.get(a, b);
                        count += 1;
                    }
                }
            }
        }
        let same = if count > 0 { same / count as f64 } else { 0.0 };
        *score = (cross - same).max(0.0);
    }
    Ok(NoveltyCurve {
        scores,
        kernel_half_width: w,
    })
}

/// Thresholds for coarse peak picking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseConfig {
    pub kernel_half_width: usize,
    /// Peaks must exceed `mean + peak_k * stddev` of the curve.
    pub peak_k: f64,
    /// Peaks must also exceed `novelty_floor_lambda` times the BIC
    /// complexity penalty of a two-segment window. Zero disables it.
    pub novelty_floor_lambda: f64,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            kernel_half_width: 2,
            peak_k: 2.0,
            novelty_floor_lambda: 1.0,
        }
    }
}

/// Absolute score a coarse peak must exceed.
pub fn novelty_floor(ssm: &SimilarityMatrix, cfg: &CoarseConfig) -> f64 {
    if cfg.novelty_floor_lambda == 0.0 || ssm.dim == 0 || ssm.segment_frames == 0 {
        0.0
    } else {
        cfg.novelty_floor_lambda * bic_penalty(ssm.dim, 2 * ssm.segment_frames)
    }
}

/// Local maxima of the novelty curve above both thresholds, at least
/// `2 * kernel_half_width` segments apart. Conflicts keep the higher peak,
/// then the earlier one. Result is sorted by time.
pub fn pick_coarse_changes(nov: &NoveltyCurve, ssm: &SimilarityMatrix, cfg: &CoarseConfig) -> Vec<ChangePoint> {
    let sc = &nov.scores;
    let n = sc.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = sc.iter().sum::<f64>() / n as f64;
    let std = (sc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let threshold = (mean + cfg.peak_k * std).max(novelty_floor(ssm, cfg));

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = sc[i];
            let left = if i > 0 { sc[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { sc[i + 1] } else { f64::NEG_INFINITY };
            v > 0.0 && v > threshold && v > left && v >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| sc[b].total_cmp(&sc[a]).then(a.cmp(&b)));

    let min_sep = 2 * nov.kernel_half_width;
    let mut kept: Vec<usize> = Vec::new();
    for p in peaks {
        if kept.iter().all(|&q| p.abs_diff(q) >= min_sep) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|i| ChangePoint {
            time_s: ssm.segment_times[i],
            stage: Stage::Coarse,
            score: sc[i],
        })
        .collect()
}
