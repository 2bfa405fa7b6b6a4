//! Second pass: sliding two-window BIC around each coarse change point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::stats::{accumulate_stats, bic_similarity, BicParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Refined,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Coarse => "coarse",
            Stage::Refined => "refined",
        })
    }
}

/// An acoustic change point. `score` is the novelty value for coarse points
/// and the peak BIC for refined ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub time_s: f64,
    pub stage: Stage,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Total span searched around a coarse point.
    pub context_s: f64,
    /// Length of each of the two compared windows.
    pub win_s: f64,
    pub step_s: f64,
    /// Refined points closer than this are merged.
    pub min_gap_s: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            context_s: 20.0,
            win_s: 2.0,
            step_s: 0.1,
            min_gap_s: 2.0,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > 0.0 && self.win_s > 0.0 && self.min_gap_s >= 0.0) {
            return Err(Error::InvalidConfig("refine durations must be positive".into()));
        }
        if 2.0 * self.win_s > self.context_s {
            return Err(Error::InvalidConfig(format!(
                "two windows of {} s do not fit a {} s context",
                self.win_s, self.context_s
            )));
        }
        if self.step_s > self.win_s {
            return Err(Error::InvalidConfig(format!(
                "step {} s exceeds window {} s",
                self.step_s, self.win_s
            )));
        }
        Ok(())
    }
}

/// Candidate boundary: grid offset from the coarse point, time, frame index.
type Candidate = (i64, f64, usize);

fn candidates(features: &FeatureMatrix, center_s: f64, cfg: &RefineConfig) -> Result<(usize, Vec<Candidate>)> {
    cfg.validate()?;
    let n_win = (cfg.win_s / features.hop_s).round() as usize;
    let total = features.n_frames();
    if n_win < 2 || total < 2 * n_win {
        return Err(Error::ContextOutOfAudio(format!(
            "{total} frames cannot hold two {} s windows",
            cfg.win_s
        )));
    }
    let reach = (cfg.context_s / 2.0 / cfg.step_s + 1e-9).floor() as i64;
    let list: Vec<Candidate> = (-reach..=reach)
        .filter_map(|j| {
            let t = center_s + j as f64 * cfg.step_s;
            let k = ((t - features.t0_s) / features.hop_s - 1e-9).ceil();
            if k < n_win as f64 || k + n_win as f64 > total as f64 {
                return None;
            }
            Some((j, t, k as usize))
        })
        .collect();
    if list.is_empty() {
        return Err(Error::ContextOutOfAudio(format!(
            "no full-window candidate within {} s of {center_s} s",
            cfg.context_s / 2.0
        )));
    }
    Ok((n_win, list))
}

/// The sliding BIC curve around `center_s`: `(candidate time, BIC)` for
/// every grid candidate whose two full windows fit in the audio.
///
/// Windows are `[t - win, t)` and `[t, t + win)` by frame center.
pub fn sliding_bic_curve(
    features: &FeatureMatrix,
    center_s: f64,
    cfg: &RefineConfig,
    params: BicParams,
) -> Result<Vec<(f64, f64)>> {
    let (n_win, list) = candidates(features, center_s, cfg)?;
    list.par_iter()
        .map(|&(_, t, k)| {
            let left = accumulate_stats(features, k - n_win, k)?;
            let right = accumulate_stats(features, k, k + n_win)?;
            Ok((t, bic_similarity(&left, &right, params)?))
        })
        .collect()
}

/// Moves a coarse point to the highest peak of the sliding BIC curve in its
/// context. Ties go to the candidate nearest the coarse time, then the
/// earlier one. Never rejects: a stationary context still returns its
/// maximum.
pub fn refine_change_point(
    features: &FeatureMatrix,
    coarse: &ChangePoint,
    cfg: &RefineConfig,
    params: BicParams,
) -> Result<ChangePoint> {
    let (n_win, list) = candidates(features, coarse.time_s, cfg)?;
    let scored: Vec<(i64, f64, f64)> = list
        .par_iter()
        .map(|&(j, t, k)| {
            let left = accumulate_stats(features, k - n_win, k)?;
            let right = accumulate_stats(features, k, k + n_win)?;
            Ok((j, t, bic_similarity(&left, &right, params)?))
        })
        .collect::<Result<_>>()?;
    let best = scored
        .iter()
        .copied()
        .reduce(|best, cur| {
            let better = cur.2 > best.2 || (cur.2 == best.2 && (cur.0.abs(), cur.0) < (best.0.abs(), best.0));
            if better {
                cur
            } else {
                best
            }
        })
        .expect("candidate list is non-empty");
    Ok(ChangePoint {
        time_s: best.1,
        stage: Stage::Refined,
        score: best.2,
    })
}

/// Refines every coarse point, then merges refined points closer than
/// `min_gap_s`, keeping the higher score (ties keep the earlier point).
pub fn refine_all(
    features: &FeatureMatrix,
    coarse: &[ChangePoint],
    cfg: &RefineConfig,
    params: BicParams,
) -> Result<Vec<ChangePoint>> {
    let mut refined: Vec<ChangePoint> = coarse
        .par_iter()
        .map(|c| refine_change_point(features, c, cfg, params))
        .collect::<Result<_>>()?;
    refined.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    Ok(merge_close(refined, cfg.min_gap_s))
}

/// Collapses time-sorted points closer than `min_gap_s` into their
/// highest-scoring member.
pub fn merge_close(points: Vec<ChangePoint>, min_gap_s: f64) -> Vec<ChangePoint> {
    let mut out: Vec<ChangePoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some(last) if p.time_s - last.time_s < min_gap_s || p.time_s <= last.time_s => {
                if p.score > last.score {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    out
}
