//! Cutting at change points and the newsreader labeling rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::refine::ChangePoint;
use crate::stats::{accumulate_stats, bic_similarity, BicParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Newsreader,
    Other,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Newsreader => "newsreader",
            Label::Other => "other",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newsreader" => Ok(Label::Newsreader),
            "other" => Ok(Label::Other),
            _ => Err(Error::Parse(format!("unknown label {s:?}"))),
        }
    }
}

/// A speaker-homogeneous interval. `label` is `None` until
/// [`label_newsreader`] runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub label: Option<Label>,
    /// BIC against the anchor segment; 0 for the anchor itself.
    pub anchor_bic: f64,
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Splits `[0, duration_s]` at the given points. Points must be strictly
/// increasing and strictly inside the interval.
pub fn cut_segments(points: &[ChangePoint], duration_s: f64) -> Result<Vec<Segment>> {
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(points.len() + 1);
    for p in points {
        if !(p.time_s > prev && p.time_s < duration_s) {
            return Err(Error::PointOutOfRange {
                time_s: p.time_s,
                duration_s,
            });
        }
        out.push(Segment {
            start_s: prev,
            end_s: p.time_s,
            label: None,
            anchor_bic: 0.0,
        });
        prev = p.time_s;
    }
    out.push(Segment {
        start_s: prev,
        end_s: duration_s,
        label: None,
        anchor_bic: 0.0,
    });
    Ok(out)
}

/// Index of the longest segment; ties go to the earlier one.
pub fn anchor_index(segments: &[Segment]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in segments.iter().enumerate() {
        if best.is_none_or(|b| s.duration_s() > segments[b].duration_s()) {
            best = Some(i);
        }
    }
    best
}

/// Labels the longest segment as newsreader, and every other segment too
/// when its BIC against that anchor is at most `tau`.
///
/// `params` controls the BIC used for this comparison; with a positive
/// `penalty_lambda` the value is the penalized criterion, so `tau = 0`
/// means "one model explains both segments better".
pub fn label_newsreader(
    segments: &[Segment],
    features: &FeatureMatrix,
    tau: f64,
    params: BicParams,
) -> Result<Vec<Segment>> {
    let Some(anchor) = anchor_index(segments) else {
        return Ok(Vec::new());
    };
    let stats_of = |s: &Segment| {
        let begin = features.first_frame_at_or_after(s.start_s);
        let end = features.first_frame_at_or_after(s.end_s);
        if end < begin + 2 {
            return Err(Error::DegenerateModel(format!(
                "segment [{:.3}, {:.3}] holds fewer than 2 frames",
                s.start_s, s.end_s
            )));
        }
        accumulate_stats(features, begin, end)
    };
    let anchor_stats = stats_of(&segments[anchor])?;
    segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut out = s.clone();
            if i == anchor {
                out.anchor_bic = 0.0;
                out.label = Some(Label::Newsreader);
            } else {
                let bic = bic_similarity(&anchor_stats, &stats_of(s)?, params)?;
                out.anchor_bic = bic;
                out.label = Some(if bic <= tau { Label::Newsreader } else { Label::Other });
            }
            Ok(out)
        })
        .collect()
}
