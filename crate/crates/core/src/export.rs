//! Output encodings: segment report JSON, RTTM and PGM images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{Label, Segment};
use crate::pipeline::{PipelineConfig, PipelineOutput};
use crate::refine::{ChangePoint, Stage};
use crate::ssm::SimilarityMatrix;

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportChangePoint {
    pub time_s: f64,
    pub stage: Stage,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub label: Label,
    pub anchor_bic: f64,
}

/// The JSON document written by `ssmseg segment`. Times carry 3 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub audio: String,
    pub duration_s: f64,
    pub change_points: Vec<ReportChangePoint>,
    pub segments: Vec<ReportSegment>,
    pub config: serde_json::Map<String, serde_json::Value>,
}

impl SegmentReport {
    pub fn new(audio: &str, out: &PipelineOutput, cfg: &PipelineConfig) -> Self {
        Self {
            audio: audio.to_string(),
            duration_s: round3(out.duration_s),
            change_points: out
                .refined
                .iter()
                .map(|c: &ChangePoint| ReportChangePoint {
                    time_s: round3(c.time_s),
                    stage: c.stage,
                    score: c.score,
                })
                .collect(),
            segments: out
                .segments
                .iter()
                .map(|s| ReportSegment {
                    start_s: round3(s.start_s),
                    end_s: round3(s.end_s),
                    label: s.label.unwrap_or(Label::Other),
                    anchor_bic: s.anchor_bic,
                })
                .collect(),
            config: config_to_json(cfg),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("segment report: {e}")))
    }

    /// Rebuilds the configuration echoed in the report.
    pub fn config(&self) -> Result<PipelineConfig> {
        config_from_json(&self.config)
    }

    pub fn to_segments(&self) -> Vec<Segment> {
        self.segments
            .iter()
            .map(|s| Segment {
                start_s: s.start_s,
                end_s: s.end_s,
                label: Some(s.label),
                anchor_bic: s.anchor_bic,
            })
            .collect()
    }
}

/// Config as a JSON object; numeric keys become numbers, `mel_fmax = auto`
/// stays a string.
pub fn config_to_json(cfg: &PipelineConfig) -> serde_json::Map<String, serde_json::Value> {
    cfg.entries()
        .into_iter()
        .map(|(k, v)| {
            let value = serde_json::from_str::<serde_json::Number>(&v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::String(v));
            (k.to_string(), value)
        })
        .collect()
}

pub fn config_from_json(map: &serde_json::Map<String, serde_json::Value>) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (k, v) in map {
        let text = match v {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => return Err(Error::InvalidConfig(format!("{k}: unsupported value {other}"))),
        };
        cfg.set(k, &text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One `SPEAKER` line per segment.
pub fn rttm(segments: &[Segment], file_id: &str) -> String {
    let mut out = String::new();
    for s in segments {
        let label = s.label.unwrap_or(Label::Other);
        out.push_str(&format!(
            "SPEAKER {file_id} 1 {:.3} {:.3} <NA> <NA> {label} <NA> <NA>\n",
            s.start_s,
            s.end_s - s.start_s
        ));
    }
    out
}

/// Binary PGM (`P5`, maxval 255) of the matrix, min-max scaled so the most
/// similar pairs (lowest BIC) are black. A constant matrix is all black.
pub fn ssm_to_pgm(ssm: &SimilarityMatrix) -> Vec<u8> {
    let n = ssm.size();
    let (lo, hi) = ssm.min_max();
    let range = hi - lo;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    for &v in ssm.as_slice() {
        let px = if range > 0.0 {
            (255.0 * (v - lo) / range).round().clamp(0.0, 255.0) as u8
        } else {
            0
        };
        out.push(px);
    }
    out
}

/// Pixels of a PGM written by [`ssm_to_pgm`]: `(width, height, bytes)`.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let bad = |m: &str| Error::Parse(format!("PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("expected P5 with maxval 255"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let data = bytes.get(pos..).ok_or_else(|| bad("missing raster"))?;
    if data.len() != w * h {
        return Err(bad("raster size mismatch"));
    }
    Ok((w, h, data))
}
