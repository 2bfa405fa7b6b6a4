//! End-to-end configuration and the two-pass pipeline.

use std::fmt::Write as _;

use crate::audio::{self, AudioBuffer};
use crate::error::{Error, Result};
use crate::features::{compute_mfcc, FeatureMatrix, MfccConfig};
use crate::labeling::{cut_segments, label_newsreader, Segment};
use crate::refine::{refine_all, ChangePoint, RefineConfig};
use crate::ssm::{build_ssm, novelty_curve, pick_coarse_changes, CoarseConfig, NoveltyCurve, SimilarityMatrix};
use crate::stats::BicParams;

/// Every tunable of the pipeline. Serializes to `key = value` text; keys
/// are listed in [`PipelineConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub mfcc: MfccConfig,
    pub segment_len_s: f64,
    pub coarse: CoarseConfig,
    pub refine: RefineConfig,
    /// BIC settings for the similarity matrix and the sliding second pass.
    pub bic: BicParams,
    /// Labeling threshold on the anchor BIC.
    pub tau: f64,
    /// Penalty weight of the BIC used for labeling.
    pub label_penalty_lambda: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: audio::WORKING_RATE,
            mfcc: MfccConfig::default(),
            segment_len_s: 5.0,
            coarse: CoarseConfig::default(),
            refine: RefineConfig::default(),
            bic: BicParams::default(),
            tau: 0.0,
            label_penalty_lambda: 1.0,
        }
    }
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 22] = [
        "sample_rate",
        "frame_len_s",
        "hop_s",
        "n_fft",
        "n_mels",
        "n_coeffs",
        "preemph",
        "mel_fmin",
        "mel_fmax",
        "log_floor",
        "segment_len_s",
        "kernel_half_width",
        "peak_k",
        "novelty_floor_lambda",
        "epsilon",
        "penalty_lambda",
        "context_s",
        "win_s",
        "step_s",
        "min_gap_s",
        "tau",
        "label_penalty_lambda",
    ];

    /// Current value of `key` in its text form.
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "sample_rate" => self.sample_rate.to_string(),
            "frame_len_s" => self.mfcc.frame_len_s.to_string(),
            "hop_s" => self.mfcc.hop_s.to_string(),
            "n_fft" => self.mfcc.n_fft.to_string(),
            "n_mels" => self.mfcc.n_mels.to_string(),
            "n_coeffs" => self.mfcc.n_coeffs.to_string(),
            "preemph" => self.mfcc.preemph.to_string(),
            "mel_fmin" => self.mfcc.mel_fmin.to_string(),
            "mel_fmax" => self.mfcc.mel_fmax.map_or_else(|| "auto".into(), |f| f.to_string()),
            "log_floor" => self.mfcc.log_floor.to_string(),
            "segment_len_s" => self.segment_len_s.to_string(),
            "kernel_half_width" => self.coarse.kernel_half_width.to_string(),
            "peak_k" => self.coarse.peak_k.to_string(),
            "novelty_floor_lambda" => self.coarse.novelty_floor_lambda.to_string(),
            "epsilon" => self.bic.epsilon.to_string(),
            "penalty_lambda" => self.bic.penalty_lambda.to_string(),
            "context_s" => self.refine.context_s.to_string(),
            "win_s" => self.refine.win_s.to_string(),
            "step_s" => self.refine.step_s.to_string(),
            "min_gap_s" => self.refine.min_gap_s.to_string(),
            "tau" => self.tau.to_string(),
            "label_penalty_lambda" => self.label_penalty_lambda.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Sets one key from its text form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = || Error::InvalidConfig(format!("bad value {value:?} for {key}"));
        let f = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let u = || value.parse::<usize>().map_err(|_| bad());
        match key {
            "sample_rate" => self.sample_rate = value.parse().map_err(|_| bad())?,
            "frame_len_s" => self.mfcc.frame_len_s = f()?,
            "hop_s" => self.mfcc.hop_s = f()?,
            "n_fft" => self.mfcc.n_fft = u()?,
            "n_mels" => self.mfcc.n_mels = u()?,
            "n_coeffs" => self.mfcc.n_coeffs = u()?,
            "preemph" => self.mfcc.preemph = f()?,
            "mel_fmin" => self.mfcc.mel_fmin = f()?,
            "mel_fmax" => self.mfcc.mel_fmax = if value == "auto" { None } else { Some(f()?) },
            "log_floor" => self.mfcc.log_floor = f()?,
            "segment_len_s" => self.segment_len_s = f()?,
            "kernel_half_width" => self.coarse.kernel_half_width = u()?,
            "peak_k" => self.coarse.peak_k = f()?,
            "novelty_floor_lambda" => self.coarse.novelty_floor_lambda = f()?,
            "epsilon" => self.bic.epsilon = f()?,
            "penalty_lambda" => self.bic.penalty_lambda = f()?,
            "context_s" => self.refine.context_s = f()?,
            "win_s" => self.refine.win_s = f()?,
            "step_s" => self.refine.step_s = f()?,
            "min_gap_s" => self.refine.min_gap_s = f()?,
            "tau" => self.tau = f()?,
            "label_penalty_lambda" => self.label_penalty_lambda = f()?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        Self::KEYS
            .iter()
            .map(|&k| (k, self.get(k).expect("every listed key is readable")))
            .collect()
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        self.mfcc.validate(self.sample_rate)?;
        self.refine.validate()?;
        if self.segment_len_s.is_nan() || self.segment_len_s <= 0.0 {
            return Err(Error::InvalidConfig("segment_len_s must be positive".into()));
        }
        if self.coarse.kernel_half_width == 0 {
            return Err(Error::InvalidConfig("kernel_half_width must be at least 1".into()));
        }
        if self.bic.epsilon < 0.0 || self.coarse.novelty_floor_lambda < 0.0 {
            return Err(Error::InvalidConfig(
                "epsilon and novelty_floor_lambda must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn label_params(&self) -> BicParams {
        BicParams {
            epsilon: self.bic.epsilon,
            penalty_lambda: self.label_penalty_lambda,
        }
    }
}

/// Everything the pipeline produced, stage by stage.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub duration_s: f64,
    pub features: FeatureMatrix,
    pub ssm: SimilarityMatrix,
    pub novelty: NoveltyCurve,
    pub coarse: Vec<ChangePoint>,
    pub refined: Vec<ChangePoint>,
    pub segments: Vec<Segment>,
}

/// MFCC features of `buffer` at the configured rate.
pub fn features_for(buffer: &AudioBuffer, cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    if buffer.sample_rate() == cfg.sample_rate {
        compute_mfcc(buffer, &cfg.mfcc)
    } else {
        compute_mfcc(&audio::resample(buffer, cfg.sample_rate), &cfg.mfcc)
    }
}

/// First pass only: matrix, novelty and coarse points. The kernel is
/// narrowed to `S / 2` on clips too short for the configured width.
pub fn first_pass(
    features: &FeatureMatrix,
    cfg: &PipelineConfig,
) -> Result<(SimilarityMatrix, NoveltyCurve, Vec<ChangePoint>)> {
    let ssm = build_ssm(features, cfg.segment_len_s, cfg.bic)?;
    let coarse_cfg = CoarseConfig {
        kernel_half_width: cfg.coarse.kernel_half_width.min(ssm.size() / 2),
        ..cfg.coarse
    };
    let novelty = novelty_curve(&ssm, coarse_cfg.kernel_half_width)?;
    let coarse = pick_coarse_changes(&novelty, &ssm, &coarse_cfg);
    Ok((ssm, novelty, coarse))
}

/// Runs load-to-label on an in-memory buffer.
pub fn run(buffer: &AudioBuffer, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let duration_s = buffer.duration_seconds();
    let features = features_for(buffer, cfg)?;
    let (ssm, novelty, coarse) = first_pass(&features, cfg)?;
    let refined = refine_all(&features, &coarse, &cfg.refine, cfg.bic)?;
    let inside: Vec<ChangePoint> = refined
        .iter()
        .copied()
        .filter(|c| c.time_s > 0.0 && c.time_s < duration_s)
        .collect();
    let segments = cut_segments(&inside, duration_s)?;
    let segments = label_newsreader(&segments, &features, cfg.tau, cfg.label_params())?;
    Ok(PipelineOutput {
        duration_s,
        features,
        ssm,
        novelty,
        coarse,
        refined: inside,
        segments,
    })
}
