use std::path::PathBuf;

/// Errors produced anywhere in the segmentation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),

    #[error("audio too short: {0}")]
    AudioTooShort(String),

    #[error("empty frame range [{begin}, {end})")]
    EmptyRange { begin: usize, end: usize },

    #[error("degenerate Gaussian model: {0}")]
    DegenerateModel(String),

    #[error("novelty kernel half-width {half_width} too large for {segments} segments")]
    KernelTooLarge { half_width: usize, segments: usize },

    #[error("refinement context does not fit the audio: {0}")]
    ContextOutOfAudio(String),

    #[error("change point {time_s} s outside (0, {duration_s}) or out of order")]
    PointOutOfRange { time_s: f64, duration_s: f64 },

    #[error("invalid synth script: {0}")]
    InvalidScript(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
