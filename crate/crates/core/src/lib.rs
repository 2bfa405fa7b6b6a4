//! Segmentation of long broadcast-news audio into speaker-homogeneous
//! regions.
//!
//! The pipeline runs in two passes. The first pass groups MFCC frames into
//! fixed-length segments, models each as a full-covariance Gaussian and builds
//! a segment-level BIC self-similarity matrix; a checkerboard novelty curve
//! along its diagonal yields coarse change points. The second pass slides two
//! adjacent windows through a short context around each coarse point and keeps
//! the single highest BIC peak. The longest resulting segment is taken as the
//! newsreader, and segments whose BIC against it is low join that label.
//!
//! ```no_run
//! use ssmseg::{audio, pipeline::{self, PipelineConfig}};
//!
//! let cfg = PipelineConfig::default();
//! let buf = audio::load_wav("bulletin.wav", cfg.sample_rate)?;
//! let out = pipeline::run(&buf, &cfg)?;
//! for seg in &out.segments {
//!     let label = seg.label.map(|l| l.to_string()).unwrap_or_default();
//!     println!("{:.3} {:.3} {label}", seg.start_s, seg.end_s);
//! }
//! # Ok::<(), ssmseg::Error>(())
//! ```

pub mod audio;
pub mod error;
pub mod eval;
pub mod export;
pub mod features;
pub mod labeling;
pub mod pipeline;
pub mod refine;
pub mod ssm;
pub mod stats;
pub mod synth;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use eval::{BoundaryScore, ReferenceAnnotation};
pub use features::{FeatureMatrix, MfccConfig};
pub use labeling::{Label, Segment};
pub use pipeline::{PipelineConfig, PipelineOutput};
pub use refine::{ChangePoint, RefineConfig, Stage};
pub use ssm::{CoarseConfig, NoveltyCurve, SimilarityMatrix};
pub use stats::{BicParams, GaussianStats};
pub use synth::{Resonance, SourceSpec, SynthScript};
