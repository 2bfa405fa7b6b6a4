//! WAV decoding, mono downmix and band-limited resampling.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Working sample rate of the pipeline, in Hz.
pub const WORKING_RATE: u32 = 16_000;

/// Half-width of the resampling kernel in input samples; each polyphase
/// branch carries `2 * KERNEL_HALF_WIDTH` taps.
const KERNEL_HALF_WIDTH: usize = 16;

/// Mono PCM audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
    source_path: Option<PathBuf>,
}

impl AudioBuffer {
    /// Builds a buffer from raw samples, clamping them into `[-1, 1]`.
    pub fn new(mut samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        for s in &mut samples {
            *s = if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) };
        }
        Self {
            samples,
            sample_rate,
            source_path: None,
        }
    }

    pub fn with_source(mut self, path: impl Into<PathBuf>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Decodes a PCM WAV file, downmixes to mono and resamples to `target_rate`.
///
/// Integer PCM of 8, 16, 24 or 32 bits is scaled by `1 / 2^(bits - 1)`;
/// 32-bit float is taken as is. Stereo is averaged per sample before
/// resampling.
pub fn load_wav(path: impl AsRef<Path>, target_rate: u32) -> Result<AudioBuffer> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedEncoding(format!(
            "{channels} channels (only mono and stereo are supported)"
        )));
    }
    if spec.sample_rate == 0 {
        return Err(Error::CorruptHeader("sample rate is zero".into()));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(e, path))?
        }
        (fmt, bits) => return Err(Error::UnsupportedEncoding(format!("{bits}-bit {fmt:?} samples"))),
    };
    if interleaved.is_empty() {
        return Err(Error::CorruptHeader("data chunk holds no samples".into()));
    }
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::CorruptHeader(
            "data chunk length is not a whole number of frames".into(),
        ));
    }

    let mono: Vec<f32> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|lr| ((lr[0] as f64 + lr[1] as f64) * 0.5) as f32)
            .collect()
    };

    let buf = AudioBuffer::new(mono, spec.sample_rate).with_source(path);
    Ok(resample(&buf, target_rate))
}

fn map_hound(err: hound::Error, path: &Path) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        hound::Error::IoError(e)
            if matches!(e.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::CorruptHeader(format!("truncated file: {e}"))
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::Unsupported => Error::UnsupportedEncoding("compressed or unknown format tag".into()),
        hound::Error::FormatError(msg) => Error::CorruptHeader(msg.to_string()),
        other => Error::CorruptHeader(other.to_string()),
    }
}

/// Writes the buffer as 16-bit mono PCM.
pub fn write_wav_pcm16(buffer: &AudioBuffer, writer: impl std::io::Write + std::io::Seek) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_io = |e: hound::Error| match e {
        hound::Error::IoError(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(other.to_string())),
    };
    let mut w = hound::WavWriter::new(writer, spec).map_err(to_io)?;
    for &s in &buffer.samples {
        let v = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(to_io)?;
    }
    w.finalize().map_err(to_io)?;
    Ok(())
}

/// Windowed-sinc polyphase resampling to `target_rate`.
///
/// The conversion ratio is reduced to `up / down`; each of the `up` phases
/// holds a Hann-windowed sinc of 32 taps with its cutoff at the lower of the
/// two Nyquist frequencies, normalized to unit DC gain. Output length is
/// `ceil(len * target / source)`.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> AudioBuffer {
    assert!(target_rate > 0, "target rate must be positive");
    let source_rate = buffer.sample_rate;
    if source_rate == target_rate {
        return buffer.clone();
    }
    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;
    let cutoff = (up as f64 / down as f64).min(1.0);
    let taps = 2 * KERNEL_HALF_WIDTH;
    let table = phase_table(up as usize, taps, cutoff);

    let x = &buffer.samples;
    let n_in = x.len() as u64;
    let n_out = (n_in * target_rate as u64).div_ceil(source_rate as u64) as usize;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = (pos % up) as usize;
        let coeffs = &table[phase * taps..(phase + 1) * taps];
        let first = base - KERNEL_HALF_WIDTH as i64 + 1;
        let mut acc = 0.0f64;
        for (t, &c) in coeffs.iter().enumerate() {
            let idx = first + t as i64;
            if idx >= 0 && (idx as u64) < n_in {
                acc += c * x[idx as usize] as f64;
            }
        }
        out.push(acc as f32);
    }
    let mut res = AudioBuffer::new(out, target_rate);
    res.source_path = buffer.source_path.clone();
    res
}

/// Row-major `phases x taps` coefficient table. Tap `t` of phase `p` weighs
/// input sample `base - H + 1 + t` for an output falling `p / phases` of a
/// sample past `base`.
fn phase_table(phases: usize, taps: usize, cutoff: f64) -> Vec<f64> {
    let half = KERNEL_HALF_WIDTH as f64;
    let mut table = vec![0.0; phases * taps];
    for p in 0..phases {
        let frac = p as f64 / phases as f64;
        let row = &mut table[p * taps..(p + 1) * taps];
        for (t, c) in row.iter_mut().enumerate() {
            let tau = (t as f64 - half + 1.0) - frac;
            let window = if tau.abs() < half {
                0.5 * (1.0 + (std::f64::consts::PI * tau / half).cos())
            } else {
                0.0
            };
            *c = cutoff * sinc(cutoff * tau) * window;
        }
        let sum: f64 = row.iter().sum();
        for c in row.iter_mut() {
            *c /= sum;
        }
    }
    table
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
