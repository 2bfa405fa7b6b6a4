//! MFCC front-end: 25 ms Hamming frames every 10 ms, HTK mel filterbank,
//! log energies and an orthonormal DCT-II.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub preemph: f64,
    pub mel_fmin: f64,
    /// Upper filterbank edge; `None` means the Nyquist frequency.
    pub mel_fmax: Option<f64>,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.025,
            hop_s: 0.010,
            n_fft: 512,
            n_mels: 26,
            n_coeffs: 13,
            preemph: 0.97,
            mel_fmin: 0.0,
            mel_fmax: None,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        (self.frame_len_s * sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_s * sample_rate as f64).round() as usize
    }

    pub fn fmax(&self, sample_rate: u32) -> f64 {
        self.mel_fmax.unwrap_or(sample_rate as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let frame = self.frame_len_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if !self.n_fft.is_power_of_two() {
            return bad(format!("n_fft = {} is not a power of two", self.n_fft));
        }
        if frame == 0 || frame > self.n_fft {
            return bad(format!("frame of {frame} samples does not fit n_fft = {}", self.n_fft));
        }
        if hop == 0 || hop > frame {
            return bad(format!("hop of {hop} samples must be in 1..={frame}"));
        }
        if self.n_mels == 0 || self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad(format!(
                "need 1 <= n_coeffs ({}) <= n_mels ({})",
                self.n_coeffs, self.n_mels
            ));
        }
        if !(0.0..1.0).contains(&self.preemph) {
            return bad(format!("preemph = {} outside [0, 1)", self.preemph));
        }
        let fmax = self.fmax(sample_rate);
        if !(self.mel_fmin >= 0.0 && self.mel_fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
            return bad(format!(
                "mel range [{}, {fmax}] invalid at {sample_rate} Hz",
                self.mel_fmin
            ));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return bad(format!("log_floor = {} must be positive", self.log_floor));
        }
        Ok(())
    }
}

/// Time-ordered MFCC vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_frames: usize,
    dim: usize,
    pub hop_s: f64,
    pub frame_len_s: f64,
    /// Center time of frame 0.
    pub t0_s: f64,
}

impl FeatureMatrix {
    /// Wraps row-major data; frame centers start at `frame_len_s / 2`.
    pub fn from_rows(data: Vec<f64>, dim: usize, hop_s: f64, frame_len_s: f64) -> Self {
        assert!(
            dim > 0 && data.len().is_multiple_of(dim),
            "data is not a whole number of rows"
        );
        Self {
            n_frames: data.len() / dim,
            data,
            dim,
            hop_s,
            frame_len_s,
            t0_s: frame_len_s / 2.0,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        self.t0_s + k as f64 * self.hop_s
    }

    /// Index of the first frame whose center is at or after `t`, clamped to
    /// `0..=n_frames`.
    pub fn first_frame_at_or_after(&self, t: f64) -> usize {
        let k = ((t - self.t0_s) / self.hop_s - 1e-9).ceil();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_frames)
        }
    }

    /// New matrix with `f` applied to every row, e.g. an affine map.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        let mut dim = self.dim;
        for row in self.rows() {
            let out = f(row);
            dim = out.len();
            data.extend(out);
        }
        Self {
            data,
            n_frames: self.n_frames,
            dim,
            hop_s: self.hop_s,
            frame_len_s: self.frame_len_s,
            t0_s: self.t0_s,
        }
    }

    /// CSV dump: frame center time then each coefficient, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("time_s");
        for c in 0..self.dim {
            out.push_str(&format!(",c{c}"));
        }
        out.push('\n');
        for (k, row) in self.rows().enumerate() {
            out.push_str(&format!("{:.6}", self.frame_time(k)));
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `floor((len - frame) / hop) + 1` when at least one frame fits, else 0.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len || hop == 0 {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Edge and center frequencies of the triangular filters: `n_mels + 2`
/// points equally spaced on the mel scale. Filter `m` rises from
/// `points[m]`, peaks at `points[m + 1]` and falls to `points[m + 2]`.
pub fn mel_points(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Sparse triangular filter: the first bin it touches and its weights.
#[derive(Debug, Clone)]
struct MelFilter {
    start: usize,
    weights: Vec<f64>,
}

fn mel_filterbank(cfg: &MfccConfig, sample_rate: u32) -> Vec<MelFilter> {
    let pts = mel_points(cfg.n_mels, cfg.mel_fmin, cfg.fmax(sample_rate));
    let n_bins = cfg.n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / cfg.n_fft as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, c, hi) = (pts[m], pts[m + 1], pts[m + 2]);
            let mut start = None;
            let mut weights = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= c {
                    (f - lo) / (c - lo)
                } else if f > c && f < hi {
                    (hi - f) / (hi - c)
                } else {
                    0.0
                };
                if w > 0.0 {
                    start.get_or_insert(k);
                    weights.push(w);
                } else if start.is_some() {
                    break;
                }
            }
            MelFilter {
                start: start.unwrap_or(0),
                weights,
            }
        })
        .collect()
}

/// Orthonormal DCT-II basis, row `k` for coefficient `k`.
fn dct_matrix(n_in: usize, n_out: usize) -> Vec<f64> {
    let n = n_in as f64;
    let mut m = Vec::with_capacity(n_in * n_out);
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for i in 0..n_in {
            m.push(scale * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n).cos());
        }
    }
    m
}

/// Symmetric Hamming window of `n` points.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

struct Frontend {
    frame_len: usize,
    hop: usize,
    n_fft: usize,
    preemph: f64,
    log_floor: f64,
    n_coeffs: usize,
    window: Vec<f64>,
    filters: Vec<MelFilter>,
    dct: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Frontend {
    fn new(cfg: &MfccConfig, sample_rate: u32) -> Self {
        let frame_len = cfg.frame_len_samples(sample_rate);
        Self {
            frame_len,
            hop: cfg.hop_samples(sample_rate),
            n_fft: cfg.n_fft,
            preemph: cfg.preemph,
            log_floor: cfg.log_floor,
            n_coeffs: cfg.n_coeffs,
            window: hamming(frame_len),
            filters: mel_filterbank(cfg, sample_rate),
            dct: dct_matrix(cfg.n_mels, cfg.n_coeffs),
            fft: FftPlanner::new().plan_fft_forward(cfg.n_fft),
        }
    }

    fn frame(&self, x: &[f32], k: usize, buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>], out: &mut [f64]) {
        let start = k * self.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < self.frame_len {
                let n = start + i;
                let prev = if n == 0 { 0.0 } else { x[n - 1] as f64 };
                let y = x[n] as f64 - self.preemph * prev;
                Complex::new(y * self.window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        self.fft.process_with_scratch(buf, scratch);
        let log_e: Vec<f64> = self
            .filters
            .iter()
            .map(|f| {
                let e: f64 = f
                    .weights
                    .iter()
                    .zip(&buf[f.start..])
                    .map(|(w, c)| w * c.norm_sqr())
                    .sum();
                (e + self.log_floor).ln()
            })
            .collect();
        let n_mels = log_e.len();
        for (c, o) in out.iter_mut().enumerate().take(self.n_coeffs) {
            let basis = &self.dct[c * n_mels..(c + 1) * n_mels];
            *o = basis.iter().zip(&log_e).map(|(b, l)| b * l).sum();
        }
    }
}

/// Computes MFCCs of every full frame of `buffer`.
///
/// Pre-emphasis uses the true preceding sample of the signal (zero before
/// the first sample). Output is identical for any thread count.
pub fn compute_mfcc(buffer: &AudioBuffer, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    let sr = buffer.sample_rate();
    cfg.validate(sr)?;
    let fe = Frontend::new(cfg, sr);
    let x = buffer.samples();
    let n_frames = frame_count(x.len(), fe.frame_len, fe.hop);
    if n_frames == 0 {
        return Err(Error::AudioTooShort(format!(
            "{} samples, need at least one frame of {}",
            x.len(),
            fe.frame_len
        )));
    }
    let d = cfg.n_coeffs;
    let mut data = vec![0.0; n_frames * d];
    let scratch_len = fe.fft.get_inplace_scratch_len();
    data.par_chunks_mut(d).enumerate().for_each_init(
        || {
            (
                vec![Complex::new(0.0, 0.0); fe.n_fft],
                vec![Complex::new(0.0, 0.0); scratch_len],
            )
        },
        |(buf, scratch), (k, out)| fe.frame(x, k, buf, scratch, out),
    );
    Ok(FeatureMatrix {
        data,
        n_frames,
        dim: d,
        hop_s: fe.hop as f64 / sr as f64,
        frame_len_s: fe.frame_len as f64 / sr as f64,
        t0_s: fe.frame_len as f64 / sr as f64 / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(freq: f64, n: usize, rate: u32) -> AudioBuffer {
        AudioBuffer::new(
            (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin() as f32)
                .collect(),
            rate,
        )
    }

    #[test]
    fn silence_concentrates_in_c0() {
        let cfg = MfccConfig::default();
        let fm = compute_mfcc(&AudioBuffer::new(vec![0.0; 16000], 16000), &cfg).unwrap();
        assert_eq!(fm.n_frames(), 98);
        assert_eq!(fm.dim(), 13);
        let c0 = 26f64.sqrt() * 1e-10f64.ln();
        for row in fm.rows() {
            assert!((row[0] - c0).abs() < 1e-9 * c0.abs());
            for &c in &row[1..] {
                assert!(c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_frame_boundary() {
        let cfg = MfccConfig::default();
        let fm = compute_mfcc(&AudioBuffer::new(vec![0.1; 400], 16000), &cfg).unwrap();
        assert_eq!(fm.n_frames(), 1);
        assert!(matches!(
            compute_mfcc(&AudioBuffer::new(vec![0.1; 399], 16000), &cfg),
            Err(Error::AudioTooShort(_))
        ));
    }

    #[test]
    fn frame_times_are_centers() {
        let fm = compute_mfcc(&AudioBuffer::new(vec![0.0; 1600], 16000), &MfccConfig::default()).unwrap();
        assert!((fm.t0_s - 0.0125).abs() < 1e-12);
        assert!((fm.frame_time(3) - 0.0425).abs() < 1e-12);
        assert_eq!(fm.first_frame_at_or_after(0.0425), 3);
        assert_eq!(fm.first_frame_at_or_after(0.0426), 4);
        assert_eq!(fm.first_frame_at_or_after(-5.0), 0);
    }

    #[test]
    fn tone_peaks_in_nearest_filter() {
        let cfg = MfccConfig::default();
        let buf = tone(1000.0, 16000, 16000);
        let fe = Frontend::new(&cfg, 16000);
        let fm = compute_mfcc(&buf, &cfg).unwrap();
        assert_eq!(fm.n_frames(), 98);

        // mean log mel energy per filter, recomputed from the same frames
        let mut mean = vec![0.0; cfg.n_mels];
        let mut buf_c = vec![Complex::new(0.0, 0.0); cfg.n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); fe.fft.get_inplace_scratch_len()];
        for k in 0..fm.n_frames() {
            let start = k * fe.hop;
            for (i, slot) in buf_c.iter_mut().enumerate() {
                *slot = if i < fe.frame_len {
                    let n = start + i;
                    let prev = if n == 0 { 0.0 } else { buf.samples()[n - 1] as f64 };
                    Complex::new((buf.samples()[n] as f64 - 0.97 * prev) * fe.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            fe.fft.process_with_scratch(&mut buf_c, &mut scratch);
            for (m, f) in fe.filters.iter().enumerate() {
                let e: f64 = f
                    .weights
                    .iter()
                    .zip(&buf_c[f.start..])
                    .map(|(w, c)| w * c.norm_sqr())
                    .sum();
                mean[m] += (e + 1e-10).ln();
            }
        }
        let argmax = (0..cfg.n_mels).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();

        let pts = mel_points(26, 0.0, 8000.0);
        let nearest = (0..26)
            .min_by(|&a, &b| (pts[a + 1] - 1000.0).abs().total_cmp(&(pts[b + 1] - 1000.0).abs()))
            .unwrap();
        assert_eq!(argmax, nearest);
    }

    #[test]
    fn rejects_inconsistent_config() {
        let bad = [
            MfccConfig {
                n_fft: 256,
                ..Default::default()
            },
            MfccConfig {
                n_coeffs: 30,
                ..Default::default()
            },
            MfccConfig {
                hop_s: 0.05,
                ..Default::default()
            },
            MfccConfig {
                preemph: 1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate(16000).is_err(), "{cfg:?}");
        }
        assert!(MfccConfig::default().validate(16000).is_ok());
    }

    #[test]
    fn csv_has_one_row_per_frame() {
        let fm = compute_mfcc(&AudioBuffer::new(vec![0.0; 800], 16000), &MfccConfig::default()).unwrap();
        let csv = fm.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + fm.n_frames());
        assert!(lines[1].starts_with("0.012500,"));
        assert_eq!(lines[1].split(',').count(), 14);
    }

    proptest! {
        #[test]
        fn frame_count_matches_formula(len in 0usize..4000) {
            let cfg = MfccConfig::default();
            let expected = if len >= 400 { (len - 400) / 160 + 1 } else { 0 };
            prop_assert_eq!(frame_count(len, 400, 160), expected);
            match compute_mfcc(&AudioBuffer::new(vec![0.01; len], 16000), &cfg) {
                Ok(fm) => prop_assert_eq!(fm.n_frames(), expected),
                Err(Error::AudioTooShort(_)) => prop_assert_eq!(expected, 0),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
