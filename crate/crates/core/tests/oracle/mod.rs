//! Brute-force reference implementations, kept independent of the library
//! code paths they check.
#![allow(dead_code)]

use std::f64::consts::PI;

/// MFCCs of one frame by direct summation: naive DFT, explicit triangular
/// weights per bin, direct orthonormal DCT-II.
pub struct MfccOracle {
    pub sample_rate: f64,
    pub frame_len: usize,
    pub hop: usize,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub preemph: f64,
    pub log_floor: f64,
}

impl Default for MfccOracle {
    fn default() -> Self {
        Self {
            sample_rate: 16000.0,
            frame_len: 400,
            hop: 160,
            n_fft: 512,
            n_mels: 26,
            n_coeffs: 13,
            preemph: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccOracle {
    pub fn frame(&self, x: &[f32], k: usize) -> Vec<f64> {
        let start = k * self.hop;
        let n = self.frame_len;
        let windowed: Vec<f64> = (0..n)
            .map(|i| {
                let idx = start + i;
                let prev = if idx == 0 { 0.0 } else { x[idx - 1] as f64 };
                let y = x[idx] as f64 - self.preemph * prev;
                let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n as f64 - 1.0)).cos();
                y * w
            })
            .collect();

        let n_bins = self.n_fft / 2 + 1;
        let power: Vec<f64> = (0..n_bins)
            .map(|b| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in windowed.iter().enumerate() {
                    let a = -2.0 * PI * (b * i) as f64 / self.n_fft as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect();

        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let top = mel(self.sample_rate / 2.0);
        let edge = |i: usize| hz(top * i as f64 / (self.n_mels + 1) as f64);

        let log_e: Vec<f64> = (0..self.n_mels)
            .map(|m| {
                let (lo, c, hi) = (edge(m), edge(m + 1), edge(m + 2));
                let mut e = 0.0;
                for (b, &p) in power.iter().enumerate() {
                    let f = b as f64 * self.sample_rate / self.n_fft as f64;
                    let w = if f > lo && f <= c {
                        (f - lo) / (c - lo)
                    } else if f > c && f < hi {
                        (hi - f) / (hi - c)
                    } else {
                        0.0
                    };
                    e += w * p;
                }
                (e + self.log_floor).ln()
            })
            .collect();

        let m = self.n_mels as f64;
        (0..self.n_coeffs)
            .map(|q| {
                let s: f64 = log_e
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| l * (PI * q as f64 * (i as f64 + 0.5) / m).cos())
                    .sum();
                if q == 0 {
                    s / m.sqrt()
                } else {
                    s * (2.0 / m).sqrt()
                }
            })
            .collect()
    }
}

/// Two-pass sample mean and ML covariance (divide by n).
pub fn two_pass_mean_cov(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for c in row.iter_mut() {
            *c /= n;
        }
    }
    (mean, cov)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        let pivot = a[col].clone();
        for row in &mut a[col + 1..] {
            let f = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
        }
    }
    det
}

/// Standard normal draws via Box-Muller on a caller-supplied uniform source.
pub fn normal(uniform: &mut impl FnMut() -> f64) -> f64 {
    let u1 = uniform().max(1e-300);
    let u2 = uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
