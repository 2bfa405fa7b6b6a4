//! Scripted synthetic audio with known change points.
//!
//! Each source is white noise shaped by a bank of parallel two-pole
//! resonators, optionally amplitude-modulated at a syllable-like rate.
//! Scheduled blocks are joined with 10 ms linear crossfades. Noise comes
//! from ChaCha8 seeded with the script's `seed`, whose output stream is
//! fixed across platforms and releases.
//!
//! Script files are `key = value` lines grouped in sections:
//!
//! ```text
//! sample_rate = 16000
//! seed = 7
//!
//! [source anchor]
//! resonance = 500 120 1.0     # center Hz, bandwidth Hz, gain
//! resonance = 1500 200 0.6
//! am_rate_hz = 4
//! am_depth = 0.6
//!
//! [schedule]
//! anchor = 60
//! reporter = 45
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::eval::ReferenceAnnotation;

pub const CROSSFADE_S: f64 = 0.010;
/// RMS level every scheduled block is normalized to before modulation.
pub const BLOCK_RMS: f64 = 0.1;
const WARMUP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub name: String,
    pub resonances: Vec<Resonance>,
    pub am_rate_hz: Option<f64>,
    /// Modulation depth in `[0, 1]`; the envelope dips to `1 - depth`.
    pub am_depth: f64,
}

impl SourceSpec {
    pub fn new(name: impl Into<String>, resonances: &[(f64, f64, f64)]) -> Self {
        Self {
            name: name.into(),
            resonances: resonances
                .iter()
                .map(|&(center_hz, bandwidth_hz, gain)| Resonance {
                    center_hz,
                    bandwidth_hz,
                    gain,
                })
                .collect(),
            am_rate_hz: Some(4.0),
            am_depth: 0.5,
        }
    }
}

/// Five sources with well-separated resonance layouts.
pub fn voice_library() -> Vec<SourceSpec> {
    vec![
        SourceSpec::new(
            "anchor",
            &[(550.0, 110.0, 1.0), (1400.0, 160.0, 0.7), (2600.0, 220.0, 0.4)],
        ),
        SourceSpec::new(
            "reporter",
            &[(320.0, 90.0, 1.0), (2200.0, 180.0, 0.8), (3400.0, 260.0, 0.5)],
        ),
        SourceSpec::new(
            "studio",
            &[(800.0, 140.0, 1.0), (1100.0, 150.0, 0.9), (4200.0, 300.0, 0.4)],
        ),
        SourceSpec::new(
            "caller",
            &[(420.0, 100.0, 0.8), (1800.0, 170.0, 1.0), (5200.0, 350.0, 0.3)],
        ),
        SourceSpec::new(
            "guest",
            &[(700.0, 120.0, 1.0), (2900.0, 240.0, 0.9), (6000.0, 400.0, 0.5)],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScript {
    pub sources: Vec<SourceSpec>,
    /// `(source name, duration in seconds)` in playback order.
    pub schedule: Vec<(String, f64)>,
    pub sample_rate: u32,
    pub seed: u64,
}

impl SynthScript {
    /// Script over [`voice_library`] at 16 kHz.
    pub fn with_library(schedule: &[(&str, f64)], seed: u64) -> Self {
        Self {
            sources: voice_library(),
            schedule: schedule.iter().map(|&(n, d)| (n.to_string(), d)).collect(),
            sample_rate: 16_000,
            seed,
        }
    }

    pub fn total_duration_s(&self) -> f64 {
        self.schedule.iter().map(|e| e.1).sum()
    }

    /// Prefix sums of the schedule, excluding the total.
    pub fn change_times(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::new();
        for (_, d) in &self.schedule[..self.schedule.len().saturating_sub(1)] {
            acc += d;
            out.push(acc);
        }
        out
    }

    fn source(&self, name: &str) -> Result<&SourceSpec> {
        self.sources
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidScript(format!("schedule names unknown source {name:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScript(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.schedule.is_empty() {
            return bad("schedule is empty".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        for s in &self.sources {
            if s.resonances.is_empty() {
                return bad(format!("source {:?} has no resonances", s.name));
            }
            for r in &s.resonances {
                if !(r.center_hz > 0.0 && r.center_hz < nyquist && r.bandwidth_hz > 0.0 && r.gain.is_finite()) {
                    return bad(format!("source {:?}: invalid resonance {r:?}", s.name));
                }
            }
            if !(0.0..=1.0).contains(&s.am_depth) || s.am_rate_hz.is_some_and(|r| r.is_nan() || r <= 0.0) {
                return bad(format!("source {:?}: invalid modulation", s.name));
            }
        }
        for (name, d) in &self.schedule {
            if !(*d > 0.0 && d.is_finite()) {
                return bad(format!("duration {d} for {name:?} must be positive"));
            }
            self.source(name)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            Top,
            Source(usize),
            Schedule,
        }
        let mut script = SynthScript {
            sources: Vec::new(),
            schedule: Vec::new(),
            sample_rate: 16_000,
            seed: 0,
        };
        let mut section = Section::Top;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::InvalidScript(format!("line {}: {m}: {raw:?}", lineno + 1));
            if let Some(head) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let mut words = head.split_whitespace();
                section = match (words.next(), words.next(), words.next()) {
                    (Some("schedule"), None, _) => Section::Schedule,
                    (Some("source"), Some(name), None) => {
                        if script.sources.iter().any(|s| s.name == name) {
                            return Err(err("duplicate source"));
                        }
                        script.sources.push(SourceSpec {
                            name: name.to_string(),
                            resonances: Vec::new(),
                            am_rate_hz: None,
                            am_depth: 0.0,
                        });
                        Section::Source(script.sources.len() - 1)
                    }
                    _ => return Err(err("unknown section")),
                };
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err("expected a number"));
            match &section {
                Section::Top => match key {
                    "sample_rate" => script.sample_rate = value.parse().map_err(|_| err("bad sample_rate"))?,
                    "seed" => script.seed = value.parse().map_err(|_| err("bad seed"))?,
                    _ => return Err(err("unknown key")),
                },
                Section::Source(i) => {
                    let src = &mut script.sources[*i];
                    match key {
                        "resonance" => {
                            let f: Vec<f64> = value.split_whitespace().map(num).collect::<Result<_>>()?;
                            let [center_hz, bandwidth_hz, gain] = f[..] else {
                                return Err(err("resonance takes center, bandwidth and gain"));
                            };
                            src.resonances.push(Resonance {
                                center_hz,
                                bandwidth_hz,
                                gain,
                            });
                        }
                        "am_rate_hz" => src.am_rate_hz = Some(num(value)?),
                        "am_depth" => src.am_depth = num(value)?,
                        _ => return Err(err("unknown key")),
                    }
                }
                Section::Schedule => script.schedule.push((key.to_string(), num(value)?)),
            }
        }
        script.validate()?;
        Ok(script)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sample_rate = {}", self.sample_rate);
        let _ = writeln!(out, "seed = {}", self.seed);
        for s in &self.sources {
            let _ = writeln!(out, "\n[source {}]", s.name);
            for r in &s.resonances {
                let _ = writeln!(out, "resonance = {} {} {}", r.center_hz, r.bandwidth_hz, r.gain);
            }
            if let Some(rate) = s.am_rate_hz {
                let _ = writeln!(out, "am_rate_hz = {rate}");
            }
            let _ = writeln!(out, "am_depth = {}", s.am_depth);
        }
        out.push_str("\n[schedule]\n");
        for (name, d) in &self.schedule {
            let _ = writeln!(out, "{name} = {d}");
        }
        out
    }
}

/// Two-pole resonator `y[n] = b0 x[n] + 2 r cos(w) y[n-1] - r^2 y[n-2]`.
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(r: &Resonance, sample_rate: f64) -> Self {
        let radius = (-PI * r.bandwidth_hz / sample_rate).exp();
        let w = 2.0 * PI * r.center_hz / sample_rate;
        Self {
            b0: r.gain * (1.0 - radius),
            a1: 2.0 * radius * w.cos(),
            a2: -radius * radius,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn render_block(src: &SourceSpec, len: usize, first_sample: usize, sample_rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut bank: Vec<Resonator> = src.resonances.iter().map(|r| Resonator::new(r, sample_rate)).collect();
    let mut step = |rng: &mut ChaCha8Rng| {
        let x: f64 = rng.random_range(-1.0..1.0);
        bank.iter_mut().map(|r| r.tick(x)).sum::<f64>()
    };
    for _ in 0..WARMUP {
        step(rng);
    }
    let mut out: Vec<f64> = (0..len).map(|_| step(rng)).collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    let norm = if rms > 0.0 { BLOCK_RMS / rms } else { 0.0 };
    for (i, v) in out.iter_mut().enumerate() {
        let env = match src.am_rate_hz {
            Some(rate) => {
                let t = (first_sample + i) as f64 / sample_rate;
                1.0 - src.am_depth * 0.5 * (1.0 - (2.0 * PI * rate * t).cos())
            }
            None => 1.0,
        };
        *v *= norm * env;
    }
    out
}

/// Renders the script and returns the audio with its exact change times.
pub fn render(script: &SynthScript) -> Result<(AudioBuffer, ReferenceAnnotation)> {
    script.validate()?;
    let sr = script.sample_rate as f64;
    let mut bounds = vec![0usize];
    let mut acc = 0.0;
    for (_, d) in &script.schedule {
        acc += d;
        bounds.push((acc * sr).round() as usize);
    }
    let total = *bounds.last().unwrap();
    let half = ((CROSSFADE_S * sr / 2.0).round() as usize).max(1);
    let last = script.schedule.len() - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut mix = vec![0.0f64; total];
    for (j, (name, _)) in script.schedule.iter().enumerate() {
        let src = script.source(name)?;
        let lo = if j == 0 { 0 } else { bounds[j].saturating_sub(half) };
        let hi = if j == last {
            total
        } else {
            (bounds[j + 1] + half).min(total)
        };
        if hi <= lo {
            continue;
        }
        let block = render_block(src, hi - lo, lo, sr, &mut rng);
        for (i, v) in block.into_iter().enumerate() {
            let n = lo + i;
            let mut w = 1.0;
            if j > 0 && n < bounds[j] + half {
                w *= ((n + half) as f64 - bounds[j] as f64 + 0.5) / (2 * half) as f64;
            }
            if j < last && n + half >= bounds[j + 1] {
                w *= 1.0 - ((n + half) as f64 - bounds[j + 1] as f64 + 0.5) / (2 * half) as f64;
            }
            mix[n] += w.clamp(0.0, 1.0) * v;
        }
    }
    let samples: Vec<f32> = mix.into_iter().map(|v| v as f32).collect();
    let reference = ReferenceAnnotation::new(script.change_times())?;
    Ok((AudioBuffer::new(samples, script.sample_rate), reference))
}
