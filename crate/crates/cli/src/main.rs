use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};

use ssmseg::eval::{evaluate, ReferenceAnnotation};
use ssmseg::export::{rttm, ssm_to_pgm, SegmentReport};
use ssmseg::refine::sliding_bic_curve;
use ssmseg::{audio, pipeline, synth, Error, PipelineConfig, Segment};

#[derive(Parser)]
#[command(
    name = "ssmseg",
    version,
    about = "Two-pass BIC self-similarity segmentation of broadcast audio"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline and write the segment report.
    Segment {
        audio: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_json: PathBuf,
        #[arg(long)]
        out_rttm: Option<PathBuf>,
        /// Directory for one sliding-BIC CSV per refined change point.
        #[arg(long)]
        curves_dir: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Render the first-pass similarity matrix as a binary PGM.
    SsmImage {
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Score a hypothesis (segment JSON or reference-format text) against a reference.
    Eval {
        hypothesis: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tolerance_s: f64,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Render a synth script to 16-bit WAV plus its reference file.
    Synth {
        script: PathBuf,
        #[arg(long)]
        out_wav: PathBuf,
        #[arg(long)]
        out_ref: PathBuf,
    },
    /// Write the MFCC matrix as CSV.
    MfccDump {
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Write the first-pass novelty curve as CSV.
    NoveltyDump {
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
}

/// One `--kebab-case` flag per pipeline config key.
#[derive(Debug, Default)]
struct ConfigOverrides(Vec<(&'static str, String)>);

const FLAGS: [&str; PipelineConfig::KEYS.len()] = [
    "sample-rate",
    "frame-len-s",
    "hop-s",
    "n-fft",
    "n-mels",
    "n-coeffs",
    "preemph",
    "mel-fmin",
    "mel-fmax",
    "log-floor",
    "segment-len-s",
    "kernel-half-width",
    "peak-k",
    "novelty-floor-lambda",
    "epsilon",
    "penalty-lambda",
    "context-s",
    "win-s",
    "step-s",
    "min-gap-s",
    "tau",
    "label-penalty-lambda",
];

impl FromArgMatches for ConfigOverrides {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = Self::default();
        out.update_from_arg_matches(m)?;
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        for (key, flag) in PipelineConfig::KEYS.iter().zip(FLAGS) {
            if let Some(v) = m.get_one::<String>(flag) {
                self.0.push((key, v.clone()));
            }
        }
        Ok(())
    }
}

impl Args for ConfigOverrides {
    fn augment_args(mut cmd: Command) -> Command {
        for (key, flag) in PipelineConfig::KEYS.iter().zip(FLAGS) {
            cmd = cmd.arg(
                clap::Arg::new(flag)
                    .long(flag)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(format!("override config key `{key}`"))
                    .help_heading("Config overrides"),
            );
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

/// Failures mapped to exit codes: 1 runtime, 2 usage or configuration.
enum Failure {
    Runtime(anyhow::Error),
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(Error::InvalidConfig(_) | Error::Parse(_))
            )
        });
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn load_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::default();
    let usage = |e: anyhow::Error| Failure::Usage(e);
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)
            .with_context(|| format!("reading config {}", p.display()))
            .map_err(usage)?;
        cfg.apply_text(&text)
            .with_context(|| format!("in config {}", p.display()))
            .map_err(usage)?;
    }
    for (k, v) in &overrides.0 {
        cfg.set(k, v).map_err(|e| usage(e.into()))?;
    }
    cfg.validate().map_err(|e| usage(e.into()))?;
    Ok(cfg)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&mut std::fs::File) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    write_atomic(path, |f| Ok(f.write_all(bytes)?))
}

fn load_audio(path: &Path, cfg: &PipelineConfig) -> anyhow::Result<ssmseg::AudioBuffer> {
    audio::load_wav(path, cfg.sample_rate).with_context(|| format!("loading {}", path.display()))
}

fn hypothesis_segments(text: &str) -> Result<Vec<Segment>, Failure> {
    if text.trim_start().starts_with('{') {
        let report = SegmentReport::from_json(text).map_err(|e| Failure::Usage(e.into()))?;
        return Ok(report.to_segments());
    }
    let r = ReferenceAnnotation::parse(text).map_err(|e| Failure::Usage(e.into()))?;
    let mut bounds = vec![0.0];
    bounds.extend(&r.change_times_s);
    let end = bounds.last().copied().unwrap_or(0.0) + 1.0;
    bounds.push(end);
    Ok(bounds
        .windows(2)
        .map(|w| Segment {
            start_s: w[0],
            end_s: w[1],
            label: None,
            anchor_bic: 0.0,
        })
        .collect())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::Segment {
            audio,
            config,
            out_json,
            out_rttm,
            curves_dir,
            overrides,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let buf = load_audio(&audio, &cfg)?;
            let out = pipeline::run(&buf, &cfg).with_context(|| format!("segmenting {}", audio.display()))?;
            let report = SegmentReport::new(&audio.to_string_lossy(), &out, &cfg);
            write_bytes(&out_json, report.to_json().as_bytes())?;
            if let Some(p) = out_rttm {
                let id = audio
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "audio".into());
                write_bytes(&p, rttm(&out.segments, &id).as_bytes())?;
            }
            if let Some(dir) = curves_dir {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (i, c) in out.coarse.iter().enumerate() {
                    let curve = sliding_bic_curve(&out.features, c.time_s, &cfg.refine, cfg.bic)
                        .map_err(anyhow::Error::from)?;
                    let mut csv = String::from("candidate_time_s,bic\n");
                    for (t, b) in curve {
                        csv.push_str(&format!("{t:.3},{b:.6}\n"));
                    }
                    write_bytes(&dir.join(format!("curve_{i:03}.csv")), csv.as_bytes())?;
                }
            }
            eprintln!(
                "{}: {} change point(s), {} segment(s)",
                audio.display(),
                out.refined.len(),
                out.segments.len()
            );
        }
        Cmd::SsmImage {
            audio,
            out,
            config,
            overrides,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let buf = load_audio(&audio, &cfg)?;
            let feats = pipeline::features_for(&buf, &cfg).map_err(anyhow::Error::from)?;
            let (ssm, _, _) = pipeline::first_pass(&feats, &cfg).map_err(anyhow::Error::from)?;
            write_bytes(&out, &ssm_to_pgm(&ssm))?;
        }
        Cmd::Eval {
            hypothesis,
            reference,
            tolerance_s,
            out_json,
        } => {
            let read = |p: &Path| {
                std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(Failure::Runtime)
            };
            let hyp = hypothesis_segments(&read(&hypothesis)?)?;
            let reference = ReferenceAnnotation::parse(&read(&reference)?)
                .map_err(|e| Failure::Usage(anyhow::Error::from(e).context("parsing reference")))?;
            let report = evaluate(&hyp, &reference, tolerance_s);
            let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            print!("{json}");
            if let Some(p) = out_json {
                write_bytes(&p, json.as_bytes())?;
            }
        }
        Cmd::Synth {
            script,
            out_wav,
            out_ref,
        } => {
            let text = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let s = synth::SynthScript::parse(&text).map_err(|e| Failure::Usage(e.into()))?;
            let (buf, reference) = synth::render(&s).map_err(anyhow::Error::from)?;
            write_atomic(&out_wav, |f| {
                Ok(audio::write_wav_pcm16(&buf, std::io::BufWriter::new(f))?)
            })?;
            write_bytes(&out_ref, reference.to_text().as_bytes())?;
        }
        Cmd::MfccDump {
            audio,
            out,
            config,
            overrides,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let buf = load_audio(&audio, &cfg)?;
            let feats = pipeline::features_for(&buf, &cfg).map_err(anyhow::Error::from)?;
            write_bytes(&out, feats.to_csv().as_bytes())?;
        }
        Cmd::NoveltyDump {
            audio,
            out,
            config,
            overrides,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let buf = load_audio(&audio, &cfg)?;
            let feats = pipeline::features_for(&buf, &cfg).map_err(anyhow::Error::from)?;
            let (ssm, nov, _) = pipeline::first_pass(&feats, &cfg).map_err(anyhow::Error::from)?;
            write_bytes(&out, nov.to_csv(&ssm).as_bytes())?;
        }
    }
    Ok(())
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("SSMSEG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("SSMSEG_THREADS must be a non-negative integer, got {v:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
