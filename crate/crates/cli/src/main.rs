//! `nele`: enhance, mix, evaluate and analyze from the command line.
//!
//! Failures exit with status 1 and print `error[<Name>]: <message>` on
//! stderr, `<Name>` being the stable variant name of the engine error.
//! Usage errors exit with status 2.

mod analyze;
mod enhance;
mod evaluate;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nele_core::generator::{Architecture, GeneratorWeights};
use nele_core::normalize::NormalizationMode;
use nele_core::synth::NoiseKind;
use nele_core::Result;

#[derive(Parser)]
#[command(name = "nele", version, about = "Near-end speech intelligibility enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a WAV file, or every WAV file in a directory.
    Enhance(enhance::EnhanceArgs),
    /// Simulate a noisy reverberant observation at a given SNR.
    Mix(MixArgs),
    /// Score processed speech against clean references.
    Evaluate(evaluate::EvaluateArgs),
    /// LTAS gain and RMS-ratio statistics of processed versus unmodified speech.
    Analyze(analyze::AnalyzeArgs),
    /// Track the noise PSD of a recording and dump it as a NELW matrix.
    EstimatePsd(EstimatePsdArgs),
    /// Write randomly initialised generator weights.
    InitWeights(InitWeightsArgs),
    /// Run the ssdrc-lite baseline.
    Ssdrc(SsdrcArgs),
    /// Dump the ERB filterbank weights as CSV.
    Filterbank {
        #[arg(long)]
        out: PathBuf,
    },
    /// Static gamma for soft normalization over a directory of utterances.
    SoftGamma(SoftGammaArgs),
    /// Generate deterministic synthetic speech, noise or room responses.
    Synth(SynthArgs),
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    speech: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    /// Room impulse response; the identity room when omitted.
    #[arg(long)]
    rir: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    snr: f64,
    /// Random noise offset seed; offset 0 when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pcm16: bool,
}

#[derive(Args)]
struct EstimatePsdArgs {
    noise: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InitWeightsArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight standard deviation relative to `1/sqrt(fan_in)`.
    #[arg(long, default_value_t = 1.0)]
    scale: f32,
}

#[derive(Args)]
struct SsdrcArgs {
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` config file; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    pcm16: bool,
}

#[derive(Args)]
struct SoftGammaArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    speech_dir: PathBuf,
    #[arg(long)]
    noise_ref: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// speech, white, ssn, babble or rir
    kind: String,
    #[arg(long, default_value_t = 3.0)]
    seconds: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enhance(a) => enhance::run(a),
        Command::Mix(a) => {
            let speech = io::read(&a.speech)?;
            let noise = io::read(&a.noise)?;
            let rir = match &a.rir {
                Some(p) => io::read(p)?,
                None => nele_core::dsp::unit_impulse(),
            };
            let mix = nele_core::dsp::mix_observed_parts(&speech, &rir, &noise, a.snr, a.seed)?;
            io::write(&a.out, &mix.observed, a.pcm16)?;
            println!("snr_db={:.6} noise_gain={:.9}", mix.measured_snr_db(), mix.noise_gain);
            Ok(())
        }
        Command::Evaluate(a) => evaluate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::EstimatePsd(a) => {
            let noise = io::read(&a.noise)?;
            let psd = nele_core::noise::estimate_noise_psd(&noise, &Default::default())?;
            let psd = nele_core::noise::inject_estimation_error(&psd, a.error_rate, a.seed)?;
            io::write_bytes(&a.out, &psd.to_bytes())?;
            println!("frames={} bins={}", psd.frames(), psd.bins());
            Ok(())
        }
        Command::InitWeights(a) => {
            let w = GeneratorWeights::random(Architecture::nele_g_v1(), a.seed, a.scale);
            io::write_bytes(&a.out, &w.to_bytes())?;
            println!("parameters={}", w.parameter_count());
            Ok(())
        }
        Command::Ssdrc(a) => {
            let cfg: nele_core::ssdrc::SsdrcConfig = match &a.config {
                Some(p) => io::read_text(p)?.parse()?,
                None => Default::default(),
            };
            if a.print_config {
                print!("{}", cfg.to_text());
                return Ok(());
            }
            let (Some(input), Some(out)) = (&a.input, &a.out) else {
                return Err(nele_core::Error::BadConfig("ssdrc needs an input and --out".into()));
            };
            let y = nele_core::ssdrc::ssdrc(&io::read(input)?, &cfg)?;
            io::write(out, &y, a.pcm16)
        }
        Command::Filterbank { out } => {
            io::write_bytes(&out, nele_core::erb::ErbFilterBank::standard().to_csv().as_bytes())
        }
        Command::SoftGamma(a) => {
            let weights = enhance::load_weights(&a.weights)?;
            let noise = enhance::noise_source(a.noise_ref.as_deref(), None)?;
            let files = io::wav_files(&a.speech_dir)?;
            let corpus = files
                .iter()
                .map(|(_, p)| nele_core::pipeline::raw_gains(&io::read(p)?, &noise, &weights))
                .collect::<Result<Vec<_>>>()?;
            let gamma = nele_core::normalize::compute_soft_gamma(corpus.iter().map(|(a, e)| (a, e)))?;
            println!("{gamma}");
            Ok(())
        }
        Command::Synth(a) => {
            let signal = match a.kind.as_str() {
                "speech" => nele_core::synth::synth_speech(a.seconds, a.seed),
                "rir" => nele_core::synth::synth_rir(a.seconds, a.seed),
                other => {
                    let kind = NoiseKind::parse(other)
                        .ok_or_else(|| nele_core::Error::BadConfig(format!("unknown synth kind {other:?}")))?;
                    nele_core::synth::synth_noise(kind, a.seconds, a.seed)
                }
            };
            io::write(&a.out, &signal, false)
        }
    }
}

/// Clap value parser for `--mode`.
pub(crate) fn parse_mode(s: &str) -> std::result::Result<NormalizationMode, String> {
    s.parse().map_err(|e: nele_core::Error| e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
