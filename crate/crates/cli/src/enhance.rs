use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nele_core::generator::{load_weights as parse_weights, ClnMode, GeneratorWeights};
use nele_core::noise::NoisePsd;
use nele_core::normalize::NormalizationMode;
use nele_core::pipeline::{enhance, EnhanceOptions, Enhanced, GainSource, NoiseSource};
use nele_core::{Error, Result};
use rayon::prelude::*;

use crate::io;

#[derive(Clone, Copy, ValueEnum)]
pub enum ClnArg {
    Cumulative,
    Frozen,
    Disabled,
}

#[derive(Args)]
pub struct EnhanceArgs {
    /// Input WAV file, or a directory of WAV files.
    input: PathBuf,
    /// Output WAV file, or a directory when the input is one.
    #[arg(long)]
    out: PathBuf,
    /// Generator weights (NELW).
    #[arg(long, required_unless_present = "identity_gains")]
    weights: Option<PathBuf>,
    /// Force every gain to 1 and skip normalization.
    #[arg(long, conflicts_with = "weights")]
    identity_gains: bool,
    /// ul, fl or soft:<gamma>.
    #[arg(long, default_value = "ul", value_parser = crate::parse_mode)]
    mode: NormalizationMode,
    /// Noise recording for noise tracking.
    #[arg(long, conflicts_with = "noise_psd")]
    noise_ref: Option<PathBuf>,
    /// Precomputed noise PSD (NELW).
    #[arg(long)]
    noise_psd: Option<PathBuf>,
    /// Percentage of noise PSD bins replaced by random values.
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "cumulative")]
    cln: ClnArg,
    /// Gains dump (NELW): a file, or a directory in batch mode.
    #[arg(long)]
    gains: Option<PathBuf>,
    #[arg(long)]
    pcm16: bool,
}

pub fn load_weights(path: &Path) -> Result<GeneratorWeights> {
    parse_weights(&io::read_bytes(path)?)
}

pub fn noise_source(noise_ref: Option<&Path>, noise_psd: Option<&Path>) -> Result<NoiseSource> {
    Ok(match (noise_ref, noise_psd) {
        (Some(r), _) => NoiseSource::Reference(io::read(r)?),
        (None, Some(p)) => NoiseSource::Psd(NoisePsd::from_bytes(&io::read_bytes(p)?)?),
        (None, None) => NoiseSource::None,
    })
}

fn report(name: &str, input_energy: f64, out: &Enhanced) -> String {
    let time_ratio = if input_energy > 0.0 {
        out.signal.energy() / input_energy
    } else {
        1.0
    };
    format!(
        "{name} frames={} spectral_energy_ratio={:.12} time_energy_ratio={:.6}",
        out.alpha.frames(),
        out.spectral_energy_ratio,
        time_ratio
    )
}

pub fn run(a: EnhanceArgs) -> Result<()> {
    let weights = a.weights.as_deref().map(load_weights).transpose()?;
    let gains = match &weights {
        Some(w) => GainSource::Generator(w),
        None => GainSource::Identity,
    };
    let noise = noise_source(a.noise_ref.as_deref(), a.noise_psd.as_deref())?;
    let opts = EnhanceOptions {
        mode: a.mode,
        error_rate: a.error_rate,
        seed: a.seed,
        cln_mode: match a.cln {
            ClnArg::Cumulative => ClnMode::Cumulative,
            ClnArg::Frozen => ClnMode::Frozen,
            ClnArg::Disabled => ClnMode::Disabled,
        },
    };
    let process = |input: &Path, out: &Path, gains_out: Option<&Path>| -> Result<String> {
        let x = io::read(input)?;
        let y = enhance(&x, &noise, gains, &opts)?;
        io::write(out, &y.signal, a.pcm16)?;
        if let Some(g) = gains_out {
            io::write_bytes(g, &y.gains_to_bytes())?;
        }
        let name = input.file_stem().and_then(|s| s.to_str()).unwrap_or("-");
        Ok(report(name, x.energy(), &y))
    };

    if a.input.is_dir() {
        let files = io::wav_files(&a.input)?;
        if files.is_empty() {
            return Err(Error::EmptyInput);
        }
        io::create_dir(&a.out)?;
        if let Some(g) = &a.gains {
            io::create_dir(g)?;
        }
        let lines = files
            .par_iter()
            .map(|(stem, path)| {
                let gains_out = a.gains.as_ref().map(|g| g.join(format!("{stem}.nelw")));
                process(path, &a.out.join(format!("{stem}.wav")), gains_out.as_deref())
            })
            .collect::<Result<Vec<_>>>()?;
        lines.iter().for_each(|l| println!("{l}"));
        Ok(())
    } else {
        println!("{}", process(&a.input, &a.out, a.gains.as_deref())?);
        Ok(())
    }
}
