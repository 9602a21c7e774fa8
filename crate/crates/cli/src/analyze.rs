//! LTAS gain CSV (`bin,freq_hz,gain_db`) and RMS-ratio statistics for one
//! pair of files or for two directories paired by file stem. With several
//! pairs the gain is the mean of the per-pair dB curves.

use std::path::PathBuf;

use clap::Args;
use nele_core::dsp::{AudioSignal, StftConfig};
use nele_core::metrics::{ltas_gain, rms_ratio_stats, RmsRatioStats, HIST_BINS};
use nele_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::io;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Processed file or directory.
    signal: PathBuf,
    /// Unmodified file or directory.
    reference: PathBuf,
    /// LTAS gain CSV.
    #[arg(long)]
    out: PathBuf,
    /// RMS-ratio histogram CSV (`lo,hi,count`).
    #[arg(long)]
    hist: Option<PathBuf>,
}

#[derive(Serialize)]
struct GainRow {
    bin: usize,
    freq_hz: f64,
    gain_db: f64,
}

#[derive(Serialize)]
struct HistRow {
    lo: f64,
    hi: f64,
    count: usize,
}

fn load_pairs(a: &AnalyzeArgs) -> Result<Vec<(AudioSignal, AudioSignal)>> {
    if a.signal.is_dir() {
        let files = io::wav_files(&a.signal)?;
        if files.is_empty() {
            return Err(Error::EmptyInput);
        }
        files
            .par_iter()
            .map(|(stem, path)| {
                let r = a.reference.join(format!("{stem}.wav"));
                if !r.is_file() {
                    return Err(Error::MissingPair(r.display().to_string()));
                }
                Ok((io::read(path)?, io::read(&r)?))
            })
            .collect()
    } else {
        Ok(vec![(io::read(&a.signal)?, io::read(&a.reference)?)])
    }
}

pub fn run(a: AnalyzeArgs) -> Result<()> {
    let pairs = load_pairs(&a)?;
    let curves = pairs
        .par_iter()
        .map(|(s, r)| ltas_gain(s, r))
        .collect::<Result<Vec<_>>>()?;
    let cfg = StftConfig::default();
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| io::csv_err(&a.out, e))?;
    for k in 0..cfg.n_bins() {
        let gain_db = curves.iter().map(|c| c[k]).sum::<f64>() / curves.len() as f64;
        w.serialize(GainRow {
            bin: k,
            freq_hz: cfg.bin_frequency(k),
            gain_db,
        })
        .map_err(|e| io::csv_err(&a.out, e))?;
    }
    w.flush().map_err(|e| io::csv_err(&a.out, e.into()))?;

    let stats: RmsRatioStats = rms_ratio_stats(&pairs)?;
    println!(
        "pairs={} rms_ratio_mean={:.6} rms_ratio_std={:.6} below={} above={}",
        stats.ratios.len(),
        stats.mean,
        stats.std,
        stats.below,
        stats.above
    );
    if let Some(path) = &a.hist {
        let mut w = csv::Writer::from_path(path).map_err(|e| io::csv_err(path, e))?;
        for i in 0..HIST_BINS {
            let (lo, hi) = RmsRatioStats::bin_edges(i);
            w.serialize(HistRow {
                lo,
                hi,
                count: stats.histogram[i],
            })
            .map_err(|e| io::csv_err(path, e))?;
        }
        w.flush().map_err(|e| io::csv_err(path, e.into()))?;
    }
    Ok(())
}
