use std::f64::consts::PI;

use nele_core::dsp::{AudioSignal, StftConfig, Window};
use nele_core::noise::estimate_noise_psd;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    (0..len).map(|_| d.sample(&mut rng)).collect()
}

/// Welch average of `|DFT(w x)|^2` over 50 %-overlapped frames, by direct DFT.
fn welch_oracle(x: &[f64], bins: &[usize]) -> Vec<f64> {
    let n = 512;
    let w = Window::SqrtHann.coefficients(n);
    let mut acc = vec![0.0; bins.len()];
    let mut frames = 0;
    let mut start = 0;
    while start + n <= x.len() {
        for (slot, &k) in bins.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let ph = -2.0 * PI * (k * i) as f64 / n as f64;
                re += w[i] * x[start + i] * ph.cos();
                im += w[i] * x[start + i] * ph.sin();
            }
            acc[slot] += re * re + im * im;
        }
        frames += 1;
        start += 256;
    }
    acc.iter().map(|a| a / frames as f64).collect()
}

#[test]
fn stationary_white_noise_within_3db_of_welch() {
    let cfg = StftConfig::default();
    let sigma = 0.1;
    let x = gaussian(16_000 * 4, sigma, 1);
    let psd = estimate_noise_psd(&AudioSignal::from_samples(x.clone()), &cfg).unwrap();
    let burn_in = (0..psd.frames())
        .position(|m| cfg.frame_center_secs(m) >= 1.0)
        .unwrap();
    let bins: Vec<usize> = (4..256).step_by(12).collect();
    let oracle = welch_oracle(&x[16_000..], &bins);
    for (slot, &k) in bins.iter().enumerate() {
        let est: f64 = (burn_in..psd.frames() - 2)
            .map(|m| psd.matrix().get(m, k))
            .sum::<f64>()
            / (psd.frames() - 2 - burn_in) as f64;
        let db = 10.0 * (est / oracle[slot]).log10();
        assert!(db.abs() < 3.0, "bin {k}: {db:.2} dB");
    }
    // White noise has a flat PSD of sigma^2 * sum w^2, and sqrt-Hann has sum w^2 = N/2.
    let flat = 512.0 / 2.0 * sigma * sigma;
    let mean_oracle = oracle.iter().sum::<f64>() / oracle.len() as f64;
    assert!((10.0 * (mean_oracle / flat).log10()).abs() < 0.5);
}

#[test]
fn adapts_to_10db_step_within_1_5_s() {
    let cfg = StftConfig::default();
    let step_secs = 3.0;
    let mut x = gaussian(16_000 * 3, 0.05, 2);
    x.extend(gaussian(16_000 * 3, 0.05 * 10f64.sqrt(), 3));
    let psd = estimate_noise_psd(&AudioSignal::from_samples(x.clone()), &cfg).unwrap();
    let bins: Vec<usize> = (4..256).collect();
    let new_level = {
        let o = welch_oracle(&x[16_000 * 4..], &[20, 60, 100, 140, 180, 220]);
        o.iter().sum::<f64>() / o.len() as f64
    };
    let mean_est = |m: usize| bins.iter().map(|&k| psd.matrix().get(m, k)).sum::<f64>() / bins.len() as f64;
    let step_frame = (0..psd.frames())
        .position(|m| cfg.frame_center_secs(m) >= step_secs)
        .unwrap();
    let reached = (step_frame..psd.frames() - 2)
        .find(|&m| (m..psd.frames() - 2).all(|j| 10.0 * (mean_est(j) / new_level).log10() > -3.0))
        .expect("never converged");
    let delay = cfg.frame_center_secs(reached) - step_secs;
    eprintln!("adaptation delay {delay:.3} s");
    assert!(delay <= 1.5, "adaptation took {delay:.3} s");
}

#[test]
fn estimate_is_causal() {
    let cfg = StftConfig::default();
    let x = gaussian(16_000 * 3, 0.1, 4);
    let full = estimate_noise_psd(&AudioSignal::from_samples(x.clone()), &cfg).unwrap();
    let cut = 16_000 * 2;
    let part = estimate_noise_psd(&AudioSignal::from_samples(x[..cut].to_vec()), &cfg).unwrap();
    // Frames ending at or before the cut see identical input.
    let complete = (0..part.frames())
        .take_while(|&m| m * cfg.hop + cfg.window_length <= cut + cfg.head_padding())
        .count();
    assert!(complete > 100);
    for m in 0..complete {
        assert_eq!(full.matrix().row(m), part.matrix().row(m), "frame {m}");
    }
}
