use crate::dsp::{stft, AudioSignal, StftConfig};
use crate::error::{Error, Result};

const FLOOR: f64 = 1e-10;

/// Long-term average spectrum: time-averaged `|X(m, k)|^2` per bin.
pub fn ltas(signal: &AudioSignal, config: &StftConfig) -> Result<Vec<f64>> {
    let spec = stft(signal, config)?;
    let mut acc = vec![0.0; spec.n_bins()];
    for frame in spec.iter_frames() {
        for (a, c) in acc.iter_mut().zip(frame) {
            *a += c.norm_sqr();
        }
    }
    let n = spec.n_frames() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Per-bin `10 log10(LTAS_signal / LTAS_reference)` in dB, both floored at 1e-10.
pub fn ltas_gain(signal: &AudioSignal, reference: &AudioSignal) -> Result<Vec<f64>> {
    if signal.energy() == 0.0 || reference.energy() == 0.0 {
        return Err(Error::SilentInput);
    }
    let cfg = StftConfig::default();
    let s = ltas(signal, &cfg)?;
    let r = ltas(reference, &cfg)?;
    Ok(s.iter()
        .zip(&r)
        .map(|(a, b)| 10.0 * (a.max(FLOOR) / b.max(FLOOR)).log10())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{istft, SAMPLE_RATE};
    use crate::synth::{synth_noise, NoiseKind};
    use crate::Matrix;

    #[test]
    fn self_gain_is_zero_and_scaling_is_uniform() {
        let x = synth_noise(NoiseKind::White, 1.0, 1);
        assert!(ltas_gain(&x, &x).unwrap().iter().all(|&g| g == 0.0));
        let g = ltas_gain(&x.scaled(2.0), &x).unwrap();
        assert!(g.iter().all(|v| (v - 10.0 * 4f64.log10()).abs() < 1e-9));
        assert!((g[10] - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn band_boost_shows_in_band_only() {
        let x = synth_noise(NoiseKind::White, 2.0, 2);
        let cfg = StftConfig::default();
        let mut spec = stft(&x, &cfg).unwrap();
        let boost = 10f64.powf(10.0 / 20.0);
        let mut gains = Matrix::filled(spec.n_frames(), spec.n_bins(), 1.0);
        for m in 0..spec.n_frames() {
            for k in 0..spec.n_bins() {
                let f = cfg.bin_frequency(k);
                if (2000.0..=4000.0).contains(&f) {
                    gains.set(m, k, boost);
                }
            }
        }
        spec.apply_gains(&gains).unwrap();
        let y = istft(&spec).unwrap();
        let g = ltas_gain(&y, &x).unwrap();
        for (k, gk) in g.iter().enumerate() {
            let f = k as f64 * SAMPLE_RATE as f64 / 512.0;
            if (2200.0..=3800.0).contains(&f) {
                assert!((gk - 10.0).abs() < 1.0, "{f} Hz: {gk}");
            } else if !(1700.0..=4300.0).contains(&f) {
                assert!(gk.abs() < 1.0, "{f} Hz: {gk}");
            }
        }
    }

    #[test]
    fn silent_input_errors() {
        let x = synth_noise(NoiseKind::White, 1.0, 1);
        assert!(matches!(
            ltas_gain(&AudioSignal::zeros(16_000), &x),
            Err(Error::SilentInput)
        ));
    }
}
