//! Acceptance gate: one PASS/FAIL line per primary criterion, non-zero exit
//! if any fails. Runs without trained weights (identity gains and seeded
//! random generator fixtures).

#[path = "../../core/tests/support/estoi_oracle.rs"]
mod estoi_oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nele_core::dsp::{mix_observed_parts, read_wav, write_wav, AudioSignal, StftConfig, WavFormat};
use nele_core::erb::ErbBands;
use nele_core::generator::{
    forward_utterance_with, load_weights, Architecture, ClnMode, GeneratorState, GeneratorWeights, NELE_G_V1_PARAMS,
};
use nele_core::metrics::{estoi, ltas_gain, normalize_score, LogisticParams, MetricId};
use nele_core::noise::{inject_estimation_error, NoisePsd};
use nele_core::normalize::{normalize_frame, normalize_utterance, NormalizationMode};
use nele_core::pipeline::{enhance, EnhanceOptions, GainSource, NoiseSource};
use nele_core::ssdrc::{dynamic_range_compression, rms_envelope, ssdrc, SsdrcConfig};
use nele_core::synth::{synth_noise, synth_rir, synth_speech, NoiseKind};
use nele_core::{GainMatrix, Matrix, RAW_GAIN_MAX, RAW_GAIN_MIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, f: impl Fn(&mut ChaCha8Rng) -> f64) -> Matrix {
    let data = (0..rows * cols).map(|_| f(rng)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn equal_power() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_ul = 0.0f64;
    let mut worst_fl = 0.0f64;
    for _ in 0..100 {
        let frames = rng.random_range(50..400);
        let mut e = random_matrix(&mut rng, frames, 64, |r| (r.random_range(-12.0..2.0f64)).exp());
        // Silent stretches, as in real utterances.
        for m in 0..frames {
            if rng.random_bool(0.1) {
                e.row_mut(m).fill(0.0);
            }
        }
        let e = ErbBands::new(e).unwrap();
        let a = GainMatrix::new(random_matrix(&mut rng, frames, 64, |r| (r.random_range(-3.0..3.0f64)).exp())).unwrap();
        let ratio = |g: &[f64], e: &[f64]| -> f64 {
            let (num, den) = g.iter().zip(e).fold((0.0, 0.0), |(n, d), (g, e)| (n + g * g * e, d + e));
            num / den
        };
        let ul = normalize_utterance(&a, &e).map_err(|x| x.to_string())?;
        worst_ul = worst_ul.max((ratio(ul.matrix().as_slice(), e.matrix().as_slice()) - 1.0).abs());
        let fl = normalize_frame(&a, &e).map_err(|x| x.to_string())?;
        for m in 0..frames {
            if e.matrix().row(m).iter().sum::<f64>() >= 1e-10 {
                worst_fl = worst_fl.max((ratio(fl.matrix().row(m), e.matrix().row(m)) - 1.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst_ul <= 1e-9, || format!("utterance-level deviation {worst_ul:e}"))?;
    check(worst_fl <= 1e-9, || format!("frame-level deviation {worst_fl:e}"))?;
    check(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max |ratio-1|: UL {worst_ul:.1e}, FL {worst_fl:.1e}; {secs:.3} s"))
}

fn identity_path() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let x = synth_speech(3.0, 7);
    let input = dir.path().join("x.wav");
    let output = dir.path().join("y.wav");
    write_wav(&input, &x, WavFormat::Float32).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_nele"))
        .args(["enhance", "--identity-gains", "--out"])
        .arg(&output)
        .arg(&input)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    let x = read_wav(&input).map_err(|e| e.to_string())?;
    let y = read_wav(&output).map_err(|e| e.to_string())?;
    check(x.len() == y.len(), || format!("length {} vs {}", y.len(), x.len()))?;
    let err = x.samples().iter().zip(y.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(err < 1e-5, || format!("max abs error {err:e}"))?;
    Ok(format!("max abs error {err:.2e}"))
}

fn parameter_budget() -> Outcome {
    let w = GeneratorWeights::random(Architecture::nele_g_v1(), 3, 1.0);
    let loaded = load_weights(&w.to_bytes()).map_err(|e| e.to_string())?;
    let n = loaded.parameter_count();
    check(n == NELE_G_V1_PARAMS && n == 2_093_120, || format!("{n} parameters"))?;
    check((n as f64 - 2.1e6).abs() / 2.1e6 < 0.01, || format!("{n} not around 2.1M"))?;
    let flops = loaded.architecture().flops_per_second(0.016);
    let rel = (flops / 262.5e6 - 1.0).abs();
    check(rel < 0.01, || format!("{flops:.4e} FLOPS, {rel:.4} off"))?;
    Ok(format!("{n} parameters, {:.2} MFLOPS ({:.2}% from 262.5)", flops / 1e6, rel * 100.0))
}

fn causality() -> Outcome {
    let w = GeneratorWeights::random(Architecture::nele_g_v1(), 5, 1.0);
    let x = synth_speech(2.0, 9);
    let noise = NoiseSource::Reference(synth_noise(NoiseKind::Babble, 2.0, 9));
    let frames = StftConfig::default().n_frames(x.len());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases: Vec<(NormalizationMode, usize, usize, f64)> = (0..50)
        .map(|i| {
            let mode = if i % 2 == 0 { NormalizationMode::FrameLevel } else { NormalizationMode::Soft(1.7) };
            let m = rng.random_range(10..frames - 4);
            // Samples in frame m+1 that frame m does not cover.
            let n = m * 256 + 256 + rng.random_range(0..256);
            (mode, m, n.min(x.len() - 1), rng.random_range(-0.5..0.5))
        })
        .collect();
    let run = |mode, signal: &AudioSignal| {
        let opts = EnhanceOptions {
            mode,
            cln_mode: ClnMode::Frozen,
            ..Default::default()
        };
        enhance(signal, &noise, GainSource::Generator(&w), &opts).unwrap()
    };
    let base_fl = run(NormalizationMode::FrameLevel, &x);
    let base_soft = run(NormalizationMode::Soft(1.7), &x);
    let changed_later: usize = cases
        .par_iter()
        .map(|&(mode, m, n, delta)| -> Result<usize, String> {
            let base = if mode == NormalizationMode::FrameLevel { &base_fl } else { &base_soft };
            let mut s = x.samples().to_vec();
            s[n] += delta;
            let y = run(mode, &AudioSignal::from_samples(s));
            for r in 0..=m {
                check(y.alpha.matrix().row(r) == base.alpha.matrix().row(r), || {
                    format!("{mode}: perturbing frame {} changed gain row {r}", m + 1)
                })?;
            }
            let safe = m * 256;
            check(y.signal.samples()[..safe] == base.signal.samples()[..safe], || {
                format!("{mode}: output before frame {} changed", m + 1)
            })?;
            Ok(usize::from((m + 1..frames).any(|r| y.alpha.matrix().row(r) != base.alpha.matrix().row(r))))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    check(changed_later == 50, || format!("only {changed_later}/50 perturbations reached later rows"))?;

    // Lookback of the bare convolution stack.
    let arch = Architecture::nele_g_v1();
    let reach = arch.lookback();
    check(reach == 32, || format!("lookback {reach}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sf = random_matrix(&mut rng, 80, 64, |r| r.random_range(0.0..2.0));
    let nf = random_matrix(&mut rng, 80, 64, |r| r.random_range(0.0..2.0));
    let run_bare = |s: &Matrix| {
        let mut st = GeneratorState::new(&w).with_cln_mode(ClnMode::Disabled);
        forward_utterance_with(&w, &mut st, s, &nf).unwrap()
    };
    let base = run_bare(&sf);
    for m in [40usize, 55, 79] {
        let mut far = sf.clone();
        far.set(m - 33, 5, far.get(m - 33, 5) + 1.0);
        check(run_bare(&far).matrix().row(m) == base.matrix().row(m), || {
            format!("frame {} influenced row {m}", m - 33)
        })?;
        let mut edge = sf.clone();
        edge.set(m - 32, 5, edge.get(m - 32, 5) + 1.0);
        check(run_bare(&edge).matrix().row(m) != base.matrix().row(m), || {
            format!("frame {} did not influence row {m}", m - 32)
        })?;
    }
    Ok("50/50 perturbations left earlier rows bitwise unchanged; lookback exactly 32 frames".into())
}

fn gain_range() -> Outcome {
    let draws: Vec<(f64, f64, usize)> = (0..40u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + d);
            let scale = 10f32.powf(rng.random_range(-2.0..2.0));
            let w = GeneratorWeights::random(Architecture::nele_g_v1(), d, scale);
            let amp = 10f64.powf(rng.random_range(-3.0..3.0));
            let sf = random_matrix(&mut rng, 250, 64, |r| amp * r.random_range(0.0..1.0));
            let nf = random_matrix(&mut rng, 250, 64, |r| amp * r.random_range(0.0..1.0));
            let mode = [ClnMode::Cumulative, ClnMode::Frozen, ClnMode::Disabled][d as usize % 3];
            let mut st = GeneratorState::new(&w).with_cln_mode(mode);
            let g = forward_utterance_with(&w, &mut st, &sf, &nf).unwrap();
            let s = g.matrix().as_slice();
            let lo = s.iter().copied().fold(f64::MAX, f64::min);
            let hi = s.iter().copied().fold(0.0, f64::max);
            (lo, hi, g.frames())
        })
        .collect();
    let lo = draws.iter().map(|d| d.0).fold(f64::MAX, f64::min);
    let hi = draws.iter().map(|d| d.1).fold(0.0, f64::max);
    let n: usize = draws.iter().map(|d| d.2).sum();
    check(n == 10_000, || format!("{n} draws"))?;
    check(lo >= RAW_GAIN_MIN && hi <= RAW_GAIN_MAX, || format!("range [{lo}, {hi}]"))?;
    Ok(format!("{n} frame draws, observed range [{lo:.4}, {hi:.3}] within [e^-3, e^3]"))
}

fn estoi_checks() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let clean = synth_speech(3.0, 500 + i);
        let kind = [NoiseKind::White, NoiseKind::SpeechShaped, NoiseKind::Babble][i as usize % 3];
        let rir = synth_rir(0.2 + 0.05 * i as f64, i);
        let mix = mix_observed_parts(&clean, &rir, &synth_noise(kind, 3.0, i), -8.0 + 2.0 * i as f64, None)
            .map_err(|e| e.to_string())?;
        let y = AudioSignal::from_samples(mix.observed.samples()[..clean.len()].to_vec());
        let native = estoi(&clean, &y).map_err(|e| e.to_string())?;
        let oracle = estoi_oracle::estoi_oracle(clean.samples(), y.samples()).ok_or("oracle: too short")?;
        worst = worst.max((native - oracle).abs());
    }
    check(worst < 1e-6, || format!("oracle deviation {worst:e}"))?;
    let x = synth_speech(3.0, 42);
    let own = estoi(&x, &x).map_err(|e| e.to_string())?;
    check((own - 1.0).abs() < 1e-9, || format!("estoi(x, x) = {own}"))?;
    let noise = synth_noise(NoiseKind::White, 3.0, 43);
    let scores: Vec<f64> = [20.0, 10.0, 0.0, -10.0]
        .iter()
        .map(|&snr| {
            let y = mix_observed_parts(&x, &nele_core::dsp::unit_impulse(), &noise, snr, None).unwrap().observed;
            estoi(&x, &y).unwrap()
        })
        .collect();
    check(scores.windows(2).all(|w| w[0] > w[1]), || format!("not decreasing: {scores:?}"))?;
    Ok(format!(
        "oracle max diff {worst:.1e}; estoi(x,x)-1 = {:.1e}; SNR sweep {:.3} > {:.3} > {:.3} > {:.3}",
        own - 1.0,
        scores[0],
        scores[1],
        scores[2],
        scores[3]
    ))
}

fn logistic() -> Outcome {
    let table = [
        (MetricId::Siib, -0.06, 32.0),
        (MetricId::Haspi, -0.95, 2.8),
        (MetricId::Estoi, -8.0, 0.25),
        (MetricId::Pesq, -1.5, 2.5),
        (MetricId::Visqol, -2.5, 2.2),
    ];
    for (m, a, b) in table {
        let p = m.logistic();
        check(p.a == a && p.b == b, || format!("{m}: ({}, {})", p.a, p.b))?;
        let mid = normalize_score(b, p);
        check(mid == 0.5, || format!("{m}: f(b) = {mid}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let p = LogisticParams {
            a: -10f64.powf(rng.random_range(-2.0..1.0)),
            b: rng.random_range(-50.0..50.0),
        };
        let v1 = rng.random_range(-100.0..100.0);
        let v2 = v1 + rng.random_range(1e-6..10.0);
        let (f1, f2) = (normalize_score(v1, p), normalize_score(v2, p));
        check((0.0..=1.0).contains(&f1) && f1 <= f2, || format!("{p:?}: f({v1}) = {f1}, f({v2}) = {f2}"))?;
        if f1 > 1e-12 && f2 < 1.0 - 1e-12 && (f2 - f1).abs() > 0.0 {
            check(f1 < f2, || format!("{p:?}: not strictly increasing at {v1}"))?;
        }
    }
    Ok("f(b) = 0.5 for SIIB, HASPI, ESTOI, PESQ, ViSQOL; monotone over 10^4 random pairs".into())
}

fn error_injection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psd = NoisePsd::new(random_matrix(&mut rng, 400, 250, |r| (r.random_range(-6.0..2.0f64)).exp())).unwrap();
    check(psd.matrix().as_slice().len() == 100_000, || "fixture size".into())?;
    let same = inject_estimation_error(&psd, 0.0, 1).map_err(|e| e.to_string())?;
    check(same == psd, || "epsilon 0 changed the PSD".into())?;

    let log_stats = |p: &NoisePsd| {
        let l: Vec<f64> = p.matrix().as_slice().iter().map(|v| v.ln()).collect();
        let mean = l.iter().sum::<f64>() / l.len() as f64;
        let var = l.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / l.len() as f64;
        (mean, var)
    };
    let (m0, v0) = log_stats(&psd);
    let all = inject_estimation_error(&psd, 100.0, 2).map_err(|e| e.to_string())?;
    let (m1, v1) = log_stats(&all);
    let replaced_all = all.matrix().as_slice().iter().zip(psd.matrix().as_slice()).filter(|(a, b)| a != b).count();
    check(replaced_all == 100_000, || format!("{replaced_all} bins replaced at 100%"))?;
    check(((m1 - m0) / m0).abs() < 0.05, || format!("log mean {m1} vs {m0}"))?;
    check(((v1 - v0) / v0).abs() < 0.05, || format!("log variance {v1} vs {v0}"))?;

    let mut fractions = Vec::new();
    for eps in [10.0, 25.0, 50.0, 75.0, 90.0] {
        let out = inject_estimation_error(&psd, eps, 3).map_err(|e| e.to_string())?;
        let changed = out.matrix().as_slice().iter().zip(psd.matrix().as_slice()).filter(|(a, b)| a != b).count();
        let pct = changed as f64 / 1000.0;
        check((pct - eps).abs() <= 1.0, || format!("epsilon {eps}: {pct}% replaced"))?;
        fractions.push(format!("{eps}->{pct:.2}"));
    }
    Ok(format!(
        "identity at 0; log mean/var at 100: {:.2}%/{:.2}% off; replaced % {}",
        ((m1 - m0) / m0).abs() * 100.0,
        ((v1 - v0) / v0).abs() * 100.0,
        fractions.join(", ")
    ))
}

fn mixing() -> Outcome {
    let speech = synth_speech(3.0, 3);
    let noise = synth_noise(NoiseKind::Babble, 2.0, 3);
    let rir = synth_rir(0.5, 3);
    let mut worst = 0.0f64;
    for snr in [-13.0, -9.0, -5.0, -1.0] {
        let m = mix_observed_parts(&speech, &rir, &noise, snr, Some(4)).map_err(|e| e.to_string())?;
        let s: f64 = m.reverberant.samples().iter().map(|v| v * v).sum();
        let n: f64 = m.scaled_noise.samples().iter().map(|v| v * v).sum();
        worst = worst.max((10.0 * (s / n).log10() - snr).abs());
    }
    check(worst <= 0.01, || format!("SNR off by {worst} dB"))?;
    Ok(format!("max SNR error {worst:.1e} dB over -13, -9, -5, -1 dB"))
}

fn ssdrc_lite() -> Outcome {
    let cfg = SsdrcConfig::default();
    let mut worst_rms = 0.0f64;
    let mut worst_gain = f64::MAX;
    for seed in 0..6 {
        let x = synth_speech(3.0, 700 + seed);
        let y = ssdrc(&x, &cfg).map_err(|e| e.to_string())?;
        worst_rms = worst_rms.max((y.rms() / x.rms() - 1.0).abs());
        let g = ltas_gain(&y, &x).map_err(|e| e.to_string())?;
        worst_gain = worst_gain.min(g[32..=256].iter().copied().fold(f64::MAX, f64::min));
    }
    check(worst_rms <= 1e-6, || format!("RMS ratio off by {worst_rms:e}"))?;
    check(worst_gain > 0.0, || format!("LTAS gain dips to {worst_gain:.2} dB in 1-8 kHz"))?;

    let am: Vec<f64> = (0..32_000)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            (1.0 + 0.8 * (2.0 * std::f64::consts::PI * 4.0 * t).sin()) * (2.0 * std::f64::consts::PI * 1000.0 * t).sin()
        })
        .collect();
    let x = AudioSignal::from_samples(am);
    let y = dynamic_range_compression(&x, &cfg).map_err(|e| e.to_string())?;
    let spread = |s: &AudioSignal| {
        let env = rms_envelope(s.samples(), 160);
        let core = &env[1600..env.len() - 1600];
        let mean = core.iter().sum::<f64>() / core.len() as f64;
        core.iter().map(|e| (e / mean - 1.0).powi(2)).sum::<f64>() / core.len() as f64
    };
    let (vx, vy) = (spread(&x), spread(&y));
    check(vy < vx, || format!("envelope variance {vy} not below {vx}"))?;
    Ok(format!(
        "RMS error {worst_rms:.1e}; min LTAS gain 1-8 kHz {worst_gain:.2} dB; AM envelope variance {vx:.4} -> {vy:.4}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("equal-power constraint", equal_power),
        ("identity path", identity_path),
        ("parameter budget", parameter_budget),
        ("causality", causality),
        ("gain range", gain_range),
        ("ESTOI oracle equivalence", estoi_checks),
        ("logistic normalization", logistic),
        ("noise-error injection", error_injection),
        ("mixing model", mixing),
        ("ssdrc-lite", ssdrc_lite),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{secs:.2} s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.2} s]: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", 10 - failed, 10);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
