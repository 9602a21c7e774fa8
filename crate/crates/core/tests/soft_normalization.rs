use nele_core::generator::{Architecture, GeneratorWeights};
use nele_core::metrics::rms_ratio_stats;
use nele_core::normalize::{compute_soft_gamma, NormalizationMode};
use nele_core::pipeline::{enhance, raw_gains, EnhanceOptions, GainSource, NoiseSource};
use nele_core::synth::{synth_noise, synth_speech, NoiseKind};

#[test]
fn soft_gamma_keeps_corpus_rms_near_one() {
    let w = GeneratorWeights::random(Architecture::nele_g_v1(), 21, 1.0);
    let corpus: Vec<_> = (0..8)
        .map(|i| {
            let kind = if i % 2 == 0 { NoiseKind::SpeechShaped } else { NoiseKind::Babble };
            (synth_speech(2.5, 300 + i), NoiseSource::Reference(synth_noise(kind, 2.5, i)))
        })
        .collect();
    let gains: Vec<_> = corpus.iter().map(|(x, n)| raw_gains(x, n, &w).unwrap()).collect();
    let gamma = compute_soft_gamma(gains.iter().map(|(a, e)| (a, e))).unwrap();
    let opts = EnhanceOptions {
        mode: NormalizationMode::Soft(gamma),
        ..Default::default()
    };
    let pairs: Vec<_> = corpus
        .iter()
        .map(|(x, n)| (enhance(x, n, GainSource::Generator(&w), &opts).unwrap().signal, x.clone()))
        .collect();
    let stats = rms_ratio_stats(&pairs).unwrap();
    assert!((0.9..=1.1).contains(&stats.mean), "{}", stats.mean);
}
