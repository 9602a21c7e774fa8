use super::arch::{Architecture, CLN_VAR_FLOOR, LRELU_SLOPE};
use super::weights::{Conv, Dense, GeneratorWeights};
use crate::error::{Error, Result};
use crate::gain::GainMatrix;
use crate::Matrix;

/// How cumulative layer normalization treats its running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClnMode {
    /// Per-channel mean and variance over every frame seen so far.
    #[default]
    Cumulative,
    /// Statistics fixed at their value when the mode was set (mean 0,
    /// variance 1 on a fresh state); only the affine part acts.
    Frozen,
    /// Normalization and its affine part are skipped.
    Disabled,
}

#[derive(Debug, Clone)]
struct Ring {
    width: usize,
    buf: Vec<f32>,
    /// Slot holding the oldest frame.
    head: usize,
}

impl Ring {
    fn new(kernel: usize, width: usize) -> Self {
        Self {
            width,
            buf: vec![0.0; kernel * width],
            head: 0,
        }
    }

    fn kernel(&self) -> usize {
        self.buf.len() / self.width
    }

    fn push(&mut self, frame: &[f32]) {
        let w = self.width;
        self.buf[self.head * w..(self.head + 1) * w].copy_from_slice(frame);
        self.head = (self.head + 1) % self.kernel();
    }

    /// Frame `j` in age order, 0 the oldest.
    fn frame(&self, j: usize) -> &[f32] {
        let slot = (self.head + j) % self.kernel();
        &self.buf[slot * self.width..(slot + 1) * self.width]
    }
}

#[derive(Debug, Clone)]
struct ClnStats {
    count: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    frozen: Option<(Vec<f64>, Vec<f64>)>,
}

impl ClnStats {
    fn new(channels: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; channels],
            sum_sq: vec![0.0; channels],
            frozen: None,
        }
    }

    fn mean_var(&self, c: usize) -> (f64, f64) {
        if self.count == 0 {
            return (0.0, 1.0);
        }
        let n = self.count as f64;
        let mean = self.sum[c] / n;
        (mean, (self.sum_sq[c] / n - mean * mean).max(CLN_VAR_FLOOR))
    }

    fn freeze(&mut self) {
        let (means, vars) = (0..self.sum.len()).map(|c| self.mean_var(c)).unzip();
        self.frozen = Some((means, vars));
    }
}

/// Per-stream generator memory: each block's last `kernel` inputs (zeros
/// before the stream starts) and the cumulative normalization sums.
#[derive(Debug, Clone)]
pub struct GeneratorState {
    arch: Architecture,
    mode: ClnMode,
    frames: u64,
    rings: Vec<Ring>,
    stats: Vec<ClnStats>,
}

impl GeneratorState {
    pub fn new(weights: &GeneratorWeights) -> Self {
        Self::for_architecture(weights.architecture().clone())
    }

    pub fn for_architecture(arch: Architecture) -> Self {
        let rings = (0..arch.blocks.len())
            .map(|i| Ring::new(arch.blocks[i].kernel, arch.block_input(i)))
            .collect();
        let stats = arch.blocks.iter().map(|b| ClnStats::new(b.channels)).collect();
        Self {
            arch,
            mode: ClnMode::Cumulative,
            frames: 0,
            rings,
            stats,
        }
    }

    pub fn with_cln_mode(mut self, mode: ClnMode) -> Self {
        self.set_cln_mode(mode);
        self
    }

    /// Switching to [`ClnMode::Frozen`] snapshots the current statistics.
    pub fn set_cln_mode(&mut self, mode: ClnMode) {
        if mode == ClnMode::Frozen && self.mode != ClnMode::Frozen {
            self.stats.iter_mut().for_each(ClnStats::freeze);
        }
        self.mode = mode;
    }

    pub fn cln_mode(&self) -> ClnMode {
        self.mode
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f32>() + tail
}

fn lrelu(x: f32) -> f32 {
    if x >= 0.0 {
        x
    } else {
        LRELU_SLOPE * x
    }
}

/// Keeps activations finite so the output bound holds for any finite weights.
fn saturate(x: f32) -> f32 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f32::MIN, f32::MAX)
    }
}

fn conv_block(conv: &Conv, ring: &mut Ring, stats: &mut ClnStats, mode: ClnMode, x: &[f32]) -> Vec<f32> {
    ring.push(x);
    let span = conv.kernel * conv.inputs;
    let mut y: Vec<f32> = (0..conv.outputs)
        .map(|o| {
            let w = &conv.packed[o * span..(o + 1) * span];
            let mut acc = conv.bias[o];
            for j in 0..conv.kernel {
                acc += dot(&w[j * conv.inputs..(j + 1) * conv.inputs], ring.frame(j));
            }
            saturate(acc)
        })
        .collect();

    if mode == ClnMode::Cumulative {
        stats.count += 1;
        for (c, &v) in y.iter().enumerate() {
            let v = v as f64;
            stats.sum[c] += v;
            stats.sum_sq[c] += v * v;
        }
    }
    if mode != ClnMode::Disabled {
        for (c, v) in y.iter_mut().enumerate() {
            let (mean, var) = match (&stats.frozen, mode) {
                (Some((m, s)), ClnMode::Frozen) => (m[c], s[c]),
                _ => stats.mean_var(c),
            };
            let z = (*v as f64 - mean) / var.sqrt();
            *v = saturate((conv.cln_gain[c] as f64 * z + conv.cln_bias[c] as f64) as f32);
        }
    }
    y.iter_mut().for_each(|v| *v = lrelu(*v));
    y
}

fn dense(layer: &Dense, x: &[f32]) -> Vec<f32> {
    (0..layer.outputs)
        .map(|o| saturate(layer.bias[o] + dot(&layer.weight[o * layer.inputs..(o + 1) * layer.inputs], x)))
        .collect()
}

/// Bounded exponential activation `exp(3 tanh(u))`, in `[e^-3, e^3]`.
pub fn bounded_exp(u: f64) -> f64 {
    (3.0 * u.tanh()).exp()
}

/// Advances the stream by one frame and returns its raw gain row.
pub fn forward_frame(
    weights: &GeneratorWeights,
    state: &mut GeneratorState,
    speech_feat: &[f64],
    noise_feat: &[f64],
) -> Result<Vec<f64>> {
    let arch = weights.architecture();
    if &state.arch != arch {
        return Err(Error::StateArchMismatch);
    }
    let n = arch.features();
    if speech_feat.len() != n || noise_feat.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "features of length {} and {}, expected {n}",
            speech_feat.len(),
            noise_feat.len()
        )));
    }
    let mut x: Vec<f32> = speech_feat
        .iter()
        .chain(noise_feat)
        .map(|&v| saturate(v as f32))
        .collect();
    for ((conv, ring), stats) in weights.convs.iter().zip(&mut state.rings).zip(&mut state.stats) {
        x = conv_block(conv, ring, stats, state.mode, &x);
    }
    let h: Vec<f32> = dense(&weights.fc1, &x).into_iter().map(lrelu).collect();
    let u = dense(&weights.fc2, &h);
    state.frames += 1;
    Ok(u.into_iter().map(|u| bounded_exp(u as f64)).collect())
}

/// Runs a fresh cumulative-normalization stream over a whole utterance.
pub fn forward_utterance(weights: &GeneratorWeights, speech_feats: &Matrix, noise_feats: &Matrix) -> Result<GainMatrix> {
    let mut state = GeneratorState::new(weights);
    forward_utterance_with(weights, &mut state, speech_feats, noise_feats)
}

/// Folds [`forward_frame`] over the rows of the feature matrices.
pub fn forward_utterance_with(
    weights: &GeneratorWeights,
    state: &mut GeneratorState,
    speech_feats: &Matrix,
    noise_feats: &Matrix,
) -> Result<GainMatrix> {
    if speech_feats.shape() != noise_feats.shape() {
        return Err(Error::DimensionMismatch(format!(
            "speech features {:?} vs noise features {:?}",
            speech_feats.shape(),
            noise_feats.shape()
        )));
    }
    let outputs = weights.architecture().outputs;
    let mut out = Matrix::zeros(speech_feats.rows(), outputs);
    for m in 0..speech_feats.rows() {
        let row = forward_frame(weights, state, speech_feats.row(m), noise_feats.row(m))?;
        out.row_mut(m).copy_from_slice(&row);
    }
    GainMatrix::new(out)
}
