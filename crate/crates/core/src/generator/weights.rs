use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::Architecture;
use crate::container::{parse_manifest, TensorFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Conv {
    pub kernel: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][tap][in]`, tap 0 the oldest frame.
    pub packed: Vec<f32>,
    pub bias: Vec<f32>,
    pub cln_gain: Vec<f32>,
    pub cln_bias: Vec<f32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`.
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

/// Validated generator parameters. Immutable once built.
#[derive(Debug, Clone)]
pub struct GeneratorWeights {
    arch: Architecture,
    file: TensorFile,
    pub(crate) convs: Vec<Conv>,
    pub(crate) fc1: Dense,
    pub(crate) fc2: Dense,
}

/// Loads a weight file for the standard architecture.
pub fn load_weights(bytes: &[u8]) -> Result<GeneratorWeights> {
    GeneratorWeights::load(bytes, Architecture::nele_g_v1())
}

impl GeneratorWeights {
    /// Parses a `NELW` container and checks it against `arch`: the arch id,
    /// every tensor name and shape, then the blob length.
    pub fn load(bytes: &[u8], arch: Architecture) -> Result<Self> {
        let (manifest, raw) = parse_manifest(bytes)?;
        if manifest.arch_id != arch.id {
            return Err(Error::ShapeMismatch(format!(
                "arch_id {:?}, expected {:?}",
                manifest.arch_id, arch.id
            )));
        }
        let table = arch.tensor_table();
        if manifest.tensors.len() != table.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} tensors, expected {}",
                manifest.tensors.len(),
                table.len()
            )));
        }
        for (name, shape) in &table {
            let found: Vec<_> = manifest.tensors.iter().filter(|t| &t.name == name).collect();
            match found.as_slice() {
                [t] if &t.shape == shape => {}
                [t] => {
                    return Err(Error::ShapeMismatch(format!(
                        "{name}: shape {:?}, expected {shape:?}",
                        t.shape
                    )))
                }
                [] => return Err(Error::ShapeMismatch(format!("{name}: missing"))),
                _ => return Err(Error::ShapeMismatch(format!("{name}: duplicated"))),
            }
        }
        Self::from_file(TensorFile::from_parts(manifest, raw)?, arch)
    }

    /// Builds from a parsed container whose manifest already matches `arch`.
    fn from_file(file: TensorFile, arch: Architecture) -> Result<Self> {
        let get = |name: &str| -> Result<Vec<f32>> {
            file.tensor(name)
                .map(|(_, d)| d.to_vec())
                .ok_or_else(|| Error::ShapeMismatch(format!("{name}: missing")))
        };
        let mut convs = Vec::with_capacity(arch.blocks.len());
        for (i, b) in arch.blocks.iter().enumerate() {
            let n = i + 1;
            let inputs = arch.block_input(i);
            let w = get(&format!("conv{n}.weight"))?;
            let mut packed = vec![0.0; w.len()];
            for o in 0..b.channels {
                for c in 0..inputs {
                    for k in 0..b.kernel {
                        packed[(o * b.kernel + k) * inputs + c] = w[(o * inputs + c) * b.kernel + k];
                    }
                }
            }
            convs.push(Conv {
                kernel: b.kernel,
                inputs,
                outputs: b.channels,
                packed,
                bias: get(&format!("conv{n}.bias"))?,
                cln_gain: get(&format!("cln{n}.gain"))?,
                cln_bias: get(&format!("cln{n}.bias"))?,
            });
        }
        let last = convs.last().map_or(arch.input_channels, |c| c.outputs);
        let fc1 = Dense {
            inputs: last,
            outputs: arch.fc_hidden,
            weight: get("fc1.weight")?,
            bias: get("fc1.bias")?,
        };
        let fc2 = Dense {
            inputs: arch.fc_hidden,
            outputs: arch.outputs,
            weight: get("fc2.weight")?,
            bias: get("fc2.bias")?,
        };
        Ok(Self {
            arch,
            file,
            convs,
            fc1,
            fc2,
        })
    }

    /// Seeded random initialisation: weights uniform with variance
    /// `scale^2 / fan_in`, biases uniform in `±0.1 scale`, normalization gains
    /// near 1 and biases near 0.
    pub fn random(arch: Architecture, seed: u64, scale: f32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = arch.tensor_table();
        let data: Vec<Vec<f32>> = table
            .iter()
            .map(|(name, shape)| {
                let numel: usize = shape.iter().product();
                let mut uniform = |b: f32| -> Vec<f32> {
                    (0..numel).map(|_| rng.random_range(-1.0f32..1.0) * b).collect()
                };
                if name.ends_with(".weight") {
                    let fan_in: usize = shape[1..].iter().product();
                    uniform(scale * (3.0 / fan_in as f32).sqrt())
                } else if name.starts_with("cln") && name.ends_with(".gain") {
                    uniform(0.1).into_iter().map(|v| 1.0 + v).collect()
                } else if name.starts_with("cln") {
                    uniform(0.1)
                } else {
                    uniform(0.1 * scale)
                }
            })
            .collect();
        let file = TensorFile::pack(
            &arch.id,
            table
                .iter()
                .zip(&data)
                .map(|((n, s), d)| (n.as_str(), s.clone(), d.as_slice())),
        )
        .expect("table shapes match generated data");
        Self::from_file(file, arch).expect("generated file matches its architecture")
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn parameter_count(&self) -> usize {
        self.file.manifest.tensors.iter().map(|t| t.numel()).sum()
    }

    /// The underlying container, in the order the weights were stored.
    pub fn tensor_file(&self) -> &TensorFile {
        &self.file
    }

    /// Serialises to `NELW` bytes; `load` of the result reproduces these weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.file.to_bytes()
    }
}
