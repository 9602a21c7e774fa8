use crate::erb::N_BANDS;

/// Identifier written into weight files for the standard generator.
pub const NELE_G_V1: &str = "nele-g-v1";
/// Exact parameter count of [`Architecture::nele_g_v1`].
pub const NELE_G_V1_PARAMS: usize = 2_093_120;
pub const LRELU_SLOPE: f32 = 0.3;
/// Variance floor of cumulative layer normalization.
pub const CLN_VAR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlock {
    pub kernel: usize,
    pub channels: usize,
}

/// Layer table of a causal CNN generator: conv blocks (conv, cLN, LReLU),
/// then FC, LReLU, FC and the bounded exponential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub id: String,
    pub input_channels: usize,
    pub blocks: Vec<ConvBlock>,
    pub fc_hidden: usize,
    pub outputs: usize,
}

impl Architecture {
    pub fn nele_g_v1() -> Self {
        let block = |kernel, channels| ConvBlock { kernel, channels };
        Self {
            id: NELE_G_V1.to_string(),
            input_channels: 2 * N_BANDS,
            blocks: vec![
                block(5, 256),
                block(7, 256),
                block(7, 256),
                block(7, 256),
                block(7, 256),
                block(5, 64),
            ],
            fc_hidden: 64,
            outputs: N_BANDS,
        }
    }

    /// Features per stream; the input is speech and noise features concatenated.
    pub fn features(&self) -> usize {
        self.input_channels / 2
    }

    /// Input channels of block `i`.
    pub fn block_input(&self, i: usize) -> usize {
        if i == 0 {
            self.input_channels
        } else {
            self.blocks[i - 1].channels
        }
    }

    fn last_channels(&self) -> usize {
        self.blocks.last().map_or(self.input_channels, |b| b.channels)
    }

    /// Ordered `(name, shape)` table every weight file must match.
    /// Conv kernels are `[out, in, k]`, tap `k - 1` multiplying the newest frame;
    /// FC matrices are `[out, in]`.
    pub fn tensor_table(&self) -> Vec<(String, Vec<usize>)> {
        let mut t = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let n = i + 1;
            t.push((format!("conv{n}.weight"), vec![b.channels, self.block_input(i), b.kernel]));
            t.push((format!("conv{n}.bias"), vec![b.channels]));
            t.push((format!("cln{n}.gain"), vec![b.channels]));
            t.push((format!("cln{n}.bias"), vec![b.channels]));
        }
        t.push(("fc1.weight".into(), vec![self.fc_hidden, self.last_channels()]));
        t.push(("fc1.bias".into(), vec![self.fc_hidden]));
        t.push(("fc2.weight".into(), vec![self.outputs, self.fc_hidden]));
        t.push(("fc2.bias".into(), vec![self.outputs]));
        t
    }

    pub fn parameter_count(&self) -> usize {
        self.tensor_table()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    /// Past frames an output row can depend on when normalization carries no
    /// memory: the sum of `kernel - 1` over blocks.
    pub fn lookback(&self) -> usize {
        self.blocks.iter().map(|b| b.kernel - 1).sum()
    }

    /// Floating-point operations per second at one multiply and one add per
    /// weight per frame.
    pub fn flops_per_second(&self, frame_secs: f64) -> f64 {
        2.0 * self.parameter_count() as f64 / frame_secs
    }
}
