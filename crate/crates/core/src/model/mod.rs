//! Everything after the front end: frequency convolution over the
//! filter axis, pooling, the per-frame embedding, a three-layer LSTM
//! over the frame sequence, and the classification head — plus the
//! parameter container that ties the front end and backbone together.

mod serialize;

pub use serialize::{load_model, save_model};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::audio::{frame, select_channels, select_segment, replicate_channels, AudioClip, FrameBatch, SegmentPosition};
use crate::error::{Error, Result};
use crate::frontend::{build_frame_forward, filter_length_for, init_bank, FilterBank};
use crate::rng::derive_seed;
use crate::tensor::{Tape, Tensor, Var};

/// How input channels are presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelMode {
    /// Only the first configured channel is fed (C = 1).
    Single,
    /// The first channel replicated C times; same architecture and
    /// parameter count as `Multichannel`, no spatial information.
    DummyMultichannel,
    /// All configured channels in the configured order.
    Multichannel,
}

impl ModelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Single => "single",
            ModelMode::DummyMultichannel => "dummy-multichannel",
            ModelMode::Multichannel => "multichannel",
        }
    }
}

impl std::str::FromStr for ModelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ModelMode::Single),
            "dummy-multichannel" | "dummy" => Ok(ModelMode::DummyMultichannel),
            "multichannel" | "multi" => Ok(ModelMode::Multichannel),
            other => Err(Error::Config(format!("unknown model mode '{other}'"))),
        }
    }
}

/// Frequency-convolution kernel width; a narrower filter axis cannot
/// be consumed, so P ≥ 8 is a hard requirement.
pub const FREQ_KERNEL_WIDTH: usize = 8;

/// Structural hyperparameters. Defaults follow the reference
/// architecture at 44.1 kHz; [`ModelConfig::desk_scale`] is the reduced
/// configuration used for CPU-sized experiments.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Input channels consumed in `Multichannel`/`DummyMultichannel` modes.
    pub channels: usize,
    /// 1-based channel pickup order; prefixes define channel ablations.
    pub channel_order: Vec<usize>,
    pub sample_rate: u32,
    /// Front-end filters per channel (P).
    pub filters_per_channel: usize,
    /// Front-end filter length (N); 0 means derive from the frame length.
    pub filter_length: usize,
    /// Frequency-convolution kernel count.
    pub freq_kernels: usize,
    /// Non-overlapping frequency pool size.
    pub freq_pool: usize,
    /// Per-frame embedding width.
    pub frame_embed_dim: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub input_seconds: f64,
    pub segment_position: SegmentPosition,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            channels: 2,
            channel_order: vec![1, 2],
            sample_rate: 44_100,
            filters_per_channel: 64,
            filter_length: 0,
            freq_kernels: 256,
            freq_pool: 3,
            frame_embed_dim: 256,
            lstm_layers: 3,
            lstm_hidden: 832,
            input_seconds: 1.0,
            segment_position: SegmentPosition::Beginning,
        }
    }
}

impl ModelConfig {
    /// Reduced configuration for desktop-CPU experiments: 16 kHz input,
    /// 16 front-end filters per channel, 128 LSTM units. Backbone widths
    /// are unchanged.
    pub fn desk_scale(channels: usize) -> Self {
        ModelConfig {
            channels,
            channel_order: (1..=channels).collect(),
            sample_rate: 16_000,
            filters_per_channel: 16,
            lstm_hidden: 128,
            ..ModelConfig::default()
        }
    }

    /// 20 ms frame length at the configured rate.
    pub fn frame_length(&self) -> usize {
        crate::audio::frame_length(self.sample_rate)
    }

    /// Effective front-end filter length.
    pub fn effective_filter_length(&self) -> usize {
        if self.filter_length == 0 {
            filter_length_for(self.frame_length())
        } else {
            self.filter_length
        }
    }

    /// Width of the frequency-convolution output.
    pub fn freq_conv_width(&self) -> usize {
        self.filters_per_channel - FREQ_KERNEL_WIDTH + 1
    }

    /// Frequency pool window, clamped so narrow maps (small P) stay
    /// poolable: min(freq_pool, conv width).
    pub fn freq_pool_window(&self) -> usize {
        self.freq_pool.min(self.freq_conv_width())
    }

    pub fn pooled_width(&self) -> usize {
        let w = self.freq_pool_window();
        (self.freq_conv_width() - w) / w + 1
    }

    /// Flattened input width of the per-frame fully-connected layer.
    pub fn fc_input_dim(&self) -> usize {
        self.freq_kernels * self.pooled_width()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.channels > crate::audio::MAX_CHANNELS {
            return Err(Error::Config(format!(
                "channels must be 1..={}, got {}",
                crate::audio::MAX_CHANNELS,
                self.channels
            )));
        }
        if self.channel_order.len() < self.channels {
            return Err(Error::Config(format!(
                "channel order {:?} shorter than channel count {}",
                self.channel_order, self.channels
            )));
        }
        if self.filters_per_channel < FREQ_KERNEL_WIDTH {
            return Err(Error::Config(format!(
                "filters per channel must be ≥ {FREQ_KERNEL_WIDTH} so the frequency convolution fits, got {}",
                self.filters_per_channel
            )));
        }
        let m = self.frame_length();
        let n = self.effective_filter_length();
        if n == 0 || n >= m {
            return Err(Error::Config(format!(
                "filter length {n} must be in 1..{m} for valid convolution"
            )));
        }
        if self.lstm_layers == 0 || self.lstm_hidden == 0 {
            return Err(Error::Config("LSTM stack must be non-empty".into()));
        }
        if !(self.input_seconds > 0.0) {
            return Err(Error::Config("input length must be positive".into()));
        }
        Ok(())
    }
}

/// One LSTM layer's parameters (gate order `[i; f; g; o]`).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub bias: Tensor,
}

/// Everything after `z`: frequency convolution, per-frame FC, LSTM
/// stack, and the two-class head.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneParams {
    pub freq_kernels: Tensor,
    pub freq_bias: Tensor,
    pub fc_w: Tensor,
    pub fc_b: Tensor,
    pub lstm: Vec<LstmLayerParams>,
    pub head_w: Tensor,
    pub head_b: Tensor,
}

/// Complete trainable state plus the structural config and input-channel
/// contract needed to score a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mode: ModelMode,
    pub config: ModelConfig,
    /// 1-based channel order actually consumed from input clips.
    pub channel_order: Vec<usize>,
    pub bank: FilterBank,
    pub backbone: BackboneParams,
}

fn uniform_tensor(shape: Vec<usize>, bound: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape, data).expect("shape/data consistent")
}

/// Build a freshly initialized model. Weights are uniform fan-based;
/// biases are zero except the LSTM forget gates, which start at 1.
pub fn init_model(mode: ModelMode, config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let input_channels = match mode {
        ModelMode::Single => 1,
        _ => config.channels,
    };
    let channel_order = match mode {
        ModelMode::Single | ModelMode::DummyMultichannel => vec![config.channel_order[0]],
        ModelMode::Multichannel => config.channel_order[..config.channels].to_vec(),
    };
    let p = config.filters_per_channel;
    let n = config.effective_filter_length();
    let k = config.freq_kernels;
    let h = config.lstm_hidden;
    let embed = config.frame_embed_dim;
    let fc_in = config.fc_input_dim();

    let bank = init_bank(input_channels, p, n, derive_seed(seed, 0));

    let mut stream = 1u64;
    let mut next_rng = || {
        let r = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
        stream += 1;
        r
    };

    let a_freq = (6.0 / (FREQ_KERNEL_WIDTH as f64 + (k * FREQ_KERNEL_WIDTH) as f64)).sqrt();
    let freq_kernels = uniform_tensor(vec![k, FREQ_KERNEL_WIDTH], a_freq, &mut next_rng());
    let freq_bias = Tensor::zeros(vec![k]);

    let a_fc = (6.0 / (fc_in + embed) as f64).sqrt();
    let fc_w = uniform_tensor(vec![embed, fc_in], a_fc, &mut next_rng());
    let fc_b = Tensor::zeros(vec![embed]);

    let mut lstm = Vec::with_capacity(config.lstm_layers);
    for layer in 0..config.lstm_layers {
        let in_dim = if layer == 0 { embed } else { h };
        let a_ih = (6.0 / (in_dim + h) as f64).sqrt();
        let a_hh = (6.0 / (2 * h) as f64).sqrt();
        let w_ih = uniform_tensor(vec![4 * h, in_dim], a_ih, &mut next_rng());
        let w_hh = uniform_tensor(vec![4 * h, h], a_hh, &mut next_rng());
        let mut bias = vec![0.0; 4 * h];
        bias[h..2 * h].fill(1.0);
        lstm.push(LstmLayerParams {
            w_ih,
            w_hh,
            bias: Tensor::vector(&bias),
        });
    }

    let a_head = (6.0 / (h + 2) as f64).sqrt();
    let head_w = uniform_tensor(vec![2, h], a_head, &mut next_rng());
    let head_b = Tensor::zeros(vec![2]);

    Ok(ModelParams {
        mode,
        config: config.clone(),
        channel_order,
        bank,
        backbone: BackboneParams {
            freq_kernels,
            freq_bias,
            fc_w,
            fc_b,
            lstm,
            head_w,
            head_b,
        },
    })
}

impl ModelParams {
    /// Flat parameter vector: bank coefficients followed by the backbone
    /// tensors in declaration order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.parameter_count());
        flat.extend_from_slice(&self.bank.coefficients);
        for (_, t) in self.backbone_tensors() {
            flat.extend_from_slice(t.data());
        }
        flat
    }

    /// Overwrite all parameters from a flat vector produced by
    /// [`ModelParams::flatten`]. Round-trips are exact.
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::Dimension(format!(
                "flat view has {} values, model expects {}",
                flat.len(),
                self.parameter_count()
            )));
        }
        let mut at = self.bank.coefficients.len();
        self.bank.coefficients.copy_from_slice(&flat[..at]);
        for t in self.backbone_tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.bank.coefficients.len()
            + self
                .backbone_tensors()
                .iter()
                .map(|(_, t)| t.len())
                .sum::<usize>()
    }

    /// Named backbone tensors in canonical order.
    pub fn backbone_tensors(&self) -> Vec<(String, &Tensor)> {
        let b = &self.backbone;
        let mut out = vec![
            ("freq.kernels".to_string(), &b.freq_kernels),
            ("freq.bias".to_string(), &b.freq_bias),
            ("fc.w".to_string(), &b.fc_w),
            ("fc.b".to_string(), &b.fc_b),
        ];
        for (i, layer) in b.lstm.iter().enumerate() {
            out.push((format!("lstm{i}.w_ih"), &layer.w_ih));
            out.push((format!("lstm{i}.w_hh"), &layer.w_hh));
            out.push((format!("lstm{i}.bias"), &layer.bias));
        }
        out.push(("head.w".to_string(), &b.head_w));
        out.push(("head.b".to_string(), &b.head_b));
        out
    }

    fn backbone_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let b = &mut self.backbone;
        let mut out: Vec<&mut Tensor> = vec![
            &mut b.freq_kernels,
            &mut b.freq_bias,
            &mut b.fc_w,
            &mut b.fc_b,
        ];
        for layer in &mut b.lstm {
            out.push(&mut layer.w_ih);
            out.push(&mut layer.w_hh);
            out.push(&mut layer.bias);
        }
        out.push(&mut b.head_w);
        out.push(&mut b.head_b);
        out
    }

    /// Digest of the layer names and shapes (not values, not mode): two
    /// models with identical structure hash identically.
    pub fn architecture_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!(
            "bank:{}x{}x{};",
            self.bank.channels, self.bank.filters_per_channel, self.bank.filter_length
        ));
        for (name, t) in self.backbone_tensors() {
            hasher.update(format!("{name}:{:?};", t.shape()));
        }
        format!("{:x}", hasher.finalize())
    }
}

/// Parameter leaves bound onto a tape, in flatten order.
pub struct BoundParams {
    pub bank: Var,
    pub leaves: Vec<Var>,
}

impl BoundParams {
    /// Concatenate per-leaf gradients into a flat vector aligned with
    /// [`ModelParams::flatten`]. Leaves without a gradient contribute zeros.
    pub fn flat_grads(&self, grads: &[Option<Vec<f64>>], tape: &Tape) -> Vec<f64> {
        let mut out = Vec::new();
        for &var in &self.leaves {
            match &grads[var.index()] {
                Some(g) => out.extend_from_slice(g),
                None => out.extend(std::iter::repeat(0.0).take(tape.value(var).len())),
            }
        }
        out
    }
}

/// Bind all parameters as tape leaves.
pub fn bind_params(tape: &mut Tape, params: &ModelParams, trainable: bool) -> Result<BoundParams> {
    let bank = tape.leaf(params.bank.as_tensor(), trainable)?;
    let mut leaves = vec![bank];
    for (_, t) in params.backbone_tensors() {
        leaves.push(tape.leaf(t.clone(), trainable)?);
    }
    Ok(BoundParams { bank, leaves })
}

/// Backbone leaf indices within [`BoundParams::leaves`] (after the bank).
struct BackboneVars<'a> {
    vars: &'a [Var],
    lstm_layers: usize,
}

impl<'a> BackboneVars<'a> {
    fn new(bound: &'a BoundParams, lstm_layers: usize) -> Self {
        BackboneVars {
            vars: &bound.leaves[1..],
            lstm_layers,
        }
    }
    fn freq_kernels(&self) -> Var {
        self.vars[0]
    }
    fn freq_bias(&self) -> Var {
        self.vars[1]
    }
    fn fc_w(&self) -> Var {
        self.vars[2]
    }
    fn fc_b(&self) -> Var {
        self.vars[3]
    }
    fn lstm(&self, layer: usize) -> (Var, Var, Var) {
        let at = 4 + 3 * layer;
        (self.vars[at], self.vars[at + 1], self.vars[at + 2])
    }
    fn head_w(&self) -> Var {
        self.vars[4 + 3 * self.lstm_layers]
    }
    fn head_b(&self) -> Var {
        self.vars[5 + 3 * self.lstm_layers]
    }
}

/// Record the per-frame embedding on a tape: frequency convolution over
/// the filter axis → max pool → flatten → FC → ReLU.
fn build_frame_embed(
    tape: &mut Tape,
    z: Var,
    vars: &BackboneVars,
    config: &ModelConfig,
) -> Result<Var> {
    let conv = tape.conv_bank(z, vars.freq_kernels(), vars.freq_bias())?;
    let w = config.freq_pool_window();
    let pooled = tape.max_pool(conv, w, w)?;
    let flat = tape.reshape(pooled, vec![config.fc_input_dim()])?;
    let fc = tape.linear(flat, vars.fc_w(), vars.fc_b())?;
    tape.relu(fc)
}

/// Record the whole network for one clip's frames; returns the logit
/// node. Frames enter as non-trainable leaves.
pub fn build_logits(
    tape: &mut Tape,
    params: &ModelParams,
    frames: &FrameBatch,
    bound: &BoundParams,
) -> Result<Var> {
    if frames.channel_count != params.bank.channels {
        return Err(Error::Config(format!(
            "frames have {} channels, model expects {}",
            frames.channel_count, params.bank.channels
        )));
    }
    if frames.frame_count == 0 {
        return Err(Error::InvalidInput("no frames to classify".into()));
    }
    let config = &params.config;
    let vars = BackboneVars::new(bound, config.lstm_layers);

    let mut embeddings = Vec::with_capacity(frames.frame_count);
    for f in 0..frames.frame_count {
        let frame = tape.leaf(frames.frame(f), false)?;
        let (_, z) = build_frame_forward(tape, frame, bound.bank)?;
        embeddings.push(build_frame_embed(tape, z, &vars, config)?);
    }

    let h_dim = config.lstm_hidden;
    let zero_state = Tensor::zeros(vec![h_dim]);
    let mut states: Vec<(Var, Var)> = (0..config.lstm_layers)
        .map(|_| -> Result<(Var, Var)> {
            let h = tape.leaf(zero_state.clone(), false)?;
            let c = tape.leaf(zero_state.clone(), false)?;
            Ok((h, c))
        })
        .collect::<Result<_>>()?;

    let mut last_top_h = states[config.lstm_layers - 1].0;
    for &embed in &embeddings {
        let mut x = embed;
        for (layer, state) in states.iter_mut().enumerate() {
            let (w_ih, w_hh, bias) = vars.lstm(layer);
            let (h, c) = tape.lstm_cell(x, state.0, state.1, w_ih, w_hh, bias)?;
            *state = (h, c);
            x = h;
        }
        last_top_h = x;
    }

    tape.linear(last_top_h, vars.head_w(), vars.head_b())
}

/// Per-frame embedding as a standalone evaluation: z (length P) → o
/// (length `frame_embed_dim`).
pub fn frame_embed(z: &Tensor, params: &ModelParams) -> Result<Tensor> {
    if z.shape() != [params.config.filters_per_channel] {
        return Err(Error::Dimension(format!(
            "frame embedding expects z of length {}, got {:?}",
            params.config.filters_per_channel,
            z.shape()
        )));
    }
    let mut tape = Tape::new();
    let bound = bind_params(&mut tape, params, false)?;
    let vars = BackboneVars::new(&bound, params.config.lstm_layers);
    let zv = tape.leaf(z.clone(), false)?;
    let o = build_frame_embed(&mut tape, zv, &vars, &params.config)?;
    Ok(tape.value(o).clone())
}

/// Classify a sequence of per-frame embeddings: three stacked LSTM
/// layers from zero states, head applied to the last frame's top hidden
/// state. Returns raw logits.
pub fn sequence_classify(o_seq: &[Tensor], params: &ModelParams) -> Result<Tensor> {
    if o_seq.is_empty() {
        return Err(Error::InvalidInput("empty embedding sequence".into()));
    }
    let mut tape = Tape::new();
    let bound = bind_params(&mut tape, params, false)?;
    let vars = BackboneVars::new(&bound, params.config.lstm_layers);
    let h_dim = params.config.lstm_hidden;
    let zero_state = Tensor::zeros(vec![h_dim]);
    let mut states: Vec<(Var, Var)> = (0..params.config.lstm_layers)
        .map(|_| -> Result<(Var, Var)> {
            let h = tape.leaf(zero_state.clone(), false)?;
            let c = tape.leaf(zero_state.clone(), false)?;
            Ok((h, c))
        })
        .collect::<Result<_>>()?;
    let mut top = states[params.config.lstm_layers - 1].0;
    for o in o_seq {
        let mut x = tape.leaf(o.clone(), false)?;
        for (layer, state) in states.iter_mut().enumerate() {
            let (w_ih, w_hh, bias) = vars.lstm(layer);
            let (h, c) = tape.lstm_cell(x, state.0, state.1, w_ih, w_hh, bias)?;
            *state = (h, c);
            x = h;
        }
        top = x;
    }
    let logits = tape.linear(top, vars.head_w(), vars.head_b())?;
    Ok(tape.value(logits).clone())
}

/// Apply the model's channel contract to a raw clip and cut/frame the
/// configured input segment.
pub fn prepare_input(clip: &AudioClip, params: &ModelParams) -> Result<FrameBatch> {
    if clip.sample_rate != params.config.sample_rate {
        return Err(Error::Config(format!(
            "clip sample rate {} does not match model rate {}",
            clip.sample_rate, params.config.sample_rate
        )));
    }
    let max_index = params.channel_order.iter().copied().max().unwrap_or(1);
    if clip.channel_count() < max_index {
        return Err(Error::Config(format!(
            "clip has {} channels, model needs channel {}",
            clip.channel_count(),
            max_index
        )));
    }
    let arranged = match params.mode {
        ModelMode::Single => select_channels(clip, &params.channel_order)?,
        ModelMode::DummyMultichannel => {
            let first = select_channels(clip, &params.channel_order)?;
            replicate_channels(&first, params.config.channels)?
        }
        ModelMode::Multichannel => select_channels(clip, &params.channel_order)?,
    };
    let segment = select_segment(
        &arranged,
        params.config.input_seconds,
        params.config.segment_position,
    )?;
    frame(&segment)
}

/// Replay probability for a clip: softmax(logits)[replayed].
pub fn score(clip: &AudioClip, params: &ModelParams) -> Result<f64> {
    let frames = prepare_input(clip, params)?;
    score_frames(&frames, params)
}

/// Replay probability for pre-framed input.
pub fn score_frames(frames: &FrameBatch, params: &ModelParams) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = bind_params(&mut tape, params, false)?;
    let logits = build_logits(&mut tape, params, frames, &bound)?;
    Ok(replay_probability(tape.value(logits).data()))
}

/// Stable softmax over two logits, returning the replayed-class mass.
pub fn replay_probability(logits: &[f64]) -> f64 {
    debug_assert_eq!(logits.len(), 2);
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    e1 / (e0 + e1)
}

/// Actual tensor shapes traversed by one frame of forward computation,
/// for asserting the dimension chain.
pub fn probe_shapes(params: &ModelParams) -> Result<Vec<(String, Vec<usize>)>> {
    let config = &params.config;
    let m = config.frame_length();
    let c = params.bank.channels;
    let mut tape = Tape::new();
    let bound = bind_params(&mut tape, params, false)?;
    let vars = BackboneVars::new(&bound, config.lstm_layers);

    let frame = tape.leaf(Tensor::zeros(vec![c, m]), false)?;
    let (y, z) = build_frame_forward(&mut tape, frame, bound.bank)?;
    let conv = tape.conv_bank(z, vars.freq_kernels(), vars.freq_bias())?;
    let w = config.freq_pool_window();
    let pooled = tape.max_pool(conv, w, w)?;
    let flat = tape.reshape(pooled, vec![config.fc_input_dim()])?;
    let fc = tape.linear(flat, vars.fc_w(), vars.fc_b())?;
    let o = tape.relu(fc)?;

    let h_dim = config.lstm_hidden;
    let zero = Tensor::zeros(vec![h_dim]);
    let mut x = o;
    for layer in 0..config.lstm_layers {
        let h0 = tape.leaf(zero.clone(), false)?;
        let c0 = tape.leaf(zero.clone(), false)?;
        let (w_ih, w_hh, bias) = vars.lstm(layer);
        let (h, _) = tape.lstm_cell(x, h0, c0, w_ih, w_hh, bias)?;
        x = h;
    }
    let logits = tape.linear(x, vars.head_w(), vars.head_b())?;

    let probe = |name: &str, v: Var| (name.to_string(), tape.value(v).shape().to_vec());
    Ok(vec![
        probe("frame", frame),
        probe("front.y", y),
        probe("front.z", z),
        probe("freq.conv", conv),
        probe("freq.pool", pooled),
        probe("frame.embed", o),
        probe("lstm.top_h", x),
        probe("logits", logits),
    ])
}
