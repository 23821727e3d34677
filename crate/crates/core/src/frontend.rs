//! Learnable filter-and-sum front end: each channel passes through its
//! own bank of FIR filters, channel outputs are summed per filter, and
//! each filter's output is globally max-pooled in time and rectified.
//!
//! Steering delays are not represented explicitly; the filters absorb
//! them. Filters are stored per (channel, filter) with no weight
//! sharing.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Default filter length for a frame of `m` samples: the 630/882 ratio
/// carried over to other rates (at 16 kHz: M = 320 → N = 229).
pub fn filter_length_for(m: usize) -> usize {
    ((m as f64) * 630.0 / 882.0).round() as usize
}

/// Trainable front-end filter coefficients, laid out `[C][P][N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub channels: usize,
    pub filters_per_channel: usize,
    pub filter_length: usize,
    pub coefficients: Vec<f64>,
}

impl FilterBank {
    pub fn new(
        channels: usize,
        filters_per_channel: usize,
        filter_length: usize,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if coefficients.len() != channels * filters_per_channel * filter_length {
            return Err(Error::Dimension(format!(
                "filter bank {channels}×{filters_per_channel}×{filter_length} expects {} values, got {}",
                channels * filters_per_channel * filter_length,
                coefficients.len()
            )));
        }
        crate::tensor::ensure_finite(&coefficients, "filter bank")?;
        Ok(FilterBank {
            channels,
            filters_per_channel,
            filter_length,
            coefficients,
        })
    }

    /// Coefficients of filter `p` for channel `c` (0-based).
    pub fn filter(&self, c: usize, p: usize) -> &[f64] {
        let n = self.filter_length;
        let at = (c * self.filters_per_channel + p) * n;
        &self.coefficients[at..at + n]
    }

    pub fn as_tensor(&self) -> Tensor {
        Tensor::new(
            vec![self.channels, self.filters_per_channel, self.filter_length],
            self.coefficients.clone(),
        )
        .expect("bank dimensions validated at construction")
    }

    pub fn parameter_count(&self) -> usize {
        self.coefficients.len()
    }
}

/// Initialize a bank with coefficients uniform in [−a, a],
/// a = sqrt(6 / (C·N + P)); deterministic per seed.
pub fn init_bank(channels: usize, filters_per_channel: usize, filter_length: usize, seed: u64) -> FilterBank {
    assert!(channels >= 1 && filters_per_channel >= 1 && filter_length >= 1);
    let a = (6.0 / (channels as f64 * filter_length as f64 + filters_per_channel as f64)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients = (0..channels * filters_per_channel * filter_length)
        .map(|_| rng.gen_range(-a..a))
        .collect();
    FilterBank {
        channels,
        filters_per_channel,
        filter_length,
        coefficients,
    }
}

/// Bank whose multichannel output on channel-replicated input matches a
/// single-channel bank `g` exactly: h_c^p = g^p / C for every channel.
pub fn single_channel_equivalence_bank(g: &FilterBank, channels: usize) -> Result<FilterBank> {
    if g.channels != 1 {
        return Err(Error::InvalidInput(
            "equivalence bank is built from a single-channel bank".into(),
        ));
    }
    if channels == 1 {
        return Ok(g.clone());
    }
    let scaled: Vec<f64> = g.coefficients.iter().map(|&v| v / channels as f64).collect();
    let mut coefficients = Vec::with_capacity(channels * scaled.len());
    for _ in 0..channels {
        coefficients.extend_from_slice(&scaled);
    }
    FilterBank::new(channels, g.filters_per_channel, g.filter_length, coefficients)
}

/// Per-frame front-end activations.
#[derive(Debug, Clone)]
pub struct FrontEndOutput {
    /// Pre-pool filter-and-sum map, P × (M−N+1).
    pub y: Tensor,
    /// Pooled and rectified output, length P.
    pub z: Tensor,
}

/// Record the front end on a tape: y = filter-and-sum conv,
/// z = relu(global time max of y). Returns `(y, z)` with z reshaped to
/// a length-P vector.
pub fn build_frame_forward(tape: &mut Tape, frame: Var, bank: Var) -> Result<(Var, Var)> {
    let p = tape.value(bank).shape()[1];
    let y = tape.filter_sum_conv(frame, bank)?;
    let pooled = tape.global_max_pool(y)?;
    let rect = tape.relu(pooled)?;
    let z = tape.reshape(rect, vec![p])?;
    Ok((y, z))
}

/// Evaluate the front end on one frame outside any training graph.
pub fn forward_frame(frame: &Tensor, bank: &FilterBank) -> Result<FrontEndOutput> {
    if frame.shape().len() != 2 || frame.shape()[0] != bank.channels {
        return Err(Error::Dimension(format!(
            "frame shape {:?} does not match bank with {} channels",
            frame.shape(),
            bank.channels
        )));
    }
    let mut tape = Tape::new();
    let f = tape.leaf(frame.clone(), false)?;
    let b = tape.leaf(bank.as_tensor(), false)?;
    let (y, z) = build_frame_forward(&mut tape, f, b)?;
    Ok(FrontEndOutput {
        y: tape.value(y).clone(),
        z: tape.value(z).clone(),
    })
}

/// Dump a P×T map as plain text, one filter per line, values separated
/// by single spaces. The map reads as a time–frequency representation.
pub fn write_tf_map(path: impl AsRef<Path>, y: &Tensor) -> Result<()> {
    if y.shape().len() != 2 {
        return Err(Error::Dimension(format!(
            "time–frequency dump expects a 2-D map, got {:?}",
            y.shape()
        )));
    }
    let (rows, cols) = (y.shape()[0], y.shape()[1]);
    let mut out = std::fs::File::create(path)?;
    for r in 0..rows {
        let row = &y.data()[r * cols..(r + 1) * cols];
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
