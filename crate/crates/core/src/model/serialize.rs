//! Self-describing binary container for [`ModelParams`].
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            4 bytes  "RGMP"
//! version          u32      currently 1
//! mode             u8       0 single · 1 dummy-multichannel · 2 multichannel
//! channels         u32      configured input channels (C)
//! filters/channel  u32      P
//! filter length    u32      N (effective)
//! sample_rate      u32
//! freq_kernels     u32
//! freq_pool        u32
//! frame_embed_dim  u32
//! lstm_layers      u32
//! lstm_hidden      u32
//! input_seconds    f64 bits
//! segment_position u8       0 beginning · 1 middle
//! order_len        u32      followed by order_len × u32 (1-based)
//! tensor_count     u32
//! per tensor:      name_len u16 · name bytes · ndim u8 · ndim × u32 dims
//!                  · count × f64 bits
//! ```
//!
//! Save → load round-trips are bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ModelConfig, ModelMode, ModelParams};
use crate::audio::SegmentPosition;
use crate::error::{Error, Result};
use crate::frontend::FilterBank;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"RGMP";
const VERSION: u32 = 1;

fn mode_tag(mode: ModelMode) -> u8 {
    match mode {
        ModelMode::Single => 0,
        ModelMode::DummyMultichannel => 1,
        ModelMode::Multichannel => 2,
    }
}

fn mode_from_tag(tag: u8) -> Result<ModelMode> {
    match tag {
        0 => Ok(ModelMode::Single),
        1 => Ok(ModelMode::DummyMultichannel),
        2 => Ok(ModelMode::Multichannel),
        other => Err(Error::Parse(format!("unknown model mode tag {other}"))),
    }
}

fn push_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(t.shape().len() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize a model checkpoint.
pub fn save_model(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let c = &params.config;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(mode_tag(params.mode));
    for v in [
        c.channels as u32,
        c.filters_per_channel as u32,
        c.effective_filter_length() as u32,
        c.sample_rate,
        c.freq_kernels as u32,
        c.freq_pool as u32,
        c.frame_embed_dim as u32,
        c.lstm_layers as u32,
        c.lstm_hidden as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&c.input_seconds.to_le_bytes());
    out.push(match c.segment_position {
        SegmentPosition::Beginning => 0,
        SegmentPosition::Middle => 1,
    });
    out.extend_from_slice(&(params.channel_order.len() as u32).to_le_bytes());
    for &ix in &params.channel_order {
        out.extend_from_slice(&(ix as u32).to_le_bytes());
    }

    let bank_tensor = params.bank.as_tensor();
    let tensors: Vec<(String, &Tensor)> = std::iter::once(("front.bank".to_string(), &bank_tensor))
        .chain(params.backbone_tensors())
        .collect();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        push_tensor(&mut out, &name, t);
    }

    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at + n;
        if end > self.bytes.len() {
            return Err(Error::Parse("model file truncated".into()));
        }
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Load a checkpoint written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let bytes = fs::read(path.as_ref())?;
    let mut r = Reader {
        bytes: &bytes,
        at: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse("not a model checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "model container version {version} (supported: {VERSION})"
        )));
    }
    let mode = mode_from_tag(r.u8()?)?;
    let channels = r.u32()? as usize;
    let filters_per_channel = r.u32()? as usize;
    let filter_length = r.u32()? as usize;
    let sample_rate = r.u32()?;
    let freq_kernels = r.u32()? as usize;
    let freq_pool = r.u32()? as usize;
    let frame_embed_dim = r.u32()? as usize;
    let lstm_layers = r.u32()? as usize;
    let lstm_hidden = r.u32()? as usize;
    let input_seconds = r.f64()?;
    let segment_position = match r.u8()? {
        0 => SegmentPosition::Beginning,
        1 => SegmentPosition::Middle,
        other => return Err(Error::Parse(format!("bad segment position tag {other}"))),
    };
    let order_len = r.u32()? as usize;
    let mut channel_order = Vec::with_capacity(order_len);
    for _ in 0..order_len {
        channel_order.push(r.u32()? as usize);
    }

    let tensor_count = r.u32()? as usize;
    let expected_tensors = 7 + 3 * lstm_layers;
    if tensor_count != expected_tensors {
        return Err(Error::Parse(format!(
            "checkpoint has {tensor_count} tensors, expected {expected_tensors}"
        )));
    }
    let mut tensors = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name_len = r.u16()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Parse("tensor name is not UTF-8".into()))?;
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(r.f64()?);
        }
        tensors.push((name, Tensor::new(shape, data)?));
    }

    let config = ModelConfig {
        channels,
        channel_order: if mode == ModelMode::Multichannel {
            channel_order.clone()
        } else {
            // Single/dummy consume one source channel; the config order
            // starts from it.
            let mut order = channel_order.clone();
            order.extend((1..=channels).filter(|i| !channel_order.contains(i)));
            order
        },
        sample_rate,
        filters_per_channel,
        filter_length,
        freq_kernels,
        freq_pool,
        frame_embed_dim,
        lstm_layers,
        lstm_hidden,
        input_seconds,
        segment_position,
    };

    // Rebuild a zero-valued model of the right structure, then install
    // the stored tensors by name.
    let mut params = super::init_model(mode, &config, 0)?;
    params.channel_order = channel_order;

    let mut found_bank = false;
    for (name, tensor) in tensors {
        if name == "front.bank" {
            let s = tensor.shape();
            if s.len() != 3 {
                return Err(Error::Parse("front.bank must be 3-D".into()));
            }
            params.bank = FilterBank::new(s[0], s[1], s[2], tensor.data().to_vec())?;
            found_bank = true;
        } else {
            let slot = match name.as_str() {
                "freq.kernels" => &mut params.backbone.freq_kernels,
                "freq.bias" => &mut params.backbone.freq_bias,
                "fc.w" => &mut params.backbone.fc_w,
                "fc.b" => &mut params.backbone.fc_b,
                "head.w" => &mut params.backbone.head_w,
                "head.b" => &mut params.backbone.head_b,
                other => {
                    let Some(rest) = other.strip_prefix("lstm") else {
                        return Err(Error::Parse(format!("unknown tensor '{other}'")));
                    };
                    let (layer, field) = rest
                        .split_once('.')
                        .ok_or_else(|| Error::Parse(format!("unknown tensor '{other}'")))?;
                    let layer: usize = layer
                        .parse()
                        .map_err(|_| Error::Parse(format!("unknown tensor '{other}'")))?;
                    if layer >= params.backbone.lstm.len() {
                        return Err(Error::Parse(format!(
                            "tensor '{other}' exceeds {} LSTM layers",
                            params.backbone.lstm.len()
                        )));
                    }
                    match field {
                        "w_ih" => &mut params.backbone.lstm[layer].w_ih,
                        "w_hh" => &mut params.backbone.lstm[layer].w_hh,
                        "bias" => &mut params.backbone.lstm[layer].bias,
                        _ => return Err(Error::Parse(format!("unknown tensor '{other}'"))),
                    }
                }
            };
            if slot.shape() != tensor.shape() {
                return Err(Error::Parse(format!(
                    "tensor '{name}' has shape {:?}, expected {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            *slot = tensor;
        }
    }
    if !found_bank {
        return Err(Error::Parse("checkpoint is missing front.bank".into()));
    }
    Ok(params)
}
