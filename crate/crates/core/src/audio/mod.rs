//! Multi-channel audio ingestion: WAV loading, segment selection,
//! non-overlapped framing, and channel manipulation.

pub mod manifest;
mod wav;

pub use manifest::{load_entry, read_manifest, write_manifest, Label, ManifestEntry, Split};
pub use wav::{load_wav, write_wav};

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAX_CHANNELS: usize = 8;

/// Sample rates used by the array presets; other rates are accepted
/// but flagged by [`AudioClip::is_preset_rate`].
pub const PRESET_SAMPLE_RATES: [u32; 2] = [16_000, 44_100];

/// A multi-channel waveform in [−1, 1) with provenance metadata.
#[derive(Debug, Clone)]
pub struct AudioClip {
    /// Per-channel sample vectors, all of equal length.
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
    pub bit_depth: u16,
    pub label: Option<Label>,
    pub device_id: String,
    pub speaker_id: String,
    pub source_path: Option<PathBuf>,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32, bit_depth: u16) -> Result<Self> {
        let clip = AudioClip {
            channels,
            sample_rate,
            bit_depth,
            label: None,
            device_id: String::new(),
            speaker_id: String::new(),
            source_path: None,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels.len();
        if c == 0 || c > MAX_CHANNELS {
            return Err(Error::InvalidInput(format!(
                "clip must have 1..={MAX_CHANNELS} channels, got {c}"
            )));
        }
        let len = self.channels[0].len();
        if self.channels.iter().any(|ch| ch.len() != len) {
            return Err(Error::InvalidInput("channels differ in length".into()));
        }
        for ch in &self.channels {
            for &s in ch {
                if !s.is_finite() || s.abs() >= 1.0 + 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "sample {s} outside [−1, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn is_preset_rate(&self) -> bool {
        PRESET_SAMPLE_RATES.contains(&self.sample_rate)
    }

    fn with_channels(&self, channels: Vec<Vec<f64>>) -> AudioClip {
        AudioClip {
            channels,
            sample_rate: self.sample_rate,
            bit_depth: self.bit_depth,
            label: self.label,
            device_id: self.device_id.clone(),
            speaker_id: self.speaker_id.clone(),
            source_path: self.source_path.clone(),
        }
    }
}

/// Where [`select_segment`] anchors the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentPosition {
    Beginning,
    Middle,
}

impl std::str::FromStr for SegmentPosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beginning" => Ok(SegmentPosition::Beginning),
            "middle" => Ok(SegmentPosition::Middle),
            other => Err(Error::InvalidInput(format!(
                "unknown segment position '{other}'"
            ))),
        }
    }
}

/// Cut a fixed-duration window out of a clip. `Beginning` takes the
/// first `length_s` seconds, `Middle` a window of the same length
/// centered at T/2. Clips shorter than requested are zero-padded at
/// the end to exactly `length_s`.
pub fn select_segment(clip: &AudioClip, length_s: f64, position: SegmentPosition) -> Result<AudioClip> {
    if clip.is_empty() {
        return Err(Error::InvalidInput("cannot segment an empty clip".into()));
    }
    if !(length_s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "segment length must be positive, got {length_s}"
        )));
    }
    let want = (length_s * clip.sample_rate as f64).round() as usize;
    let have = clip.len();
    let start = match position {
        SegmentPosition::Beginning => 0,
        SegmentPosition::Middle => have.saturating_sub(want) / 2,
    };
    let channels = clip
        .channels
        .iter()
        .map(|ch| {
            let end = (start + want).min(have);
            let mut seg = ch[start..end].to_vec();
            seg.resize(want, 0.0);
            seg
        })
        .collect();
    Ok(clip.with_channels(channels))
}

/// Non-overlapped frames cut from a clip segment.
#[derive(Debug, Clone)]
pub struct FrameBatch {
    /// Flat frame data, laid out frame-major: (F, C, M).
    data: Vec<f64>,
    pub frame_count: usize,
    pub channel_count: usize,
    pub frame_length: usize,
    pub sample_rate: u32,
    pub label: Option<Label>,
}

impl FrameBatch {
    /// One frame as a C×M tensor.
    pub fn frame(&self, f: usize) -> Tensor {
        let size = self.channel_count * self.frame_length;
        Tensor::new(
            vec![self.channel_count, self.frame_length],
            self.data[f * size..(f + 1) * size].to_vec(),
        )
        .expect("frame layout is consistent by construction")
    }
}

/// Frame length for a 20 ms window at the given rate.
pub fn frame_length(sample_rate: u32) -> usize {
    (0.020 * sample_rate as f64).round() as usize
}

/// Split a segment into floor(T/M) non-overlapping 20 ms frames,
/// dropping any residual tail.
pub fn frame(clip: &AudioClip) -> Result<FrameBatch> {
    let m = frame_length(clip.sample_rate);
    let t = clip.len();
    if t < m {
        return Err(Error::InvalidInput(format!(
            "segment of {t} samples is shorter than one {m}-sample frame"
        )));
    }
    let f = t / m;
    let c = clip.channel_count();
    let mut data = Vec::with_capacity(f * c * m);
    for fi in 0..f {
        for ch in &clip.channels {
            data.extend_from_slice(&ch[fi * m..(fi + 1) * m]);
        }
    }
    Ok(FrameBatch {
        data,
        frame_count: f,
        channel_count: c,
        frame_length: m,
        sample_rate: clip.sample_rate,
        label: clip.label,
    })
}

/// Replace a clip with `count` identical copies of its first channel.
pub fn replicate_channels(clip: &AudioClip, count: usize) -> Result<AudioClip> {
    if count == 0 {
        return Err(Error::InvalidInput("channel count must be ≥ 1".into()));
    }
    if count > MAX_CHANNELS {
        return Err(Error::InvalidInput(format!(
            "channel count {count} exceeds {MAX_CHANNELS}"
        )));
    }
    if clip.channels.is_empty() {
        return Err(Error::InvalidInput("clip has no channels".into()));
    }
    let first = clip.channels[0].clone();
    Ok(clip.with_channels(vec![first; count]))
}

/// Reorder or subset channels. Indices are 1-based to match the
/// microphone numbering on the array diagrams.
pub fn select_channels(clip: &AudioClip, indices: &[usize]) -> Result<AudioClip> {
    if indices.is_empty() {
        return Err(Error::InvalidInput("channel index list is empty".into()));
    }
    let c = clip.channel_count();
    let mut channels = Vec::with_capacity(indices.len());
    for &ix in indices {
        if ix == 0 || ix > c {
            return Err(Error::InvalidInput(format!(
                "channel index {ix} out of range 1..={c}"
            )));
        }
        channels.push(clip.channels[ix - 1].clone());
    }
    Ok(clip.with_channels(channels))
}

#[cfg(test)]
mod tests;
