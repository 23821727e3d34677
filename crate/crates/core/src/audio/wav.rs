//! RIFF/WAVE reader and writer for integer PCM (16- or 32-bit).
//!
//! IEEE-float WAV is rejected: the corpus formats are integer PCM and
//! 32-bit files are interpreted as integers scaled by 2³¹.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn read_u16(bytes: &[u8], at: usize) -> Result<u16> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| parse_err("truncated WAV header"))
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| parse_err("truncated WAV header"))
}

/// Load an integer-PCM WAV file into an [`AudioClip`], scaling samples
/// by 1/2^(bit_depth−1).
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(parse_err(format!(
            "{}: not a RIFF/WAVE file",
            path.display()
        )));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = read_u32(&bytes, at + 4)? as usize;
        let body_start = at + 8;
        if body_start + size > bytes.len() {
            return Err(parse_err(format!(
                "{}: chunk '{}' overruns file",
                path.display(),
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(parse_err("fmt chunk too small"));
                }
                fmt = Some((
                    read_u16(&bytes, body_start)?,
                    read_u16(&bytes, body_start + 2)?,
                    read_u32(&bytes, body_start + 4)?,
                    read_u16(&bytes, body_start + 14)?,
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_start + size]),
            _ => {}
        }
        // Chunk bodies are word-aligned.
        at = body_start + size + (size & 1);
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| parse_err("missing fmt chunk"))?;
    let data = data.ok_or_else(|| parse_err("missing data chunk"))?;
    if format != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "WAV format tag {format} (only integer PCM is supported)"
        )));
    }
    if bits != 16 && bits != 32 {
        return Err(Error::UnsupportedFormat(format!(
            "{bits}-bit PCM (only 16 and 32 bit are supported)"
        )));
    }
    let c = channels as usize;
    if c == 0 || c > super::MAX_CHANNELS {
        return Err(Error::UnsupportedFormat(format!("{c} channels")));
    }

    let bytes_per_sample = bits as usize / 8;
    let block = bytes_per_sample * c;
    let n_frames = data.len() / block;
    let scale = 1.0 / (1u64 << (bits - 1)) as f64;

    let mut out = vec![Vec::with_capacity(n_frames); c];
    for f in 0..n_frames {
        for (ch, dst) in out.iter_mut().enumerate() {
            let s = f * block + ch * bytes_per_sample;
            let v = match bits {
                16 => i64::from(i16::from_le_bytes([data[s], data[s + 1]])),
                _ => i64::from(i32::from_le_bytes([
                    data[s],
                    data[s + 1],
                    data[s + 2],
                    data[s + 3],
                ])),
            };
            dst.push(v as f64 * scale);
        }
    }

    let mut clip = AudioClip::new(out, sample_rate, bits)?;
    clip.source_path = Some(path.to_path_buf());
    Ok(clip)
}

/// Write a clip as interleaved integer PCM. Samples are rounded to the
/// nearest representable level and clamped to full scale, so a
/// write → load → write cycle is byte-identical.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let bits = clip.bit_depth;
    if bits != 16 && bits != 32 {
        return Err(Error::UnsupportedFormat(format!(
            "{bits}-bit output (only 16 and 32 bit are supported)"
        )));
    }
    let c = clip.channel_count();
    let n = clip.len();
    let bytes_per_sample = bits as usize / 8;
    let block = (c * bytes_per_sample) as u16;
    let data_size = (n * c * bytes_per_sample) as u32;
    let byte_rate = clip.sample_rate * u32::from(block);

    let mut out = Vec::with_capacity(44 + data_size as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&(c as u16).to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());

    let full = (1u64 << (bits - 1)) as f64;
    for f in 0..n {
        for ch in &clip.channels {
            let q = (ch[f] * full).round().clamp(-full, full - 1.0);
            match bits {
                16 => out.extend_from_slice(&(q as i16).to_le_bytes()),
                _ => out.extend_from_slice(&(q as i32).to_le_bytes()),
            }
        }
    }

    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}
