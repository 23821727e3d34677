//! Synthetic microphone-array corpus: spatialized speech-like sources
//! with a loudspeaker coloration model for replayed clips, so the
//! detector's directional claims are testable without recorded data.
//!
//! Genuine clips place the talker far from the array; replayed clips
//! re-radiate a colorated source from a loudspeaker position close to
//! it. Per-clip randomness is keyed by (master seed, clip index), so
//! regeneration is byte-identical.

mod geometry;
mod source;

pub use geometry::{distance, ArrayGeometry, GeometryPreset};
pub use source::{
    band_pass_fir, coloration_fir, fir_filter, fractional_delay, rms, synth_source,
    synth_source_with_profile, tilt_eq, VoiceProfile, LEAD_IN_S,
};

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::audio::{write_manifest, AudioClip, Label, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng};

/// Speed of sound used throughout, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Everything needed to realize one clip from a mono source.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    /// Talker (genuine) or loudspeaker (replayed) position, meters.
    pub source_position: [f64; 3],
    pub speed_of_sound: f64,
    /// Per-channel white-noise level; `None` disables noise.
    pub snr_db: Option<f64>,
    pub label: Label,
    /// Loudspeaker coloration FIR applied to replayed sources only;
    /// `None` is the identity (null-test configuration).
    pub coloration: Option<Vec<f64>>,
    /// One noise stream shared by all channels instead of independent
    /// streams.
    pub correlated_noise: bool,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.source_position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("source position is not finite".into()));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidInput(
                    "SNR must be finite (use None to disable noise)".into(),
                ));
            }
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::InvalidInput("speed of sound must be positive".into()));
        }
        Ok(())
    }
}

/// Spatialize a mono source onto an array: per channel, windowed-sinc
/// fractional delay by distance/c, 1/distance attenuation, then a
/// common peak normalization and optional per-channel noise at the
/// scene SNR. Replayed scenes pre-filter the source with the
/// loudspeaker coloration.
pub fn propagate(
    source_wave: &[f64],
    geometry: &ArrayGeometry,
    scene: &SceneSpec,
    sample_rate: u32,
) -> Result<AudioClip> {
    geometry.validate()?;
    scene.validate()?;
    let fs = sample_rate as f64;

    let radiated: std::borrow::Cow<[f64]> = match (&scene.coloration, scene.label) {
        (Some(fir), Label::Replayed) => std::borrow::Cow::Owned(fir_filter(source_wave, fir)),
        _ => std::borrow::Cow::Borrowed(source_wave),
    };

    let mut channels = Vec::with_capacity(geometry.channel_count());
    for (i, mic) in geometry.mics.iter().enumerate() {
        let d = distance(&scene.source_position, mic);
        if d < 1e-6 {
            return Err(Error::Geometry(format!(
                "source coincides with microphone {i}"
            )));
        }
        let delay = d / scene.speed_of_sound * fs;
        let mut ch = fractional_delay(&radiated, delay);
        let att = 1.0 / d;
        for v in &mut ch {
            *v *= att;
        }
        channels.push(ch);
    }

    // Common normalization: preserves inter-channel level ratios while
    // removing the absolute-level shortcut.
    let peak = channels
        .iter()
        .flat_map(|ch| ch.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        let s = 0.35 / peak;
        for ch in &mut channels {
            for v in ch {
                *v *= s;
            }
        }
    }

    if let Some(snr_db) = scene.snr_db {
        let signal_rms = {
            let total: f64 = channels
                .iter()
                .map(|ch| ch.iter().map(|v| v * v).sum::<f64>())
                .sum();
            let count: usize = channels.iter().map(Vec::len).sum();
            (total / count as f64).sqrt()
        };
        let noise_rms = signal_rms * 10f64.powf(-snr_db / 20.0);
        for (i, ch) in channels.iter_mut().enumerate() {
            let stream = if scene.correlated_noise { 0xA0 } else { 0xA0 + 1 + i as u64 };
            let mut rng = seeded_rng(scene.seed, stream);
            for v in ch.iter_mut() {
                // Box–Muller white Gaussian noise.
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let g = (-2.0 * u1.ln()).sqrt() * u2.cos();
                *v = (*v + noise_rms * g).clamp(-0.999_999, 0.999_999);
            }
        }
    }

    let mut clip = AudioClip::new(channels, sample_rate, 16)?;
    clip.label = Some(scene.label);
    clip.device_id = geometry.name.clone();
    Ok(clip)
}

/// Corpus generation parameters. Positions are sampled per clip:
/// genuine talkers in a far shell, replay loudspeakers close to the
/// array, full azimuth for both.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub n_genuine: usize,
    pub n_replayed: usize,
    pub preset: GeometryPreset,
    /// 0 selects the preset's native rate.
    pub sample_rate: u32,
    /// 0 selects the preset's native depth.
    pub bit_depth: u16,
    pub duration_s: f64,
    pub snr_db: Option<f64>,
    pub correlated_noise: bool,
    pub clips_per_speaker: usize,
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub genuine_distance: (f64, f64),
    pub replay_distance: (f64, f64),
    pub genuine_height: (f64, f64),
    pub replay_height: (f64, f64),
    /// Per-clip spectral tilt range applied to the source before
    /// propagation (both classes), masking loudspeaker-tilt shortcuts.
    pub source_tilt: (f64, f64),
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_genuine: 100,
            n_replayed: 100,
            preset: GeometryPreset::D2,
            sample_rate: 0,
            bit_depth: 0,
            duration_s: 2.0,
            snr_db: Some(20.0),
            correlated_noise: false,
            clips_per_speaker: 20,
            train_fraction: 0.72,
            dev_fraction: 0.08,
            genuine_distance: (1.2, 2.5),
            replay_distance: (0.35, 0.9),
            genuine_height: (-0.2, 0.5),
            replay_height: (-0.45, 0.1),
            source_tilt: (-0.4, 0.6),
            seed: 1,
        }
    }
}

impl CorpusConfig {
    pub fn effective_sample_rate(&self) -> u32 {
        if self.sample_rate == 0 {
            self.preset.default_sample_rate()
        } else {
            self.sample_rate
        }
    }

    pub fn effective_bit_depth(&self) -> u16 {
        if self.bit_depth == 0 {
            self.preset.default_bit_depth()
        } else {
            self.bit_depth
        }
    }

    /// Class counts matching the recorded corpus ratio (6331 genuine to
    /// 17175 replayed), scaled to a requested total.
    pub fn scale_class_ratio(total: usize) -> (usize, usize) {
        let genuine = (total as f64 * 6331.0 / (6331.0 + 17175.0)).round() as usize;
        (genuine, total - genuine)
    }
}

fn sample_position(
    rng: &mut rand_chacha::ChaCha8Rng,
    distance_range: (f64, f64),
    height_range: (f64, f64),
) -> [f64; 3] {
    let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
    let d = rng.gen_range(distance_range.0..distance_range.1);
    let z = rng.gen_range(height_range.0..height_range.1);
    let planar = (d * d - z * z).max(0.01).sqrt();
    [planar * azimuth.cos(), planar * azimuth.sin(), z]
}

/// Split boundaries at speaker granularity so split speaker sets are
/// pairwise disjoint by construction.
fn speaker_splits(n_speakers: usize, train_fraction: f64, dev_fraction: f64) -> Vec<Split> {
    let n_train = ((n_speakers as f64 * train_fraction).round() as usize)
        .clamp(1, n_speakers.saturating_sub(2).max(1));
    let n_dev = ((n_speakers as f64 * dev_fraction).round() as usize)
        .clamp(1, n_speakers.saturating_sub(n_train + 1).max(1));
    (0..n_speakers)
        .map(|i| {
            if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Eval
            }
        })
        .collect()
}

/// Generate a corpus under `out_dir`: WAV clips in `clips/` plus a
/// `manifest.jsonl`. Returns the manifest entries in clip order.
pub fn generate_corpus(out_dir: impl AsRef<Path>, config: &CorpusConfig) -> Result<Vec<ManifestEntry>> {
    let out_dir = out_dir.as_ref();
    let total = config.n_genuine + config.n_replayed;
    if config.n_genuine == 0 || config.n_replayed == 0 {
        return Err(Error::InvalidInput(
            "corpus needs at least one clip of each class".into(),
        ));
    }
    if !(config.train_fraction > 0.0
        && config.dev_fraction > 0.0
        && config.train_fraction + config.dev_fraction < 1.0)
    {
        return Err(Error::InvalidInput("split fractions must leave room for eval".into()));
    }
    fs::create_dir_all(out_dir.join("clips"))?;

    let geometry = config.preset.geometry();
    let sample_rate = config.effective_sample_rate();
    let bit_depth = config.effective_bit_depth();
    let coloration = coloration_fir(sample_rate);

    // Exact class counts, interleaved evenly over the clip sequence.
    let mut labels = Vec::with_capacity(total);
    let mut acc: i64 = 0;
    for _ in 0..total {
        acc += config.n_genuine as i64;
        if acc >= total as i64 {
            acc -= total as i64;
            labels.push(Label::Genuine);
        } else {
            labels.push(Label::Replayed);
        }
    }
    debug_assert_eq!(
        labels.iter().filter(|l| **l == Label::Genuine).count(),
        config.n_genuine
    );

    let n_speakers = (total + config.clips_per_speaker - 1) / config.clips_per_speaker;
    let n_speakers = n_speakers.max(3);
    let splits = speaker_splits(n_speakers, config.train_fraction, config.dev_fraction);

    let mut entries = Vec::with_capacity(total);
    for (clip_index, &label) in labels.iter().enumerate() {
        let speaker = clip_index * n_speakers / total;
        let voice = VoiceProfile::from_seed(derive_seed(config.seed, 0x5EA0 + speaker as u64));
        let clip_seed = derive_seed(config.seed, clip_index as u64);
        let wave =
            synth_source_with_profile(config.duration_s, sample_rate, clip_seed, &voice);
        let mut tilt_rng = seeded_rng(clip_seed, 0x717);
        let wave = tilt_eq(
            &wave,
            tilt_rng.gen_range(config.source_tilt.0..config.source_tilt.1),
        );

        let mut pos_rng = seeded_rng(clip_seed, 0x905);
        let (dist, height) = match label {
            Label::Genuine => (config.genuine_distance, config.genuine_height),
            Label::Replayed => (config.replay_distance, config.replay_height),
        };
        let scene = SceneSpec {
            source_position: sample_position(&mut pos_rng, dist, height),
            speed_of_sound: SPEED_OF_SOUND,
            snr_db: config.snr_db,
            label,
            coloration: Some(coloration.clone()),
            correlated_noise: config.correlated_noise,
            seed: clip_seed,
        };
        let mut clip = propagate(&wave, &geometry, &scene, sample_rate)?;
        clip.bit_depth = bit_depth;
        let rel_path = format!("clips/{clip_index:06}.wav");
        crate::audio::write_wav(out_dir.join(&rel_path), &clip)?;

        entries.push(ManifestEntry {
            path: rel_path,
            label,
            device: config.preset.name().to_string(),
            speaker: format!("spk{speaker:03}"),
            environment: "synthetic".to_string(),
            split: splits[speaker],
        });
    }

    write_manifest(out_dir.join("manifest.jsonl"), &entries)?;
    Ok(entries)
}

#[cfg(test)]
mod tests;
