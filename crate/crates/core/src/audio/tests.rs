use super::*;
use crate::error::Error;
use std::fs;

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = tempfile::tempdir().unwrap();
    // Leak the tempdir so the file survives the scope of this helper;
    // tests read the file back before process exit.
    let path = dir.path().join(name);
    std::mem::forget(dir);
    path
}

#[test]
fn full_scale_16_bit_samples_scale_correctly() {
    let path = temp_path("full_scale.wav");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36u32 + 8).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&2u16.to_le_bytes()); // stereo
    bytes.extend_from_slice(&44100u32.to_le_bytes());
    bytes.extend_from_slice(&(44100u32 * 4).to_le_bytes());
    bytes.extend_from_slice(&4u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&8u32.to_le_bytes());
    // Two interleaved frames: (32767, −32768), (0, 0).
    bytes.extend_from_slice(&32767i16.to_le_bytes());
    bytes.extend_from_slice(&(-32768i16).to_le_bytes());
    bytes.extend_from_slice(&0i16.to_le_bytes());
    bytes.extend_from_slice(&0i16.to_le_bytes());
    fs::write(&path, bytes).unwrap();

    let clip = load_wav(&path).unwrap();
    assert_eq!(clip.channel_count(), 2);
    assert_eq!(clip.sample_rate, 44100);
    assert_eq!(clip.bit_depth, 16);
    assert!((clip.channels[0][0] - 0.99997).abs() < 1e-5);
    assert_eq!(clip.channels[1][0], -1.0);
}

#[test]
fn mono_file_loads_as_single_channel() {
    let path = temp_path("mono.wav");
    let clip = AudioClip::new(vec![vec![0.25, -0.5, 0.0]], 16000, 16).unwrap();
    write_wav(&path, &clip).unwrap();
    let loaded = load_wav(&path).unwrap();
    assert_eq!(loaded.channel_count(), 1);
    assert_eq!(loaded.len(), 3);
}

#[test]
fn six_channel_32_bit_round_trips_bit_exactly() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let channels: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..500).map(|_| rng.gen_range(-0.9..0.9)).collect())
        .collect();
    let clip = AudioClip::new(channels, 44100, 32).unwrap();

    let p1 = temp_path("rt1.wav");
    let p2 = temp_path("rt2.wav");
    write_wav(&p1, &clip).unwrap();
    let loaded = load_wav(&p1).unwrap();
    assert_eq!(loaded.channel_count(), 6);
    assert_eq!(loaded.bit_depth, 32);
    write_wav(&p2, &loaded).unwrap();
    // Quantization happened once on the first write; the second write
    // must reproduce the same bytes.
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
}

#[test]
fn malformed_header_is_a_parse_error() {
    let path = temp_path("garbage.wav");
    fs::write(&path, b"RIFX....nonsense").unwrap();
    assert!(matches!(load_wav(&path), Err(Error::Parse(_))));
}

#[test]
fn float_wav_is_unsupported() {
    let path = temp_path("float.wav");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36u32 + 0).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&3u16.to_le_bytes()); // IEEE float
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&16000u32.to_le_bytes());
    bytes.extend_from_slice(&(16000u32 * 4).to_le_bytes());
    bytes.extend_from_slice(&4u16.to_le_bytes());
    bytes.extend_from_slice(&32u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&0u32.to_le_bytes());
    fs::write(&path, bytes).unwrap();
    assert!(matches!(load_wav(&path), Err(Error::UnsupportedFormat(_))));
}

fn ramp_clip(seconds: f64, rate: u32, channels: usize) -> AudioClip {
    let n = (seconds * rate as f64) as usize;
    let chans: Vec<Vec<f64>> = (0..channels)
        .map(|c| {
            (0..n)
                .map(|i| ((i + c * 7) % 1000) as f64 / 2000.0)
                .collect()
        })
        .collect();
    AudioClip::new(chans, rate, 16).unwrap()
}

#[test]
fn beginning_segment_is_a_prefix() {
    let clip = ramp_clip(3.0, 44100, 2);
    let seg = select_segment(&clip, 1.0, SegmentPosition::Beginning).unwrap();
    assert_eq!(seg.len(), 44100);
    for c in 0..2 {
        assert_eq!(&seg.channels[c][..], &clip.channels[c][..44100]);
    }
}

#[test]
fn short_clip_is_zero_padded() {
    let clip = ramp_clip(0.6, 16000, 1);
    let seg = select_segment(&clip, 1.0, SegmentPosition::Beginning).unwrap();
    assert_eq!(seg.len(), 16000);
    let have = (0.6 * 16000.0) as usize;
    assert_eq!(&seg.channels[0][..have], &clip.channels[0][..]);
    assert!(seg.channels[0][have..].iter().all(|&s| s == 0.0));
}

#[test]
fn middle_segment_is_centered() {
    let clip = ramp_clip(3.0, 16000, 1);
    let seg = select_segment(&clip, 1.0, SegmentPosition::Middle).unwrap();
    // A 1 s window centered in 3 s covers [1.0 s, 2.0 s).
    assert_eq!(seg.len(), 16000);
    assert_eq!(&seg.channels[0][..], &clip.channels[0][16000..32000]);
}

#[test]
fn empty_clip_cannot_be_segmented() {
    let clip = AudioClip {
        channels: vec![vec![]],
        sample_rate: 16000,
        bit_depth: 16,
        label: None,
        device_id: String::new(),
        speaker_id: String::new(),
        source_path: None,
    };
    assert!(matches!(
        select_segment(&clip, 1.0, SegmentPosition::Beginning),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn framing_matches_paper_rates() {
    assert_eq!(frame_length(44100), 882);
    assert_eq!(frame_length(16000), 320);

    let clip = ramp_clip(1.0, 44100, 2);
    let frames = frame(&clip).unwrap();
    assert_eq!(frames.frame_count, 50);
    assert_eq!(frames.frame_length, 882);

    let clip = ramp_clip(1.0, 16000, 1);
    let frames = frame(&clip).unwrap();
    assert_eq!(frames.frame_count, 50);
    assert_eq!(frames.frame_length, 320);
}

#[test]
fn exact_one_frame_segment() {
    let clip = AudioClip::new(vec![(0..882).map(|i| i as f64 / 1000.0).collect()], 44100, 16).unwrap();
    let frames = frame(&clip).unwrap();
    assert_eq!(frames.frame_count, 1);

    let short = AudioClip::new(vec![vec![0.0; 881]], 44100, 16).unwrap();
    assert!(matches!(frame(&short), Err(Error::InvalidInput(_))));
}

#[test]
fn frames_concatenate_back_to_the_signal() {
    let clip = ramp_clip(0.037, 16000, 3); // 592 samples → 1 frame + tail
    let frames = frame(&clip).unwrap();
    let m = frames.frame_length;
    for c in 0..3 {
        let mut rebuilt = Vec::new();
        for f in 0..frames.frame_count {
            let t = frames.frame(f);
            rebuilt.extend_from_slice(&t.data()[c * m..(c + 1) * m]);
        }
        assert_eq!(&rebuilt[..], &clip.channels[c][..frames.frame_count * m]);
    }
}

#[test]
fn replicate_channels_copies_channel_one() {
    let clip = ramp_clip(0.1, 16000, 3);
    let rep = replicate_channels(&clip, 4).unwrap();
    assert_eq!(rep.channel_count(), 4);
    for ch in &rep.channels {
        assert_eq!(ch, &clip.channels[0]);
    }
    // Pairwise differences are exactly zero.
    for a in 0..4 {
        for b in 0..4 {
            assert_eq!(rep.channels[a], rep.channels[b]);
        }
    }

    let single = replicate_channels(&clip, 1).unwrap();
    assert_eq!(single.channel_count(), 1);
    assert_eq!(single.channels[0], clip.channels[0]);

    assert!(matches!(
        replicate_channels(&clip, 0),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn select_channels_is_one_based_and_ordered() {
    let clip = ramp_clip(0.1, 16000, 4);
    // First three channels of the 1-4-2-3 pickup order.
    let picked = select_channels(&clip, &[1, 4, 2]).unwrap();
    assert_eq!(picked.channels[0], clip.channels[0]);
    assert_eq!(picked.channels[1], clip.channels[3]);
    assert_eq!(picked.channels[2], clip.channels[1]);

    let identity = select_channels(&clip, &[1, 2, 3, 4]).unwrap();
    for c in 0..4 {
        assert_eq!(identity.channels[c], clip.channels[c]);
    }

    let single = select_channels(&clip, &[1]).unwrap();
    assert_eq!(single.channel_count(), 1);

    assert!(matches!(
        select_channels(&clip, &[5]),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        select_channels(&clip, &[0]),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn replicate_then_select_returns_channel_one() {
    let clip = ramp_clip(0.05, 16000, 2);
    let rep = replicate_channels(&clip, 4).unwrap();
    let third = select_channels(&rep, &[3]).unwrap();
    assert_eq!(third.channels[0], clip.channels[0]);
}

#[test]
fn manifest_round_trip() {
    let path = temp_path("manifest.jsonl");
    let entries = vec![
        ManifestEntry {
            path: "clips/000000.wav".into(),
            label: Label::Genuine,
            device: "d2".into(),
            speaker: "spk003".into(),
            environment: "synthetic".into(),
            split: Split::Train,
        },
        ManifestEntry {
            path: "clips/000001.wav".into(),
            label: Label::Replayed,
            device: "d2".into(),
            speaker: "spk014".into(),
            environment: "synthetic".into(),
            split: Split::Eval,
        },
    ];
    write_manifest(&path, &entries).unwrap();
    let loaded = read_manifest(&path).unwrap();
    assert_eq!(loaded, entries);

    // Field names are part of the format contract.
    let raw = fs::read_to_string(&path).unwrap();
    let first: serde_json::Value = serde_json::from_str(raw.lines().next().unwrap()).unwrap();
    for field in ["path", "label", "device", "speaker", "environment", "split"] {
        assert!(first.get(field).is_some(), "missing field {field}");
    }
    assert_eq!(first["label"], "genuine");
    assert_eq!(first["split"], "train");
}
