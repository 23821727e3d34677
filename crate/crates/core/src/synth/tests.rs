use super::*;
use crate::audio::load_wav;
use std::collections::HashSet;

fn no_noise_scene(position: [f64; 3], label: Label, seed: u64) -> SceneSpec {
    SceneSpec {
        source_position: position,
        speed_of_sound: SPEED_OF_SOUND,
        snr_db: None,
        label,
        coloration: None,
        correlated_noise: false,
        seed,
    }
}

#[test]
fn equidistant_mics_receive_identical_channels() {
    let geometry = ArrayGeometry::new(
        "pair",
        vec![[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]],
    )
    .unwrap();
    // Source on the perpendicular bisector plane.
    let scene = no_noise_scene([0.0, 1.5, 0.0], Label::Genuine, 3);
    let wave = synth_source(0.4, 16_000, 9);
    let clip = propagate(&wave, &geometry, &scene, 16_000).unwrap();
    for (a, b) in clip.channels[0].iter().zip(&clip.channels[1]) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn axial_spacing_yields_the_expected_tdoa() {
    // 0.343 m along the propagation axis is exactly 1 ms, i.e. 44.1
    // samples at 44.1 kHz; verified by the cross-correlation peak.
    let geometry = ArrayGeometry::new(
        "axial",
        vec![[0.0, 0.0, 0.0], [0.343, 0.0, 0.0]],
    )
    .unwrap();
    let scene = no_noise_scene([-5.0, 0.0, 0.0], Label::Genuine, 5);
    let wave = synth_source(0.6, 44_100, 11);
    let clip = propagate(&wave, &geometry, &scene, 44_100).unwrap();

    // Cross-correlation oracle over integer lags.
    let (a, b) = (&clip.channels[0], &clip.channels[1]);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut xcorr = vec![0.0; 101];
    for (lag, slot) in xcorr.iter_mut().enumerate() {
        let mut acc = 0.0;
        for t in lag..a.len() {
            acc += a[t - lag] * b[t];
        }
        *slot = acc;
        if acc > best.1 {
            best = (lag, acc);
        }
    }
    let peak = best.0;
    assert!(peak == 44 || peak == 45, "peak lag {peak}");
    // Parabolic refinement around the peak recovers the fractional lag.
    let (y0, y1, y2) = (xcorr[peak - 1], xcorr[peak], xcorr[peak + 1]);
    let refined = peak as f64 + 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    assert!((refined - 44.1).abs() < 0.3, "refined lag {refined}");
}

#[test]
fn null_test_identity_coloration_same_position() {
    let geometry = GeometryPreset::D2.geometry();
    let wave = synth_source(0.5, 16_000, 21);
    let position = [0.8, 0.6, -0.1];
    let genuine = propagate(
        &wave,
        &geometry,
        &no_noise_scene(position, Label::Genuine, 7),
        16_000,
    )
    .unwrap();
    let replayed = propagate(
        &wave,
        &geometry,
        &no_noise_scene(position, Label::Replayed, 7),
        16_000,
    )
    .unwrap();
    assert_eq!(genuine.channels, replayed.channels);
}

#[test]
fn coloration_changes_replayed_but_not_genuine() {
    let geometry = GeometryPreset::D1.geometry();
    let wave = synth_source(0.5, 16_000, 23);
    let position = [1.0, 0.3, 0.0];
    let fir = coloration_fir(16_000);
    let mut scene = no_noise_scene(position, Label::Genuine, 9);
    scene.coloration = Some(fir.clone());
    let genuine = propagate(&wave, &geometry, &scene, 16_000).unwrap();
    let mut plain = no_noise_scene(position, Label::Genuine, 9);
    plain.coloration = None;
    let genuine_plain = propagate(&wave, &geometry, &plain, 16_000).unwrap();
    assert_eq!(genuine.channels, genuine_plain.channels);

    let mut replay_scene = no_noise_scene(position, Label::Replayed, 9);
    replay_scene.coloration = Some(fir);
    let replayed = propagate(&wave, &geometry, &replay_scene, 16_000).unwrap();
    assert_ne!(replayed.channels, genuine.channels);
}

#[test]
fn source_on_a_microphone_is_a_geometry_error() {
    let geometry = GeometryPreset::D1.geometry();
    let wave = synth_source(0.1, 16_000, 1);
    let scene = no_noise_scene([-0.035, 0.0, 0.0], Label::Genuine, 1);
    assert!(matches!(
        propagate(&wave, &geometry, &scene, 16_000),
        Err(crate::error::Error::Geometry(_))
    ));
}

#[test]
fn infinite_snr_is_rejected_as_a_value() {
    let mut scene = no_noise_scene([1.0, 0.0, 0.0], Label::Genuine, 1);
    scene.snr_db = Some(f64::INFINITY);
    assert!(scene.validate().is_err());
    scene.snr_db = None;
    assert!(scene.validate().is_ok());
}

fn small_corpus_config(n_genuine: usize, n_replayed: usize, seed: u64) -> CorpusConfig {
    CorpusConfig {
        n_genuine,
        n_replayed,
        sample_rate: 16_000,
        duration_s: 0.5,
        clips_per_speaker: 4,
        seed,
        ..CorpusConfig::default()
    }
}

#[test]
fn corpus_has_requested_counts_and_balance() {
    let dir = tempfile::tempdir().unwrap();
    let entries = generate_corpus(dir.path(), &small_corpus_config(10, 10, 42)).unwrap();
    assert_eq!(entries.len(), 20);
    let genuine = entries.iter().filter(|e| e.label == Label::Genuine).count();
    assert_eq!(genuine, 10);
    // All referenced files exist and load.
    for e in &entries {
        let clip = load_wav(dir.path().join(&e.path)).unwrap();
        assert_eq!(clip.channel_count(), 4);
        assert_eq!(clip.sample_rate, 16_000);
    }
}

#[test]
fn class_ratio_preset_scales() {
    let (g, r) = CorpusConfig::scale_class_ratio(200);
    assert_eq!(g + r, 200);
    assert_eq!(g, 54); // 200 · 6331/23506 rounds to 54
    let (g, r) = CorpusConfig::scale_class_ratio(23_506);
    assert_eq!((g, r), (6_331, 17_175));
}

#[test]
fn split_speaker_sets_are_pairwise_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let entries = generate_corpus(dir.path(), &small_corpus_config(30, 30, 7)).unwrap();
    let mut by_split: std::collections::HashMap<Split, HashSet<&str>> = Default::default();
    for e in &entries {
        by_split.entry(e.split).or_default().insert(&e.speaker);
    }
    let train = &by_split[&Split::Train];
    let dev = &by_split[&Split::Dev];
    let eval = &by_split[&Split::Eval];
    assert!(!train.is_empty() && !dev.is_empty() && !eval.is_empty());
    assert!(train.is_disjoint(dev));
    assert!(train.is_disjoint(eval));
    assert!(dev.is_disjoint(eval));
}

#[test]
fn regeneration_is_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let config = small_corpus_config(6, 6, 99);
    let e1 = generate_corpus(d1.path(), &config).unwrap();
    let e2 = generate_corpus(d2.path(), &config).unwrap();
    assert_eq!(e1, e2);
    for e in &e1 {
        let a = std::fs::read(d1.path().join(&e.path)).unwrap();
        let b = std::fs::read(d2.path().join(&e.path)).unwrap();
        assert_eq!(a, b, "clip {} differs between runs", e.path);
    }
    assert_eq!(
        std::fs::read(d1.path().join("manifest.jsonl")).unwrap(),
        std::fs::read(d2.path().join("manifest.jsonl")).unwrap()
    );

    let other = generate_corpus(
        tempfile::tempdir().unwrap().path(),
        &small_corpus_config(6, 6, 100),
    )
    .unwrap();
    let a = std::fs::read(d1.path().join(&e1[0].path)).unwrap();
    // Different master seed, different audio (paths are the same).
    let b = std::fs::read(
        tempfile::tempdir().unwrap().path().join(&other[0].path),
    );
    assert!(b.is_err() || a != b.unwrap());
}

/// Power of `x` at frequency `f` via a direct DFT probe.
fn band_power(x: &[f64], freqs: &[f64], fs: f64) -> f64 {
    let mut total = 0.0;
    for &f in freqs {
        let (mut re, mut im) = (0.0, 0.0);
        let w = std::f64::consts::TAU * f / fs;
        let (cos_w, sin_w) = (w.cos(), w.sin());
        let (mut c, mut s) = (1.0, 0.0);
        for &v in x {
            re += v * c;
            im += v * s;
            let c_next = c * cos_w - s * sin_w;
            s = c * sin_w + s * cos_w;
            c = c_next;
        }
        total += re * re + im * im;
    }
    total / x.len() as f64
}

#[test]
fn matched_filter_on_the_coloration_band_separates_classes() {
    // Sanity oracle: a detector that knows the loudspeaker model's
    // stop band must reach < 10% error, otherwise the learning task
    // would be ill-posed.
    let dir = tempfile::tempdir().unwrap();
    let config = CorpusConfig {
        n_genuine: 100,
        n_replayed: 100,
        sample_rate: 16_000,
        duration_s: 1.0,
        clips_per_speaker: 10,
        seed: 1234,
        ..CorpusConfig::default()
    };
    let entries = generate_corpus(dir.path(), &config).unwrap();
    assert_eq!(entries.len(), 200);

    let fs = 16_000.0;
    let stop = [7_150.0, 7_350.0, 7_550.0, 7_750.0];
    let pass = [900.0, 1_700.0, 2_600.0, 3_400.0, 4_300.0, 5_200.0];
    let skip = (LEAD_IN_S * fs) as usize;

    let mut scored: Vec<(f64, Label)> = Vec::new();
    for e in &entries {
        let clip = load_wav(dir.path().join(&e.path)).unwrap();
        let speech = &clip.channels[0][skip..];
        let ratio = band_power(speech, &stop, fs) / band_power(speech, &pass, fs).max(1e-300);
        scored.push((ratio, e.label));
    }

    // Best single-threshold error over the scored ratios (replayed
    // clips have the stop band removed, so their ratio is lower).
    let mut thresholds: Vec<f64> = scored.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best_err = f64::INFINITY;
    for &th in &thresholds {
        let errors = scored
            .iter()
            .filter(|(ratio, label)| {
                let predicted_replay = *ratio < th;
                predicted_replay != (*label == Label::Replayed)
            })
            .count();
        best_err = best_err.min(errors as f64 / scored.len() as f64);
    }
    assert!(
        best_err < 0.10,
        "matched-filter error {best_err} on 200 clips"
    );
}
