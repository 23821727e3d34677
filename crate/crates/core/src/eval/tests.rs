use super::*;
use proptest::prelude::*;
use rand::Rng;

/// Independent O(n²) threshold-sweep oracle: recount FAR/FRR from
/// scratch at every distinct threshold (plus an above-max sentinel) and
/// resolve the crossing with the same interpolation formula, written
/// out inline.
fn brute_force_eer(pairs: &[(f64, Label)]) -> f64 {
    let n_g = pairs.iter().filter(|p| p.1 == Label::Genuine).count();
    let n_r = pairs.len() - n_g;
    assert!(n_g > 0 && n_r > 0);

    let mut thresholds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let top = thresholds.last().unwrap() + 1.0;
    thresholds.push(top);

    let mut points = Vec::with_capacity(thresholds.len());
    for &theta in &thresholds {
        let mut accepted_replays = 0usize;
        let mut rejected_genuine = 0usize;
        for &(score, label) in pairs {
            match label {
                Label::Replayed if score < theta => accepted_replays += 1,
                Label::Genuine if score >= theta => rejected_genuine += 1,
                _ => {}
            }
        }
        points.push((
            accepted_replays as f64 / n_r as f64,
            rejected_genuine as f64 / n_g as f64,
        ));
    }

    for &(far, frr) in &points {
        if far == frr {
            return (far + frr) / 2.0;
        }
    }
    for pair in points.windows(2) {
        let (far_a, frr_a) = pair[0];
        let (far_b, frr_b) = pair[1];
        let diff_a = far_a - frr_a;
        let diff_b = far_b - frr_b;
        if diff_a < 0.0 && diff_b > 0.0 {
            let t = -diff_a / (diff_b - diff_a);
            let far = far_a + t * (far_b - far_a);
            let frr = frr_a + t * (frr_b - frr_a);
            return (far + frr) / 2.0;
        }
    }
    unreachable!("the sweep always brackets a crossing");
}

fn set(pairs: &[(f64, Label)]) -> ScoreSet {
    ScoreSet::from_pairs(pairs.iter().copied())
}

#[test]
fn separable_scores_have_zero_eer() {
    let s = set(&[
        (0.1, Label::Genuine),
        (0.2, Label::Genuine),
        (0.8, Label::Replayed),
        (0.9, Label::Replayed),
    ]);
    assert_eq!(eer(&s).unwrap(), 0.0);
    assert_eq!(brute_force_eer(&[
        (0.1, Label::Genuine),
        (0.2, Label::Genuine),
        (0.8, Label::Replayed),
        (0.9, Label::Replayed),
    ]), 0.0);
}

#[test]
fn interleaved_three_plus_three_is_one_third() {
    let pairs = [
        (0.2, Label::Genuine),
        (0.4, Label::Genuine),
        (0.6, Label::Genuine),
        (0.3, Label::Replayed),
        (0.5, Label::Replayed),
        (0.7, Label::Replayed),
    ];
    let got = eer(&set(&pairs)).unwrap();
    assert!((got - 1.0 / 3.0).abs() < 1e-15, "{got}");
    assert_eq!(got, brute_force_eer(&pairs));
}

#[test]
fn anti_ordered_scores_saturate_at_one() {
    // Labels swapped on the separable case: every threshold is wrong.
    // The sweep finds FAR = FRR = 1 exactly; this implementation
    // reports that operating point rather than clamping to chance.
    let pairs = [
        (0.8, Label::Genuine),
        (0.9, Label::Genuine),
        (0.1, Label::Replayed),
        (0.2, Label::Replayed),
    ];
    let got = eer(&set(&pairs)).unwrap();
    assert_eq!(got, 1.0);
    assert_eq!(got, brute_force_eer(&pairs));
}

#[test]
fn single_class_input_is_an_error() {
    let s = set(&[(0.5, Label::Genuine), (0.6, Label::Genuine)]);
    assert!(matches!(eer(&s), Err(Error::InvalidInput(_))));
}

#[test]
fn matches_brute_force_oracle_on_random_sets() {
    let mut rng = crate::rng::seeded_rng(77, 0);
    for round in 0..300 {
        let n = rng.gen_range(2..60);
        let mut pairs: Vec<(f64, Label)> = (0..n)
            .map(|_| {
                let label = if rng.gen_bool(0.5) {
                    Label::Genuine
                } else {
                    Label::Replayed
                };
                // Quantized scores produce ties between and within classes.
                let score = (rng.gen_range(0.0f64..1.0) * 16.0).round() / 16.0;
                (score, label)
            })
            .collect();
        // Ensure both classes are present.
        pairs.push((rng.gen_range(0.0..1.0), Label::Genuine));
        pairs.push((rng.gen_range(0.0..1.0), Label::Replayed));

        let fast = eer(&set(&pairs)).unwrap();
        let brute = brute_force_eer(&pairs);
        assert_eq!(fast.to_bits(), brute.to_bits(), "round {round}: {fast} vs {brute}");
    }
}

#[test]
fn relative_improvement_sign_convention() {
    // Positive when the new EER is lower (better).
    assert!((relative_improvement(0.2, 0.1) - 0.5).abs() < 1e-15);
    assert!(relative_improvement(0.1, 0.2) < 0.0);
}

#[test]
fn score_export_is_line_delimited() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.jsonl");
    let s = set(&[(0.25, Label::Genuine), (0.75, Label::Replayed)]);
    write_scores(&path, &s).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    for field in ["clip_id", "score", "label"] {
        assert!(first.get(field).is_some(), "missing {field}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// EER depends only on score order: any strictly monotonic
    /// transform leaves it unchanged.
    #[test]
    fn invariant_under_monotone_transforms(
        genuine in prop::collection::vec(0.0f64..1.0, 1..30),
        replayed in prop::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let pairs: Vec<(f64, Label)> = genuine
            .iter()
            .map(|&s| (s, Label::Genuine))
            .chain(replayed.iter().map(|&s| (s, Label::Replayed)))
            .collect();
        let base = eer(&set(&pairs)).unwrap();

        let transformed: Vec<(f64, Label)> = pairs
            .iter()
            .map(|&(s, l)| (0.2 + 0.6 / (1.0 + (-4.0 * (s - 0.5)).exp()), l))
            .collect();
        let got = eer(&set(&transformed)).unwrap();
        prop_assert!((base - got).abs() < 1e-12, "{base} vs {got}");
    }

    /// Replacing scores by 1−score while swapping the labels leaves the
    /// EER unchanged (the two error rates trade places).
    #[test]
    fn symmetric_under_score_reflection(
        genuine in prop::collection::vec(0.0f64..1.0, 1..30),
        replayed in prop::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let pairs: Vec<(f64, Label)> = genuine
            .iter()
            .map(|&s| (s, Label::Genuine))
            .chain(replayed.iter().map(|&s| (s, Label::Replayed)))
            .collect();
        let base = eer(&set(&pairs)).unwrap();

        let reflected: Vec<(f64, Label)> = pairs
            .iter()
            .map(|&(s, l)| {
                let flipped = match l {
                    Label::Genuine => Label::Replayed,
                    Label::Replayed => Label::Genuine,
                };
                (1.0 - s, flipped)
            })
            .collect();
        let got = eer(&set(&reflected)).unwrap();
        prop_assert!((base - got).abs() < 1e-9, "{base} vs {got}");
    }
}
