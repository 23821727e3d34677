//! Scoring and equal-error-rate evaluation.
//!
//! Scores are replay probabilities in [0, 1]. The accept direction is
//! fixed: a clip is accepted (classified genuine) when its score falls
//! below the threshold, so FAR(θ) is the fraction of replayed clips
//! with score < θ and FRR(θ) the fraction of genuine clips with
//! score ≥ θ.

pub mod experiments;

pub use experiments::{
    channel_ablation, dummy_comparison, filter_sweep, segment_ablation, ExperimentReport,
    ReportRow,
};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::Label;
use crate::error::{Error, Result};
use crate::model::{score, ModelParams};
use crate::parallel::parallel_map;
use crate::trainer::LoadedClip;

/// One scored clip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub clip_id: String,
    pub score: f64,
    pub label: Label,
}

/// Scores with enough metadata to identify the producing run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScoreSetMeta {
    pub model: String,
    pub split: String,
    pub channel_order: Vec<usize>,
    pub filters_per_channel: usize,
    pub input_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSet {
    pub entries: Vec<ScoreEntry>,
    #[serde(default)]
    pub meta: ScoreSetMeta,
}

impl ScoreSet {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, Label)>) -> Self {
        ScoreSet {
            entries: pairs
                .into_iter()
                .enumerate()
                .map(|(i, (score, label))| ScoreEntry {
                    clip_id: format!("clip{i}"),
                    score,
                    label,
                })
                .collect(),
            meta: ScoreSetMeta::default(),
        }
    }
}

/// Equal error rate by threshold sweep over all distinct score values
/// (plus an above-maximum sentinel). If no threshold makes FAR and FRR
/// exactly equal, the crossing is found by linear interpolation between
/// the two bracketing operating points. Returns a rate in [0, 1];
/// score distributions ordered against the labels drive it above 0.5.
pub fn eer(scores: &ScoreSet) -> Result<f64> {
    let genuine: Vec<f64> = scores
        .entries
        .iter()
        .filter(|e| e.label == Label::Genuine)
        .map(|e| e.score)
        .collect();
    let replayed: Vec<f64> = scores
        .entries
        .iter()
        .filter(|e| e.label == Label::Replayed)
        .map(|e| e.score)
        .collect();
    if genuine.is_empty() || replayed.is_empty() {
        return Err(Error::InvalidInput(
            "EER needs at least one genuine and one replayed score".into(),
        ));
    }

    // Distinct thresholds, ascending, plus a sentinel above the maximum.
    let mut thresholds: Vec<f64> = scores.entries.iter().map(|e| e.score).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    thresholds.dedup();
    let sentinel = thresholds.last().unwrap() + 1.0;
    thresholds.push(sentinel);

    // Operating points from sorted class scores via prefix counts.
    let mut g_sorted = genuine.clone();
    g_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut r_sorted = replayed.clone();
    r_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let far_frr = |theta: f64| -> (f64, f64) {
        let far = r_sorted.partition_point(|&s| s < theta) as f64 / r_sorted.len() as f64;
        let frr = (g_sorted.len() - g_sorted.partition_point(|&s| s < theta)) as f64
            / g_sorted.len() as f64;
        (far, frr)
    };

    let points: Vec<(f64, f64)> = thresholds.iter().map(|&t| far_frr(t)).collect();
    Ok(eer_from_operating_points(&points))
}

/// EER from operating points ordered by threshold: exact crossing if
/// FAR = FRR somewhere, otherwise linear interpolation between the
/// bracketing points. FAR−FRR is monotone along the sweep, so the
/// crossing is unique.
pub fn eer_from_operating_points(points: &[(f64, f64)]) -> f64 {
    for &(far, frr) in points {
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
    // Degenerate single-point sweeps only.
    let (far, frr) = points[points.len() / 2];
    (far + frr) / 2.0
}

/// Relative improvement of `new` over `base`; positive is better.
pub fn relative_improvement(base_eer: f64, new_eer: f64) -> f64 {
    (base_eer - new_eer) / base_eer
}

/// Score a set of clips with a model. Clip order is preserved and the
/// result is independent of the worker-thread count.
pub fn score_clips(params: &ModelParams, clips: &[&LoadedClip], split: &str) -> Result<ScoreSet> {
    let scores = parallel_map(clips.len(), |i| score(&clips[i].clip, params));
    let mut entries = Vec::with_capacity(clips.len());
    for (clip, s) in clips.iter().zip(scores) {
        entries.push(ScoreEntry {
            clip_id: clip.id.clone(),
            score: s?,
            label: clip.label,
        });
    }
    Ok(ScoreSet {
        entries,
        meta: ScoreSetMeta {
            model: params.mode.as_str().to_string(),
            split: split.to_string(),
            channel_order: params.channel_order.clone(),
            filters_per_channel: params.config.filters_per_channel,
            input_seconds: params.config.input_seconds,
        },
    })
}

/// Write scores as line-delimited JSON records (clip id, score, label).
pub fn write_scores(path: impl AsRef<Path>, scores: &ScoreSet) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for e in &scores.entries {
        let line = serde_json::to_string(e)
            .map_err(|err| Error::Parse(format!("score serialization: {err}")))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
