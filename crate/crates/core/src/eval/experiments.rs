//! Runnable experiment recipes: model-mode comparison, channel-count
//! ablation, front-end filter sweep, and input-segment ablation. Every
//! recipe trains with the same seed list per configuration, so
//! comparisons are paired.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::SegmentPosition;
use crate::error::{Error, Result};
use crate::model::{init_model, ModelConfig, ModelMode, FREQ_KERNEL_WIDTH};
use crate::trainer::{multi_seed, Dataset, TrainConfig};

/// EERs for one trained configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub seeds: Vec<u64>,
    pub eers: Vec<f64>,
    pub mean_eer: f64,
    pub std_eer: f64,
}

/// Relative improvement of one row over another; positive is better.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Improvement {
    pub of: String,
    pub over: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub improvements: Vec<Improvement>,
    /// Free-form run metadata (parameter counts, corpus id, notes).
    pub metadata: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Plain-text table: one row per configuration.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.name));
        let label_width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(5)
            .max("configuration".len());
        out.push_str(&format!(
            "{:<label_width$}  {:>9}  {:>9}  eers\n",
            "configuration", "mean_eer", "std_eer"
        ));
        for r in &self.rows {
            let eers: Vec<String> = r.eers.iter().map(|e| format!("{e:.4}")).collect();
            out.push_str(&format!(
                "{:<label_width$}  {:>9.4}  {:>9.4}  [{}]\n",
                r.label,
                r.mean_eer,
                r.std_eer,
                eers.join(", ")
            ));
        }
        for imp in &self.improvements {
            out.push_str(&format!(
                "improvement of {} over {}: {:+.1}%\n",
                imp.of,
                imp.over,
                imp.value * 100.0
            ));
        }
        for (k, v) in &self.metadata {
            out.push_str(&format!("{k}: {v}\n"));
        }
        out
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn run_row(
    dataset: &Dataset,
    label: &str,
    mode: ModelMode,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<ReportRow> {
    let report = multi_seed(dataset, mode, model_cfg, train_cfg)?;
    Ok(ReportRow {
        label: label.to_string(),
        seeds: report.seeds,
        eers: report.eers,
        mean_eer: report.mean_eer,
        std_eer: report.std_eer,
    })
}

/// Train and evaluate the three input modes with identical seeds and
/// report their EERs plus the multichannel model's relative improvement
/// over the two baselines.
pub fn dummy_comparison(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<ExperimentReport> {
    let dummy_params = init_model(ModelMode::DummyMultichannel, model_cfg, 0)?;
    let multi_params = init_model(ModelMode::Multichannel, model_cfg, 0)?;
    let single_params = init_model(ModelMode::Single, model_cfg, 0)?;
    // The dummy construction only makes sense if it matches the real
    // multichannel architecture exactly.
    if dummy_params.parameter_count() != multi_params.parameter_count() {
        return Err(Error::Config(
            "dummy and multichannel parameter counts diverge".into(),
        ));
    }

    let rows = vec![
        run_row(dataset, "single", ModelMode::Single, model_cfg, train_cfg)?,
        run_row(
            dataset,
            "dummy-multichannel",
            ModelMode::DummyMultichannel,
            model_cfg,
            train_cfg,
        )?,
        run_row(
            dataset,
            "multichannel",
            ModelMode::Multichannel,
            model_cfg,
            train_cfg,
        )?,
    ];
    let improvements = vec![
        Improvement {
            of: "multichannel".into(),
            over: "single".into(),
            value: super::relative_improvement(rows[0].mean_eer, rows[2].mean_eer),
        },
        Improvement {
            of: "multichannel".into(),
            over: "dummy-multichannel".into(),
            value: super::relative_improvement(rows[1].mean_eer, rows[2].mean_eer),
        },
    ];
    Ok(ExperimentReport {
        name: "model-mode comparison".into(),
        rows,
        improvements,
        metadata: vec![
            (
                "single_params".into(),
                single_params.parameter_count().to_string(),
            ),
            (
                "multichannel_params".into(),
                multi_params.parameter_count().to_string(),
            ),
            (
                "dummy_params".into(),
                dummy_params.parameter_count().to_string(),
            ),
        ],
    })
}

/// Train one model per pickup-order prefix (1..=C channels) and report
/// EER as a function of the channel count.
pub fn channel_ablation(
    dataset: &Dataset,
    order: &[usize],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<ExperimentReport> {
    if order.is_empty() {
        return Err(Error::InvalidInput("channel order is empty".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &ix in order {
        if ix == 0 || !seen.insert(ix) {
            return Err(Error::InvalidInput(format!(
                "channel order {order:?} must be distinct 1-based indices"
            )));
        }
    }

    let mut rows = Vec::new();
    for prefix in 1..=order.len() {
        let cfg = ModelConfig {
            channels: prefix,
            channel_order: order[..prefix].to_vec(),
            ..model_cfg.clone()
        };
        let label = format!(
            "channels={prefix} [{}]",
            order[..prefix]
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("-")
        );
        rows.push(run_row(
            dataset,
            &label,
            ModelMode::Multichannel,
            &cfg,
            train_cfg,
        )?);
    }
    let improvements = vec![Improvement {
        of: rows.last().unwrap().label.clone(),
        over: rows[0].label.clone(),
        value: super::relative_improvement(rows[0].mean_eer, rows.last().unwrap().mean_eer),
    }];
    Ok(ExperimentReport {
        name: format!("channel ablation, order {order:?}"),
        rows,
        improvements,
        metadata: Vec::new(),
    })
}

/// Train one model per front-end filter count. Counts below the
/// frequency-convolution width are rejected: a width-8 kernel cannot
/// consume a shorter filter axis.
pub fn filter_sweep(
    dataset: &Dataset,
    p_values: &[usize],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<ExperimentReport> {
    if p_values.is_empty() {
        return Err(Error::InvalidInput("no filter counts to sweep".into()));
    }
    for &p in p_values {
        if p < FREQ_KERNEL_WIDTH {
            return Err(Error::Config(format!(
                "P={p} is below the frequency-convolution width {FREQ_KERNEL_WIDTH}"
            )));
        }
    }
    let mut sorted: Vec<usize> = p_values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut rows = Vec::new();
    for p in sorted {
        let cfg = ModelConfig {
            filters_per_channel: p,
            ..model_cfg.clone()
        };
        rows.push(run_row(
            dataset,
            &format!("P={p}"),
            ModelMode::Multichannel,
            &cfg,
            train_cfg,
        )?);
    }
    Ok(ExperimentReport {
        name: "front-end filter sweep".into(),
        rows,
        improvements: Vec::new(),
        metadata: Vec::new(),
    })
}

/// Default sweep list; 4 is excluded by the width-8 constraint.
pub fn default_filter_sweep() -> Vec<usize> {
    vec![8, 16, 32, 64, 128]
}

/// Cross product of input lengths and segment positions, one trained
/// model per cell, seeds shared across cells.
pub fn segment_ablation(
    dataset: &Dataset,
    lengths_s: &[f64],
    positions: &[SegmentPosition],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<ExperimentReport> {
    if lengths_s.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidInput("segment lengths must be positive".into()));
    }
    let mut rows = Vec::new();
    for &length in lengths_s {
        for &position in positions {
            let cfg = ModelConfig {
                input_seconds: length,
                segment_position: position,
                ..model_cfg.clone()
            };
            let label = format!(
                "{length}s {}",
                match position {
                    SegmentPosition::Beginning => "beginning",
                    SegmentPosition::Middle => "middle",
                }
            );
            rows.push(run_row(
                dataset,
                &label,
                ModelMode::Multichannel,
                &cfg,
                train_cfg,
            )?);
        }
    }
    Ok(ExperimentReport {
        name: "input segment ablation".into(),
        rows,
        improvements: Vec::new(),
        metadata: Vec::new(),
    })
}
