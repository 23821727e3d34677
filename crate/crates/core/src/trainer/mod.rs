//! Training: weighted cross-entropy, ADAM with decoupled weight decay,
//! a warm-up + step-decay learning-rate schedule, and early stopping on
//! development-set EER. Identical seeds produce bit-identical runs for
//! any worker-thread count.

mod adam;

pub use adam::{adam_step, AdamState};

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::audio::{load_entry, read_manifest, AudioClip, Label, Split};
use crate::error::{Error, Result};
use crate::eval::{eer, score_clips};
use crate::model::{bind_params, build_logits, init_model, prepare_input, ModelConfig, ModelMode, ModelParams};
use crate::parallel::parallel_map;
use crate::rng::{derive_seed, seeded_rng};
use crate::tensor::Tape;

/// Optimization hyperparameters. Field names are the config-file
/// contract. Defaults are the reference training scheme; see
/// [`TrainConfig::desk_scale`] for the CPU-sized variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_init: f64,
    pub warmup_epochs: usize,
    pub warmup_multiplier: f64,
    pub decay_interval: usize,
    pub decay_factor: f64,
    pub max_epochs: usize,
    pub weight_decay: f64,
    pub seeds: Vec<u64>,
    pub early_stop_metric: String,
    pub patience: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            lr_init: 1e-5,
            warmup_epochs: 20,
            warmup_multiplier: 10.0,
            decay_interval: 20,
            decay_factor: 0.5,
            max_epochs: 100,
            weight_decay: 1e-3,
            seeds: vec![1, 2, 3],
            early_stop_metric: "dev_eer".to_string(),
            patience: 10,
            clip_grad_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    /// Short schedule tuned for the synthetic desk-scale corpora.
    pub fn desk_scale() -> Self {
        TrainConfig {
            batch_size: 16,
            lr_init: 2e-4,
            warmup_epochs: 2,
            warmup_multiplier: 3.0,
            decay_interval: 2,
            decay_factor: 0.5,
            max_epochs: 6,
            weight_decay: 1e-4,
            patience: 3,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be ≥ 1".into()));
        }
        if !(self.lr_init > 0.0 && self.warmup_multiplier > 0.0 && self.decay_factor > 0.0) {
            return Err(Error::Config("rates and factors must be positive".into()));
        }
        if self.decay_interval == 0 || self.max_epochs == 0 {
            return Err(Error::Config("epoch counts must be ≥ 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.early_stop_metric != "dev_eer" {
            return Err(Error::Config(format!(
                "unsupported early-stop metric '{}' (only dev_eer)",
                self.early_stop_metric
            )));
        }
        Ok(())
    }

    /// Parse a TOML config whose keys mirror the field names exactly.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("train config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Learning rate at an epoch: linear warm-up from `lr_init` to
/// `warmup_multiplier × lr_init` across the warm-up epochs, then a halving
/// (by `decay_factor`) every `decay_interval` epochs.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let e = epoch as f64;
    let w = config.warmup_epochs as f64;
    if epoch < config.warmup_epochs {
        config.lr_init * (1.0 + (config.warmup_multiplier - 1.0) * e / w)
    } else {
        let decays = (epoch - config.warmup_epochs) / config.decay_interval;
        config.lr_init * config.warmup_multiplier * config.decay_factor.powi(decays as i32)
    }
}

/// Per-class loss weights: normalized reciprocals of the training
/// counts, w_k = (1/n_k) / (1/n_g + 1/n_r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub genuine: f64,
    pub replayed: f64,
}

impl ClassWeights {
    pub fn for_label(&self, label: Label) -> f64 {
        match label {
            Label::Genuine => self.genuine,
            Label::Replayed => self.replayed,
        }
    }
}

pub fn class_weights(n_genuine: usize, n_replayed: usize) -> Result<ClassWeights> {
    if n_genuine == 0 || n_replayed == 0 {
        return Err(Error::InvalidInput(
            "class weights need at least one sample of each class".into(),
        ));
    }
    let (rg, rr) = (1.0 / n_genuine as f64, 1.0 / n_replayed as f64);
    Ok(ClassWeights {
        genuine: rg / (rg + rr),
        replayed: rr / (rg + rr),
    })
}

/// One clip held in memory with its manifest metadata.
#[derive(Debug, Clone)]
pub struct LoadedClip {
    pub id: String,
    pub clip: AudioClip,
    pub label: Label,
    pub speaker: String,
    pub split: Split,
}

/// An in-memory dataset, loaded once and shared across runs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub clips: Vec<LoadedClip>,
    pub manifest_path: PathBuf,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<&LoadedClip> {
        self.clips.iter().filter(|c| c.split == split).collect()
    }

    pub fn counts(clips: &[&LoadedClip]) -> (usize, usize) {
        let genuine = clips.iter().filter(|c| c.label == Label::Genuine).count();
        (genuine, clips.len() - genuine)
    }
}

/// Load every clip referenced by a manifest into memory.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let entries = read_manifest(manifest_path)?;
    let dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let clips = parallel_map(entries.len(), |i| -> Result<LoadedClip> {
        let e = &entries[i];
        Ok(LoadedClip {
            id: e.path.clone(),
            clip: load_entry(&dir, e)?,
            label: e.label,
            speaker: e.speaker.clone(),
            split: e.split,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        clips,
        manifest_path: manifest_path.to_path_buf(),
    })
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LogRecord {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
    pub dev_eer: Option<f64>,
}

/// Write log records line-delimited.
pub fn write_log(path: impl AsRef<Path>, records: &[LogRecord]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| Error::Parse(format!("log serialization: {e}")))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best-development-EER checkpoint.
    pub params: ModelParams,
    pub log: Vec<LogRecord>,
    pub best_dev_eer: f64,
    pub epochs_run: usize,
}

/// Mean loss and flat gradient over a batch of clips. Per-clip work
/// fans out to workers; the reduction is in clip order regardless of
/// thread count.
fn batch_loss_and_grads(
    params: &ModelParams,
    clips: &[&LoadedClip],
    weights: &ClassWeights,
) -> Result<(f64, Vec<f64>)> {
    let scale = 1.0 / clips.len() as f64;
    let per_clip = parallel_map(clips.len(), |i| -> Result<(f64, Vec<f64>)> {
        let item = clips[i];
        let frames = prepare_input(&item.clip, params)?;
        let mut tape = Tape::new();
        let bound = bind_params(&mut tape, params, true)?;
        let logits = build_logits(&mut tape, params, &frames, &bound)?;
        let loss = tape.softmax_cross_entropy(
            logits,
            item.label.class_index(),
            weights.for_label(item.label),
        )?;
        let grads = tape.backward(loss, scale)?;
        Ok((tape.value(loss).scalar(), bound.flat_grads(&grads, &tape)))
    });

    let mut total_loss = 0.0;
    let mut grad_acc: Option<Vec<f64>> = None;
    for result in per_clip {
        let (loss, grads) = result?;
        total_loss += loss * scale;
        match &mut grad_acc {
            None => grad_acc = Some(grads),
            Some(acc) => {
                for (dst, g) in acc.iter_mut().zip(&grads) {
                    *dst += g;
                }
            }
        }
    }
    Ok((total_loss, grad_acc.expect("non-empty batch")))
}

fn clip_gradient_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads {
            *g *= s;
        }
    }
}

/// Train one model. The dev split is taken from the manifest when
/// present, otherwise carved as a seeded 90/10 partition of the train
/// clips. Keeps the best-dev-EER checkpoint; stops when the dev EER has
/// not improved for `patience` epochs or at `max_epochs`.
pub fn train(
    dataset: &Dataset,
    mode: ModelMode,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut train_clips = dataset.split(Split::Train);
    let mut dev_clips = dataset.split(Split::Dev);
    if train_clips.is_empty() {
        return Err(Error::InvalidInput("train split is empty".into()));
    }
    if dev_clips.is_empty() {
        // Seeded 90/10 carve of the core clips.
        let mut order: Vec<usize> = (0..train_clips.len()).collect();
        order.shuffle(&mut seeded_rng(seed, 0xDE5));
        let n_dev = (train_clips.len() / 10).max(1);
        let dev_set: std::collections::HashSet<usize> =
            order[..n_dev].iter().copied().collect();
        let mut carved_train = Vec::new();
        let mut carved_dev = Vec::new();
        for (i, clip) in train_clips.into_iter().enumerate() {
            if dev_set.contains(&i) {
                carved_dev.push(clip);
            } else {
                carved_train.push(clip);
            }
        }
        train_clips = carved_train;
        dev_clips = carved_dev;
    }
    if train_clips.is_empty() || dev_clips.is_empty() {
        return Err(Error::InvalidInput(
            "need non-empty train and dev splits".into(),
        ));
    }

    let (n_gen, n_rep) = Dataset::counts(&train_clips);
    let weights = class_weights(n_gen, n_rep)?;

    let mut params = init_model(mode, model_cfg, derive_seed(seed, 0x1217))?;
    let mut flat = params.flatten();
    let mut adam = AdamState::new(flat.len());
    let mut log = Vec::new();

    let mut best: Option<(f64, ModelParams)> = None;
    let mut epochs_without_improvement = 0usize;
    let mut global_step = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let lr = lr_at(epoch, cfg);
        let mut order: Vec<usize> = (0..train_clips.len()).collect();
        order.shuffle(&mut seeded_rng(seed, 0xE70C + epoch as u64));

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch_idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&LoadedClip> = batch_idx.iter().map(|&i| train_clips[i]).collect();
            let (loss, mut grads) = batch_loss_and_grads(&params, &batch, &weights)?;
            if let Some(max_norm) = cfg.clip_grad_norm {
                clip_gradient_norm(&mut grads, max_norm);
            }
            adam_step(&mut flat, &grads, &mut adam, lr, cfg.weight_decay)?;
            params.unflatten(&flat)?;

            global_step += 1;
            epoch_loss += loss;
            batches += 1;
            log.push(LogRecord {
                epoch,
                step: global_step,
                loss,
                lr,
                dev_eer: None,
            });
        }

        let dev_scores = score_clips(&params, &dev_clips, "dev")?;
        let dev_eer = eer(&dev_scores)?;
        log.push(LogRecord {
            epoch,
            step: global_step,
            loss: epoch_loss / batches.max(1) as f64,
            lr,
            dev_eer: Some(dev_eer),
        });

        let improved = best.as_ref().map_or(true, |(b, _)| dev_eer < *b);
        if improved {
            best = Some((dev_eer, params.clone()));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= cfg.patience {
                break;
            }
        }
    }

    let (best_dev_eer, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        log,
        best_dev_eer,
        epochs_run,
    })
}

/// Load a manifest and train.
pub fn train_from_manifest(
    manifest_path: impl AsRef<Path>,
    mode: ModelMode,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let dataset = load_dataset(manifest_path)?;
    train(&dataset, mode, model_cfg, &cfg.clone(), seed)
}

/// Mean/std of eval-split EER across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub seeds: Vec<u64>,
    pub eers: Vec<f64>,
    pub mean_eer: f64,
    pub std_eer: f64,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Train once per seed and evaluate each run on the eval split.
pub fn multi_seed(
    dataset: &Dataset,
    mode: ModelMode,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<MultiSeedReport> {
    let eval_clips = dataset.split(Split::Eval);
    if eval_clips.is_empty() {
        return Err(Error::InvalidInput("eval split is empty".into()));
    }
    let mut eers = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let outcome = train(dataset, mode, model_cfg, cfg, seed)?;
        let scores = score_clips(&outcome.params, &eval_clips, "eval")?;
        eers.push(eer(&scores)?);
    }
    let (mean_eer, std_eer) = mean_std(&eers);
    Ok(MultiSeedReport {
        seeds: cfg.seeds.clone(),
        eers,
        mean_eer,
        std_eer,
    })
}
