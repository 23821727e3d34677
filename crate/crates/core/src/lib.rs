//! Multi-channel replay attack detection with a learnable
//! filter-and-sum beamformer front end.
//!
//! The crate covers the full pipeline at desk scale: differentiable
//! tensor kernels, multichannel WAV ingestion, a synthetic microphone
//! array corpus generator, the front end + classifier network, the
//! training loop, and EER-based evaluation with ablation recipes.

pub mod audio;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod trainer;

pub use audio::{AudioClip, FrameBatch, Label, ManifestEntry, SegmentPosition, Split};
pub use error::{Error, Result};
pub use eval::{eer, ExperimentReport, ScoreSet};
pub use frontend::{FilterBank, FrontEndOutput};
pub use model::{ModelConfig, ModelMode, ModelParams};
pub use synth::{ArrayGeometry, CorpusConfig, GeometryPreset, SceneSpec};
pub use tensor::{grad_check, GradCheckReport, Tape, Tensor, Var};
pub use trainer::{Dataset, TrainConfig};
