//! Command-line entry point binding the library into reproducible
//! experiment recipes.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad usage/config.
//! Worker threads come from `REPLAYGUARD_THREADS` (default: all cores);
//! results are identical for any thread count.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{config_hash, resolve_config, RunFileConfig};
use replayguard_core::audio::SegmentPosition;
use replayguard_core::eval::{
    channel_ablation, dummy_comparison, eer, filter_sweep, score_clips, segment_ablation,
    write_scores, ExperimentReport,
};
use replayguard_core::model::{load_model, prepare_input, save_model, score_frames};
use replayguard_core::synth::generate_corpus;
use replayguard_core::trainer::{load_dataset, train, write_log, Dataset};
use replayguard_core::{Error, ModelMode, Split};

#[derive(Parser)]
#[command(
    name = "replayguard",
    about = "Multi-channel replay attack detection experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config with [model], [train], [corpus] and [run] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set train.lr_init=3e-4. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset manifest (line-delimited JSON records).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-channel corpus.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Geometry preset: d1, d2, d3 or d4.
        #[arg(long)]
        preset: Option<String>,
        /// Total clip count, split by the recorded-corpus class ratio.
        #[arg(long)]
        n: Option<usize>,
        /// Explicit genuine-clip count (use with --n-replayed).
        #[arg(long)]
        n_genuine: Option<usize>,
        #[arg(long)]
        n_replayed: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model on a manifest.
    Train {
        #[command(flatten)]
        common: Common,
        /// single, dummy-multichannel or multichannel.
        #[arg(long, default_value = "multichannel")]
        mode: String,
        /// Training seed (default: first entry of train.seeds).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a manifest split with a trained checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path (model.rgmp).
        #[arg(long)]
        model: PathBuf,
        /// train, dev or eval.
        #[arg(long, default_value = "eval")]
        split: String,
        /// Dump the first clip's front-end time-frequency map here.
        #[arg(long)]
        dump_tf: Option<PathBuf>,
    },
    /// Train per channel-order prefix and report EER per channel count.
    AblateChannels {
        #[command(flatten)]
        common: Common,
        /// Pickup order, e.g. 1,4,2,3 (default: model.channel_order).
        #[arg(long)]
        order: Option<String>,
    },
    /// Train per front-end filter count.
    SweepFilters {
        #[command(flatten)]
        common: Common,
        /// Comma-separated counts (default 8,16,32,64,128).
        #[arg(long)]
        p_values: Option<String>,
    },
    /// Train over input-length × segment-position cells.
    AblateSegment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seconds (default 0.5,1.0,1.5).
        #[arg(long)]
        lengths: Option<String>,
        /// Comma-separated positions (default beginning,middle).
        #[arg(long)]
        positions: Option<String>,
    },
    /// Train single, dummy-multichannel and multichannel with paired
    /// seeds and report EERs plus relative improvements.
    CompareModes {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of the full model gradient.
    GradCheck {
        #[command(flatten)]
        common: Common,
        /// Sampled parameter coordinates.
        #[arg(long, default_value = "200")]
        coords: usize,
        #[arg(long, default_value = "1e-5")]
        eps: f64,
        #[arg(long, default_value = "7")]
        seed: u64,
    },
}

/// Usage problems exit 2; runtime failures exit 1.
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error (usage): {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &Common) -> Result<RunFileConfig, CliError> {
    resolve_config(common.config.as_deref(), &common.overrides).map_err(usage)
}

fn out_dir(common: &Common, cfg: &RunFileConfig) -> Result<PathBuf, CliError> {
    common
        .out
        .clone()
        .or_else(|| cfg.run.out.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("an output directory is required (--out or run.out)"))
}

fn manifest_path(common: &Common, cfg: &RunFileConfig) -> Result<PathBuf, CliError> {
    common
        .manifest
        .clone()
        .or_else(|| cfg.run.manifest.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("a dataset manifest is required (--manifest or run.manifest)"))
}

/// Reproducibility record written into every run's output directory.
fn write_run_manifest(
    out: &Path,
    subcommand: &str,
    cfg: &RunFileConfig,
    seeds: &[u64],
    inputs: &[(&str, String)],
) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(Error::from)?;
    let record = serde_json::json!({
        "subcommand": subcommand,
        "config_hash": config_hash(cfg),
        "config": toml::to_string(cfg).unwrap_or_default(),
        "seeds": seeds,
        "code_version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect::<std::collections::BTreeMap<_, _>>(),
    });
    std::fs::write(
        out.join("run_manifest.json"),
        serde_json::to_string_pretty(&record).expect("json"),
    )
    .map_err(Error::from)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<T>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("cannot parse {what} list '{text}'")))
}

fn dataset_for(common: &Common, cfg: &RunFileConfig) -> Result<Dataset, CliError> {
    let path = manifest_path(common, cfg)?;
    Ok(load_dataset(path)?)
}

fn report_out(report: &ExperimentReport, out: &Path) -> Result<(), CliError> {
    report.write_json(out.join("report.json"))?;
    std::fs::write(out.join("report.txt"), report.to_text_table()).map_err(Error::from)?;
    print!("{}", report.to_text_table());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            common,
            preset,
            n,
            n_genuine,
            n_replayed,
            seed,
        } => {
            let cfg = load_config(&common)?;
            let mut corpus = cfg.corpus.clone();
            if let Some(p) = preset {
                corpus.preset = p.parse().map_err(|e: Error| usage(e.to_string()))?;
            }
            if let Some(total) = n {
                let (g, r) = replayguard_core::CorpusConfig::scale_class_ratio(total);
                corpus.n_genuine = g;
                corpus.n_replayed = r;
            }
            if let Some(g) = n_genuine {
                corpus.n_genuine = g;
            }
            if let Some(r) = n_replayed {
                corpus.n_replayed = r;
            }
            if let Some(s) = seed {
                corpus.seed = s;
            }
            let out = out_dir(&common, &cfg)?;
            let mut resolved = cfg.clone();
            resolved.corpus = corpus.clone();
            write_run_manifest(&out, "synth", &resolved, &[corpus.seed], &[])?;
            let entries = generate_corpus(&out, &corpus)?;
            println!(
                "wrote {} clips ({} genuine / {} replayed) and {}",
                entries.len(),
                corpus.n_genuine,
                corpus.n_replayed,
                out.join("manifest.jsonl").display()
            );
            Ok(())
        }

        Command::Train { common, mode, seed } => {
            let cfg = load_config(&common)?;
            let mode: ModelMode = mode.parse().map_err(|e: Error| usage(e.to_string()))?;
            let seed = seed.unwrap_or_else(|| cfg.train.seeds.first().copied().unwrap_or(1));
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            write_run_manifest(
                &out,
                "train",
                &cfg,
                &[seed],
                &[("manifest", dataset.manifest_path.display().to_string())],
            )?;
            let outcome = train(&dataset, mode, &cfg.model, &cfg.train, seed)?;
            save_model(out.join("model.rgmp"), &outcome.params)?;
            write_log(out.join("train_log.jsonl"), &outcome.log)?;
            println!(
                "trained {} for {} epochs; best dev EER {:.4}; checkpoint {}",
                mode.as_str(),
                outcome.epochs_run,
                outcome.best_dev_eer,
                out.join("model.rgmp").display()
            );
            Ok(())
        }

        Command::Eval {
            common,
            model,
            split,
            dump_tf,
        } => {
            let cfg = load_config(&common)?;
            let split = match split.as_str() {
                "train" => Split::Train,
                "dev" => Split::Dev,
                "eval" => Split::Eval,
                other => return Err(usage(format!("unknown split '{other}'"))),
            };
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            let params = load_model(&model)?;
            write_run_manifest(
                &out,
                "eval",
                &cfg,
                &[],
                &[
                    ("manifest", dataset.manifest_path.display().to_string()),
                    ("model", model.display().to_string()),
                ],
            )?;
            let clips = dataset.split(split);
            if clips.is_empty() {
                return Err(usage(format!("split '{}' is empty", split.as_str())));
            }
            let scores = score_clips(&params, &clips, split.as_str())?;
            write_scores(out.join("scores.jsonl"), &scores)?;
            let rate = eer(&scores)?;
            println!("scored {} clips; EER {rate:.4}", scores.entries.len());

            if let Some(tf_path) = dump_tf {
                let frames = prepare_input(&clips[0].clip, &params)?;
                let front =
                    replayguard_core::frontend::forward_frame(&frames.frame(0), &params.bank)?;
                replayguard_core::frontend::write_tf_map(&tf_path, &front.y)?;
                let s = score_frames(&frames, &params)?;
                println!("dumped front-end map of {} (score {s:.4})", clips[0].id);
            }
            Ok(())
        }

        Command::AblateChannels { common, order } => {
            let cfg = load_config(&common)?;
            let order: Vec<usize> = match order {
                Some(text) => parse_list(&text, "channel order")?,
                None => cfg.model.channel_order.clone(),
            };
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            write_run_manifest(
                &out,
                "ablate-channels",
                &cfg,
                &cfg.train.seeds,
                &[("manifest", dataset.manifest_path.display().to_string())],
            )?;
            let report = channel_ablation(&dataset, &order, &cfg.model, &cfg.train)?;
            report_out(&report, &out)
        }

        Command::SweepFilters { common, p_values } => {
            let cfg = load_config(&common)?;
            let p_values: Vec<usize> = match p_values {
                Some(text) => parse_list(&text, "filter count")?,
                None => replayguard_core::eval::experiments::default_filter_sweep(),
            };
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            write_run_manifest(
                &out,
                "sweep-filters",
                &cfg,
                &cfg.train.seeds,
                &[("manifest", dataset.manifest_path.display().to_string())],
            )?;
            let report = filter_sweep(&dataset, &p_values, &cfg.model, &cfg.train)?;
            report_out(&report, &out)
        }

        Command::AblateSegment {
            common,
            lengths,
            positions,
        } => {
            let cfg = load_config(&common)?;
            let lengths: Vec<f64> = match lengths {
                Some(text) => parse_list(&text, "segment length")?,
                None => vec![0.5, 1.0, 1.5],
            };
            let positions: Vec<SegmentPosition> = match positions {
                Some(text) => parse_list(&text, "segment position")?,
                None => vec![SegmentPosition::Beginning, SegmentPosition::Middle],
            };
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            write_run_manifest(
                &out,
                "ablate-segment",
                &cfg,
                &cfg.train.seeds,
                &[("manifest", dataset.manifest_path.display().to_string())],
            )?;
            let report =
                segment_ablation(&dataset, &lengths, &positions, &cfg.model, &cfg.train)?;
            report_out(&report, &out)
        }

        Command::CompareModes { common } => {
            let cfg = load_config(&common)?;
            let out = out_dir(&common, &cfg)?;
            let dataset = dataset_for(&common, &cfg)?;
            write_run_manifest(
                &out,
                "compare-modes",
                &cfg,
                &cfg.train.seeds,
                &[("manifest", dataset.manifest_path.display().to_string())],
            )?;
            let report = dummy_comparison(&dataset, &cfg.model, &cfg.train)?;
            report_out(&report, &out)
        }

        Command::GradCheck {
            common,
            coords,
            eps,
            seed,
        } => {
            let cfg = load_config(&common)?;
            let report = grad_check_run(coords, eps, seed)?;
            if let Some(out) = common
                .out
                .clone()
                .or_else(|| cfg.run.out.as_ref().map(PathBuf::from))
            {
                write_run_manifest(&out, "grad-check", &cfg, &[seed], &[])?;
                std::fs::write(
                    out.join("grad_check.txt"),
                    format!(
                        "coords {}\neps {eps:e}\nmax_rel_err {:e}\nworst_coord {}\n",
                        report.checked, report.max_rel_err, report.worst_coord
                    ),
                )
                .map_err(Error::from)?;
            }
            println!(
                "checked {} coordinates (eps {eps:e}): max relative error {:.3e} at coordinate {}",
                report.checked, report.max_rel_err, report.worst_coord
            );
            if report.max_rel_err >= 1e-4 {
                return Err(Error::Numeric(format!(
                    "gradient check failed: {:.3e} ≥ 1e-4",
                    report.max_rel_err
                ))
                .into());
            }
            Ok(())
        }
    }
}

/// Build a small random model and clip, then compare backward gradients
/// against central differences on sampled coordinates.
fn grad_check_run(
    coords: usize,
    eps: f64,
    seed: u64,
) -> Result<replayguard_core::GradCheckReport, CliError> {
    use rand::Rng;
    use replayguard_core::model::{bind_params, build_logits, init_model};
    use replayguard_core::rng::seeded_rng;
    use replayguard_core::{AudioClip, ModelConfig, Tape};

    let config = ModelConfig {
        channels: 3,
        channel_order: vec![1, 2, 3],
        sample_rate: 16_000,
        filters_per_channel: 10,
        filter_length: 48,
        freq_kernels: 12,
        frame_embed_dim: 16,
        lstm_hidden: 10,
        input_seconds: 0.08,
        ..ModelConfig::default()
    };
    let params = init_model(ModelMode::Multichannel, &config, seed)?;
    let mut rng = seeded_rng(seed, 0xC11);
    let n = (config.input_seconds * 16_000.0) as usize;
    let channels = (0..3)
        .map(|_| (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect())
        .collect();
    let clip = AudioClip::new(channels, 16_000, 16)?;
    let frames = prepare_input(&clip, &params)?;

    let eval = |flat: &[f64]| -> f64 {
        let mut p = params.clone();
        p.unflatten(flat).expect("same layout");
        let mut tape = Tape::new();
        let bound = bind_params(&mut tape, &p, false).expect("bind");
        let logits = build_logits(&mut tape, &p, &frames, &bound).expect("forward");
        let loss = tape.softmax_cross_entropy(logits, 1, 1.0).expect("loss");
        tape.value(loss).scalar()
    };

    let theta = params.flatten();
    let grads = {
        let mut tape = Tape::new();
        let bound = bind_params(&mut tape, &params, true)?;
        let logits = build_logits(&mut tape, &params, &frames, &bound)?;
        let loss = tape.softmax_cross_entropy(logits, 1, 1.0)?;
        let g = tape.backward(loss, 1.0)?;
        bound.flat_grads(&g, &tape)
    };

    let mut rng = seeded_rng(seed, 0xC12);
    let sampled: Vec<usize> = (0..coords.min(theta.len()))
        .map(|_| rng.gen_range(0..theta.len()))
        .collect();
    Ok(replayguard_core::grad_check(
        eval, &grads, &theta, &sampled, eps,
    ))
}
