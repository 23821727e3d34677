//! Criterion benchmarks for the hot paths: the filter-and-sum
//! convolution (forward and backward), one LSTM step, a full-clip
//! forward pass, EER computation, and corpus DSP.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use replayguard_core::frontend::init_bank;
use replayguard_core::model::{bind_params, build_logits, init_model, prepare_input};
use replayguard_core::synth::{fractional_delay, synth_source};
use replayguard_core::{eer, AudioClip, Label, ModelConfig, ModelMode, ScoreSet, Tape, Tensor};

fn random_frame(c: usize, m: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(
        vec![c, m],
        (0..c * m).map(|_| rng.gen_range(-0.8..0.8)).collect(),
    )
    .unwrap()
}

fn desk_config() -> ModelConfig {
    ModelConfig {
        channels: 4,
        channel_order: vec![1, 2, 3, 4],
        sample_rate: 16_000,
        filters_per_channel: 16,
        lstm_hidden: 128,
        ..ModelConfig::default()
    }
}

fn bench_filter_sum(c: &mut Criterion) {
    // Desk-scale dimensions: 4 channels × 16 filters × 229 taps on a
    // 320-sample frame.
    let frame = random_frame(4, 320, 1);
    let bank = init_bank(4, 16, 229, 2);

    c.bench_function("filter_sum_forward", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let f = tape.leaf(frame.clone(), false).unwrap();
            let bk = tape.leaf(bank.as_tensor(), false).unwrap();
            tape.filter_sum_conv(f, bk).unwrap()
        })
    });

    c.bench_function("filter_sum_forward_backward", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let f = tape.leaf(frame.clone(), false).unwrap();
            let bk = tape.leaf(bank.as_tensor(), true).unwrap();
            let y = tape.filter_sum_conv(f, bk).unwrap();
            let pooled = tape.global_max_pool(y).unwrap();
            let z = tape.relu(pooled).unwrap();
            let s = tape.slice(z, 0, 1).unwrap();
            tape.backward(s, 1.0).unwrap()
        })
    });
}

fn bench_lstm_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (h_dim, in_dim) = (128, 256);
    let x = Tensor::vector(
        &(0..in_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect::<Vec<_>>(),
    );
    let h0 = Tensor::zeros(vec![h_dim]);
    let w_ih = Tensor::new(
        vec![4 * h_dim, in_dim],
        (0..4 * h_dim * in_dim)
            .map(|_| rng.gen_range(-0.1..0.1))
            .collect(),
    )
    .unwrap();
    let w_hh = Tensor::new(
        vec![4 * h_dim, h_dim],
        (0..4 * h_dim * h_dim)
            .map(|_| rng.gen_range(-0.1..0.1))
            .collect(),
    )
    .unwrap();
    let bias = Tensor::zeros(vec![4 * h_dim]);

    c.bench_function("lstm_cell_step", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone(), false).unwrap();
            let hv = tape.leaf(h0.clone(), false).unwrap();
            let cv = tape.leaf(h0.clone(), false).unwrap();
            let wi = tape.leaf(w_ih.clone(), false).unwrap();
            let wh = tape.leaf(w_hh.clone(), false).unwrap();
            let bv = tape.leaf(bias.clone(), false).unwrap();
            tape.lstm_cell(xv, hv, cv, wi, wh, bv).unwrap()
        })
    });
}

fn bench_full_clip(c: &mut Criterion) {
    let config = desk_config();
    let params = init_model(ModelMode::Multichannel, &config, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let channels: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..16_000).map(|_| rng.gen_range(-0.8..0.8)).collect())
        .collect();
    let clip = AudioClip::new(channels, 16_000, 16).unwrap();
    let frames = prepare_input(&clip, &params).unwrap();

    c.bench_function("clip_forward_50_frames", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let bound = bind_params(&mut tape, &params, false).unwrap();
            build_logits(&mut tape, &params, &frames, &bound).unwrap()
        })
    });

    c.bench_function("clip_forward_backward_50_frames", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let bound = bind_params(&mut tape, &params, true).unwrap();
            let logits = build_logits(&mut tape, &params, &frames, &bound).unwrap();
            let loss = tape.softmax_cross_entropy(logits, 1, 0.5).unwrap();
            tape.backward(loss, 1.0).unwrap()
        })
    });
}

fn bench_eer(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(f64, Label)> = (0..10_000)
        .map(|i| {
            let label = if i % 2 == 0 {
                Label::Genuine
            } else {
                Label::Replayed
            };
            let bias = if i % 2 == 0 { 0.3 } else { 0.6 };
            (rng.gen_range(0.0..1.0) * 0.6 + bias * 0.4, label)
        })
        .collect();

    c.bench_function("eer_10k_scores", |b| {
        b.iter_batched(
            || ScoreSet::from_pairs(pairs.iter().copied()),
            |set| eer(&set).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_synth(c: &mut Criterion) {
    c.bench_function("synth_source_1s", |b| b.iter(|| synth_source(1.0, 16_000, 42)));

    let wave = synth_source(1.0, 16_000, 42);
    c.bench_function("fractional_delay_1s", |b| {
        b.iter(|| fractional_delay(&wave, 37.41))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_filter_sum, bench_lstm_step, bench_full_clip, bench_eer, bench_synth
}
criterion_main!(benches);
