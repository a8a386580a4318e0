//! Benchmarks for the hot paths: parsing + view construction, the dual
//! encoder forward pass, one training step, and beam decoding.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dualgraph_core::corpus::Example;
use dualgraph_core::encoder::{EncoderConfig, EncoderKind};
use dualgraph_core::model::{
    decode_example, forward_example, init_model_params, AblationMode, EncodedExample, ModelConfig,
};
use dualgraph_core::tape::backward;
use dualgraph_core::vocab::build_vocab;
use dualgraph_core::{levi_transform, parse_penman, reverse_view};

const PENMAN: &str = "(a / agree :ARG0 (a2 / and :op1 (c / country :wiki China :name (n / name :op1 China)) \
    :op2 (c2 / country :wiki Kyrgyzstan :name (n2 / name :op1 Kyrgyzstan))) \
    :ARG1 (t / threaten-01 :ARG0 (a3 / and :op1 (t2 / terrorism) :op2 (s / separatism) :op3 (e / extremism)) \
    :ARG2 (a4 / and :op1 (s3 / security :mod (r / region)) :op2 (s4 / stability :mod r)) \
    :time (s2 / still) :ARG1-of (m / major-02)) :medium (c3 / communique :mod (j / joint)))";

fn bench_setup() -> (ModelConfig, Example) {
    let config = ModelConfig {
        encoder: EncoderConfig {
            encoder_kind: EncoderKind::Ggnn,
            num_layers: 2,
            graph_hidden: 64,
            embedding_dim: 64,
            lstm_hidden_per_direction: 32,
            dropout_rate: 0.0,
            gat_heads: 1,
        },
        ablation: AblationMode::Dual,
    };
    let example = Example {
        graph: parse_penman(PENMAN).unwrap(),
        sentence: "china and kyrgyzstan agreed that terrorism is a threat"
            .split(' ')
            .map(String::from)
            .collect(),
    };
    (config, example)
}

fn graph_pipeline(c: &mut Criterion) {
    c.bench_function("parse_and_levi", |b| {
        b.iter(|| {
            let g = parse_penman(black_box(PENMAN)).unwrap();
            let view = levi_transform(&g);
            black_box(reverse_view(&view))
        })
    });
}

fn forward_backward(c: &mut Criterion) {
    let (config, example) = bench_setup();
    let (src, tgt) = build_vocab(&[example.clone()], 1000).unwrap();
    let params = init_model_params::<f32>(&config, src.len(), tgt.len(), 1);
    let encoded = EncodedExample::from_example(&example, &src, &tgt);
    c.bench_function("forward_loss", |b| {
        b.iter(|| {
            let fwd = forward_example(&params, &config, black_box(&encoded), &mut None);
            black_box(fwd.loss.item())
        })
    });
    c.bench_function("forward_backward_step", |b| {
        b.iter(|| {
            let fwd = forward_example(&params, &config, black_box(&encoded), &mut None);
            let grads = backward(&fwd.loss);
            black_box(fwd.bound.gradients(&params, &grads))
        })
    });
}

fn decoding(c: &mut Criterion) {
    let (config, example) = bench_setup();
    let (src, tgt) = build_vocab(&[example.clone()], 1000).unwrap();
    let params = init_model_params::<f32>(&config, src.len(), tgt.len(), 1);
    c.bench_function("beam5_decode", |b| {
        b.iter(|| {
            black_box(decode_example(
                &params,
                &config,
                &src,
                &tgt,
                black_box(&example),
                5,
                30,
            ))
        })
    });
}

criterion_group!(benches, graph_pipeline, forward_backward, decoding);
criterion_main!(benches);
