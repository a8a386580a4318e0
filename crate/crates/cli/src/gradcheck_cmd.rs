//! The `gradcheck` subcommand: reverse-mode gradients vs 64-bit central
//! differences for every differentiable component, printed as one line
//! per component with the worst relative error observed.

use dualgraph_core::corpus::Example;
use dualgraph_core::encoder::{
    bilstm_encode, gat_layer, ggnn_layer, gin_layer, init_bilstm, init_graph_encoder,
    EncoderConfig, EncoderKind,
};
use dualgraph_core::gradcheck::{finite_difference, max_relative_error};
use dualgraph_core::model::{
    forward_example, init_model_params, AblationMode, EncodedExample, ModelConfig,
};
use dualgraph_core::params::ParamSet;
use dualgraph_core::penman::parse_penman;
use dualgraph_core::tape::{backward, Tape, Var};
use dualgraph_core::tensor::{matmul_nn, matvec, Tensor};
use dualgraph_core::vocab::build_vocab;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

const EPS: f64 = 1e-3;
const TOL: f64 = 1e-3;

pub struct Report {
    pub text: String,
    pub all_passed: bool,
}

fn tiny_encoder(kind: EncoderKind) -> EncoderConfig {
    EncoderConfig {
        encoder_kind: kind,
        num_layers: 1,
        graph_hidden: 4,
        embedding_dim: 3,
        lstm_hidden_per_direction: 3,
        dropout_rate: 0.0,
        gat_heads: 1,
    }
}

struct LayerInstance {
    params: ParamSet<f64>,
    states: Tensor<f64>,
    adj: Vec<Vec<usize>>,
    weights: Tensor<f64>,
}

fn layer_instance(kind: EncoderKind, seed: u64) -> LayerInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = tiny_encoder(kind);
    let mut full = ParamSet::new();
    init_graph_encoder(&mut full, "ge_t", &config, &mut rng);
    let mut params = ParamSet::new();
    for (name, t) in full.iter() {
        if name.contains(".l0.") {
            params.insert(name, t.clone());
        }
    }
    let n = 4;
    LayerInstance {
        states: Tensor::uniform(&mut rng, vec![n, config.graph_hidden], -0.8, 0.8),
        adj: (0..n)
            .map(|i| (0..n).filter(|&j| j != i && rng.gen::<f64>() < 0.4).collect())
            .collect(),
        weights: Tensor::uniform(&mut rng, vec![n, config.graph_hidden], -0.8, 0.8),
        params,
    }
}

/// Central differences are only valid away from ReLU/LeakyReLU kinks.
fn kink_free(kind: EncoderKind, inst: &LayerInstance, margin: f64) -> bool {
    match kind {
        EncoderKind::Ggnn => true,
        EncoderKind::Gat => {
            let wh = matmul_nn(&inst.states, inst.params.get("ge_t.l0.w2").unwrap());
            let a = inst.params.get("ge_t.l0.a0").unwrap();
            let s = matvec(&wh, &Tensor::vector(a.data[0..4].to_vec()));
            let t = matvec(&wh, &Tensor::vector(a.data[4..8].to_vec()));
            (0..inst.adj.len()).all(|i| {
                std::iter::once(i)
                    .chain(inst.adj[i].iter().copied())
                    .all(|j| (s.data[i] + t.data[j]).abs() > margin)
            })
        }
        EncoderKind::Gin => {
            let mut agg = inst.states.clone();
            for (i, nbrs) in inst.adj.iter().enumerate() {
                for &j in nbrs {
                    for k in 0..4 {
                        agg.data[i * 4 + k] += inst.states.data[j * 4 + k];
                    }
                }
            }
            let pre = matmul_nn(&agg, inst.params.get("ge_t.l0.w1").unwrap());
            let b = inst.params.get("ge_t.l0.b1").unwrap();
            pre.data
                .iter()
                .enumerate()
                .all(|(idx, &x)| (x + b.data[idx % 4]).abs() > margin)
        }
    }
}

fn check<F>(params: &ParamSet<f64>, f: F) -> f64
where
    F: Fn(&ParamSet<f64>) -> (f64, Option<ParamSet<f64>>),
{
    let (_, grads) = f(params);
    let grads = grads.expect("gradient pass");
    let fd = finite_difference(|p| f(p).0, params, EPS);
    max_relative_error(&grads, &fd)
}

fn layer_worst(kind: EncoderKind, seeds: u64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut inst = layer_instance(kind, 100 + seed);
        let mut salt = 0;
        while !kink_free(kind, &inst, 1e-2) {
            salt += 1;
            inst = layer_instance(kind, 100 + seed + 50_000 * salt);
        }
        let err = check(&inst.params.clone(), |p| {
            let tape = Tape::new();
            let bound = p.bind(&tape);
            let h = tape.constant(inst.states.clone());
            let out = match kind {
                EncoderKind::Ggnn => ggnn_layer(&h, &inst.adj, &bound, "ge_t.l0"),
                EncoderKind::Gat => gat_layer(&h, &inst.adj, &bound, "ge_t.l0", 1),
                EncoderKind::Gin => gin_layer(&h, &inst.adj, &bound, "ge_t.l0"),
            };
            let loss = out.mul(&tape.constant(inst.weights.clone())).sum();
            let grads = backward(&loss);
            (loss.item(), Some(bound.gradients(p, &grads)))
        });
        worst = worst.max(err);
    }
    worst
}

fn bilstm_worst(seeds: u64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let config = tiny_encoder(EncoderKind::Ggnn);
        let mut params = ParamSet::new();
        init_bilstm(&mut params, &config, &mut rng);
        let rows: Vec<Tensor<f64>> = (0..3)
            .map(|_| Tensor::uniform(&mut rng, vec![config.fused_width()], -0.8, 0.8))
            .collect();
        let weights = Tensor::uniform(&mut rng, vec![3, config.bilstm_width()], -0.8, 0.8);
        worst = worst.max(check(&params.clone(), |p| {
            let tape = Tape::new();
            let bound = p.bind(&tape);
            let row_vars: Vec<Var<f64>> = rows.iter().map(|r| tape.constant(r.clone())).collect();
            let out = bilstm_encode(&row_vars, &bound, config.lstm_hidden_per_direction, &tape);
            let loss = out.mul(&tape.constant(weights.clone())).sum();
            let grads = backward(&loss);
            (loss.item(), Some(bound.gradients(p, &grads)))
        }));
    }
    worst
}

fn end_to_end_worst(seeds: u64) -> f64 {
    let example = Example {
        graph: parse_penman("(l / like-01 :ARG0 (d / dog) :ARG1 (b / ball :mod (r / red)))")
            .unwrap(),
        sentence: "the dog likes the red ball !"
            .split(' ')
            .map(String::from)
            .collect(),
    };
    let (src, tgt) = build_vocab(&[example.clone()], 100).unwrap();
    let ex = EncodedExample::from_example(&example, &src, &tgt);
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let config = ModelConfig {
            encoder: EncoderConfig {
                num_layers: 2,
                ..tiny_encoder(EncoderKind::Ggnn)
            },
            ablation: AblationMode::Dual,
        };
        let params = init_model_params::<f64>(&config, src.len(), tgt.len(), 300 + seed);
        worst = worst.max(check(&params, |p| {
            let fwd = forward_example(p, &config, &ex, &mut None);
            let grads = backward(&fwd.loss);
            (fwd.loss.item(), Some(fwd.bound.gradients(p, &grads)))
        }));
    }
    worst
}

pub fn run(seeds: u64) -> Report {
    let mut text = String::new();
    let mut all_passed = true;
    let _ = writeln!(
        text,
        "finite-difference gradient check: eps = {EPS:e}, tolerance = {TOL:e}, {seeds} seeds per component"
    );
    let components: Vec<(&str, f64)> = vec![
        ("ggnn_layer", layer_worst(EncoderKind::Ggnn, seeds)),
        ("gat_layer", layer_worst(EncoderKind::Gat, seeds)),
        ("gin_layer", layer_worst(EncoderKind::Gin, seeds)),
        ("bilstm", bilstm_worst(seeds)),
        ("end_to_end_loss", end_to_end_worst(seeds)),
    ];
    for (name, err) in components {
        let ok = err < TOL;
        all_passed &= ok;
        let _ = writeln!(
            text,
            "{name}\tmax_rel_err {err:.3e}\t{}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Report { text, all_passed }
}
