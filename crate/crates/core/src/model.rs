//! End-to-end model assembly: parameter schema per ablation mode, the
//! encoder-to-decoder forward pass, teacher-forced loss, and generation.

use crate::amr::{dfs_order, levi_transform, reverse_view};
use crate::corpus::Example;
use crate::decoder::{
    beam_search, decode_step, greedy_decode, init_decoder, init_decoder_state, nll_loss,
    DecoderDims, DecoderState, ExtendedVocab, StepDecoder,
};
use crate::encoder::{
    bilstm_encode, dual_encode, embed_nodes, init_bilstm, init_graph_encoder, DropoutCtx,
    EncoderConfig, Sides,
};
use crate::params::{BoundParams, ParamSet};
use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};
use crate::vocab::{Vocabulary, BOS, EOS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which encoder components exist (the rows of the ablation study).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationMode {
    BilstmOnly,
    TdOnly,
    BuOnly,
    Dual,
}

impl AblationMode {
    pub fn sides(self) -> Sides {
        match self {
            AblationMode::BilstmOnly => Sides { top_down: false, bottom_up: false },
            AblationMode::TdOnly => Sides { top_down: true, bottom_up: false },
            AblationMode::BuOnly => Sides { top_down: false, bottom_up: true },
            AblationMode::Dual => Sides { top_down: true, bottom_up: true },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::BilstmOnly => "bilstm_only",
            AblationMode::TdOnly => "td_only",
            AblationMode::BuOnly => "bu_only",
            AblationMode::Dual => "dual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bilstm_only" => Some(AblationMode::BilstmOnly),
            "td_only" => Some(AblationMode::TdOnly),
            "bu_only" => Some(AblationMode::BuOnly),
            "dual" => Some(AblationMode::Dual),
            _ => None,
        }
    }

    pub const ALL: [AblationMode; 4] = [
        AblationMode::BilstmOnly,
        AblationMode::TdOnly,
        AblationMode::BuOnly,
        AblationMode::Dual,
    ];
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub ablation: AblationMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            ablation: AblationMode::Dual,
        }
    }
}

impl ModelConfig {
    pub fn decoder_hidden(&self) -> usize {
        self.encoder.bilstm_width()
    }
}

/// An example preprocessed into model inputs: both view adjacencies,
/// vocabulary ids, the DFS order, and the extended target vocabulary.
#[derive(Clone, Debug)]
pub struct EncodedExample {
    pub in_top_down: Vec<Vec<usize>>,
    pub in_bottom_up: Vec<Vec<usize>>,
    /// Source vocab id per view node, in view-node order.
    pub src_ids: Vec<usize>,
    pub dfs: Vec<usize>,
    /// View-node labels in DFS order; these are the copy sources.
    pub dfs_labels: Vec<String>,
    pub ext: ExtendedVocab,
    /// Sentence as extended-vocabulary ids, EOS appended.
    pub target_ext: Vec<usize>,
}

impl EncodedExample {
    pub fn from_example(ex: &Example, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Self {
        let view_t = levi_transform(&ex.graph);
        let view_b = reverse_view(&view_t);
        let dfs = dfs_order(&view_t);
        let src_ids: Vec<usize> = view_t.node_labels.iter().map(|l| src_vocab.id(l)).collect();
        let dfs_labels: Vec<String> = dfs
            .iter()
            .map(|&i| view_t.node_labels[i].clone())
            .collect();
        let ext = ExtendedVocab::build(tgt_vocab, &dfs_labels);
        let mut target_ext: Vec<usize> = ex
            .sentence
            .iter()
            .map(|t| ext.target_id(tgt_vocab, t))
            .collect();
        target_ext.push(EOS);
        EncodedExample {
            in_top_down: view_t.in_neighbors,
            in_bottom_up: view_b.in_neighbors,
            src_ids,
            dfs,
            dfs_labels,
            ext,
            target_ext,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.src_ids.len()
    }
}

/// Build the full parameter set for a configuration. Ablated graph
/// encoders own no parameters at all.
pub fn init_model_params<T: Scalar>(
    config: &ModelConfig,
    src_vocab_size: usize,
    tgt_vocab_size: usize,
    seed: u64,
) -> ParamSet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = &config.encoder;
    let mut params = ParamSet::new();
    params.insert(
        "embed.src",
        Tensor::uniform(&mut rng, vec![src_vocab_size, enc.embedding_dim], -0.1, 0.1),
    );
    params.insert(
        "embed.tgt",
        Tensor::uniform(&mut rng, vec![tgt_vocab_size, enc.embedding_dim], -0.1, 0.1),
    );
    let sides = config.ablation.sides();
    if sides.top_down {
        init_graph_encoder(&mut params, "ge_t", enc, &mut rng);
    }
    if sides.bottom_up {
        init_graph_encoder(&mut params, "ge_b", enc, &mut rng);
    }
    init_bilstm(&mut params, enc, &mut rng);
    init_decoder(
        &mut params,
        &DecoderDims {
            embedding_dim: enc.embedding_dim,
            hidden: config.decoder_hidden(),
            vocab_size: tgt_vocab_size,
        },
        &mut rng,
    );
    params
}

/// Encoder half of the forward pass; returns the final hidden states
/// `h_i`, one row per view node, in DFS order.
pub fn run_encoder<T: Scalar>(
    p: &BoundParams<T>,
    config: &ModelConfig,
    ex: &EncodedExample,
    tape: &Tape<T>,
    dropout: &mut Option<DropoutCtx>,
) -> Var<T> {
    let e = embed_nodes(&p.var("embed.src"), &ex.src_ids);
    let states = dual_encode(
        &e,
        &ex.in_top_down,
        &ex.in_bottom_up,
        p,
        &config.encoder,
        config.ablation.sides(),
        dropout,
    );
    let fused_dfs = states.fused.rows(&ex.dfs);
    let rows: Vec<Var<T>> = (0..ex.num_nodes()).map(|i| fused_dfs.row_at(i)).collect();
    bilstm_encode(&rows, p, config.encoder.lstm_hidden_per_direction, tape)
}

/// Everything the trainer needs from one example's forward pass.
pub struct ExampleForward<T: Scalar> {
    pub tape: Tape<T>,
    pub bound: BoundParams<T>,
    /// Sum of per-step NLL over the target (including EOS).
    pub loss: Var<T>,
    pub step_dists: Vec<Var<T>>,
    pub clamped: usize,
    pub token_count: usize,
}

/// Teacher-forced forward pass over one example on a fresh tape.
pub fn forward_example<T: Scalar>(
    params: &ParamSet<T>,
    config: &ModelConfig,
    ex: &EncodedExample,
    dropout: &mut Option<DropoutCtx>,
) -> ExampleForward<T> {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let enc = run_encoder(&bound, config, ex, &tape, dropout);
    let embed_tgt = bound.var("embed.tgt");
    let hidden = config.decoder_hidden();
    let mut state = init_decoder_state(&tape, ex.num_nodes(), hidden, 2);
    let mut dists = Vec::with_capacity(ex.target_ext.len());
    let mut prev = BOS;
    for &target in &ex.target_ext {
        let (dist, next_state) = decode_step(prev, &state, &enc, &embed_tgt, &bound, &ex.ext, hidden);
        dists.push(dist);
        state = next_state;
        prev = target; // gold previous token at train time
    }
    let (loss, clamped) = nll_loss(&dists, &ex.target_ext);
    ExampleForward {
        tape,
        bound,
        loss,
        step_dists: dists,
        clamped,
        token_count: ex.target_ext.len(),
    }
}

/// [`StepDecoder`] over the real model for one example (no gradients).
pub struct ModelStepDecoder<'a, T: Scalar> {
    bound: &'a BoundParams<T>,
    encoder_states: Var<T>,
    embed_tgt: Var<T>,
    ext: &'a ExtendedVocab,
    hidden: usize,
    tape: &'a Tape<T>,
    num_nodes: usize,
}

impl<'a, T: Scalar> ModelStepDecoder<'a, T> {
    pub fn new(
        bound: &'a BoundParams<T>,
        tape: &'a Tape<T>,
        config: &ModelConfig,
        ex: &'a EncodedExample,
        encoder_states: Var<T>,
    ) -> Self {
        ModelStepDecoder {
            bound,
            encoder_states,
            embed_tgt: bound.var("embed.tgt"),
            ext: &ex.ext,
            hidden: config.decoder_hidden(),
            tape,
            num_nodes: ex.num_nodes(),
        }
    }
}

impl<T: Scalar> StepDecoder for ModelStepDecoder<'_, T> {
    type State = DecoderState<T>;

    fn start(&self) -> DecoderState<T> {
        init_decoder_state(self.tape, self.num_nodes, self.hidden, 2)
    }

    fn step(&self, prev_token: usize, state: &DecoderState<T>) -> (Vec<f64>, DecoderState<T>) {
        let (dist, next) = decode_step(
            prev_token,
            state,
            &self.encoder_states,
            &self.embed_tgt,
            self.bound,
            self.ext,
            self.hidden,
        );
        let probs = dist.value().data.iter().map(|x| x.to_f64().unwrap()).collect();
        (probs, next)
    }
}

/// Decode one example to token strings. `beam_size = 1` is greedy.
pub fn decode_example(
    params: &ParamSet<f32>,
    config: &ModelConfig,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
    example: &Example,
    beam_size: usize,
    max_len: usize,
) -> Vec<String> {
    let ex = EncodedExample::from_example(example, src_vocab, tgt_vocab);
    let tape = Tape::new();
    let bound = params.bind_frozen(&tape);
    let enc = run_encoder(&bound, config, &ex, &tape, &mut None);
    let stepper = ModelStepDecoder::new(&bound, &tape, config, &ex, enc);
    let ids = if beam_size == 1 {
        greedy_decode(&stepper, BOS, EOS, max_len)
    } else {
        beam_search(&stepper, BOS, EOS, beam_size, max_len)
    };
    ids.iter()
        .map(|&id| ex.ext.token(tgt_vocab, id).to_string())
        .collect()
}
