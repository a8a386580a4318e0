//! Attention LSTM decoder with coverage and copy, NLL loss, and beam
//! search over anything that implements [`StepDecoder`].

use crate::cells::{lstm_cell, LstmState};
use crate::params::{BoundParams, ParamSet};
use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};
use crate::vocab::{Vocabulary, UNK};
use rand::Rng;

/// Floor applied to target probabilities before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Base vocabulary extended with this example's out-of-vocabulary source
/// node labels, so attention mass can be copied onto them.
#[derive(Clone, Debug)]
pub struct ExtendedVocab {
    pub base_size: usize,
    /// Extended-vocabulary id of each source node, in source (DFS) order.
    pub copy_ids: Vec<usize>,
    /// Labels owning the ids `base_size..`, in first-occurrence order.
    pub oov_labels: Vec<String>,
}

impl ExtendedVocab {
    /// `source_labels` are the DFS-ordered view-node labels of the example.
    pub fn build(vocab: &Vocabulary, source_labels: &[String]) -> Self {
        let base_size = vocab.len();
        let mut oov_labels: Vec<String> = Vec::new();
        let mut copy_ids = Vec::with_capacity(source_labels.len());
        for label in source_labels {
            if vocab.contains(label) {
                copy_ids.push(vocab.id(label));
            } else if let Some(pos) = oov_labels.iter().position(|l| l == label) {
                copy_ids.push(base_size + pos);
            } else {
                oov_labels.push(label.clone());
                copy_ids.push(base_size + oov_labels.len() - 1);
            }
        }
        ExtendedVocab {
            base_size,
            copy_ids,
            oov_labels,
        }
    }

    pub fn size(&self) -> usize {
        self.base_size + self.oov_labels.len()
    }

    /// Extended id for a target token: base id if in vocabulary, the copy
    /// id if it labels a source node, UNK otherwise.
    pub fn target_id(&self, vocab: &Vocabulary, token: &str) -> usize {
        if vocab.contains(token) {
            return vocab.id(token);
        }
        match self.oov_labels.iter().position(|l| l == token) {
            Some(pos) => self.base_size + pos,
            None => UNK,
        }
    }

    pub fn token<'a>(&'a self, vocab: &'a Vocabulary, id: usize) -> &'a str {
        if id < self.base_size {
            vocab.token(id)
        } else {
            &self.oov_labels[id - self.base_size]
        }
    }
}

/// Decoder recurrent state: two LSTM layers, the coverage vector (the
/// elementwise sum of all previous attention distributions) and the
/// previous context vector for input feeding.
#[derive(Clone)]
pub struct DecoderState<T: Scalar> {
    pub layers: Vec<LstmState<T>>,
    pub coverage: Var<T>,
    pub context: Var<T>,
}

/// Zeroed state for `t = 0`.
pub fn init_decoder_state<T: Scalar>(
    tape: &Tape<T>,
    num_nodes: usize,
    hidden: usize,
    num_layers: usize,
) -> DecoderState<T> {
    let zero_vec = |len: usize| tape.constant(Tensor::zeros(vec![len]));
    DecoderState {
        layers: (0..num_layers)
            .map(|_| LstmState {
                h: zero_vec(hidden),
                c: zero_vec(hidden),
            })
            .collect(),
        coverage: zero_vec(num_nodes),
        context: zero_vec(hidden),
    }
}

/// Coverage-aware additive attention over the encoder states:
/// `e_i = v . tanh(W_h h_i + W_s s_t + w_c c_i + b)`, softmaxed into the
/// distribution, with the context as the attention-weighted state sum.
pub fn attention<T: Scalar>(
    s_t: &Var<T>,
    encoder_states: &Var<T>,
    coverage: &Var<T>,
    p: &BoundParams<T>,
) -> (Var<T>, Var<T>) {
    assert_eq!(
        encoder_states.value().rows(),
        coverage.value().len(),
        "attention: {} encoder rows but coverage length {}",
        encoder_states.value().rows(),
        coverage.value().len()
    );
    let scores = encoder_states
        .matmul(&p.var("attn.wh"))
        .add_row(&s_t.vecmat(&p.var("attn.ws")))
        .add(&coverage.outer(&p.var("attn.wc")))
        .add_row(&p.var("attn.b"))
        .tanh()
        .matvec(&p.var("attn.v"));
    let a_t = scores.softmax_last();
    let context = a_t.vecmat(encoder_states);
    (a_t, context)
}

/// Pointer-generator mixture over the extended vocabulary:
/// `P(w) = p_gen P_vocab(w) + (1 - p_gen) sum_{i: label(i)=w} a_i`.
pub fn copy_distribution<T: Scalar>(
    p_vocab: &Var<T>,
    a_t: &Var<T>,
    p_gen: &Var<T>,
    ext: &ExtendedVocab,
) -> Var<T> {
    let tape = p_vocab.tape().clone();
    let ext_size = ext.size();
    let mut gen_part = p_vocab.mul_scalar(p_gen);
    if ext_size > ext.base_size {
        let zeros = tape.constant(Tensor::zeros(vec![ext_size - ext.base_size]));
        gen_part = gen_part.concat(&zeros);
    }
    let copy_gate = p_gen.scale(-1.0).add_const(1.0);
    let copy_part = a_t.mul_scalar(&copy_gate).scatter_add(&ext.copy_ids, ext_size);
    gen_part.add(&copy_part)
}

/// Names and sizes the decoder expects in its parameter set.
pub struct DecoderDims {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub vocab_size: usize,
}

/// Register decoder + attention + pointer parameters.
pub fn init_decoder<T: Scalar, R: Rng>(params: &mut ParamSet<T>, dims: &DecoderDims, rng: &mut R) {
    let (e, d, v) = (dims.embedding_dim, dims.hidden, dims.vocab_size);
    params.insert("dec.l0.wx", Tensor::glorot(rng, e + d, 4 * d));
    params.insert("dec.l0.wh", Tensor::glorot(rng, d, 4 * d));
    params.insert("dec.l0.b", Tensor::zeros(vec![4 * d]));
    params.insert("dec.l1.wx", Tensor::glorot(rng, d, 4 * d));
    params.insert("dec.l1.wh", Tensor::glorot(rng, d, 4 * d));
    params.insert("dec.l1.b", Tensor::zeros(vec![4 * d]));
    params.insert("attn.wh", Tensor::glorot(rng, d, d));
    params.insert("attn.ws", Tensor::glorot(rng, d, d));
    params.insert("attn.wc", Tensor::uniform(rng, vec![d], -0.1, 0.1));
    params.insert("attn.b", Tensor::zeros(vec![d]));
    params.insert("attn.v", Tensor::uniform(rng, vec![d], -0.1, 0.1));
    params.insert("pgen.w", Tensor::uniform(rng, vec![2 * d + e], -0.1, 0.1));
    params.insert("pgen.b", Tensor::zeros(vec![]));
    params.insert("out.w", Tensor::glorot(rng, 2 * d, v));
    params.insert("out.b", Tensor::zeros(vec![v]));
}

/// One decoder step: embed the previous token (extended ids fall back to
/// UNK), run the two LSTM layers with input feeding, attend with coverage,
/// mix the copy distribution, and roll coverage forward.
pub fn decode_step<T: Scalar>(
    prev_token: usize,
    state: &DecoderState<T>,
    encoder_states: &Var<T>,
    embed_tgt: &Var<T>,
    p: &BoundParams<T>,
    ext: &ExtendedVocab,
    hidden: usize,
) -> (Var<T>, DecoderState<T>) {
    let emb_id = if prev_token < embed_tgt.value().rows() {
        prev_token
    } else {
        UNK // copied tokens have no embedding row
    };
    let emb = embed_tgt.row_at(emb_id);
    let x0 = emb.concat(&state.context);
    let l0 = lstm_cell(
        &x0,
        &state.layers[0],
        &p.var("dec.l0.wx"),
        &p.var("dec.l0.wh"),
        &p.var("dec.l0.b"),
        hidden,
    );
    let l1 = lstm_cell(
        &l0.h,
        &state.layers[1],
        &p.var("dec.l1.wx"),
        &p.var("dec.l1.wh"),
        &p.var("dec.l1.b"),
        hidden,
    );
    let s_t = l1.h.clone();
    let (a_t, context) = attention(&s_t, encoder_states, &state.coverage, p);
    let p_gen = context
        .concat(&s_t)
        .concat(&emb)
        .mul(&p.var("pgen.w"))
        .sum()
        .add(&p.var("pgen.b"))
        .sigmoid();
    let p_vocab = s_t
        .concat(&context)
        .vecmat(&p.var("out.w"))
        .add(&p.var("out.b"))
        .softmax_last();
    let dist = copy_distribution(&p_vocab, &a_t, &p_gen, ext);
    let new_state = DecoderState {
        layers: vec![l0, l1],
        coverage: state.coverage.add(&a_t),
        context,
    };
    (dist, new_state)
}

/// Teacher-forced negative log-likelihood, summed over time. Returns the
/// loss and the number of positions where the target probability had to
/// be clamped at [`PROB_FLOOR`] (reported in training diagnostics).
pub fn nll_loss<T: Scalar>(step_dists: &[Var<T>], targets: &[usize]) -> (Var<T>, usize) {
    assert_eq!(
        step_dists.len(),
        targets.len(),
        "nll_loss: {} distributions for {} targets",
        step_dists.len(),
        targets.len()
    );
    assert!(!targets.is_empty(), "nll_loss: empty target sequence");
    let mut clamped = 0usize;
    let mut total: Option<Var<T>> = None;
    for (dist, &target) in step_dists.iter().zip(targets) {
        let prob = dist.select(target);
        if prob.item().to_f64().unwrap() <= PROB_FLOOR {
            clamped += 1;
        }
        let term = prob.log_clamped(PROB_FLOOR).neg();
        total = Some(match total {
            Some(acc) => acc.add(&term),
            None => term,
        });
    }
    (total.expect("nonempty targets"), clamped)
}

/// Anything beam search can drive: a start state and a step that maps the
/// previous token to a probability distribution over the extended
/// vocabulary.
pub trait StepDecoder {
    type State: Clone;
    fn start(&self) -> Self::State;
    fn step(&self, prev_token: usize, state: &Self::State) -> (Vec<f64>, Self::State);
}

/// A finished or growing beam candidate.
#[derive(Clone)]
pub struct Hypothesis<S> {
    pub tokens: Vec<usize>,
    pub score: f64,
    pub finished: bool,
    state: S,
}

impl<S> Hypothesis<S> {
    fn normalized(&self) -> f64 {
        self.score / self.tokens.len().max(1) as f64
    }
}

/// Standard beam search. Hypotheses that emit EOS are set aside as
/// finished; the best finished hypothesis under length normalization
/// (score / length) wins, falling back to the best unfinished one at
/// `max_len`. Returns emitted tokens without BOS/EOS.
///
/// Panics if `max_len < 1` or `beam_size < 1`.
pub fn beam_search<D: StepDecoder>(
    decoder: &D,
    bos: usize,
    eos: usize,
    beam_size: usize,
    max_len: usize,
) -> Vec<usize> {
    assert!(max_len >= 1, "beam_search: max_len must be at least 1");
    assert!(beam_size >= 1, "beam_search: beam_size must be at least 1");
    let mut beam = vec![Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        finished: false,
        state: decoder.start(),
    }];
    let mut finished: Vec<Hypothesis<D::State>> = Vec::new();

    for _ in 0..max_len {
        // (score, hyp index, token, state)
        let mut candidates: Vec<(f64, usize, usize, D::State)> = Vec::new();
        for (hi, hyp) in beam.iter().enumerate() {
            let prev = *hyp.tokens.last().unwrap_or(&bos);
            let (dist, state) = decoder.step(prev, &hyp.state);
            for (token, &prob) in dist.iter().enumerate() {
                let score = hyp.score + prob.max(PROB_FLOOR).ln();
                candidates.push((score, hi, token, state.clone()));
            }
        }
        // Deterministic order: score desc, then hypothesis, then token id.
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        // Consume only the strongest candidates: EOS endings among the top
        // 2*beam go to the finished pool, the rest refill the beam.
        let mut next = Vec::with_capacity(beam_size);
        for (taken, (score, hi, token, state)) in candidates.into_iter().enumerate() {
            if taken >= 2 * beam_size || next.len() >= beam_size {
                break;
            }
            let mut tokens = beam[hi].tokens.clone();
            tokens.push(token);
            let hyp = Hypothesis {
                tokens,
                score,
                finished: token == eos,
                state,
            };
            if hyp.finished {
                finished.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        beam = next;
        if beam.is_empty() || finished.len() >= beam_size {
            break;
        }
    }

    let pick = |hyps: &[Hypothesis<D::State>]| -> Option<Vec<usize>> {
        hyps.iter()
            .max_by(|a, b| {
                a.normalized()
                    .partial_cmp(&b.normalized())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|h| {
                let mut t = h.tokens.clone();
                if t.last() == Some(&eos) {
                    t.pop();
                }
                t
            })
    };
    pick(&finished).or_else(|| pick(&beam)).unwrap_or_default()
}

/// Greedy argmax decoding (ties break to the lowest token id).
pub fn greedy_decode<D: StepDecoder>(
    decoder: &D,
    bos: usize,
    eos: usize,
    max_len: usize,
) -> Vec<usize> {
    assert!(max_len >= 1, "greedy_decode: max_len must be at least 1");
    let mut state = decoder.start();
    let mut tokens = Vec::new();
    let mut prev = bos;
    for _ in 0..max_len {
        let (dist, next_state) = decoder.step(prev, &state);
        let mut best = 0usize;
        for (i, &p) in dist.iter().enumerate() {
            if p > dist[best] {
                best = i;
            }
        }
        if best == eos {
            break;
        }
        tokens.push(best);
        prev = best;
        state = next_state;
    }
    tokens
}
