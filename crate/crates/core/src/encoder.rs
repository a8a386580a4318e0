//! Dual graph encoder: node embeddings, the three GNN layer types, the
//! top-down/bottom-up encoding pass, and the BiLSTM over the DFS order.
//!
//! Every node state matrix is `[|V_t|, width]` with one row per view node.
//! Aggregation always runs over the *incoming* neighborhood of the view
//! being encoded, which is what distinguishes the two views.

use crate::cells::{gru_rows, lstm_cell, LstmState};
use crate::params::{BoundParams, ParamSet};
use crate::tape::{Tape, Var};
use crate::tensor::{cast, Scalar, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    Ggnn,
    Gat,
    Gin,
}

impl EncoderKind {
    pub fn default_layers(self) -> usize {
        match self {
            EncoderKind::Gin => 2,
            EncoderKind::Gat => 5,
            EncoderKind::Ggnn => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Ggnn => "ggnn",
            EncoderKind::Gat => "gat",
            EncoderKind::Gin => "gin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ggnn" => Some(EncoderKind::Ggnn),
            "gat" => Some(EncoderKind::Gat),
            "gin" => Some(EncoderKind::Gin),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncoderConfig {
    pub encoder_kind: EncoderKind,
    pub num_layers: usize,
    pub graph_hidden: usize,
    pub embedding_dim: usize,
    pub lstm_hidden_per_direction: usize,
    pub dropout_rate: f64,
    pub gat_heads: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            encoder_kind: EncoderKind::Ggnn,
            num_layers: EncoderKind::Ggnn.default_layers(),
            graph_hidden: 300,
            embedding_dim: 300,
            lstm_hidden_per_direction: 450,
            dropout_rate: 0.3,
            gat_heads: 1,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_layers == 0
            || self.graph_hidden == 0
            || self.embedding_dim == 0
            || self.lstm_hidden_per_direction == 0
            || self.gat_heads == 0
        {
            return Err("encoder dimensions must be positive".into());
        }
        if self.graph_hidden % self.gat_heads != 0 {
            return Err(format!(
                "graph_hidden {} is not divisible by gat_heads {}",
                self.graph_hidden, self.gat_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    /// Width of the fused node representation `[h_t || h_b || e]`.
    pub fn fused_width(&self) -> usize {
        2 * self.graph_hidden + self.embedding_dim
    }

    /// Width of the BiLSTM output (and the decoder hidden size).
    pub fn bilstm_width(&self) -> usize {
        2 * self.lstm_hidden_per_direction
    }
}

/// Per-example node states produced by the encoder stack.
pub struct NodeStates<T: Scalar> {
    /// `e_i`: `[|V_t|, embedding_dim]`, in view-node order.
    pub embeddings: Var<T>,
    /// `h^t_i`: `[|V_t|, graph_hidden]` (zeros when the side is ablated).
    pub top_down: Var<T>,
    /// `h^b_i`: same shape as `top_down`.
    pub bottom_up: Var<T>,
    /// `r_i = [h^t_i || h^b_i || e_i]`.
    pub fused: Var<T>,
}

/// Look up one embedding row per view node.
pub fn embed_nodes<T: Scalar>(table: &Var<T>, src_ids: &[usize]) -> Var<T> {
    table.rows(src_ids)
}

/// Register the parameters of one graph encoder stack under `prefix`
/// (`ge_t` or `ge_b`).
pub fn init_graph_encoder<T: Scalar, R: Rng>(
    params: &mut ParamSet<T>,
    prefix: &str,
    config: &EncoderConfig,
    rng: &mut R,
) {
    let h = config.graph_hidden;
    let e = config.embedding_dim;
    params.insert(format!("{prefix}.proj.w"), Tensor::glorot(rng, e, h));
    params.insert(format!("{prefix}.proj.b"), Tensor::zeros(vec![h]));
    for l in 0..config.num_layers {
        match config.encoder_kind {
            EncoderKind::Ggnn => {
                params.insert(format!("{prefix}.l{l}.w1"), Tensor::glorot(rng, h, h));
                for gate in ["wz", "wr", "wc"] {
                    params.insert(
                        format!("{prefix}.l{l}.{gate}"),
                        Tensor::glorot(rng, 2 * h, h),
                    );
                }
                for gate in ["bz", "br", "bc"] {
                    params.insert(format!("{prefix}.l{l}.{gate}"), Tensor::zeros(vec![h]));
                }
            }
            EncoderKind::Gat => {
                params.insert(format!("{prefix}.l{l}.w2"), Tensor::glorot(rng, h, h));
                let hd = h / config.gat_heads;
                for head in 0..config.gat_heads {
                    params.insert(
                        format!("{prefix}.l{l}.a{head}"),
                        Tensor::uniform(rng, vec![2 * hd], -0.1, 0.1),
                    );
                }
            }
            EncoderKind::Gin => {
                params.insert(format!("{prefix}.l{l}.w1"), Tensor::glorot(rng, h, h));
                params.insert(format!("{prefix}.l{l}.b1"), Tensor::zeros(vec![h]));
                params.insert(format!("{prefix}.l{l}.w2"), Tensor::glorot(rng, h, h));
                params.insert(format!("{prefix}.l{l}.b2"), Tensor::zeros(vec![h]));
            }
        }
    }
}

/// GGNN layer: `h_i' = GRU(h_i, sum_{j in N(i)} W1 h_j)` with an empty
/// neighborhood aggregating to zero.
pub fn ggnn_layer<T: Scalar>(
    h: &Var<T>,
    in_neighbors: &[Vec<usize>],
    p: &BoundParams<T>,
    prefix: &str,
) -> Var<T> {
    let agg = h.matmul(&p.var(&format!("{prefix}.w1"))).neighbor_sum(in_neighbors);
    gru_rows(
        h,
        &agg,
        &p.var(&format!("{prefix}.wz")),
        &p.var(&format!("{prefix}.bz")),
        &p.var(&format!("{prefix}.wr")),
        &p.var(&format!("{prefix}.br")),
        &p.var(&format!("{prefix}.wc")),
        &p.var(&format!("{prefix}.bc")),
    )
}

/// GAT layer: attention over `{i} and N(i)` per head, scores
/// `LeakyReLU(a^T [W2 h_i || W2 h_j])` softmax-normalized, heads
/// concatenated.
pub fn gat_layer<T: Scalar>(
    h: &Var<T>,
    in_neighbors: &[Vec<usize>],
    p: &BoundParams<T>,
    prefix: &str,
    heads: usize,
) -> Var<T> {
    let wh = h.matmul(&p.var(&format!("{prefix}.w2")));
    let hidden = wh.value().cols();
    assert_eq!(hidden % heads, 0, "gat: hidden {hidden} not divisible by heads {heads}");
    let hd = hidden / heads;
    let n = wh.value().rows();
    let mut head_outputs = Vec::with_capacity(heads);
    for head in 0..heads {
        let wh_h = if heads == 1 {
            wh.clone()
        } else {
            wh.slice_last(head * hd, hd)
        };
        let a = p.var(&format!("{prefix}.a{head}"));
        let a_self = a.slice_last(0, hd);
        let a_nbr = a.slice_last(hd, hd);
        // score(i, j) = leaky(s[i] + t[j]) decomposes the concat form
        let s = wh_h.matvec(&a_self);
        let t = wh_h.matvec(&a_nbr);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut ids = Vec::with_capacity(1 + in_neighbors[i].len());
            ids.push(i);
            ids.extend_from_slice(&in_neighbors[i]);
            let alpha = t
                .elems(&ids)
                .add_scalar(&s.select(i))
                .leaky_relu(0.2)
                .softmax_last();
            rows.push(alpha.vecmat(&wh_h.rows(&ids)));
        }
        head_outputs.push(h.tape().stack_rows(&rows));
    }
    head_outputs
        .into_iter()
        .reduce(|acc, x| acc.concat(&x))
        .expect("at least one head")
}

/// GIN layer: `h_i' = MLP(h_i + sum_{j in N(i)} h_j)` with a two-affine
/// ReLU MLP and no epsilon scaling.
pub fn gin_layer<T: Scalar>(
    h: &Var<T>,
    in_neighbors: &[Vec<usize>],
    p: &BoundParams<T>,
    prefix: &str,
) -> Var<T> {
    h.add(&h.neighbor_sum(in_neighbors))
        .matmul(&p.var(&format!("{prefix}.w1")))
        .add_row(&p.var(&format!("{prefix}.b1")))
        .relu()
        .matmul(&p.var(&format!("{prefix}.w2")))
        .add_row(&p.var(&format!("{prefix}.b2")))
}

/// Dropout mask generation for one layer output; entries survive with
/// probability `1 - rate` and are scaled by `1/(1 - rate)` so the
/// expectation is unchanged (inverted dropout).
fn dropout_mask<T: Scalar>(rng: &mut ChaCha8Rng, shape: Vec<usize>, rate: f64) -> Tensor<T> {
    let keep = 1.0 - rate;
    let len = shape.iter().product();
    let data = (0..len)
        .map(|_| {
            if rng.gen::<f64>() < keep {
                cast::<T>(1.0 / keep)
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor { shape, data }
}

/// Train-time dropout context; `None` means evaluation (identity).
pub struct DropoutCtx {
    rng: ChaCha8Rng,
    rate: f64,
}

impl DropoutCtx {
    pub fn new(seed: u64, rate: f64) -> Self {
        DropoutCtx {
            rng: ChaCha8Rng::seed_from_u64(seed),
            rate,
        }
    }
}

/// Run `num_layers` of the configured layer type over one view.
/// `e_proj` is the layer-0 input (embeddings projected to graph_hidden).
pub fn encode_view<T: Scalar>(
    e_proj: &Var<T>,
    in_neighbors: &[Vec<usize>],
    p: &BoundParams<T>,
    side: &str,
    config: &EncoderConfig,
    dropout: &mut Option<DropoutCtx>,
) -> Var<T> {
    let mut h = e_proj.clone();
    for l in 0..config.num_layers {
        let prefix = format!("{side}.l{l}");
        h = match config.encoder_kind {
            EncoderKind::Ggnn => ggnn_layer(&h, in_neighbors, p, &prefix),
            EncoderKind::Gat => gat_layer(&h, in_neighbors, p, &prefix, config.gat_heads),
            EncoderKind::Gin => gin_layer(&h, in_neighbors, p, &prefix),
        };
        if let Some(ctx) = dropout {
            let mask = dropout_mask::<T>(&mut ctx.rng, h.value().shape.clone(), ctx.rate);
            h = h.dropout(&mask);
        }
    }
    h
}

/// Which sides of the dual encoder are present.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sides {
    pub top_down: bool,
    pub bottom_up: bool,
}

impl Sides {
    pub fn dual() -> Self {
        Sides { top_down: true, bottom_up: true }
    }
}

/// Dual graph encoding: run disjoint GE_t over the top-down incoming
/// neighborhoods and GE_b over the bottom-up ones, then fuse
/// `r_i = [h^t_i || h^b_i || e_i]`. An ablated side contributes a zero
/// block (and owns no parameters).
pub fn dual_encode<T: Scalar>(
    embeddings: &Var<T>,
    in_top_down: &[Vec<usize>],
    in_bottom_up: &[Vec<usize>],
    p: &BoundParams<T>,
    config: &EncoderConfig,
    sides: Sides,
    dropout: &mut Option<DropoutCtx>,
) -> NodeStates<T> {
    assert_eq!(
        in_top_down.len(),
        in_bottom_up.len(),
        "dual_encode: view node counts differ ({} vs {})",
        in_top_down.len(),
        in_bottom_up.len()
    );
    let n = in_top_down.len();
    let tape = embeddings.tape().clone();
    let zeros = || tape.constant(Tensor::zeros(vec![n, config.graph_hidden]));
    let encode_side = |side: &str, adj: &[Vec<usize>], dropout: &mut Option<DropoutCtx>| {
        let proj = embeddings
            .matmul(&p.var(&format!("{side}.proj.w")))
            .add_row(&p.var(&format!("{side}.proj.b")));
        encode_view(&proj, adj, p, side, config, dropout)
    };
    let top_down = if sides.top_down {
        encode_side("ge_t", in_top_down, dropout)
    } else {
        zeros()
    };
    let bottom_up = if sides.bottom_up {
        encode_side("ge_b", in_bottom_up, dropout)
    } else {
        zeros()
    };
    let fused = top_down.concat(&bottom_up).concat(embeddings);
    NodeStates {
        embeddings: embeddings.clone(),
        top_down,
        bottom_up,
        fused,
    }
}

/// Register BiLSTM parameters: input width is the fused width, output is
/// `2 * lstm_hidden_per_direction`.
pub fn init_bilstm<T: Scalar, R: Rng>(
    params: &mut ParamSet<T>,
    config: &EncoderConfig,
    rng: &mut R,
) {
    let input = config.fused_width();
    let l = config.lstm_hidden_per_direction;
    for dir in ["fwd", "bwd"] {
        params.insert(format!("bilstm.{dir}.wx"), Tensor::glorot(rng, input, 4 * l));
        params.insert(format!("bilstm.{dir}.wh"), Tensor::glorot(rng, l, 4 * l));
        params.insert(format!("bilstm.{dir}.b"), Tensor::zeros(vec![4 * l]));
    }
}

/// BiLSTM over the DFS-ordered fused representations: forward over
/// `r_1..r_n`, backward over `r_n..r_1`, zero initial states, output row
/// `i` is `[fwd_i || bwd_i]`.
///
/// Panics on an empty sequence.
pub fn bilstm_encode<T: Scalar>(
    rows: &[Var<T>],
    p: &BoundParams<T>,
    hidden_per_direction: usize,
    tape: &Tape<T>,
) -> Var<T> {
    assert!(!rows.is_empty(), "bilstm_encode: empty sequence");
    let run = |dir: &str, order: Vec<usize>| -> Vec<Var<T>> {
        let wx = p.var(&format!("bilstm.{dir}.wx"));
        let wh = p.var(&format!("bilstm.{dir}.wh"));
        let b = p.var(&format!("bilstm.{dir}.b"));
        let mut state = LstmState {
            h: tape.constant(Tensor::zeros(vec![hidden_per_direction])),
            c: tape.constant(Tensor::zeros(vec![hidden_per_direction])),
        };
        let mut out = vec![None; rows.len()];
        for i in order {
            state = lstm_cell(&rows[i], &state, &wx, &wh, &b, hidden_per_direction);
            out[i] = Some(state.h.clone());
        }
        out.into_iter().map(Option::unwrap).collect()
    };
    let fwd = run("fwd", (0..rows.len()).collect());
    let bwd = run("bwd", (0..rows.len()).rev().collect());
    let combined: Vec<Var<T>> = fwd
        .iter()
        .zip(&bwd)
        .map(|(f, b)| f.concat(b))
        .collect();
    tape.stack_rows(&combined)
}
