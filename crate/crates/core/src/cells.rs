//! Recurrent cells shared by the graph encoders, the BiLSTM and the decoder.

use crate::tape::Var;
use crate::tensor::Scalar;

#[derive(Clone)]
pub struct LstmState<T: Scalar> {
    pub h: Var<T>,
    pub c: Var<T>,
}

/// Standard LSTM step on vectors. `wx` is `[input, 4*hidden]`, `wh` is
/// `[hidden, 4*hidden]`, `b` is `[4*hidden]`; gate order i, f, g, o.
pub fn lstm_cell<T: Scalar>(
    x: &Var<T>,
    state: &LstmState<T>,
    wx: &Var<T>,
    wh: &Var<T>,
    b: &Var<T>,
    hidden: usize,
) -> LstmState<T> {
    let gates = x.vecmat(wx).add(&state.h.vecmat(wh)).add(b);
    let i = gates.slice_last(0, hidden).sigmoid();
    let f = gates.slice_last(hidden, hidden).sigmoid();
    let g = gates.slice_last(2 * hidden, hidden).tanh();
    let o = gates.slice_last(3 * hidden, hidden).sigmoid();
    let c = f.mul(&state.c).add(&i.mul(&g));
    let h = o.mul(&c.tanh());
    LstmState { h, c }
}

/// GRU step on row-stacked states: `h` and `agg` are `[n, hidden]`,
/// each `w*` is `[2*hidden, hidden]` applied to `[h || agg]`, biases are
/// `[hidden]`. Update rule `h' = (1 - z) h + z candidate`, so a closed
/// update gate (z = 0) passes the state through unchanged.
pub fn gru_rows<T: Scalar>(
    h: &Var<T>,
    agg: &Var<T>,
    wz: &Var<T>,
    bz: &Var<T>,
    wr: &Var<T>,
    br: &Var<T>,
    wc: &Var<T>,
    bc: &Var<T>,
) -> Var<T> {
    let ha = h.concat(agg);
    let z = ha.matmul(wz).add_row(bz).sigmoid();
    let r = ha.matmul(wr).add_row(br).sigmoid();
    let cand = r.mul(h).concat(agg).matmul(wc).add_row(bc).tanh();
    let keep = z.scale(-1.0).add_const(1.0);
    keep.mul(h).add(&z.mul(&cand))
}
