//! Reverse-mode automatic differentiation over a recording tape.
//!
//! A [`Tape`] records every primitive applied to [`Var`] handles during a
//! forward pass. [`backward`] then walks the record in reverse creation
//! order (a topological order by construction) and accumulates gradients
//! for every variable that requires them. A tape is single-threaded;
//! independent tapes may run on independent threads.

use crate::tensor::{
    add_into, cast, matmul_nn, matmul_nt, matmul_tn, matvec, outer, shape_mismatch, vecmat,
    Scalar, Tensor,
};
use std::cell::RefCell;
use std::rc::Rc;

type BackwardFn<T> = Box<dyn Fn(&Tensor<T>, &mut Vec<Option<Tensor<T>>>)>;

struct Node<T: Scalar> {
    value: Rc<Tensor<T>>,
    needs_grad: bool,
    backward: Option<BackwardFn<T>>,
}

/// Recording tape. Cheap to clone (shared handle).
#[derive(Clone)]
pub struct Tape<T: Scalar> {
    inner: Rc<RefCell<Vec<Node<T>>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: Rc::new(RefCell::new(Vec::new())),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.inner.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(
        &self,
        op: &'static str,
        value: Tensor<T>,
        needs_grad: bool,
        backward: Option<BackwardFn<T>>,
    ) -> Var<T> {
        debug_assert!(value.all_finite(), "{op}: non-finite values in output");
        let _ = op;
        let mut nodes = self.inner.borrow_mut();
        let idx = nodes.len();
        nodes.push(Node {
            value: Rc::new(value),
            needs_grad,
            backward,
        });
        Var {
            tape: self.clone(),
            idx,
        }
    }

    /// Register a differentiable leaf (a parameter or checked input).
    pub fn leaf(&self, value: Tensor<T>, requires_grad: bool) -> Var<T> {
        self.push("leaf", value, requires_grad, None)
    }

    /// Register a non-differentiable constant.
    pub fn constant(&self, value: Tensor<T>) -> Var<T> {
        self.push("constant", value, false, None)
    }

    /// Build a matrix whose rows are the given equal-length vectors.
    pub fn stack_rows(&self, rows: &[Var<T>]) -> Var<T> {
        assert!(!rows.is_empty(), "stack_rows: empty row list");
        let vals: Vec<Rc<Tensor<T>>> = rows.iter().map(|v| v.value()).collect();
        let cols = vals[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for v in &vals {
            if v.rank() != 1 || v.len() != cols {
                shape_mismatch("stack_rows", &vals[0].shape, &v.shape);
            }
            data.extend_from_slice(&v.data);
        }
        let needs = rows.iter().any(|v| v.needs_grad());
        let parents: Vec<(usize, bool)> = rows.iter().map(|v| (v.idx, v.needs_grad())).collect();
        let back: Option<BackwardFn<T>> = needs.then(|| {
            Box::new(move |g: &Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>| {
                for (r, &(idx, ng)) in parents.iter().enumerate() {
                    if ng {
                        add_into(&mut grads[idx], &Tensor::vector(g.row(r).to_vec()));
                    }
                }
            }) as BackwardFn<T>
        });
        self.push("stack_rows", Tensor::matrix(rows.len(), cols, data), needs, back)
    }
}

/// Handle to a tensor recorded on a tape.
#[derive(Clone)]
pub struct Var<T: Scalar> {
    tape: Tape<T>,
    idx: usize,
}

/// Gradients produced by [`backward`], addressable by the originating [`Var`].
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: &Var<T>) -> Option<&Tensor<T>> {
        self.grads.get(v.idx).and_then(|g| g.as_ref())
    }
}

/// Propagate gradients from a scalar loss back to every variable that
/// requires them. Fan-out accumulates additively.
///
/// Panics if `loss` is not scalar.
pub fn backward<T: Scalar>(loss: &Var<T>) -> Gradients<T> {
    assert!(
        loss.value().is_scalar(),
        "backward: loss has shape {:?}, expected a scalar",
        loss.value().shape
    );
    let nodes = loss.tape.inner.borrow();
    let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
    grads[loss.idx] = Some(Tensor::scalar(T::one()));
    for i in (0..=loss.idx).rev() {
        if grads[i].is_none() {
            continue;
        }
        if let Some(back) = &nodes[i].backward {
            let g = grads[i].take().expect("checked above");
            back(&g, &mut grads);
            grads[i] = Some(g);
        }
    }
    Gradients { grads }
}

macro_rules! assert_same_tape {
    ($a:expr, $b:expr) => {
        assert!(
            Rc::ptr_eq(&$a.tape.inner, &$b.tape.inner),
            "operands belong to different tapes"
        )
    };
}

impl<T: Scalar> Var<T> {
    pub fn value(&self) -> Rc<Tensor<T>> {
        self.tape.inner.borrow()[self.idx].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape.clone()
    }

    pub fn needs_grad(&self) -> bool {
        self.tape.inner.borrow()[self.idx].needs_grad
    }

    pub fn tape(&self) -> &Tape<T> {
        &self.tape
    }

    /// Scalar value of a rank-0 variable.
    pub fn item(&self) -> T {
        self.value().item()
    }

    fn unary(
        &self,
        op: &'static str,
        value: Tensor<T>,
        back: impl Fn(&Tensor<T>) -> Tensor<T> + 'static,
    ) -> Var<T> {
        let needs = self.needs_grad();
        let idx = self.idx;
        let f: Option<BackwardFn<T>> = needs.then(|| {
            Box::new(move |g: &Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>| {
                add_into(&mut grads[idx], &back(g));
            }) as BackwardFn<T>
        });
        self.tape.push(op, value, needs, f)
    }

    fn binary(
        &self,
        op: &'static str,
        rhs: &Var<T>,
        value: Tensor<T>,
        back_lhs: impl Fn(&Tensor<T>) -> Tensor<T> + 'static,
        back_rhs: impl Fn(&Tensor<T>) -> Tensor<T> + 'static,
    ) -> Var<T> {
        assert_same_tape!(self, rhs);
        let (nl, nr) = (self.needs_grad(), rhs.needs_grad());
        let needs = nl || nr;
        let (li, ri) = (self.idx, rhs.idx);
        let f: Option<BackwardFn<T>> = needs.then(|| {
            Box::new(move |g: &Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>| {
                if nl {
                    add_into(&mut grads[li], &back_lhs(g));
                }
                if nr {
                    add_into(&mut grads[ri], &back_rhs(g));
                }
            }) as BackwardFn<T>
        });
        self.tape.push(op, value, needs, f)
    }

    // --- linear algebra ---

    /// Matrix product `self * rhs` ([m,k] x [k,n]).
    pub fn matmul(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        let out = matmul_nn(&a, &b);
        let (ac, bc) = (a.clone(), b.clone());
        self.binary(
            "matmul",
            rhs,
            out,
            move |g| matmul_nt(g, &bc),
            move |g| matmul_tn(&ac, g),
        )
    }

    /// Matrix-vector product `self * x` ([m,k] x [k]).
    pub fn matvec(&self, x: &Var<T>) -> Var<T> {
        let (a, xv) = (self.value(), x.value());
        let out = matvec(&a, &xv);
        let (ac, xc) = (a.clone(), xv.clone());
        self.binary(
            "matvec",
            x,
            out,
            move |g| outer(g, &xc),
            move |g| vecmat(g, &ac),
        )
    }

    /// Vector-matrix product `self * rhs` ([m] x [m,k]).
    pub fn vecmat(&self, rhs: &Var<T>) -> Var<T> {
        let (xv, a) = (self.value(), rhs.value());
        let out = vecmat(&xv, &a);
        let (ac, xc) = (a.clone(), xv.clone());
        self.binary(
            "vecmat",
            rhs,
            out,
            move |g| matvec(&ac, g),
            move |g| outer(&xc, g),
        )
    }

    /// Outer product of two vectors.
    pub fn outer(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        let out = outer(&a, &b);
        let (ac, bc) = (a.clone(), b.clone());
        self.binary(
            "outer",
            rhs,
            out,
            move |g| matvec(g, &bc),
            move |g| vecmat(&ac, g),
        )
    }

    // --- elementwise arithmetic ---

    pub fn add(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        if a.shape != b.shape {
            shape_mismatch("add", &a.shape, &b.shape);
        }
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect();
        let out = Tensor::new(a.shape.clone(), data);
        self.binary("add", rhs, out, |g| g.clone(), |g| g.clone())
    }

    pub fn sub(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        if a.shape != b.shape {
            shape_mismatch("sub", &a.shape, &b.shape);
        }
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x - y).collect();
        let out = Tensor::new(a.shape.clone(), data);
        self.binary("sub", rhs, out, |g| g.clone(), |g| g.map(|x| -x))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        if a.shape != b.shape {
            shape_mismatch("mul", &a.shape, &b.shape);
        }
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).collect();
        let out = Tensor::new(a.shape.clone(), data);
        let (ac, bc) = (a.clone(), b.clone());
        self.binary(
            "mul",
            rhs,
            out,
            move |g| {
                Tensor::new(
                    g.shape.clone(),
                    g.data.iter().zip(&bc.data).map(|(&x, &y)| x * y).collect(),
                )
            },
            move |g| {
                Tensor::new(
                    g.shape.clone(),
                    g.data.iter().zip(&ac.data).map(|(&x, &y)| x * y).collect(),
                )
            },
        )
    }

    pub fn neg(&self) -> Var<T> {
        let v = self.value().map(|x| -x);
        self.unary("neg", v, |g| g.map(|x| -x))
    }

    /// Multiply by a compile-time constant.
    pub fn scale(&self, c: f64) -> Var<T> {
        let k: T = cast(c);
        let v = self.value().map(|x| x * k);
        self.unary("scale", v, move |g| g.map(|x| x * k))
    }

    /// Add a compile-time constant elementwise.
    pub fn add_const(&self, c: f64) -> Var<T> {
        let k: T = cast(c);
        let v = self.value().map(|x| x + k);
        self.unary("add_const", v, |g| g.clone())
    }

    /// Broadcast-add a row vector to every row of a matrix.
    pub fn add_row(&self, row: &Var<T>) -> Var<T> {
        let (m, r) = (self.value(), row.value());
        if m.rank() != 2 || r.rank() != 1 || m.cols() != r.len() {
            shape_mismatch("add_row", &m.shape, &r.shape);
        }
        let (rows, cols) = (m.rows(), m.cols());
        let mut data = m.data.clone();
        for i in 0..rows {
            for j in 0..cols {
                data[i * cols + j] = data[i * cols + j] + r.data[j];
            }
        }
        self.binary(
            "add_row",
            row,
            Tensor::matrix(rows, cols, data),
            |g| g.clone(),
            move |g| {
                let mut acc = vec![T::zero(); cols];
                for i in 0..rows {
                    for j in 0..cols {
                        acc[j] = acc[j] + g.data[i * cols + j];
                    }
                }
                Tensor::vector(acc)
            },
        )
    }

    /// Broadcast-multiply by a scalar variable.
    pub fn mul_scalar(&self, s: &Var<T>) -> Var<T> {
        let (x, sv) = (self.value(), s.value());
        assert!(
            sv.is_scalar(),
            "mul_scalar: rhs has shape {:?}, expected a scalar",
            sv.shape
        );
        let k = sv.item();
        let out = x.map(|v| v * k);
        let xc = x.clone();
        self.binary(
            "mul_scalar",
            s,
            out,
            move |g| g.map(|v| v * k),
            move |g| {
                let mut acc = T::zero();
                for (gv, xv) in g.data.iter().zip(&xc.data) {
                    acc = acc + *gv * *xv;
                }
                Tensor::scalar(acc)
            },
        )
    }

    /// Broadcast-add a scalar variable.
    pub fn add_scalar(&self, s: &Var<T>) -> Var<T> {
        let (x, sv) = (self.value(), s.value());
        assert!(
            sv.is_scalar(),
            "add_scalar: rhs has shape {:?}, expected a scalar",
            sv.shape
        );
        let k = sv.item();
        let out = x.map(|v| v + k);
        self.binary(
            "add_scalar",
            s,
            out,
            |g| g.clone(),
            |g| Tensor::scalar(g.data.iter().fold(T::zero(), |a, &b| a + b)),
        )
    }

    // --- shape ops ---

    /// Concatenate along the last axis. Ranks must match (1 or 2).
    pub fn concat(&self, rhs: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), rhs.value());
        let out = match (a.rank(), b.rank()) {
            (1, 1) => {
                let mut data = a.data.clone();
                data.extend_from_slice(&b.data);
                Tensor::vector(data)
            }
            (2, 2) if a.rows() == b.rows() => {
                let (m, ca, cb) = (a.rows(), a.cols(), b.cols());
                let mut data = Vec::with_capacity(m * (ca + cb));
                for i in 0..m {
                    data.extend_from_slice(a.row(i));
                    data.extend_from_slice(b.row(i));
                }
                Tensor::matrix(m, ca + cb, data)
            }
            _ => shape_mismatch("concat", &a.shape, &b.shape),
        };
        let (sa, sb) = (a.shape.clone(), b.shape.clone());
        let lhs_width = *sa.last().unwrap();
        self.binary(
            "concat",
            rhs,
            out,
            move |g| split_last(g, &sa, 0),
            move |g| split_last(g, &sb, lhs_width),
        )
    }

    /// Contiguous slice `[start, start+len)` along the last axis.
    pub fn slice_last(&self, start: usize, len: usize) -> Var<T> {
        let v = self.value();
        let out = match v.rank() {
            1 => {
                assert!(
                    start + len <= v.len(),
                    "slice_last: range {}..{} out of bounds for shape {:?}",
                    start,
                    start + len,
                    v.shape
                );
                Tensor::vector(v.data[start..start + len].to_vec())
            }
            2 => {
                let (m, c) = (v.rows(), v.cols());
                assert!(
                    start + len <= c,
                    "slice_last: range {}..{} out of bounds for shape {:?}",
                    start,
                    start + len,
                    v.shape
                );
                let mut data = Vec::with_capacity(m * len);
                for i in 0..m {
                    data.extend_from_slice(&v.data[i * c + start..i * c + start + len]);
                }
                Tensor::matrix(m, len, data)
            }
            _ => panic!("slice_last: unsupported rank for shape {:?}", v.shape),
        };
        let src_shape = v.shape.clone();
        self.unary("slice_last", out, move |g| {
            let mut full = Tensor::zeros(src_shape.clone());
            match src_shape.len() {
                1 => full.data[start..start + len].copy_from_slice(&g.data),
                _ => {
                    let c = src_shape[1];
                    for i in 0..src_shape[0] {
                        full.data[i * c + start..i * c + start + len]
                            .copy_from_slice(g.row(i));
                    }
                }
            }
            full
        })
    }

    /// Single matrix row as a vector.
    pub fn row_at(&self, i: usize) -> Var<T> {
        let v = self.value();
        let out = Tensor::vector(v.row(i).to_vec());
        let (rows, cols) = (v.rows(), v.cols());
        self.unary("row_at", out, move |g| {
            let mut full = Tensor::zeros(vec![rows, cols]);
            full.data[i * cols..(i + 1) * cols].copy_from_slice(&g.data);
            full
        })
    }

    /// Gather matrix rows by index (embedding lookup). Duplicate indices
    /// accumulate additively on the way back.
    pub fn rows(&self, ids: &[usize]) -> Var<T> {
        let v = self.value();
        assert_eq!(v.rank(), 2, "rows: tensor has shape {:?}", v.shape);
        let (nrows, cols) = (v.rows(), v.cols());
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            assert!(id < nrows, "rows: index {id} out of range 0..{nrows}");
            data.extend_from_slice(v.row(id));
        }
        let ids = ids.to_vec();
        let out = Tensor::matrix(ids.len(), cols, data);
        self.unary("rows", out, move |g| {
            let mut full = Tensor::zeros(vec![nrows, cols]);
            for (r, &id) in ids.iter().enumerate() {
                for j in 0..cols {
                    full.data[id * cols + j] = full.data[id * cols + j] + g.data[r * cols + j];
                }
            }
            full
        })
    }

    /// Gather vector elements by index.
    pub fn elems(&self, ids: &[usize]) -> Var<T> {
        let v = self.value();
        assert_eq!(v.rank(), 1, "elems: tensor has shape {:?}", v.shape);
        let n = v.len();
        let data = ids
            .iter()
            .map(|&id| {
                assert!(id < n, "elems: index {id} out of range 0..{n}");
                v.data[id]
            })
            .collect();
        let ids = ids.to_vec();
        self.unary("elems", Tensor::vector(data), move |g| {
            let mut full = Tensor::zeros(vec![n]);
            for (k, &id) in ids.iter().enumerate() {
                full.data[id] = full.data[id] + g.data[k];
            }
            full
        })
    }

    /// Single element of a vector as a scalar.
    pub fn select(&self, i: usize) -> Var<T> {
        let v = self.value();
        assert_eq!(v.rank(), 1, "select: tensor has shape {:?}", v.shape);
        let n = v.len();
        assert!(i < n, "select: index {i} out of range 0..{n}");
        let out = Tensor::scalar(v.data[i]);
        self.unary("select", out, move |g| {
            let mut full = Tensor::zeros(vec![n]);
            full.data[i] = g.item();
            full
        })
    }

    /// Row `i` of the output is the sum of the rows of `self` listed in
    /// `neighbors[i]`; an empty list yields a zero row.
    pub fn neighbor_sum(&self, neighbors: &[Vec<usize>]) -> Var<T> {
        let v = self.value();
        assert_eq!(v.rank(), 2, "neighbor_sum: tensor has shape {:?}", v.shape);
        assert_eq!(
            v.rows(),
            neighbors.len(),
            "neighbor_sum: {} rows but {} adjacency lists",
            v.rows(),
            neighbors.len()
        );
        let (n, c) = (v.rows(), v.cols());
        let mut data = vec![T::zero(); n * c];
        for (i, nbrs) in neighbors.iter().enumerate() {
            for &j in nbrs {
                for k in 0..c {
                    data[i * c + k] = data[i * c + k] + v.data[j * c + k];
                }
            }
        }
        let adj = neighbors.to_vec();
        self.unary("neighbor_sum", Tensor::matrix(n, c, data), move |g| {
            let mut full = Tensor::zeros(vec![n, c]);
            for (i, nbrs) in adj.iter().enumerate() {
                for &j in nbrs {
                    for k in 0..c {
                        full.data[j * c + k] = full.data[j * c + k] + g.data[i * c + k];
                    }
                }
            }
            full
        })
    }

    /// Scatter-add a vector into an `out_len`-wide vector: entry `k` of the
    /// input is added at position `ids[k]`.
    pub fn scatter_add(&self, ids: &[usize], out_len: usize) -> Var<T> {
        let v = self.value();
        assert_eq!(v.rank(), 1, "scatter_add: tensor has shape {:?}", v.shape);
        assert_eq!(
            v.len(),
            ids.len(),
            "scatter_add: {} values but {} indices",
            v.len(),
            ids.len()
        );
        let mut data = vec![T::zero(); out_len];
        for (k, &id) in ids.iter().enumerate() {
            assert!(id < out_len, "scatter_add: index {id} out of range 0..{out_len}");
            data[id] = data[id] + v.data[k];
        }
        let ids = ids.to_vec();
        self.unary("scatter_add", Tensor::vector(data), move |g| {
            Tensor::vector(ids.iter().map(|&id| g.data[id]).collect())
        })
    }

    // --- activations ---

    pub fn tanh(&self) -> Var<T> {
        let out = self.value().map(|x| x.tanh());
        let y = out.clone();
        self.unary("tanh", out, move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data
                    .iter()
                    .zip(&y.data)
                    .map(|(&gv, &yv)| gv * (T::one() - yv * yv))
                    .collect(),
            )
        })
    }

    pub fn sigmoid(&self) -> Var<T> {
        let out = self.value().map(stable_sigmoid);
        let y = out.clone();
        self.unary("sigmoid", out, move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data
                    .iter()
                    .zip(&y.data)
                    .map(|(&gv, &yv)| gv * yv * (T::one() - yv))
                    .collect(),
            )
        })
    }

    pub fn relu(&self) -> Var<T> {
        let x = self.value();
        let out = x.map(|v| if v > T::zero() { v } else { T::zero() });
        let xc = x.clone();
        self.unary("relu", out, move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data
                    .iter()
                    .zip(&xc.data)
                    .map(|(&gv, &xv)| if xv > T::zero() { gv } else { T::zero() })
                    .collect(),
            )
        })
    }

    pub fn leaky_relu(&self, slope: f64) -> Var<T> {
        let k: T = cast(slope);
        let x = self.value();
        let out = x.map(|v| if v > T::zero() { v } else { v * k });
        let xc = x.clone();
        self.unary("leaky_relu", out, move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data
                    .iter()
                    .zip(&xc.data)
                    .map(|(&gv, &xv)| if xv > T::zero() { gv } else { gv * k })
                    .collect(),
            )
        })
    }

    /// Softmax over the last axis (whole vector, or each matrix row).
    pub fn softmax_last(&self) -> Var<T> {
        let v = self.value();
        let out = match v.rank() {
            1 => Tensor::vector(softmax_slice(&v.data)),
            2 => {
                let (m, c) = (v.rows(), v.cols());
                let mut data = Vec::with_capacity(m * c);
                for i in 0..m {
                    data.extend(softmax_slice(v.row(i)));
                }
                Tensor::matrix(m, c, data)
            }
            _ => panic!("softmax: unsupported rank for shape {:?}", v.shape),
        };
        let y = out.clone();
        self.unary("softmax", out, move |g| {
            let width = *y.shape.last().unwrap();
            let mut dx = vec![T::zero(); y.len()];
            for (row_g, (row_y, row_dx)) in g
                .data
                .chunks(width)
                .zip(y.data.chunks(width).zip(dx.chunks_mut(width)))
            {
                let mut dot = T::zero();
                for (gv, yv) in row_g.iter().zip(row_y) {
                    dot = dot + *gv * *yv;
                }
                for ((d, gv), yv) in row_dx.iter_mut().zip(row_g).zip(row_y) {
                    *d = *yv * (*gv - dot);
                }
            }
            Tensor::new(y.shape.clone(), dx)
        })
    }

    /// `ln(max(x, floor))` elementwise; gradient is zero where the floor
    /// clamps.
    pub fn log_clamped(&self, floor: f64) -> Var<T> {
        let k: T = cast(floor);
        let x = self.value();
        let out = x.map(|v| if v > k { v.ln() } else { k.ln() });
        let xc = x.clone();
        self.unary("log_clamped", out, move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data
                    .iter()
                    .zip(&xc.data)
                    .map(|(&gv, &xv)| if xv > k { gv / xv } else { T::zero() })
                    .collect(),
            )
        })
    }

    /// Elementwise product with a fixed (already 1/(1-rate)-scaled) mask.
    pub fn dropout(&self, mask: &Tensor<T>) -> Var<T> {
        let x = self.value();
        if x.shape != mask.shape {
            shape_mismatch("dropout", &x.shape, &mask.shape);
        }
        let data = x.data.iter().zip(&mask.data).map(|(&a, &b)| a * b).collect();
        let m = mask.clone();
        self.unary("dropout", Tensor::new(x.shape.clone(), data), move |g| {
            Tensor::new(
                g.shape.clone(),
                g.data.iter().zip(&m.data).map(|(&a, &b)| a * b).collect(),
            )
        })
    }

    // --- reductions ---

    pub fn sum(&self) -> Var<T> {
        let v = self.value();
        let total = v.data.iter().fold(T::zero(), |a, &b| a + b);
        let shape = v.shape.clone();
        self.unary("sum", Tensor::scalar(total), move |g| {
            let gv = g.item();
            let len: usize = shape.iter().product();
            Tensor::new(shape.clone(), vec![gv; len])
        })
    }

    pub fn mean(&self) -> Var<T> {
        let v = self.value();
        let n: T = cast(v.len() as f64);
        let total = v.data.iter().fold(T::zero(), |a, &b| a + b) / n;
        let shape = v.shape.clone();
        self.unary("mean", Tensor::scalar(total), move |g| {
            let len: usize = shape.iter().product();
            let gv = g.item() / cast(len as f64);
            Tensor::new(shape.clone(), vec![gv; len])
        })
    }
}

fn stable_sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn softmax_slice<T: Scalar>(xs: &[T]) -> Vec<T> {
    let max = xs.iter().cloned().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = xs.iter().map(|&x| (x - max).exp()).collect();
    let total = exps.iter().fold(T::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / total).collect()
}

/// Split a concat gradient back out: take `last_len(shape)` entries along the
/// last axis starting at `offset`.
fn split_last<T: Scalar>(g: &Tensor<T>, shape: &[usize], offset: usize) -> Tensor<T> {
    match shape.len() {
        1 => Tensor::vector(g.data[offset..offset + shape[0]].to_vec()),
        2 => {
            let (m, c) = (shape[0], shape[1]);
            let full_c = g.cols();
            let mut data = Vec::with_capacity(m * c);
            for i in 0..m {
                data.extend_from_slice(&g.data[i * full_c + offset..i * full_c + offset + c]);
            }
            Tensor::matrix(m, c, data)
        }
        _ => unreachable!("concat only supports rank 1 and 2"),
    }
}
