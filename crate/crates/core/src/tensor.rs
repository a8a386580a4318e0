//! Dense row-major tensors over `f32`/`f64`.
//!
//! Training runs in `f32`; the gradient-check harness re-runs the same
//! generic code in `f64`, so everything numeric here is parameterized
//! over [`Scalar`].

use rand::Rng;
use std::fmt;

/// Floating-point element type for tensors. Implemented for `f32` and `f64`.
pub trait Scalar: num_traits::Float + fmt::Debug + fmt::Display + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lossy cast from `f64`, used for constants in generic code.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 -> Scalar cast")
}

/// Dense tensor with row-major data. Rank 0 (scalar) has an empty shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor: shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![T::zero(); len],
        }
    }

    pub fn scalar(v: T) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<T>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Self {
        Tensor::new(vec![rows, cols], data)
    }

    /// Uniform init in `[lo, hi)` from the supplied RNG.
    pub fn uniform<R: Rng>(rng: &mut R, shape: Vec<usize>, lo: f64, hi: f64) -> Self {
        let len = shape.iter().product();
        let data = (0..len)
            .map(|_| cast::<T>(rng.gen_range(lo..hi)))
            .collect();
        Tensor { shape, data }
    }

    /// Glorot-style uniform init scaled by fan-in and fan-out.
    pub fn glorot<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Self::uniform(rng, vec![rows, cols], -bound, bound)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// Number of rows for rank-2 tensors.
    pub fn rows(&self) -> usize {
        assert_eq!(self.rank(), 2, "rows: tensor has shape {:?}", self.shape);
        self.shape[0]
    }

    /// Number of columns for rank-2 tensors.
    pub fn cols(&self) -> usize {
        assert_eq!(self.rank(), 2, "cols: tensor has shape {:?}", self.shape);
        self.shape[1]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.shape[1] + j]
    }

    /// Row `i` of a rank-2 tensor as a slice.
    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    /// Value of a rank-0 or length-1 tensor.
    pub fn item(&self) -> T {
        assert_eq!(
            self.len(),
            1,
            "item: tensor has shape {:?}, expected a scalar",
            self.shape
        );
        self.data[0]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Cast elementwise to another scalar type.
    pub fn cast_to<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&x| cast::<U>(x.to_f64().unwrap()))
                .collect(),
        }
    }
}

/// Panic with the offending primitive and both shapes.
#[inline(never)]
pub(crate) fn shape_mismatch(op: &str, lhs: &[usize], rhs: &[usize]) -> ! {
    panic!("{op}: incompatible shapes {lhs:?} and {rhs:?}")
}

/// `C = A * B` for rank-2 operands.
pub fn matmul_nn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows() {
        shape_mismatch("matmul", &a.shape, &b.shape);
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == T::zero() {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] = orow[j] + aip * brow[j];
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// `C = A * B^T`.
pub fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols() {
        shape_mismatch("matmul_nt", &a.shape, &b.shape);
    }
    let (m, k, n) = (a.rows(), a.cols(), b.rows());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b.data[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for p in 0..k {
                acc = acc + arow[p] * brow[p];
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::matrix(m, n, out)
}

/// `C = A^T * B`.
pub fn matmul_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows() {
        shape_mismatch("matmul_tn", &a.shape, &b.shape);
    }
    let (m, k, n) = (a.cols(), a.rows(), b.cols());
    let mut out = vec![T::zero(); m * n];
    for p in 0..k {
        let arow = &a.data[p * m..(p + 1) * m];
        let brow = &b.data[p * n..(p + 1) * n];
        for i in 0..m {
            let api = arow[i];
            if api == T::zero() {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] = orow[j] + api * brow[j];
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// `y = A * x` for a rank-2 `A` and rank-1 `x`.
pub fn matvec<T: Scalar>(a: &Tensor<T>, x: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 2 || x.rank() != 1 || a.cols() != x.len() {
        shape_mismatch("matvec", &a.shape, &x.shape);
    }
    let (m, k) = (a.rows(), a.cols());
    let mut out = vec![T::zero(); m];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        let mut acc = T::zero();
        for p in 0..k {
            acc = acc + arow[p] * x.data[p];
        }
        out[i] = acc;
    }
    Tensor::vector(out)
}

/// `y = x * A` (equivalently `A^T x`) for rank-1 `x` and rank-2 `A`.
pub fn vecmat<T: Scalar>(x: &Tensor<T>, a: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 2 || x.rank() != 1 || a.rows() != x.len() {
        shape_mismatch("vecmat", &x.shape, &a.shape);
    }
    let (k, n) = (a.rows(), a.cols());
    let mut out = vec![T::zero(); n];
    for p in 0..k {
        let xp = x.data[p];
        if xp == T::zero() {
            continue;
        }
        let arow = &a.data[p * n..(p + 1) * n];
        for j in 0..n {
            out[j] = out[j] + xp * arow[j];
        }
    }
    Tensor::vector(out)
}

/// Rank-1 outer product `a b^T`.
pub fn outer<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    if a.rank() != 1 || b.rank() != 1 {
        shape_mismatch("outer", &a.shape, &b.shape);
    }
    let (m, n) = (a.len(), b.len());
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            out.push(a.data[i] * b.data[j]);
        }
    }
    Tensor::matrix(m, n, out)
}

pub fn add_into<T: Scalar>(acc: &mut Option<Tensor<T>>, contrib: &Tensor<T>) {
    match acc {
        Some(t) => {
            assert_eq!(t.shape, contrib.shape, "gradient accumulation shape drift");
            for (a, b) in t.data.iter_mut().zip(&contrib.data) {
                *a = *a + *b;
            }
        }
        None => *acc = Some(contrib.clone()),
    }
}
