//! Named parameter collections shared by the encoder, decoder and trainer.

use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};
use std::collections::HashMap;

/// Ordered, named tensor collection. Order is insertion order and is
/// preserved through checkpoints, so byte-exact round trips hold.
#[derive(Clone, Debug, Default)]
pub struct ParamSet<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name: {name}"
        );
        self.index.insert(name.clone(), self.tensors.len());
        self.names.push(name);
        self.tensors.push(tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index.get(name).map(|&i| &mut self.tensors[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter_mut())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Total number of scalars across all tensors, embeddings included.
    pub fn count_parameters(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Elementwise cast of every tensor (f32 training set -> f64 checking set).
    pub fn cast_to<U: Scalar>(&self) -> ParamSet<U> {
        let mut out = ParamSet::new();
        for (name, t) in self.iter() {
            out.insert(name, t.cast_to::<U>());
        }
        out
    }

    /// Zero tensors with the same names and shapes.
    pub fn zeros_like(&self) -> ParamSet<T> {
        let mut out = ParamSet::new();
        for (name, t) in self.iter() {
            out.insert(name, Tensor::zeros(t.shape.clone()));
        }
        out
    }

    /// Elementwise `self += other` over aligned sets.
    pub fn add_assign(&mut self, other: &ParamSet<T>) {
        for (name, t) in self.iter_mut() {
            let o = other
                .get(name)
                .unwrap_or_else(|| panic!("add_assign: {name} missing from rhs"));
            assert_eq!(t.shape, o.shape, "add_assign: shape mismatch for {name}");
            for (a, b) in t.data.iter_mut().zip(&o.data) {
                *a = *a + *b;
            }
        }
    }

    /// Scale every tensor in place.
    pub fn scale_assign(&mut self, factor: f64) {
        let k = crate::tensor::cast::<T>(factor);
        for (_, t) in self.iter_mut() {
            for x in t.data.iter_mut() {
                *x = *x * k;
            }
        }
    }

    /// Register every parameter as a differentiable leaf on `tape`.
    pub fn bind(&self, tape: &Tape<T>) -> BoundParams<T> {
        self.bind_with(tape, true)
    }

    /// Gradient-free binding for decode-only passes.
    pub fn bind_frozen(&self, tape: &Tape<T>) -> BoundParams<T> {
        self.bind_with(tape, false)
    }

    fn bind_with(&self, tape: &Tape<T>, requires_grad: bool) -> BoundParams<T> {
        let mut vars = HashMap::new();
        for (name, t) in self.iter() {
            vars.insert(name.to_string(), tape.leaf(t.clone(), requires_grad));
        }
        BoundParams { vars }
    }
}

/// Tape-bound view of a [`ParamSet`], addressable by name.
pub struct BoundParams<T: Scalar> {
    vars: HashMap<String, Var<T>>,
}

impl<T: Scalar> BoundParams<T> {
    /// Handle for a bound parameter. Panics on unknown names: model code
    /// addresses a fixed schema.
    pub fn var(&self, name: &str) -> Var<T> {
        self.vars
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter: {name}"))
            .clone()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    /// Collect gradients into a set aligned with `params`; parameters the
    /// loss never touched get zero gradients.
    pub fn gradients(
        &self,
        params: &ParamSet<T>,
        grads: &crate::tape::Gradients<T>,
    ) -> ParamSet<T> {
        let mut out = ParamSet::new();
        for (name, t) in params.iter() {
            let g = grads
                .wrt(&self.var(name))
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(t.shape.clone()));
            out.insert(name, g);
        }
        out
    }
}
