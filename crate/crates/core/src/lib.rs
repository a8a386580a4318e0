//! Graph-to-sequence generation from AMR graphs with dual top-down and
//! bottom-up graph encoders, built on an in-crate reverse-mode autodiff
//! tape. No external numerics: everything from the PENMAN parser to beam
//! search lives here.

pub mod adam;
pub mod amr;
pub mod analysis;
pub mod bleu;
pub mod cells;
pub mod checkpoint;
pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod penman;
pub mod stats;
pub mod tape;
pub mod tensor;
pub mod training;
pub mod vocab;

pub use amr::{dfs_order, levi_transform, reverse_view, AmrGraph, GraphView, ViewKind};
pub use corpus::{read_corpus, Example};
pub use model::{AblationMode, EncodedExample, ModelConfig};
pub use params::{BoundParams, ParamSet};
pub use penman::parse_penman;
pub use tape::{backward, Gradients, Tape, Var};
pub use tensor::{Scalar, Tensor};
pub use training::{SavedModel, TrainConfig};
pub use vocab::Vocabulary;
