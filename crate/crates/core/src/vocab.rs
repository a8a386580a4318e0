//! Vocabulary construction and pretrained embedding loading.

use crate::amr::levi_transform;
use crate::corpus::Example;
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;

pub const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Dense token <-> id map with the four specials at ids 0-3.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    id_of: HashMap<String, usize>,
    token_of: Vec<String>,
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} values after the token, found {found}")]
    BadRow {
        line: usize,
        expected: usize,
        found: usize,
    },
}

impl Vocabulary {
    /// Rank tokens by frequency (descending), break ties lexicographically,
    /// keep at most `max_size` beyond the specials.
    pub fn from_counts(counts: &HashMap<String, usize>, max_size: usize) -> Self {
        let mut ranked: Vec<(&String, usize)> =
            counts.iter().map(|(t, &c)| (t, c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut token_of: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for (tok, _) in ranked.into_iter().take(max_size) {
            if !SPECIALS.contains(&tok.as_str()) {
                token_of.push(tok.clone());
            }
        }
        let id_of = token_of
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { id_of, token_of }
    }

    pub fn id(&self, token: &str) -> usize {
        self.id_of.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.token_of[id]
    }

    pub fn len(&self) -> usize {
        self.token_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_of.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.token_of.iter().map(String::as_str)
    }

    /// One token per line, in id order (the sidecar vocab file format).
    pub fn to_lines(&self) -> String {
        let mut s = self.token_of.join("\n");
        s.push('\n');
        s
    }

    pub fn from_lines(text: &str) -> Self {
        let token_of: Vec<String> = text.lines().map(str::to_string).collect();
        let id_of = token_of
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { id_of, token_of }
    }
}

/// Build the source vocabulary over view-node labels (concepts and
/// relations) and the target vocabulary over sentence tokens.
pub fn build_vocab(
    corpus: &[Example],
    max_size: usize,
) -> Result<(Vocabulary, Vocabulary), VocabError> {
    if corpus.is_empty() {
        return Err(VocabError::EmptyCorpus);
    }
    let mut src_counts: HashMap<String, usize> = HashMap::new();
    let mut tgt_counts: HashMap<String, usize> = HashMap::new();
    for ex in corpus {
        for label in levi_transform(&ex.graph).node_labels {
            *src_counts.entry(label).or_default() += 1;
        }
        for tok in &ex.sentence {
            *tgt_counts.entry(tok.clone()).or_default() += 1;
        }
    }
    Ok((
        Vocabulary::from_counts(&src_counts, max_size),
        Vocabulary::from_counts(&tgt_counts, max_size),
    ))
}

/// Load pretrained embeddings in word2vec/GloVe text format
/// (`token v1 ... v_dim` per line). Tokens absent from the file are
/// initialized uniform(-0.1, 0.1) from `seed`; the PAD row is zero.
/// Returns the table and the coverage ratio (found / vocab size).
pub fn load_pretrained_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(Tensor<f32>, f64), VocabError> {
    let text = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
        path: path.display().to_string(),
        source,
    })?;
    embeddings_from_text(&text, vocab, dim, seed)
}

pub fn embeddings_from_text(
    text: &str,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(Tensor<f32>, f64), VocabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Tensor::<f32>::uniform(&mut rng, vec![vocab.len(), dim], -0.1, 0.1);
    for j in 0..dim {
        table.data[PAD * dim + j] = 0.0;
    }
    let mut found = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line");
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(VocabError::BadRow {
                line: i + 1,
                expected: dim,
                found: values.len(),
            });
        }
        if !vocab.contains(token) {
            continue;
        }
        let id = vocab.id(token);
        for (j, v) in values.iter().enumerate() {
            table.data[id * dim + j] = v.parse().map_err(|_| VocabError::BadRow {
                line: i + 1,
                expected: dim,
                found: values.len(),
            })?;
        }
        found += 1;
    }
    Ok((table, found as f64 / vocab.len() as f64))
}
