//! Training: configuration files, length-bucketed batching, the epoch
//! loop with Adam and early stopping on dev BLEU, checkpoint sidecars,
//! and the ablation runner.

use crate::adam::{adam_step, clip_global_norm, AdamState};
use crate::bleu::bleu;
use crate::checkpoint::{self, CheckpointError};
use crate::corpus::Example;
use crate::decoder::PROB_FLOOR;
use crate::encoder::{DropoutCtx, EncoderKind};
use crate::model::{
    decode_example, forward_example, init_model_params, AblationMode, EncodedExample, ModelConfig,
};
use crate::params::ParamSet;
use crate::tape::backward;
use crate::vocab::{build_vocab, load_pretrained_embeddings, VocabError, Vocabulary};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: usize,
    pub seed: u64,
    pub max_vocab: usize,
    pub clip_norm: f64,
    pub max_decode_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            epochs: 30,
            batch_size: 20,
            lr: 0.001,
            patience: 5,
            seed: 1,
            max_vocab: 20_000,
            clip_norm: 2.0,
            max_decode_len: 250,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Parse flat `key = value` text (blank lines and `#` comments ignored).
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::BadLine { line: i + 1 })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl TrainConfig {
    /// Apply `key = value` pairs on top of the defaults. Setting
    /// `encoder_kind` without `num_layers` picks that kind's default depth.
    pub fn apply_kv(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        let mut explicit_layers = false;
        for (key, value) in pairs {
            match key.as_str() {
                "encoder_kind" => {
                    self.model.encoder.encoder_kind = EncoderKind::parse(value)
                        .ok_or_else(|| ConfigError::BadValue {
                            key: key.clone(),
                            value: value.clone(),
                        })?;
                }
                "num_layers" => {
                    self.model.encoder.num_layers = parse_as(key, value)?;
                    explicit_layers = true;
                }
                "graph_hidden" => self.model.encoder.graph_hidden = parse_as(key, value)?,
                "embedding_dim" => self.model.encoder.embedding_dim = parse_as(key, value)?,
                "lstm_hidden_per_direction" => {
                    self.model.encoder.lstm_hidden_per_direction = parse_as(key, value)?
                }
                "dropout_rate" => self.model.encoder.dropout_rate = parse_as(key, value)?,
                "gat_heads" => self.model.encoder.gat_heads = parse_as(key, value)?,
                "ablation" => {
                    self.model.ablation =
                        AblationMode::parse(value).ok_or_else(|| ConfigError::BadValue {
                            key: key.clone(),
                            value: value.clone(),
                        })?;
                }
                "epochs" => self.epochs = parse_as(key, value)?,
                "batch_size" => self.batch_size = parse_as(key, value)?,
                "lr" => self.lr = parse_as(key, value)?,
                "patience" => self.patience = parse_as(key, value)?,
                "seed" => self.seed = parse_as(key, value)?,
                "max_vocab" => self.max_vocab = parse_as(key, value)?,
                "clip_norm" => self.clip_norm = parse_as(key, value)?,
                "max_decode_len" => self.max_decode_len = parse_as(key, value)?,
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }
        if !explicit_layers {
            self.model.encoder.num_layers = self.model.encoder.encoder_kind.default_layers();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.encoder.validate().map_err(ConfigError::Invalid)?;
        if self.epochs == 0 || self.batch_size == 0 || self.max_vocab == 0 || self.max_decode_len == 0
        {
            return Err(ConfigError::Invalid(
                "epochs, batch_size, max_vocab and max_decode_len must be positive".into(),
            ));
        }
        if self.lr <= 0.0 || self.clip_norm <= 0.0 {
            return Err(ConfigError::Invalid("lr and clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Serialize the model-defining keys for the checkpoint sidecar.
    pub fn model_kv(model: &ModelConfig) -> String {
        let e = &model.encoder;
        format!(
            "encoder_kind = {}\nnum_layers = {}\ngraph_hidden = {}\nembedding_dim = {}\n\
             lstm_hidden_per_direction = {}\ndropout_rate = {}\ngat_heads = {}\nablation = {}\n",
            e.encoder_kind.name(),
            e.num_layers,
            e.graph_hidden,
            e.embedding_dim,
            e.lstm_hidden_per_direction,
            e.dropout_rate,
            e.gat_heads,
            model.ablation.name()
        )
    }
}

/// Paths and config from a training config file.
#[derive(Clone, Debug)]
pub struct TrainFileConfig {
    pub config: TrainConfig,
    pub train_path: PathBuf,
    pub dev_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub glove_path: Option<PathBuf>,
}

impl TrainFileConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let pairs = parse_kv(text)?;
        let mut train_path = None;
        let mut dev_path = None;
        let mut out_dir = None;
        let mut glove_path = None;
        let mut rest = Vec::new();
        for (key, value) in pairs {
            match key.as_str() {
                "train_path" => train_path = Some(PathBuf::from(value)),
                "dev_path" => dev_path = Some(PathBuf::from(value)),
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "glove_path" => glove_path = Some(PathBuf::from(value)),
                _ => rest.push((key, value)),
            }
        }
        let mut config = TrainConfig::default();
        config.apply_kv(&rest)?;
        Ok(TrainFileConfig {
            config,
            train_path: train_path
                .ok_or_else(|| ConfigError::Invalid("missing train_path".into()))?,
            dev_path,
            out_dir: out_dir.unwrap_or_else(|| PathBuf::from("runs/default")),
            glove_path,
        })
    }
}

/// Epoch ordering: shuffle, then stable-sort by view size so batches hold
/// similarly sized graphs. The result *is* the epoch's permutation;
/// batching chunks it and unbatching restores it.
pub fn epoch_order(view_sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..view_sizes.len()).collect();
    order.shuffle(rng);
    order.sort_by_key(|&i| view_sizes[i]);
    order
}

pub fn make_batches(order: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    assert!(batch_size > 0, "make_batches: batch_size must be positive");
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("loss diverged to NaN at epoch {epoch}, batch {batch}, example {example}")]
    Diverged {
        epoch: usize,
        batch: usize,
        example: usize,
    },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn write_file(path: &Path, contents: &str) -> Result<(), TrainError> {
    std::fs::write(path, contents).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A trained (or loaded) model bundle.
pub struct SavedModel {
    pub config: ModelConfig,
    pub params: ParamSet<f32>,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
}

/// Write the checkpoint plus its sidecars (`.meta`, `.src.vocab`,
/// `.tgt.vocab`) so generation needs only the checkpoint path.
pub fn save_model(model: &SavedModel, ckpt: &Path) -> Result<(), TrainError> {
    checkpoint::save(&model.params, ckpt)?;
    let base = ckpt.display();
    write_file(
        &PathBuf::from(format!("{base}.meta")),
        &TrainConfig::model_kv(&model.config),
    )?;
    write_file(
        &PathBuf::from(format!("{base}.src.vocab")),
        &model.src_vocab.to_lines(),
    )?;
    write_file(
        &PathBuf::from(format!("{base}.tgt.vocab")),
        &model.tgt_vocab.to_lines(),
    )?;
    Ok(())
}

pub fn load_model(ckpt: &Path) -> Result<SavedModel, TrainError> {
    let params = checkpoint::load(ckpt)?;
    let base = ckpt.display();
    let read = |suffix: &str| -> Result<String, TrainError> {
        let path = PathBuf::from(format!("{base}{suffix}"));
        std::fs::read_to_string(&path).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    let mut cfg = TrainConfig::default();
    cfg.apply_kv(&parse_kv(&read(".meta")?)?)?;
    Ok(SavedModel {
        config: cfg.model,
        params,
        src_vocab: Vocabulary::from_lines(&read(".src.vocab")?),
        tgt_vocab: Vocabulary::from_lines(&read(".tgt.vocab")?),
    })
}

/// One metrics row per epoch.
#[derive(Clone, Debug)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss_per_token: f64,
    pub dev_bleu: f64,
    pub seconds: f64,
    pub best_so_far: f64,
}

pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub metrics_log: PathBuf,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_dev_bleu: f64,
    pub final_train_loss_per_token: f64,
    pub clamped_positions: usize,
    pub embedding_coverage: Option<f64>,
    pub parameter_count: usize,
}

/// Train a model, keeping the checkpoint with the best greedy dev BLEU.
/// Stops early after `patience` consecutive epochs without improvement.
pub fn train(
    cfg: &TrainConfig,
    train_corpus: &[Example],
    dev_corpus: &[Example],
    out_dir: &Path,
    glove: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_corpus.is_empty() || dev_corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| TrainError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let (src_vocab, tgt_vocab) = build_vocab(train_corpus, cfg.max_vocab)?;
    let encoded: Vec<EncodedExample> = train_corpus
        .iter()
        .map(|ex| EncodedExample::from_example(ex, &src_vocab, &tgt_vocab))
        .collect();
    let view_sizes: Vec<usize> = encoded.iter().map(EncodedExample::num_nodes).collect();
    let dev_refs: Vec<String> = dev_corpus.iter().map(Example::sentence_text).collect();

    let mut params =
        init_model_params::<f32>(&cfg.model, src_vocab.len(), tgt_vocab.len(), cfg.seed);
    let mut embedding_coverage = None;
    if let Some(path) = glove {
        let (table, coverage) =
            load_pretrained_embeddings(path, &src_vocab, cfg.model.encoder.embedding_dim, cfg.seed)?;
        *params.get_mut("embed.src").expect("embed.src exists") = table;
        embedding_coverage = Some(coverage);
    }
    let parameter_count = params.count_parameters();
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rate = cfg.model.encoder.dropout_rate;

    let ckpt_path = out_dir.join("model.dgck");
    let metrics_path = out_dir.join("metrics.tsv");
    let mut metrics: Vec<EpochMetrics> = Vec::new();
    let mut best_bleu = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut bad_epochs = 0usize;
    let mut clamped_total = 0usize;
    let mut last_loss = f64::NAN;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let order = epoch_order(&view_sizes, &mut rng);
        let batches = make_batches(&order, cfg.batch_size);
        let mut epoch_loss = 0.0f64;
        let mut epoch_tokens = 0usize;
        for (bi, batch) in batches.iter().enumerate() {
            let mut grads: Option<ParamSet<f32>> = None;
            for (ei, &idx) in batch.iter().enumerate() {
                let mut dropout = (rate > 0.0).then(|| {
                    let salt = (epoch as u64) << 40 ^ (bi as u64) << 20 ^ ei as u64;
                    DropoutCtx::new(cfg.seed ^ salt, rate)
                });
                let fwd = forward_example(&params, &cfg.model, &encoded[idx], &mut dropout);
                let loss = fwd.loss.item() as f64;
                if !loss.is_finite() {
                    return Err(TrainError::Diverged {
                        epoch,
                        batch: bi,
                        example: ei,
                    });
                }
                epoch_loss += loss;
                epoch_tokens += fwd.token_count;
                clamped_total += fwd.clamped;
                let g = fwd.bound.gradients(&params, &backward(&fwd.loss));
                match &mut grads {
                    Some(acc) => acc.add_assign(&g),
                    None => grads = Some(g),
                }
            }
            let mut grads = grads.expect("nonempty batch");
            grads.scale_assign(1.0 / batch.len() as f64);
            clip_global_norm(&mut grads, cfg.clip_norm);
            adam_step(&mut params, &grads, &mut adam, cfg.lr);
        }
        last_loss = epoch_loss / epoch_tokens.max(1) as f64;

        // greedy decode for speed during training; beam is for final eval
        let dev_hyps: Vec<String> = dev_corpus
            .iter()
            .map(|ex| {
                decode_example(
                    &params,
                    &cfg.model,
                    &src_vocab,
                    &tgt_vocab,
                    ex,
                    1,
                    cfg.max_decode_len,
                )
                .join(" ")
            })
            .collect();
        let dev_bleu = bleu(&dev_refs, &dev_hyps, false).expect("aligned dev corpus");

        if dev_bleu > best_bleu {
            best_bleu = dev_bleu;
            best_epoch = epoch;
            bad_epochs = 0;
            save_model(
                &SavedModel {
                    config: cfg.model.clone(),
                    params: params.clone(),
                    src_vocab: src_vocab.clone(),
                    tgt_vocab: tgt_vocab.clone(),
                },
                &ckpt_path,
            )?;
        } else {
            bad_epochs += 1;
        }
        metrics.push(EpochMetrics {
            epoch,
            train_loss_per_token: last_loss,
            dev_bleu,
            seconds: started.elapsed().as_secs_f64(),
            best_so_far: best_bleu,
        });
        if bad_epochs > cfg.patience {
            break;
        }
    }

    let mut log = String::from("epoch\ttrain_loss\tdev_bleu\tseconds\tbest_so_far\n");
    for m in &metrics {
        let _ = writeln!(
            log,
            "{}\t{:.6}\t{:.2}\t{:.1}\t{:.2}",
            m.epoch, m.train_loss_per_token, m.dev_bleu, m.seconds, m.best_so_far
        );
    }
    write_file(&metrics_path, &log)?;

    Ok(TrainOutcome {
        checkpoint: ckpt_path,
        metrics_log: metrics_path,
        metrics,
        best_epoch,
        best_dev_bleu: best_bleu,
        final_train_loss_per_token: last_loss,
        clamped_positions: clamped_total,
        embedding_coverage,
        parameter_count,
    })
}

/// Training diagnostics threshold: fraction of clamped positions that
/// suggests something is wrong with the data or the floor.
pub fn clamp_warning(clamped: usize) -> Option<String> {
    (clamped > 0).then(|| {
        format!("{clamped} target positions were clamped at {PROB_FLOOR:e} before the log")
    })
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub mode: AblationMode,
    pub parameter_count: usize,
    pub best_dev_bleu: f64,
    pub best_epoch: usize,
}

/// Train the four ablation configurations with shared settings and
/// report them in a fixed row order.
pub fn run_ablations(
    base: &TrainConfig,
    train_corpus: &[Example],
    dev_corpus: &[Example],
    out_dir: &Path,
) -> Result<Vec<AblationRow>, TrainError> {
    let mut rows = Vec::new();
    for mode in AblationMode::ALL {
        let mut cfg = base.clone();
        cfg.model.ablation = mode;
        let outcome = train(
            &cfg,
            train_corpus,
            dev_corpus,
            &out_dir.join(mode.name()),
            None,
        )?;
        rows.push(AblationRow {
            mode,
            parameter_count: outcome.parameter_count,
            best_dev_bleu: outcome.best_dev_bleu,
            best_epoch: outcome.best_epoch,
        });
    }
    Ok(rows)
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("mode\tparameters\tdev_bleu\tbest_epoch\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.2}\t{}",
            r.mode.name(),
            r.parameter_count,
            r.best_dev_bleu,
            r.best_epoch
        );
    }
    out
}

/// Configuration used by the environment-variable seed override.
pub const SEED_ENV_VAR: &str = "DUALGRAPH_SEED";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse_penman;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn tiny_cfg() -> TrainConfig {
        let mut cfg = TrainConfig::default();
        cfg.model.encoder.graph_hidden = 8;
        cfg.model.encoder.embedding_dim = 8;
        cfg.model.encoder.lstm_hidden_per_direction = 8;
        cfg.model.encoder.num_layers = 1;
        cfg.model.encoder.dropout_rate = 0.0;
        cfg.epochs = 2;
        cfg.batch_size = 2;
        cfg.max_decode_len = 12;
        cfg
    }

    fn tiny_corpus() -> Vec<Example> {
        vec![
            Example {
                graph: parse_penman("(c / chase-01 :ARG0 (d / dog) :ARG1 (c2 / cat))").unwrap(),
                sentence: toks("the dog chases the cat"),
            },
            Example {
                graph: parse_penman("(s / sleep-01 :ARG0 (c / cat))").unwrap(),
                sentence: toks("the cat sleeps"),
            },
            Example {
                graph: parse_penman("(r / run-01 :ARG0 (b / bird))").unwrap(),
                sentence: toks("a bird runs"),
            },
        ]
    }

    #[test]
    fn config_file_round_trip() {
        let text = "encoder_kind = gat\ngraph_hidden = 12\nablation = td_only\n\
                    lr = 0.01\ntrain_path = data/train.amr\nout_dir = runs/x\n# comment\n";
        let fc = TrainFileConfig::from_text(text).unwrap();
        assert_eq!(fc.config.model.encoder.encoder_kind, EncoderKind::Gat);
        assert_eq!(fc.config.model.encoder.num_layers, 5); // gat default
        assert_eq!(fc.config.model.encoder.graph_hidden, 12);
        assert_eq!(fc.config.model.ablation, AblationMode::TdOnly);
        assert_eq!(fc.config.lr, 0.01);
        assert_eq!(fc.train_path, PathBuf::from("data/train.amr"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = TrainFileConfig::from_text("train_path = x\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "bogus"));
    }

    #[test]
    fn encoder_kind_picks_its_default_depth() {
        let mut cfg = TrainConfig::default();
        cfg.apply_kv(&[("encoder_kind".into(), "gin".into())]).unwrap();
        assert_eq!(cfg.model.encoder.num_layers, 2);
    }

    #[test]
    fn batching_chunks_the_epoch_permutation() {
        let sizes = vec![5, 2, 9, 2, 7, 1, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let order = epoch_order(&sizes, &mut rng);
        // permutation of all indices
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..sizes.len()).collect::<Vec<_>>());
        // sizes ascend along the order
        for w in order.windows(2) {
            assert!(sizes[w[0]] <= sizes[w[1]]);
        }
        // unbatching restores the permutation exactly
        let batches = make_batches(&order, 3);
        let flat: Vec<usize> = batches.concat();
        assert_eq!(flat, order);
    }

    #[test]
    fn identical_seeds_reproduce_first_epoch_losses_bitwise() {
        let corpus = tiny_corpus();
        let mut cfg = tiny_cfg();
        cfg.epochs = 1;
        let dir1 = std::env::temp_dir().join("dgtrain-det-1");
        let dir2 = std::env::temp_dir().join("dgtrain-det-2");
        let o1 = train(&cfg, &corpus, &corpus, &dir1, None).unwrap();
        let o2 = train(&cfg, &corpus, &corpus, &dir2, None).unwrap();
        assert_eq!(
            o1.metrics[0].train_loss_per_token.to_bits(),
            o2.metrics[0].train_loss_per_token.to_bits()
        );
    }

    #[test]
    fn dropout_training_is_still_deterministic() {
        let corpus = tiny_corpus();
        let mut cfg = tiny_cfg();
        cfg.epochs = 1;
        cfg.model.encoder.dropout_rate = 0.3;
        let dir1 = std::env::temp_dir().join("dgtrain-drop-1");
        let dir2 = std::env::temp_dir().join("dgtrain-drop-2");
        let o1 = train(&cfg, &corpus, &corpus, &dir1, None).unwrap();
        let o2 = train(&cfg, &corpus, &corpus, &dir2, None).unwrap();
        assert_eq!(
            o1.metrics[0].train_loss_per_token.to_bits(),
            o2.metrics[0].train_loss_per_token.to_bits()
        );
    }

    #[test]
    fn training_writes_checkpoint_sidecars_and_metrics() {
        let corpus = tiny_corpus();
        let cfg = tiny_cfg();
        let dir = std::env::temp_dir().join("dgtrain-files");
        let outcome = train(&cfg, &corpus, &corpus, &dir, None).unwrap();
        assert!(outcome.checkpoint.exists());
        for suffix in [".meta", ".src.vocab", ".tgt.vocab"] {
            assert!(
                PathBuf::from(format!("{}{suffix}", outcome.checkpoint.display())).exists(),
                "missing sidecar {suffix}"
            );
        }
        let log = std::fs::read_to_string(&outcome.metrics_log).unwrap();
        assert!(log.starts_with("epoch\ttrain_loss\tdev_bleu\tseconds\tbest_so_far"));
        assert_eq!(log.lines().count(), 1 + outcome.metrics.len());
        let loaded = load_model(&outcome.checkpoint).unwrap();
        assert_eq!(loaded.params.count_parameters(), outcome.parameter_count);
        assert_eq!(loaded.config.ablation, cfg.model.ablation);
    }

    #[test]
    fn bilstm_only_checkpoint_has_no_graph_encoder_parameters() {
        let corpus = tiny_corpus();
        let mut cfg = tiny_cfg();
        cfg.epochs = 1;
        cfg.model.ablation = AblationMode::BilstmOnly;
        let dir = std::env::temp_dir().join("dgtrain-ablate");
        let outcome = train(&cfg, &corpus, &corpus, &dir, None).unwrap();
        let loaded = load_model(&outcome.checkpoint).unwrap();
        assert!(!loaded
            .params
            .names()
            .any(|n| n.starts_with("ge_t.") || n.starts_with("ge_b.")));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let cfg = tiny_cfg();
        let dir = std::env::temp_dir().join("dgtrain-empty");
        assert!(matches!(
            train(&cfg, &[], &[], &dir, None),
            Err(TrainError::EmptyCorpus)
        ));
    }

    // With patience 0, the first epoch whose dev BLEU fails to improve
    // ends training: every epoch but the last must be a strict
    // improvement.
    #[test]
    fn zero_patience_stops_at_the_first_non_improvement() {
        let corpus = tiny_corpus();
        let mut cfg = tiny_cfg();
        cfg.epochs = 8;
        cfg.patience = 0;
        let dir = std::env::temp_dir().join("dgtrain-patience0");
        let outcome = train(&cfg, &corpus, &corpus, &dir, None).unwrap();
        let mut best = f64::NEG_INFINITY;
        for (i, m) in outcome.metrics.iter().enumerate() {
            let improved = m.dev_bleu > best;
            if improved {
                best = m.dev_bleu;
            } else {
                assert_eq!(
                    i + 1,
                    outcome.metrics.len(),
                    "training ran past the first non-improving epoch"
                );
            }
        }
    }
}
