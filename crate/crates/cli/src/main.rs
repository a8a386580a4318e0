//! Command-line surface: statistics, preprocessing, training, generation,
//! evaluation, the ablation study and the gradient-check suite.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use clap::{Parser, Subcommand};
use dualgraph_core::analysis::{adequacy, bucket_eval, BucketKey, BucketSpec};
use dualgraph_core::bleu::bleu;
use dualgraph_core::corpus::read_corpus;
use dualgraph_core::model::{decode_example, EncodedExample};
use dualgraph_core::stats::corpus_stats;
use dualgraph_core::training::{
    ablation_table, clamp_warning, load_model, run_ablations, train, TrainFileConfig, SEED_ENV_VAR,
};
use dualgraph_core::vocab::build_vocab;
use std::path::{Path, PathBuf};

mod gradcheck_cmd;

#[derive(Parser)]
#[command(
    name = "dualgraph",
    about = "AMR-to-text generation with dual top-down/bottom-up graph encoders",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics as TSV (summary rows, then histograms)
    Stats {
        /// AMR-release corpus file
        corpus: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serialize graph views and vocabularies for inspection
    Preprocess {
        corpus: PathBuf,
        /// Output directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        /// Vocabulary size cap
        #[arg(long, default_value_t = 20_000)]
        max_vocab: usize,
    },
    /// Train a model from a flat key = value config file
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate sentences from a checkpoint, one line per input graph
    Generate {
        #[arg(long)]
        ckpt: PathBuf,
        /// Input corpus (sentences in the file are ignored)
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        beam: usize,
        #[arg(long, default_value_t = 250)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// BLEU, bucketed analysis and adequacy
    Eval {
        /// Reference sentences, one per line
        #[arg(long)]
        refs: PathBuf,
        /// System outputs, one per line
        #[arg(long)]
        hyps: PathBuf,
        /// Bucket key: graph_diameter, sentence_length or max_out_degree
        #[arg(long)]
        buckets: Option<String>,
        /// Corpus aligned with refs/hyps (needed for buckets and adequacy)
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Baseline outputs for the bucket deltas
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Report added/missing token fractions against the corpus graphs
        #[arg(long)]
        adequacy: bool,
        /// Keep case (BLEU lowercases by default)
        #[arg(long)]
        cased: bool,
    },
    /// Train the four ablation configurations and print the comparison
    Ablate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-difference gradient checks for every differentiable component
    Gradcheck {
        /// Random seeds per component
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
}

enum AppError {
    Usage(String),
    Data(String),
}

impl AppError {
    fn data(err: impl std::fmt::Display) -> Self {
        AppError::Data(err.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own usage text; the exit-code contract is ours
            let _ = err.print();
            std::process::exit(if err.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match dispatch(cli.command) {
        Ok(()) => 0,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn write_or_print(out: Option<&Path>, contents: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| AppError::data(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("reading {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn env_seed_override() -> Result<Option<u64>, AppError> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| AppError::Usage(format!("{SEED_ENV_VAR}={v} is not an integer seed"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(command: Command) -> Result<(), AppError> {
    match command {
        Command::Stats { corpus, out } => {
            let examples = read_corpus(&corpus).map_err(AppError::data)?;
            let report = corpus_stats(&examples).map_err(AppError::data)?;
            write_or_print(out.as_deref(), &report.to_tsv())
        }
        Command::Preprocess { corpus, out, max_vocab } => preprocess(&corpus, &out, max_vocab),
        Command::Train { config } => {
            let mut fc = TrainFileConfig::from_file(&config).map_err(AppError::data)?;
            if let Some(seed) = env_seed_override()? {
                fc.config.seed = seed;
            }
            let train_corpus = read_corpus(&fc.train_path).map_err(AppError::data)?;
            let dev_corpus = match &fc.dev_path {
                Some(path) => read_corpus(path).map_err(AppError::data)?,
                None => train_corpus.clone(),
            };
            let outcome = train(
                &fc.config,
                &train_corpus,
                &dev_corpus,
                &fc.out_dir,
                fc.glove_path.as_deref(),
            )
            .map_err(AppError::data)?;
            println!("seed: {}", fc.config.seed);
            println!("parameters: {}", outcome.parameter_count);
            if let Some(coverage) = outcome.embedding_coverage {
                println!("pretrained embedding coverage: {coverage:.4}");
            }
            println!(
                "best dev BLEU {:.2} at epoch {} ({} epochs run)",
                outcome.best_dev_bleu,
                outcome.best_epoch,
                outcome.metrics.len()
            );
            println!("checkpoint: {}", outcome.checkpoint.display());
            println!("metrics: {}", outcome.metrics_log.display());
            if let Some(warning) = clamp_warning(outcome.clamped_positions) {
                eprintln!("warning: {warning}");
            }
            Ok(())
        }
        Command::Generate { ckpt, input, beam, max_len, out } => {
            if beam < 1 {
                return Err(AppError::Usage("--beam must be at least 1".into()));
            }
            if max_len < 1 {
                return Err(AppError::Usage("--max-len must be at least 1".into()));
            }
            let model = load_model(&ckpt).map_err(AppError::data)?;
            let examples = read_corpus(&input).map_err(AppError::data)?;
            let mut lines = String::new();
            for ex in &examples {
                let tokens = decode_example(
                    &model.params,
                    &model.config,
                    &model.src_vocab,
                    &model.tgt_vocab,
                    ex,
                    beam,
                    max_len,
                );
                lines.push_str(&tokens.join(" "));
                lines.push('\n');
            }
            write_or_print(out.as_deref(), &lines)
        }
        Command::Eval {
            refs,
            hyps,
            buckets,
            corpus,
            baseline,
            adequacy: run_adequacy,
            cased,
        } => eval(
            &refs,
            &hyps,
            buckets.as_deref(),
            corpus.as_deref(),
            baseline.as_deref(),
            run_adequacy,
            cased,
        ),
        Command::Ablate { config } => {
            let mut fc = TrainFileConfig::from_file(&config).map_err(AppError::data)?;
            if let Some(seed) = env_seed_override()? {
                fc.config.seed = seed;
            }
            let train_corpus = read_corpus(&fc.train_path).map_err(AppError::data)?;
            let dev_corpus = match &fc.dev_path {
                Some(path) => read_corpus(path).map_err(AppError::data)?,
                None => train_corpus.clone(),
            };
            let rows = run_ablations(&fc.config, &train_corpus, &dev_corpus, &fc.out_dir)
                .map_err(AppError::data)?;
            print!("{}", ablation_table(&rows));
            Ok(())
        }
        Command::Gradcheck { seeds } => {
            if seeds == 0 {
                return Err(AppError::Usage("--seeds must be at least 1".into()));
            }
            let report = gradcheck_cmd::run(seeds);
            print!("{}", report.text);
            if report.all_passed {
                Ok(())
            } else {
                Err(AppError::Data("gradient check failed".into()))
            }
        }
    }
}

fn preprocess(corpus: &Path, out: &Path, max_vocab: usize) -> Result<(), AppError> {
    let examples = read_corpus(corpus).map_err(AppError::data)?;
    let (src_vocab, tgt_vocab) = build_vocab(&examples, max_vocab).map_err(AppError::data)?;
    std::fs::create_dir_all(out)
        .map_err(|e| AppError::data(format!("creating {}: {e}", out.display())))?;
    std::fs::write(out.join("src.vocab"), src_vocab.to_lines())
        .map_err(|e| AppError::data(format!("writing src.vocab: {e}")))?;
    std::fs::write(out.join("tgt.vocab"), tgt_vocab.to_lines())
        .map_err(|e| AppError::data(format!("writing tgt.vocab: {e}")))?;

    let mut views = String::new();
    for ex in &examples {
        let enc = EncodedExample::from_example(ex, &src_vocab, &tgt_vocab);
        let edges: Vec<[usize; 2]> = enc
            .in_top_down
            .iter()
            .enumerate()
            .flat_map(|(node, sources)| sources.iter().map(move |&s| [s, node]))
            .collect();
        let record = serde_json::json!({
            "labels_dfs": enc.dfs_labels,
            "dfs": enc.dfs,
            "edges_top_down": edges,
            "src_ids": enc.src_ids,
            "sentence": ex.sentence,
        });
        views.push_str(&record.to_string());
        views.push('\n');
    }
    std::fs::write(out.join("views.jsonl"), views)
        .map_err(|e| AppError::data(format!("writing views.jsonl: {e}")))?;
    println!(
        "wrote {} examples, src vocab {}, tgt vocab {} -> {}",
        examples.len(),
        src_vocab.len(),
        tgt_vocab.len(),
        out.display()
    );
    Ok(())
}

fn eval(
    refs_path: &Path,
    hyps_path: &Path,
    buckets: Option<&str>,
    corpus: Option<&Path>,
    baseline: Option<&Path>,
    run_adequacy: bool,
    cased: bool,
) -> Result<(), AppError> {
    let refs = read_lines(refs_path)?;
    let hyps = read_lines(hyps_path)?;
    let score = bleu(&refs, &hyps, cased).map_err(AppError::data)?;
    println!("BLEU = {score:.2}");

    if let Some(key_name) = buckets {
        let key = BucketKey::parse(key_name).ok_or_else(|| {
            AppError::Usage(format!(
                "unknown bucket key `{key_name}` (expected graph_diameter, sentence_length or max_out_degree)"
            ))
        })?;
        let corpus_path = corpus.ok_or_else(|| {
            AppError::Usage("--buckets needs --corpus for the graph-derived keys".into())
        })?;
        let baseline_path = baseline.ok_or_else(|| {
            AppError::Usage("--buckets needs --baseline outputs for the deltas".into())
        })?;
        let dataset = read_corpus(corpus_path).map_err(AppError::data)?;
        let baseline_lines = read_lines(baseline_path)?;
        let table = bucket_eval(&dataset, &hyps, &baseline_lines, &BucketSpec::default_for(key))
            .map_err(AppError::data)?;
        for (value, bucket) in &table.warnings {
            eprintln!("warning: value {value} outside all buckets, snapped to bucket {bucket}");
        }
        print!("{}", table.to_tsv());
    }

    if run_adequacy {
        let corpus_path = corpus.ok_or_else(|| {
            AppError::Usage("--adequacy needs --corpus for the input graphs".into())
        })?;
        let dataset = read_corpus(corpus_path).map_err(AppError::data)?;
        if dataset.len() != hyps.len() {
            return Err(AppError::Data(format!(
                "corpus has {} graphs but {} hypotheses",
                dataset.len(),
                hyps.len()
            )));
        }
        println!("# adequacy uses a suffix-strip stemmer in place of lemmas");
        let mut added = 0.0;
        let mut missing = 0.0;
        let mut flagged = 0usize;
        for (ex, hyp) in dataset.iter().zip(&hyps) {
            let tokens: Vec<String> = hyp.split_whitespace().map(str::to_string).collect();
            let report = adequacy(&ex.graph, &tokens);
            added += report.added_pct;
            missing += report.missing_pct;
            flagged += report.empty_output as usize;
        }
        let n = dataset.len() as f64;
        println!("ADDED = {:.2}%", 100.0 * added / n);
        println!("MISS = {:.2}%", 100.0 * missing / n);
        if flagged > 0 {
            eprintln!("warning: {flagged} empty outputs");
        }
    }
    Ok(())
}
