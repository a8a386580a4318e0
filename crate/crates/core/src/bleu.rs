//! Corpus-level BLEU-4 following the multi-BLEU convention: clipped
//! n-gram precisions pooled over the corpus, geometric mean, brevity
//! penalty, no smoothing (a zero precision at any order zeroes the score).

use std::collections::HashMap;
use thiserror::Error;

const MAX_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum BleuError {
    #[error("reference/hypothesis length mismatch: {refs} references, {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
}

fn tokenize(line: &str, cased: bool) -> Vec<String> {
    let line = if cased {
        line.to_string()
    } else {
        line.to_lowercase()
    };
    line.split_whitespace().map(str::to_string).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.join("\u{1}")).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU in `[0, 100]`. Inputs are aligned, whitespace-tokenized
/// lines; lowercased unless `cased`.
pub fn bleu(references: &[String], hypotheses: &[String], cased: bool) -> Result<f64, BleuError> {
    if references.len() != hypotheses.len() {
        return Err(BleuError::LengthMismatch {
            refs: references.len(),
            hyps: hypotheses.len(),
        });
    }
    let mut matched = [0usize; MAX_ORDER];
    let mut total = [0usize; MAX_ORDER];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;
    for (r, h) in references.iter().zip(hypotheses) {
        let r = tokenize(r, cased);
        let h = tokenize(h, cased);
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_ORDER {
            let rc = ngram_counts(&r, n);
            for (gram, count) in ngram_counts(&h, n) {
                matched[n - 1] += count.min(rc.get(&gram).copied().unwrap_or(0));
            }
            total[n - 1] += h.len().saturating_sub(n - 1);
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0f64;
    for n in 0..MAX_ORDER {
        if matched[n] == 0 || total[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
    }
    let geo_mean = (log_sum / MAX_ORDER as f64).exp();
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * geo_mean * bp)
}
