//! Bucketed evaluation and added/missing token adequacy.

use crate::amr::AmrGraph;
use crate::bleu::{bleu, BleuError};
use crate::corpus::Example;
use crate::stats::graph_stats;
use std::fmt::Write as _;
use thiserror::Error;

/// Example property a bucket partition keys on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BucketKey {
    GraphDiameter,
    SentenceLength,
    MaxOutDegree,
}

impl BucketKey {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "graph_diameter" => Some(BucketKey::GraphDiameter),
            "sentence_length" => Some(BucketKey::SentenceLength),
            "max_out_degree" => Some(BucketKey::MaxOutDegree),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BucketKey::GraphDiameter => "graph_diameter",
            BucketKey::SentenceLength => "sentence_length",
            BucketKey::MaxOutDegree => "max_out_degree",
        }
    }
}

/// Ordered, non-overlapping `[low, high)` ranges; the final range is
/// closed at its upper end.
#[derive(Clone, Debug)]
pub struct BucketSpec {
    pub key: BucketKey,
    pub ranges: Vec<(usize, usize)>,
}

impl BucketSpec {
    /// Default partitions: diameter [0,7) [7,14) [14,20],
    /// sentence length [0,20) [20,50) [50,240], out-degree [0,4) [4,9) [9,18].
    pub fn default_for(key: BucketKey) -> Self {
        let ranges = match key {
            BucketKey::GraphDiameter => vec![(0, 7), (7, 14), (14, 20)],
            BucketKey::SentenceLength => vec![(0, 20), (20, 50), (50, 240)],
            BucketKey::MaxOutDegree => vec![(0, 4), (4, 9), (9, 18)],
        };
        BucketSpec { key, ranges }
    }

    /// Bucket index for a value; out-of-range values snap to the nearest
    /// bucket and are reported as warnings.
    pub fn assign(&self, value: usize) -> (usize, bool) {
        for (i, &(low, high)) in self.ranges.iter().enumerate() {
            let last = i + 1 == self.ranges.len();
            if value >= low && (value < high || (last && value == high)) {
                return (i, false);
            }
        }
        if value < self.ranges[0].0 {
            (0, true)
        } else {
            (self.ranges.len() - 1, true)
        }
    }

    pub fn value_of(&self, ex: &Example) -> usize {
        match self.key {
            BucketKey::GraphDiameter => graph_stats(&ex.graph).diameter,
            BucketKey::SentenceLength => ex.sentence.len(),
            BucketKey::MaxOutDegree => graph_stats(&ex.graph).max_out_degree,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BucketRow {
    pub low: usize,
    pub high: usize,
    pub count: usize,
    pub bleu: Option<f64>,
    pub baseline_bleu: Option<f64>,
    pub delta_pct: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BucketTable {
    pub key: BucketKey,
    pub rows: Vec<BucketRow>,
    /// Examples that fell outside every range (value, snapped bucket).
    pub warnings: Vec<(usize, usize)>,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("outputs ({outputs}) not aligned with dataset ({dataset})")]
    Misaligned { dataset: usize, outputs: usize },
    #[error(transparent)]
    Bleu(#[from] BleuError),
}

/// Per-bucket corpus BLEU with percentage deltas against a baseline
/// output set. References come from the dataset sentences.
pub fn bucket_eval(
    dataset: &[Example],
    outputs: &[String],
    baseline: &[String],
    spec: &BucketSpec,
) -> Result<BucketTable, AnalysisError> {
    if outputs.len() != dataset.len() || baseline.len() != dataset.len() {
        return Err(AnalysisError::Misaligned {
            dataset: dataset.len(),
            outputs: outputs.len().min(baseline.len()),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.ranges.len()];
    let mut warnings = Vec::new();
    for (i, ex) in dataset.iter().enumerate() {
        let value = spec.value_of(ex);
        let (bucket, warned) = spec.assign(value);
        if warned {
            warnings.push((value, bucket));
        }
        members[bucket].push(i);
    }
    let mut rows = Vec::with_capacity(spec.ranges.len());
    for (b, &(low, high)) in spec.ranges.iter().enumerate() {
        let ids = &members[b];
        if ids.is_empty() {
            rows.push(BucketRow {
                low,
                high,
                count: 0,
                bleu: None,
                baseline_bleu: None,
                delta_pct: None,
            });
            continue;
        }
        let refs: Vec<String> = ids.iter().map(|&i| dataset[i].sentence_text()).collect();
        let hyps: Vec<String> = ids.iter().map(|&i| outputs[i].clone()).collect();
        let base: Vec<String> = ids.iter().map(|&i| baseline[i].clone()).collect();
        let sys_bleu = bleu(&refs, &hyps, false)?;
        let base_bleu = bleu(&refs, &base, false)?;
        let delta = if base_bleu > 0.0 {
            Some(100.0 * (sys_bleu - base_bleu) / base_bleu)
        } else {
            None
        };
        rows.push(BucketRow {
            low,
            high,
            count: ids.len(),
            bleu: Some(sys_bleu),
            baseline_bleu: Some(base_bleu),
            delta_pct: delta,
        });
    }
    Ok(BucketTable {
        key: spec.key,
        rows,
        warnings,
    })
}

impl BucketTable {
    /// TSV: `bucket count bleu delta_pct`. BLEU substitutes for the
    /// sentence-level metric this analysis is usually reported with.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bucket analysis over {} (metric: BLEU)", self.key.name());
        let _ = writeln!(out, "bucket\tcount\tbleu\tdelta_pct");
        for r in &self.rows {
            let bleu = r.bleu.map(|b| format!("{b:.2}")).unwrap_or_default();
            let delta = r
                .delta_pct
                .map(|d| format!("{d:+.1}%"))
                .unwrap_or_default();
            let _ = writeln!(out, "{}-{}\t{}\t{}\t{}", r.low, r.high, r.count, bleu, delta);
        }
        out
    }
}

/// Added/missing token fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct AdequacyReport {
    /// Output tokens whose stem matches no concept-label stem, over all
    /// output tokens.
    pub added_pct: f64,
    /// Concept labels whose stem matches no output-token stem, over all
    /// concept labels.
    pub missing_pct: f64,
    /// Set when the output was empty (ADDED 0, MISS 1 by convention).
    pub empty_output: bool,
}

/// Lowercase, drop a sense suffix (`-01`), then strip the first matching
/// inflection suffix (s, es, ed, ing) that leaves at least three
/// characters. A desk-scale stand-in for lemmatization.
pub fn stem(word: &str) -> String {
    let mut w = word.to_lowercase();
    if let Some(dash) = w.rfind('-') {
        if dash > 0 && w[dash + 1..].chars().all(|c| c.is_ascii_digit()) && dash + 1 < w.len() {
            w.truncate(dash);
        }
    }
    for suffix in ["s", "es", "ed", "ing"] {
        if w.ends_with(suffix) && w.len() - suffix.len() >= 3 {
            w.truncate(w.len() - suffix.len());
            break;
        }
    }
    w
}

/// Compare output tokens against the graph's concept labels (relation
/// labels are edge labels and never participate).
pub fn adequacy(graph: &AmrGraph, sentence: &[String]) -> AdequacyReport {
    if sentence.is_empty() {
        return AdequacyReport {
            added_pct: 0.0,
            missing_pct: 1.0,
            empty_output: true,
        };
    }
    let concept_stems: Vec<String> = graph.nodes.iter().map(|n| stem(&n.label)).collect();
    let token_stems: Vec<String> = sentence.iter().map(|t| stem(t)).collect();
    let added = token_stems
        .iter()
        .filter(|t| !concept_stems.contains(t))
        .count();
    let missing = concept_stems
        .iter()
        .filter(|c| !token_stems.contains(c))
        .count();
    AdequacyReport {
        added_pct: added as f64 / token_stems.len() as f64,
        missing_pct: missing as f64 / concept_stems.len() as f64,
        empty_output: false,
    }
}
