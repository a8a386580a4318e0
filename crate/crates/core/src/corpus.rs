//! AMR-release corpus files: blocks separated by blank lines, metadata in
//! `#` comment lines (the sentence on `# ::snt`), PENMAN graph in the
//! remaining lines of the block.

use crate::amr::AmrGraph;
use crate::penman::{parse_penman, ParseError};
use std::path::Path;
use thiserror::Error;

/// One corpus instance: a graph and its whitespace-tokenized sentence.
#[derive(Clone, Debug)]
pub struct Example {
    pub graph: AmrGraph,
    pub sentence: Vec<String>,
}

impl Example {
    pub fn sentence_text(&self) -> String {
        self.sentence.join(" ")
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("block starting at line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("no graphs found")]
    Empty,
}

/// Parse corpus text into examples. Blocks with only comments are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<Example>, CorpusError> {
    let mut examples = Vec::new();
    let mut sentence: Option<String> = None;
    let mut graph_lines: Vec<&str> = Vec::new();
    let mut block_line = 1usize;

    let mut flush = |sentence: &mut Option<String>,
                     graph_lines: &mut Vec<&str>,
                     block_line: usize|
     -> Result<(), CorpusError> {
        if graph_lines.is_empty() {
            *sentence = None;
            return Ok(());
        }
        let graph_text = graph_lines.join(" ");
        graph_lines.clear();
        let graph = parse_penman(&graph_text).map_err(|source| CorpusError::Parse {
            line: block_line,
            source,
        })?;
        let tokens = sentence
            .take()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        examples.push(Example {
            graph,
            sentence: tokens,
        });
        Ok(())
    };

    let mut in_block = false;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut sentence, &mut graph_lines, block_line)?;
            in_block = false;
        } else {
            if !in_block {
                block_line = i + 1;
                in_block = true;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(snt) = rest.trim_start().strip_prefix("::snt") {
                    sentence = Some(snt.trim().to_string());
                }
            } else {
                graph_lines.push(trimmed);
            }
        }
    }
    flush(&mut sentence, &mut graph_lines, block_line)?;

    if examples.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(examples)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Example>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# ::id 1
# ::snt The boy wants to go .
(w / want-01
   :ARG0 (b / boy)
   :ARG1 (g / go-01
      :ARG0 b))

# ::snt That semester .
(s / semester :mod (t / that))
";

    #[test]
    fn parses_blocks_with_sentences() {
        let corpus = parse_corpus(SAMPLE).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].sentence.len(), 6);
        assert_eq!(corpus[0].graph.node_count(), 3);
        assert_eq!(corpus[1].sentence_text(), "That semester .");
        assert_eq!(corpus[1].graph.node_count(), 2);
    }

    #[test]
    fn multiline_graphs_are_joined() {
        let corpus = parse_corpus("(a / alpha\n   :mod (b / beta))\n").unwrap();
        assert_eq!(corpus[0].graph.edge_count(), 1);
    }

    #[test]
    fn missing_sentence_yields_empty_tokens() {
        let corpus = parse_corpus("(a / alpha)\n").unwrap();
        assert!(corpus[0].sentence.is_empty());
    }

    #[test]
    fn parse_errors_carry_the_block_line() {
        let e = parse_corpus("# ::snt ok\n(a / alpha)\n\n# ::snt bad\n(b / beta))\n").unwrap_err();
        match e {
            CorpusError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_corpus(""), Err(CorpusError::Empty)));
        assert!(matches!(parse_corpus("# only comments\n"), Err(CorpusError::Empty)));
    }
}
