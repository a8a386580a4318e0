//! PENMAN notation parser.
//!
//! Accepts one expression of the form `(var / concept :rel target ...)`
//! where a target is a nested node, a re-reference to a defined variable
//! (a reentrancy), a quoted string, or a bare constant. Constants become
//! leaf nodes labeled with the constant text. Bare symbols that look like
//! AMR variables (a single lowercase letter plus optional digits) but are
//! never defined are reported as undefined-variable errors; anything else
//! is treated as a constant.

use crate::amr::{AmrEdge, AmrGraph, AmrNode};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("undefined variable reference `{0}`")]
    UndefinedVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("trailing input after graph")]
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

struct Token {
    tok: Tok,
    offset: usize,
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                tokens.push(Token { tok: Tok::LParen, offset: i });
                i += 1;
            }
            b')' => {
                tokens.push(Token { tok: Tok::RParen, offset: i });
                i += 1;
            }
            b'/' => {
                tokens.push(Token { tok: Tok::Slash, offset: i });
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() {
                        return Err(err(start, ParseErrorKind::UnterminatedString));
                    }
                    match bytes[i] {
                        b'"' => {
                            i += 1;
                            break;
                        }
                        b'\\' if i + 1 < bytes.len() => {
                            s.push(bytes[i + 1] as char);
                            i += 2;
                        }
                        c => {
                            s.push(c as char);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token { tok: Tok::Str(s), offset: start });
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b'/') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = if let Some(role) = word.strip_prefix(':') {
                    if role.is_empty() {
                        return Err(err(start, ParseErrorKind::Expected("relation name after ':'")));
                    }
                    Tok::Role(word.to_string())
                } else {
                    Tok::Sym(word.to_string())
                };
                tokens.push(Token { tok, offset: start });
            }
        }
    }
    Ok(tokens)
}

/// True for symbols following the AMR variable convention: one lowercase
/// letter plus optional digits (`s`, `a2`, `n10`).
fn variable_shaped(sym: &str) -> bool {
    let mut chars = sym.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end_offset: usize,
    defined: HashSet<String>,
    nodes: Vec<AmrNode>,
    edges: Vec<AmrEdge>,
    var_ids: HashMap<String, usize>,
    // Forward references: edge index waiting for a variable defined later.
    pending: Vec<(usize, String)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.offset)
            .unwrap_or(self.end_offset)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &'static str) -> Result<(), ParseError> {
        let offset = self.offset();
        match self.next() {
            Some(t) if t.tok == *want => Ok(()),
            Some(t) if matches!((want, &t.tok), (Tok::RParen, _)) => {
                Err(err(offset, ParseErrorKind::Unbalanced))
            }
            _ => Err(err(offset, ParseErrorKind::Expected(what))),
        }
    }

    /// `( var / concept relation* )` -> node id.
    fn parse_node(&mut self) -> Result<usize, ParseError> {
        self.expect(&Tok::LParen, "'('")?;
        let offset = self.offset();
        let var = match self.next() {
            Some(Token { tok: Tok::Sym(v), .. }) => v.clone(),
            _ => return Err(err(offset, ParseErrorKind::Expected("variable name"))),
        };
        if self.var_ids.contains_key(&var) {
            return Err(err(offset, ParseErrorKind::DuplicateVariable(var)));
        }
        self.expect(&Tok::Slash, "'/' after variable")?;
        let offset = self.offset();
        let label = match self.next() {
            Some(Token { tok: Tok::Sym(c), .. }) => c.clone(),
            Some(Token { tok: Tok::Str(c), .. }) => c.clone(),
            _ => return Err(err(offset, ParseErrorKind::Expected("concept label"))),
        };
        let id = self.nodes.len();
        self.nodes.push(AmrNode {
            variable: Some(var.clone()),
            label,
        });
        self.var_ids.insert(var, id);

        loop {
            let offset = self.offset();
            match self.peek() {
                Some(Tok::RParen) => {
                    self.next();
                    return Ok(id);
                }
                Some(Tok::Role(_)) => {
                    let role = match self.next() {
                        Some(Token { tok: Tok::Role(r), .. }) => r.clone(),
                        _ => unreachable!(),
                    };
                    // Reserve the edge slot before the target so edge order
                    // follows the textual order of the relations.
                    let edge_idx = self.edges.len();
                    self.edges.push(AmrEdge {
                        source: id,
                        relation: role,
                        target: usize::MAX,
                    });
                    self.parse_target(edge_idx)?;
                }
                Some(_) => return Err(err(offset, ParseErrorKind::Expected("relation or ')'"))),
                None => return Err(err(offset, ParseErrorKind::Unbalanced)),
            }
        }
    }

    fn parse_target(&mut self, edge_idx: usize) -> Result<(), ParseError> {
        let offset = self.offset();
        match self.peek() {
            Some(Tok::LParen) => {
                let id = self.parse_node()?;
                self.edges[edge_idx].target = id;
                Ok(())
            }
            Some(Tok::Str(_)) => {
                let label = match self.next() {
                    Some(Token { tok: Tok::Str(s), .. }) => s.clone(),
                    _ => unreachable!(),
                };
                let id = self.nodes.len();
                self.nodes.push(AmrNode { variable: None, label });
                self.edges[edge_idx].target = id;
                Ok(())
            }
            Some(Tok::Sym(_)) => {
                let sym = match self.next() {
                    Some(Token { tok: Tok::Sym(s), .. }) => s.clone(),
                    _ => unreachable!(),
                };
                if let Some(&id) = self.var_ids.get(&sym) {
                    self.edges[edge_idx].target = id; // reentrancy
                    return Ok(());
                }
                if self.defined.contains(&sym) {
                    // Forward reference; resolved once the definition is parsed.
                    self.pending.push((edge_idx, sym));
                    return Ok(());
                }
                if variable_shaped(&sym) {
                    return Err(err(offset, ParseErrorKind::UndefinedVariable(sym)));
                }
                let id = self.nodes.len();
                self.nodes.push(AmrNode { variable: None, label: sym });
                self.edges[edge_idx].target = id;
                Ok(())
            }
            _ => Err(err(offset, ParseErrorKind::Expected("relation target"))),
        }
    }
}

/// Parse one PENMAN expression into an [`AmrGraph`].
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    // First pass: collect every defined variable, so references are only
    // undefined when no definition exists anywhere in the expression.
    let mut defined = HashSet::new();
    for w in tokens.windows(3) {
        if let (Tok::LParen, Tok::Sym(v), Tok::Slash) = (&w[0].tok, &w[1].tok, &w[2].tok) {
            defined.insert(v.clone());
        }
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end_offset: text.len(),
        defined,
        nodes: Vec::new(),
        edges: Vec::new(),
        var_ids: HashMap::new(),
        pending: Vec::new(),
    };
    let root = parser.parse_node()?;
    if parser.pos != tokens.len() {
        let offset = parser.offset();
        let kind = match parser.peek() {
            Some(Tok::RParen) => ParseErrorKind::Unbalanced,
            _ => ParseErrorKind::TrailingInput,
        };
        return Err(err(offset, kind));
    }
    let pending = std::mem::take(&mut parser.pending);
    for (edge_idx, var) in pending {
        parser.edges[edge_idx].target = parser.var_ids[&var];
    }
    Ok(AmrGraph {
        nodes: parser.nodes,
        edges: parser.edges,
        root,
    })
}
