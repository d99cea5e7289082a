//! Text formats for tensors and coefficient tables.
//!
//! Tensor files (versioned):
//!
//! ```text
//! SNTENSOR v1
//! g r r
//! N=5
//! (1,2) 3 4 -0.25
//! ```
//!
//! One entry per line after the header; absent entries are zero. Values
//! print with full round-trip precision. Coefficient tables are lines
//! `<canonical graph text> <value>`.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graphs::{Graph, IndexEntry, IndexTuple, Signature, SlotKind};
use crate::invariants::{CoefficientTable, InvariantError, InvariantTensor};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn write_tensor<W: Write>(t: &InvariantTensor, w: &mut W) -> Result<(), IoError> {
    writeln!(w, "SNTENSOR v1")?;
    let kinds: Vec<&str> = t
        .signature()
        .kinds()
        .iter()
        .map(|k| match k {
            SlotKind::Radial => "r",
            SlotKind::Angular => "g",
        })
        .collect();
    writeln!(w, "{}", kinds.join(" "))?;
    writeln!(w, "N={}", t.n_particles())?;
    for (tuple, v) in t.nonzero_entries() {
        writeln!(w, "{tuple} {v}")?;
    }
    Ok(())
}

pub fn read_tensor<R: BufRead>(r: &mut R) -> Result<InvariantTensor, IoError> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    if header.trim() != "SNTENSOR v1" {
        return Err(parse_err(1, format!("bad header {header:?}")));
    }
    let (_, sig_line) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing signature line"))?;
    let sig: Signature = sig_line?
        .parse()
        .map_err(|e| parse_err(2, format!("{e}")))?;
    let (_, n_line) = lines
        .next()
        .ok_or_else(|| parse_err(3, "missing N= line"))?;
    let n_line = n_line?;
    let n: u32 = n_line
        .trim()
        .strip_prefix("N=")
        .ok_or_else(|| parse_err(3, format!("expected N=<count>, got {n_line:?}")))?
        .parse()
        .map_err(|_| parse_err(3, format!("bad particle count in {n_line:?}")))?;
    let mut t = InvariantTensor::zeros(sig.clone(), n);
    for (idx, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut tokens = trimmed.split_whitespace().collect::<Vec<_>>();
        if tokens.len() != sig.rank() + 1 {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} index tokens and a value, got {trimmed:?}",
                    sig.rank()
                ),
            ));
        }
        let value: f64 = tokens
            .pop()
            .unwrap()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad value in {trimmed:?}")))?;
        let mut entries = Vec::with_capacity(sig.rank());
        for (tok, kind) in tokens.iter().zip(sig.kinds()) {
            entries.push(parse_entry(tok, *kind, lineno)?);
        }
        t.set(&IndexTuple(entries), value)
            .map_err(|e| parse_err(lineno, format!("{e}")))?;
    }
    Ok(t)
}

fn parse_entry(tok: &str, kind: SlotKind, lineno: usize) -> Result<IndexEntry, IoError> {
    match kind {
        SlotKind::Radial => {
            let i: u32 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad radial index {tok:?}")))?;
            Ok(IndexEntry::Radial(i))
        }
        SlotKind::Angular => {
            let inner = tok
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| parse_err(lineno, format!("bad pair {tok:?}")))?;
            let (i, j) = inner
                .split_once(',')
                .ok_or_else(|| parse_err(lineno, format!("bad pair {tok:?}")))?;
            let i: u32 = i
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad pair {tok:?}")))?;
            let j: u32 = j
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad pair {tok:?}")))?;
            Ok(IndexEntry::Pair(i, j))
        }
    }
}

pub fn write_table<W: Write>(t: &CoefficientTable, w: &mut W) -> Result<(), IoError> {
    for (g, v) in &t.values {
        writeln!(w, "{g} {v}")?;
    }
    Ok(())
}

/// Reads `<graph> <value>` lines; signature and N are not part of the format.
pub fn read_table_entries<R: BufRead>(r: &mut R) -> Result<Vec<(Graph, f64)>, IoError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (gtext, vtext) = trimmed
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| parse_err(lineno, format!("expected <graph> <value>, got {trimmed:?}")))?;
        let g: Graph = gtext
            .trim()
            .parse()
            .map_err(|e| parse_err(lineno, format!("{e}")))?;
        let v: f64 = vtext
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad value {vtext:?}")))?;
        out.push((g, v));
    }
    Ok(out)
}
