//! LIBSVM / SVMlight text format.
//!
//! ```text
//! # comment lines and blank lines are skipped
//! 3 1:0.5 7:1.2
//! 1 2:4 # trailing comments too
//! ```
//!
//! Feature indices are 1-based in the file and 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::{Item, LabeledDataset};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// What to do with explicit `idx:0` tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ZeroPolicy {
    #[default]
    Drop,
    Reject,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Fixed dimension; must cover every index in the file. When absent the
    /// dimension is the largest index seen.
    pub dim: Option<usize>,
    pub zeros: ZeroPolicy,
}

pub fn parse_libsvm<R: BufRead>(reader: R, options: &ParseOptions) -> Result<LabeledDataset> {
    let mut rows: Vec<(i64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let label = parse_label(label)
            .ok_or_else(|| parse_error(line_no, format!("invalid label '{label}'")))?;

        let mut entries = Vec::new();
        let mut last: Option<usize> = None;
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| {
                parse_error(line_no, format!("expected index:value, got '{token}'"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(line_no, format!("invalid feature index '{idx}'")))?;
            if idx == 0 {
                return Err(parse_error(line_no, "feature indices are 1-based".into()));
            }
            if last.is_some_and(|l| idx <= l) {
                return Err(parse_error(
                    line_no,
                    format!(
                        "feature indices must be strictly increasing ({idx} after {})",
                        last.unwrap()
                    ),
                ));
            }
            last = Some(idx);
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(line_no, format!("invalid feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(parse_error(
                    line_no,
                    format!("non-finite feature value '{val}'"),
                ));
            }
            if val == 0.0 {
                match options.zeros {
                    ZeroPolicy::Drop => continue,
                    ZeroPolicy::Reject => {
                        return Err(parse_error(
                            line_no,
                            format!("explicit zero for feature {idx}"),
                        ))
                    }
                }
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((label, entries));
    }

    let dim = match options.dim {
        Some(dim) if dim < max_index => {
            return Err(Error::argument(format!(
                "dimension override {dim} is smaller than the largest feature index {max_index}"
            )))
        }
        Some(dim) => dim,
        None if max_index == 0 => return Err(Error::argument(
            "cannot infer the dimension from input without features; pass an explicit dimension",
        )),
        None => max_index,
    };
    let items = rows
        .into_iter()
        .map(|(label, entries)| {
            Ok(Item {
                label,
                features: SparseVector::new(dim, entries)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(dim, items)
}

/// Reads a LIBSVM file, transparently decompressing names ending in `.gz`.
pub fn read_libsvm_file(path: impl AsRef<Path>, options: &ParseOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_libsvm(BufReader::new(GzDecoder::new(file)), options)
    } else {
        parse_libsvm(BufReader::new(file), options)
    }
}

pub fn write_libsvm<W: Write>(dataset: &LabeledDataset, mut out: W) -> Result<()> {
    for item in dataset.items() {
        write!(out, "{}", item.label)?;
        for (i, v) in item.features.iter() {
            write!(out, " {}:{}", i + 1, v)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_label(token: &str) -> Option<i64> {
    if let Ok(label) = token.parse::<i64>() {
        return Some(label);
    }
    // Labels such as "1.0" are accepted when integral.
    let value: f64 = token.parse().ok()?;
    (value.fract() == 0.0 && value.abs() < 9.0e15).then_some(value as i64)
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}
