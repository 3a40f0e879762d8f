//! Plain-text model files.
//!
//! ```text
//! 3 4
//! 0 0 1
//! 0 2 -0.25
//! 1 1 1
//! 2 2 0.5
//! ```
//!
//! The header holds `dim nnz`; each following line is one stored entry
//! `row col value` with 0-based indices. Entries are written in row-major
//! order and values use the shortest decimal that round-trips.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::SimilarityModel;

pub fn write_model<W: Write>(model: &SimilarityModel, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", model.dim(), model.nnz())?;
    for (i, j, v) in model.iter() {
        writeln!(out, "{i} {j} {v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn model_to_string(model: &SimilarityModel) -> String {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("model text is ASCII")
}

pub fn read_model<R: Read>(mut input: R) -> Result<SimilarityModel> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<SimilarityModel> {
    let mut lines = Lines::new(text);
    let (line, offset, header) = loop {
        match lines.next() {
            Some((_, _, l)) if l.trim().is_empty() => continue,
            Some(found) => break found,
            None => return Err(format_error(1, text.len(), "missing header line `dim nnz`")),
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [dim, nnz] = fields[..] else {
        return Err(format_error(line, offset, "header must be `dim nnz`"));
    };
    let dim: usize = parse_field(dim, "dim", line, offset)?;
    let nnz: usize = parse_field(nnz, "nnz", line, offset)?;
    if dim == 0 {
        return Err(format_error(line, offset, "dim must be positive"));
    }
    if nnz as u128 > (dim as u128) * (dim as u128) {
        return Err(format_error(line, offset, "nnz exceeds dim²"));
    }

    let mut entries = Vec::with_capacity(nnz);
    while entries.len() < nnz {
        let Some((line, offset, content)) = lines.next() else {
            return Err(format_error(
                lines.line + 1,
                text.len(),
                &format!(
                    "unexpected end of file: header declares {nnz} entries, found {}",
                    entries.len()
                ),
            ));
        };
        if content.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [row, col, value] = fields[..] else {
            return Err(format_error(line, offset, "entry must be `row col value`"));
        };
        let row: usize = parse_field(row, "row", line, offset)?;
        let col: usize = parse_field(col, "col", line, offset)?;
        let value: f64 = parse_field(value, "value", line, offset)?;
        if row >= dim || col >= dim {
            return Err(format_error(
                line,
                offset,
                &format!("entry ({row}, {col}) out of range for dim {dim}"),
            ));
        }
        if value == 0.0 {
            return Err(format_error(line, offset, "stored value must be nonzero"));
        }
        if !value.is_finite() {
            return Err(format_error(line, offset, "stored value must be finite"));
        }
        entries.push((row, col, value, line, offset));
    }
    if let Some((line, offset, _)) = lines.find(|(_, _, l)| !l.trim().is_empty()) {
        return Err(format_error(
            line,
            offset,
            &format!("more entries than the {nnz} declared in the header"),
        ));
    }

    entries.sort_by_key(|&(r, c, _, line, _)| (r, c, line));
    if let Some(w) = entries
        .windows(2)
        .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
    {
        let (r, c, _, line, offset) = w[1];
        return Err(format_error(
            line,
            offset,
            &format!("duplicate entry ({r}, {c})"),
        ));
    }
    SimilarityModel::from_entries(dim, entries.into_iter().map(|(r, c, v, _, _)| (r, c, v)))
}

fn parse_field<T: std::str::FromStr>(
    token: &str,
    what: &str,
    line: usize,
    offset: usize,
) -> Result<T> {
    token
        .parse()
        .map_err(|_| format_error(line, offset, &format!("invalid {what} '{token}'")))
}

fn format_error(line: usize, offset: usize, message: &str) -> Error {
    Error::ModelFormat {
        line,
        offset,
        message: message.to_string(),
    }
}

/// Lines with their 1-based number and starting byte offset.
struct Lines<'a> {
    rest: &'a str,
    offset: usize,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            rest: text,
            offset: 0,
            line: 0,
        }
    }
}

impl<'a> Iterator for Lines<'a> {
    type Item = (usize, usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        if self.rest.is_empty() {
            return None;
        }
        let end = self.rest.find('\n').map_or(self.rest.len(), |p| p + 1);
        let (current, rest) = self.rest.split_at(end);
        let start = self.offset;
        self.rest = rest;
        self.offset += end;
        self.line += 1;
        Some((self.line, start, current.trim_end_matches(['\n', '\r'])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_row_major_with_header() {
        let m = SimilarityModel::from_entries(
            3,
            [(2, 2, 0.5), (0, 2, -0.25), (0, 0, 1.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert_eq!(
            model_to_string(&m),
            "3 4\n0 0 1\n0 2 -0.25\n1 1 1\n2 2 0.5\n"
        );
    }

    #[test]
    fn round_trips_awkward_values() {
        let m = SimilarityModel::from_entries(
            2,
            [
                (0, 0, 0.1 + 0.2),
                (0, 1, -1e-300),
                (1, 0, 123456789.12345679),
                (1, 1, f64::MIN_POSITIVE),
            ],
        )
        .unwrap();
        let back = parse_model(&model_to_string(&m)).unwrap();
        for ((_, _, a), (_, _, b)) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_zero_and_out_of_range() {
        let err = parse_model("2 1\n0 1 0\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::ModelFormat {
                    line: 2,
                    offset: 4,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_model("2 1\n0 2 1.5\n").unwrap_err();
        assert!(matches!(err, Error::ModelFormat { line: 2, .. }));
        assert!(parse_model("2 2\n0 1 1\n0 1 2\n").is_err());
        assert!(parse_model("2 1\n0 1 nan\n").is_err());
    }

    #[test]
    fn truncated_file_reports_offset() {
        let text = "2 3\n0 0 1\n1 1 1\n";
        let err = parse_model(text).unwrap_err();
        match err {
            Error::ModelFormat { offset, .. } => assert_eq!(offset, text.len()),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_model("").is_err());
        assert!(parse_model("2 1\n0 0").is_err());
    }

    #[test]
    fn rejects_trailing_entries() {
        assert!(parse_model("1 1\n0 0 1\n0 0 2\n").is_err());
    }
}
