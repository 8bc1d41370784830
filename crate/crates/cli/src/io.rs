//! Stream readers and the sample line formats.

use std::io::BufRead;

use streamscreen_core::{Entries, Sample};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// `<label> <index>:<value> ...`, 1-based indices, `#` starts a comment.
    Svmlight,
    /// Headerless comma-separated values, label in the first column.
    Csv,
}

impl Format {
    /// Svmlight lines enumerate only the non-zero entries, so the engine
    /// must run with sparse zero bookkeeping.
    pub fn implies_sparse(self) -> bool {
        matches!(self, Format::Svmlight)
    }
}

/// Reshapes a parsed sample to the engine's ingestion mode: dense rows drop
/// their zeros when the engine runs sparse.
pub fn adapt_entries(sample: Sample, sparse: bool) -> Sample {
    match (&sample.entries, sparse) {
        (Entries::Dense(values), true) => {
            let pairs: Vec<(usize, f64)> = values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect();
            Sample {
                label: sample.label,
                entries: Entries::Sparse(pairs),
            }
        }
        _ => sample,
    }
}

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn fail(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Parses one non-empty data line. Svmlight indices are 1-based externally
/// and 0-based in the returned sample.
pub fn parse_sample(line: &str, format: Format, line_no: usize) -> Result<Sample, ParseError> {
    match format {
        Format::Svmlight => {
            let body = line.split('#').next().unwrap_or("").trim();
            let mut fields = body.split_whitespace();
            let label = fields
                .next()
                .ok_or_else(|| fail(line_no, "empty line"))?
                .to_string();
            let mut entries = Vec::new();
            let mut prev: Option<usize> = None;
            for field in fields {
                let (idx, value) = field
                    .split_once(':')
                    .ok_or_else(|| fail(line_no, format!("malformed pair {field:?}")))?;
                let idx: usize = idx
                    .parse()
                    .map_err(|_| fail(line_no, format!("bad feature index {idx:?}")))?;
                if idx == 0 {
                    return Err(fail(line_no, "feature indices are 1-based"));
                }
                let value: f64 = value
                    .parse()
                    .map_err(|_| fail(line_no, format!("bad feature value {value:?}")))?;
                if let Some(p) = prev {
                    if idx <= p {
                        return Err(fail(
                            line_no,
                            format!(
                                "feature indices must be strictly increasing, got {idx} after {p}"
                            ),
                        ));
                    }
                }
                prev = Some(idx);
                entries.push((idx - 1, value));
            }
            Ok(Sample {
                label,
                entries: Entries::Sparse(entries),
            })
        }
        Format::Csv => {
            let mut fields = line.trim().split(',');
            let label = fields
                .next()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| fail(line_no, "missing label column"))?
                .to_string();
            let values: Result<Vec<f64>, ParseError> = fields
                .map(|f| {
                    f.trim()
                        .parse()
                        .map_err(|_| fail(line_no, format!("bad feature value {f:?}")))
                })
                .collect();
            Ok(Sample {
                label,
                entries: Entries::Dense(values?),
            })
        }
    }
}

/// Single-pass sample iterator over a buffered reader, skipping blank lines.
pub struct SampleReader<R> {
    reader: R,
    format: Format,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> SampleReader<R> {
    pub fn new(reader: R, format: Format) -> Self {
        SampleReader {
            reader,
            format,
            line_no: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for SampleReader<R> {
    type Item = Result<Sample, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    let trimmed = self.buf.trim();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        continue;
                    }
                    return Some(parse_sample(trimmed, self.format, self.line_no));
                }
                Err(e) => {
                    return Some(Err(fail(self.line_no, format!("read error: {e}"))));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svmlight_pairs() {
        let s = parse_sample("1 3:0.5 7:1.2", Format::Svmlight, 1).unwrap();
        assert_eq!(s.label, "1");
        let Entries::Sparse(pairs) = s.entries else {
            panic!()
        };
        assert_eq!(pairs, vec![(2, 0.5), (6, 1.2)]);
    }

    #[test]
    fn svmlight_comment_and_negative_label() {
        let s = parse_sample("-1 2:4 # trailing note", Format::Svmlight, 1).unwrap();
        assert_eq!(s.label, "-1");
        let Entries::Sparse(pairs) = s.entries else {
            panic!()
        };
        assert_eq!(pairs, vec![(1, 4.0)]);
    }

    #[test]
    fn svmlight_rejects_non_increasing_indices() {
        let err = parse_sample("1 7:1.2 3:0.5", Format::Svmlight, 9).unwrap_err();
        assert_eq!(err.line, 9);
        assert!(err.message.contains("strictly increasing"));
    }

    #[test]
    fn svmlight_rejects_malformed_pair() {
        assert!(parse_sample("1 3-0.5", Format::Svmlight, 2).is_err());
        assert!(parse_sample("1 0:1.0", Format::Svmlight, 2).is_err());
        assert!(parse_sample("1 3:abc", Format::Svmlight, 2).is_err());
    }

    #[test]
    fn csv_row() {
        let s = parse_sample("0,1.5,2.5", Format::Csv, 1).unwrap();
        assert_eq!(s.label, "0");
        let Entries::Dense(values) = s.entries else {
            panic!()
        };
        assert_eq!(values, vec![1.5, 2.5]);
    }

    #[test]
    fn csv_rejects_bad_value() {
        assert!(parse_sample("0,1.5,x", Format::Csv, 3).is_err());
    }

    #[test]
    fn reader_skips_blanks_and_tracks_lines() {
        let text = "1 1:2.0\n\n# comment line\nbad line\n";
        let mut reader = SampleReader::new(text.as_bytes(), Format::Svmlight);
        assert!(reader.next().unwrap().is_ok());
        let err = reader.next().unwrap().unwrap_err();
        assert_eq!(err.line, 4);
        assert!(reader.next().is_none());
    }
}
