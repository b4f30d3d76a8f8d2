//! CSV ingestion of paired observations.

use std::io::Read;
use std::path::Path;

use crate::error::{BrbsError, Result};
use crate::estimate::BivariateSample;

/// Parses two comma-separated numeric columns. A first record whose cells are
/// not both numeric is treated as a header. Lines starting with `#` are
/// comments. Errors report the 1-based line number in the file.
pub fn parse_sample_csv<R: Read>(reader: R) -> Result<BivariateSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| BrbsError::Parse {
            row: e.position().map_or(idx + 1, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(BrbsError::Parse {
                row: line,
                column: 0,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if rows.is_empty() && idx == 0 && parsed.iter().all(|p| p.is_err()) {
            continue;
        }
        let mut vals = [0.0; 2];
        for (col, p) in parsed.into_iter().enumerate() {
            let v = p.map_err(|_| BrbsError::Parse {
                row: line,
                column: col + 1,
                message: format!("'{}' is not a number", &rec[col]),
            })?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(BrbsError::Parse {
                    row: line,
                    column: col + 1,
                    message: format!("value {v} must be positive and finite"),
                });
            }
            vals[col] = v;
        }
        rows.push((vals[0], vals[1]));
    }
    BivariateSample::new(rows)
}

pub fn read_sample_csv(path: impl AsRef<Path>) -> Result<BivariateSample> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| BrbsError::Io(format!("{}: {e}", path.display())))?;
    parse_sample_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a = parse_sample_csv("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        let b = parse_sample_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 2);
    }

    #[test]
    fn header_only_is_too_small() {
        let e = parse_sample_csv("x,y\n".as_bytes()).unwrap_err();
        assert!(matches!(e, BrbsError::SampleTooSmall { actual: 0, .. }));
    }

    #[test]
    fn negative_value_names_row_and_column() {
        let e = parse_sample_csv("x,y\n1,2\n-1,2\n".as_bytes()).unwrap_err();
        assert_eq!(
            e,
            BrbsError::Parse {
                row: 3,
                column: 1,
                message: "value -1 must be positive and finite".into()
            }
        );
    }

    #[test]
    fn comment_lines_count_toward_row_numbers() {
        let e = parse_sample_csv("# note\nx,y\n1,2\n0,2\n".as_bytes()).unwrap_err();
        assert!(matches!(
            e,
            BrbsError::Parse {
                row: 4,
                column: 1,
                ..
            }
        ));
    }

    #[test]
    fn text_cell_after_header_is_error() {
        let e = parse_sample_csv("1,2\n3,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(
            e,
            BrbsError::Parse {
                row: 2,
                column: 2,
                ..
            }
        ));
    }
}
