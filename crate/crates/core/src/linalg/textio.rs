//! Plain-text matrix files.
//!
//! The first line holds `rows cols`; each following line holds one row of
//! whitespace-separated decimals. Values are written with 17 significant
//! digits, which is enough for every `f64` to survive a write/read cycle
//! unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DenseMatrix, LinalgError};

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", m.rows(), m.cols()).unwrap();
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix, LinalgError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| LinalgError::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| LinalgError::Parse(format!("bad header {header:?}: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(LinalgError::Parse(format!(
            "header must be `rows cols`, got {header:?}"
        )));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(LinalgError::Parse(format!(
                "more than the declared {rows} rows"
            )));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|e| LinalgError::Parse(format!("row {}: {tok:?}: {e}", i + 1)))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(LinalgError::Parse(format!(
                "row {} has {} entries, expected {cols}",
                i + 1,
                data.len() - before
            )));
        }
    }
    if data.len() != rows * cols {
        return Err(LinalgError::Parse(format!(
            "expected {rows} rows, found {}",
            data.len() / cols.max(1)
        )));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> std::io::Result<()> {
    fs::write(path, format_matrix(m))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix, LinalgError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| LinalgError::Parse(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let m = DenseMatrix::from_rows(&[&[1.0, -2.5], &[0.1, 3.0]]);
        let text = format_matrix(&m);
        assert!(text.starts_with("2 2\n"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn rejects_short_rows() {
        assert!(parse_matrix("2 2\n1 2\n3\n").is_err());
        assert!(parse_matrix("1 1\n").is_err());
        assert!(parse_matrix("1 1\nnan\n").is_err());
        assert!(parse_matrix("x 1\n1\n").is_err());
    }

    proptest! {
        #[test]
        fn write_read_is_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 1..40)) {
            let n = vals.len();
            let m = DenseMatrix::from_row_major(1, n, vals).unwrap();
            let back = parse_matrix(&format_matrix(&m)).unwrap();
            for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
