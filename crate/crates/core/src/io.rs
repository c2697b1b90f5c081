//! Reading and writing dense matrices as CSV or MatrixMarket text.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A dense matrix in row-major order, as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    MatrixMarket,
}

impl Format {
    /// `.mtx` and `.mm` are MatrixMarket, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("mtx") || e.eq_ignore_ascii_case("mm") => Format::MatrixMarket,
            _ => Format::Csv,
        }
    }
}

fn parse_err(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        msg: msg.into(),
    }
}

fn parse_number(tok: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(line, column, format!("not a number: {:?}", tok.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, column, "non-finite value"));
    }
    if v < 0.0 {
        return Err(parse_err(line, column, format!("negative entry {v}")));
    }
    Ok(v)
}

/// Comma-separated rows; blank lines and lines starting with `#` are skipped.
pub fn read_csv(text: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(parse_err(
                    line_no,
                    fields.len().min(c) + 1,
                    format!("expected {c} fields, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        for (c, f) in fields.iter().enumerate() {
            data.push(parse_number(f, line_no, c + 1)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(1, 1, "empty input"))?;
    Ok(DenseMatrix { rows, cols, data })
}

/// MatrixMarket `array` or `coordinate` files with real, integer or pattern
/// entries and general or symmetric structure.
pub fn read_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty input"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(1, 1, "expected a '%%MatrixMarket matrix' header"));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, 1, format!("unsupported layout {other}"))),
    };
    let pattern = match words[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(parse_err(1, 1, format!("unsupported field {other}"))),
    };
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, 1, format!("unsupported symmetry {other}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_ln, size_line) = body.next().ok_or_else(|| parse_err(2, 1, "missing size line"))?;
    let size_ln = size_ln + 1;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .enumerate()
        .map(|(c, t)| {
            t.parse()
                .map_err(|_| parse_err(size_ln, c + 1, format!("bad size {t:?}")))
        })
        .collect::<Result<_>>()?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(size_ln, 1, format!("expected {expected} size fields")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetric && rows != cols {
        return Err(parse_err(size_ln, 1, "symmetric matrix must be square"));
    }
    let mut data = vec![0.0; rows * cols];

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, line) in body {
            let line_no = ln + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let want = if pattern { 2 } else { 3 };
            if toks.len() != want {
                return Err(parse_err(line_no, 1, format!("expected {want} fields")));
            }
            let index = |c: usize, bound: usize| -> Result<usize> {
                let v: usize = toks[c]
                    .parse()
                    .map_err(|_| parse_err(line_no, c + 1, format!("bad index {:?}", toks[c])))?;
                if v == 0 || v > bound {
                    return Err(parse_err(line_no, c + 1, format!("index {v} out of range")));
                }
                Ok(v - 1)
            };
            let (i, j) = (index(0, rows)?, index(1, cols)?);
            let v = if pattern {
                1.0
            } else {
                parse_number(toks[2], line_no, 3)?
            };
            data[i * cols + j] = v;
            if symmetric {
                data[j * cols + i] = v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                size_ln,
                3,
                format!("declared {nnz} entries, found {seen}"),
            ));
        }
    } else {
        let mut k = 0;
        let mut last_ln = size_ln;
        for (ln, line) in body {
            last_ln = ln + 1;
            for (c, tok) in line.split_whitespace().enumerate() {
                let v = parse_number(tok, last_ln, c + 1)?;
                // Column-major; symmetric files list the lower triangle only.
                let (i, j) = if symmetric {
                    lower_triangle_position(k, rows)
                        .ok_or_else(|| parse_err(last_ln, c + 1, "too many entries"))?
                } else {
                    if k >= rows * cols {
                        return Err(parse_err(last_ln, c + 1, "too many entries"));
                    }
                    (k % rows, k / rows)
                };
                data[i * cols + j] = v;
                if symmetric {
                    data[j * cols + i] = v;
                }
                k += 1;
            }
        }
        let expected = if symmetric {
            rows * (rows + 1) / 2
        } else {
            rows * cols
        };
        if k != expected {
            return Err(parse_err(
                last_ln,
                1,
                format!("expected {expected} entries, found {k}"),
            ));
        }
    }
    Ok(DenseMatrix { rows, cols, data })
}

fn lower_triangle_position(mut k: usize, n: usize) -> Option<(usize, usize)> {
    for j in 0..n {
        let len = n - j;
        if k < len {
            return Some((j + k, j));
        }
        k -= len;
    }
    None
}

pub fn read_matrix(path: &Path, format: Option<Format>) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    match format.unwrap_or_else(|| Format::from_path(path)) {
        Format::Csv => read_csv(&text),
        Format::MatrixMarket => read_matrix_market(&text),
    }
}

/// CSV with shortest round-trip float formatting.
pub fn write_csv(m: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows {
        for j in 0..m.cols {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", m.data[i * m.cols + j]);
        }
        s.push('\n');
    }
    s
}

/// MatrixMarket `array real general`.
pub fn write_matrix_market(m: &DenseMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.rows, m.cols);
    for j in 0..m.cols {
        for i in 0..m.rows {
            let _ = writeln!(s, "{}", m.data[i * m.cols + j]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DenseMatrix {
            rows: 2,
            cols: 3,
            data: vec![0.1, 1.0 / 3.0, 0.0, 2.5e-17, 1.0, 0.7],
        };
        assert_eq!(read_csv(&write_csv(&m)).unwrap(), m);
        assert_eq!(read_matrix_market(&write_matrix_market(&m)).unwrap(), m);
    }

    #[test]
    fn csv_skips_comments_and_blanks() {
        let m = read_csv("# header\n1, 0\n\n0 ,1\n").unwrap();
        assert_eq!((m.rows, m.cols), (2, 2));
        assert_eq!(m.data, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_errors_carry_location() {
        match read_csv("1,0\n0,-2\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        match read_csv("1,0\n0,x\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_csv("1,0\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(read_csv("").is_err());
        assert!(read_csv("1,nan\n").is_err());
    }

    #[test]
    fn matrix_market_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n% c\n2 3 2\n1 1 1.5\n2 3 2\n";
        let m = read_matrix_market(text).unwrap();
        assert_eq!(m.data, vec![1.5, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let pat = "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n2 1\n";
        assert_eq!(read_matrix_market(pat).unwrap().data, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn matrix_market_symmetric_array() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        assert_eq!(read_matrix_market(text).unwrap().data, vec![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn matrix_market_errors() {
        assert!(read_matrix_market("garbage\n").is_err());
        let bad_index = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n";
        assert!(matches!(
            read_matrix_market(bad_index),
            Err(Error::Parse {
                line: 3,
                column: 1,
                ..
            })
        ));
        let short = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n";
        assert!(read_matrix_market(short).is_err());
        let neg = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 -1\n";
        assert!(matches!(
            read_matrix_market(neg),
            Err(Error::Parse {
                line: 3,
                column: 3,
                ..
            })
        ));
    }

    #[test]
    fn transpose_swaps_layout() {
        let m = DenseMatrix {
            rows: 2,
            cols: 3,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let t = m.transpose();
        assert_eq!((t.rows, t.cols), (3, 2));
        assert_eq!(t.data, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a.mtx")), Format::MatrixMarket);
        assert_eq!(Format::from_path(Path::new("a.csv")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("a")), Format::Csv);
    }
}
