//! Plain-text matrix format: a header line `m d`, then `m` rows of `d`
//! whitespace-separated decimal floats.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("bad header '{header}': {e}")))?;
    let [m, d] = dims[..] else {
        return Err(Error::Parse(format!("header must be 'm d', got '{header}'")));
    };
    if m == 0 || d == 0 {
        return Err(Error::Parse("matrix dimensions must be positive".into()));
    }
    let mut entries = Vec::with_capacity(m * d);
    for r in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {m} rows, found {r}")))?;
        let row = parse_floats(line)?;
        if row.len() != d {
            return Err(Error::Parse(format!("row {r} has {} entries, expected {d}", row.len())));
        }
        entries.extend(row);
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("more than {m} rows")));
    }
    Ok(DMatrix::from_row_slice(m, d, &entries))
}

/// Vectors are whitespace- or comma-separated floats in any line layout.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let v = parse_floats(&text.replace(',', " "))?;
    if v.is_empty() {
        return Err(Error::Parse("empty vector".into()));
    }
    Ok(DVector::from_vec(v))
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            let x = t
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number '{t}': {e}")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Parse(format!("non-finite number '{t}'")))
            }
        })
        .collect()
}

/// Writes the matrix with round-trip precision.
pub fn format_matrix(a: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", a.nrows(), a.ncols());
    for r in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|c| format!("{:?}", a[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let a = parse_matrix("2 3\n1 2 3\n-0.5 1e-3 7\n").unwrap();
        assert_eq!(a.shape(), (2, 3));
        assert_eq!(a[(1, 1)], 1e-3);
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("1 2\n1 2 3\n").is_err());
        assert!(parse_matrix("1 2\n1 nan\n").is_err());
        assert!(parse_matrix("1 1\n1\n2\n").is_err());
    }

    #[test]
    fn vectors_accept_commas() {
        let v = parse_vector("1, 2\n3").unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
    }
}
