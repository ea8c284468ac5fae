use std::io::{BufRead, Write};

use super::{GraphMeta, SparseMatrix};
use crate::error::{HotsError, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListOptions {
    /// Read a third column as the arc weight. Without it a third column is
    /// ignored and every arc weighs 1.
    pub weighted: bool,
}

/// Reads a whitespace-separated edge list: `src dst [weight]` per line, `#`
/// starts a comment. Node ids are dense 0-based integers and the node count
/// is `1 + max id`. Repeated arcs are summed.
pub fn from_edge_list<R: BufRead>(
    reader: R,
    opts: EdgeListOptions,
) -> Result<(SparseMatrix, GraphMeta)> {
    let mut triplets = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(HotsError::Parse {
                line: lineno,
                message: format!("expected 'src dst [weight]', found {} fields", fields.len()),
            });
        }
        let src = parse_id(fields[0], lineno)?;
        let dst = parse_id(fields[1], lineno)?;
        let weight = match (opts.weighted, fields.get(2)) {
            (true, Some(w)) => {
                let w: f64 = w.parse().map_err(|_| HotsError::Parse {
                    line: lineno,
                    message: format!("invalid weight '{w}'"),
                })?;
                if w < 0.0 || !w.is_finite() {
                    return Err(HotsError::Domain(format!(
                        "line {lineno}: weight {w} is not a finite nonnegative number"
                    )));
                }
                w
            }
            _ => 1.0,
        };
        n = n.max(src + 1).max(dst + 1);
        triplets.push((src, dst, weight));
    }
    let a = SparseMatrix::from_triplets(n, triplets)?;
    let meta = GraphMeta::from_matrix(&a);
    Ok((a, meta))
}

fn parse_id(field: &str, line: usize) -> Result<usize> {
    field.parse().map_err(|_| HotsError::Parse {
        line,
        message: format!("invalid node id '{field}'"),
    })
}

/// Writes the stored entries as `src dst weight` lines. The shift is not part
/// of the file.
pub fn write_edge_list<W: Write>(a: &SparseMatrix, mut w: W) -> Result<()> {
    for (i, j, v) in a.triplets() {
        writeln!(w, "{i}\t{j}\t{v}")?;
    }
    Ok(())
}

/// Reads a Matrix Market `coordinate` file with `real`, `integer` or
/// `pattern` field and `general` symmetry. Indices are 1-based in the file.
pub fn from_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(HotsError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let header = header?.to_ascii_lowercase();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(HotsError::Parse {
            line: 1,
            message: "missing '%%MatrixMarket matrix' banner".into(),
        });
    }
    if tokens[2] != "coordinate" {
        return Err(HotsError::UnsupportedFormat(format!(
            "'{}' storage (only 'coordinate' is read)",
            tokens[2]
        )));
    }
    let pattern = match tokens[3] {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(HotsError::UnsupportedFormat(format!("'{other}' field"))),
    };
    if tokens[4] != "general" {
        return Err(HotsError::UnsupportedFormat(format!(
            "'{}' symmetry (only 'general' is read)",
            tokens[4]
        )));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let bad = |message: String| HotsError::Parse {
            line: lineno,
            message,
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(bad("expected 'rows cols entries' size line".into()));
                }
                let rows: usize = fields[0].parse().map_err(|_| bad("invalid row count".into()))?;
                let cols: usize = fields[1].parse().map_err(|_| bad("invalid column count".into()))?;
                let nnz: usize = fields[2].parse().map_err(|_| bad("invalid entry count".into()))?;
                if rows != cols {
                    return Err(HotsError::Domain(format!("matrix is {rows}x{cols}, not square")));
                }
                size = Some((rows, nnz));
                triplets.reserve(nnz);
            }
            Some((n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() != want {
                    return Err(bad(format!("expected {want} fields, found {}", fields.len())));
                }
                let i: usize = fields[0].parse().map_err(|_| bad("invalid row index".into()))?;
                let j: usize = fields[1].parse().map_err(|_| bad("invalid column index".into()))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(bad(format!("index ({i}, {j}) outside 1..={n}")));
                }
                let v = if pattern {
                    1.0
                } else {
                    let v: f64 = fields[2].parse().map_err(|_| bad("invalid value".into()))?;
                    if v < 0.0 || !v.is_finite() {
                        return Err(HotsError::Domain(format!("line {lineno}: entry {v} is negative")));
                    }
                    v
                };
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, nnz) = size.ok_or(HotsError::Parse {
        line: 1,
        message: "missing size line".into(),
    })?;
    if triplets.len() != nnz {
        return Err(HotsError::Parse {
            line: 0,
            message: format!("size line announces {nnz} entries, found {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(n, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(text: &str) -> Result<(SparseMatrix, GraphMeta)> {
        from_edge_list(text.as_bytes(), EdgeListOptions { weighted: true })
    }

    #[test]
    fn edge_list_examples() {
        let (a, _) = edges("0 1\n1 0").unwrap();
        assert_eq!(a.to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let (a, _) = edges("0 1\n0 1").unwrap();
        assert_eq!(a.stored(0, 1), 2.0);
        assert_eq!(a.nnz(), 1);

        let (_, meta) = edges("0 1\n1 2").unwrap();
        assert_eq!(meta.dangling, vec![false, false, true]);
        assert_eq!((meta.n, meta.m), (3, 2));
    }

    #[test]
    fn edge_list_comments_and_weights() {
        let (a, _) = edges("# header\n0 1 2.5 # trailing\n\n1 0 0.5\n").unwrap();
        assert_eq!(a.to_dense(), vec![vec![0.0, 2.5], vec![0.5, 0.0]]);
        let (u, _) = from_edge_list("0 1 7\n".as_bytes(), EdgeListOptions::default()).unwrap();
        assert_eq!(u.stored(0, 1), 1.0);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        match edges("0 1\nfoo 2\n") {
            Err(HotsError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match edges("0 1\n1 2\n0\n") {
            Err(HotsError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(edges("0 1 -2\n"), Err(HotsError::Domain(_))));
        assert!(matches!(edges("-1 1\n"), Err(HotsError::Parse { line: 1, .. })));
    }

    #[test]
    fn matrix_market_examples() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 2 1\n2 1 2\n";
        let a = from_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]);

        let text = "%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n3 1\n";
        let a = from_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.values(), &[1.0, 1.0]);
        assert_eq!(a.stored(2, 0), 1.0);

        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        assert!(matches!(
            from_matrix_market(text.as_bytes()),
            Err(HotsError::UnsupportedFormat(_))
        ));

        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 1\n";
        assert!(matches!(
            from_matrix_market(text.as_bytes()),
            Err(HotsError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn matrix_market_entry_count_is_checked() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 2 1\n2 1 2\n";
        assert!(from_matrix_market(text.as_bytes()).is_err());
    }
}
