use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;

fn require_positive(x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        Some(v) => Err(HotsError::Domain(format!("entry {v} is not a finite positive value"))),
        None => Ok(()),
    }
}

/// Hilbert's projective metric `log max_i(x_i/y_i) − log min_i(x_i/y_i)`.
pub fn hilbert_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(HotsError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    require_positive(x)?;
    require_positive(y)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in x.iter().zip(y) {
        let r = a / b;
        hi = hi.max(r);
        lo = lo.min(r);
    }
    if hi.is_finite() && lo > 0.0 {
        Ok((hi / lo).ln())
    } else {
        // ratios out of range: fall back to differences of logs
        let logs = x.iter().zip(y).map(|(a, b)| a.ln() - b.ln());
        let (h, l) = logs.fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), r| (h.max(r), l.min(r)));
        Ok(h - l)
    }
}

/// Birkhoff's contraction coefficient `tanh(Δ/4)` of an entrywise positive
/// matrix, with `Δ = max log(M_ik M_jl / (M_jk M_il))`. `Δ` is the largest
/// Hilbert distance between two rows, and is the same for `M` and `Mᵀ`.
pub fn birkhoff_factor(m: &SparseMatrix) -> Result<f64> {
    let rows = m.to_dense();
    for row in &rows {
        require_positive(row).map_err(|_| {
            HotsError::Domain("the contraction factor needs an entrywise positive matrix".into())
        })?;
    }
    let mut delta: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            delta = delta.max(hilbert_distance(&rows[i], &rows[j])?);
        }
    }
    Ok((delta / 4.0).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert_eq!(hilbert_distance(&[1.0, 2.0], &[3.0, 6.0]).unwrap(), 0.0);
        assert!((hilbert_distance(&[1.0, 2.0], &[2.0, 1.0]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(hilbert_distance(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn rank_one_matrix_does_not_contract() {
        let ones = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(birkhoff_factor(&ones).unwrap(), 0.0);
        let m = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let mt = m.explicit_transpose();
        let (k, kt) = (birkhoff_factor(&m).unwrap(), birkhoff_factor(&mt).unwrap());
        assert!((k - kt).abs() < 1e-15);
        assert!((k - (6f64.ln() / 4.0).tanh()).abs() < 1e-15);
    }
}
