//! Rankings, the PageRank baseline and rank correlation.

use std::cmp::Ordering;

use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::report::{SolveReport, SolveStatus};

/// Scores over pages with the induced order. Ties are broken by ascending
/// node id, so the order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub scores: Vec<f64>,
    /// Node ids by descending score.
    pub order: Vec<usize>,
    pub algorithm: String,
    /// Solver configuration, as key/value pairs.
    pub params: Vec<(String, String)>,
}

impl Ranking {
    pub fn new(scores: Vec<f64>, algorithm: impl Into<String>, params: Vec<(String, String)>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
        Self {
            scores,
            order,
            algorithm: algorithm.into(),
            params,
        }
    }

    /// 1-based rank of each node.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.order.len()];
        for (pos, &node) in self.order.iter().enumerate() {
            r[node] = pos + 1;
        }
        r
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// One line of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub theta: f64,
    pub residual: f64,
    pub rate: f64,
}

/// Trace records from a report. `every` thins the trace: iteration 1, every
/// `every`-th iteration and the last one are kept.
pub fn trace_records(report: &SolveReport, every: usize) -> Vec<TraceRecord> {
    let every = every.max(1);
    let res = &report.residual_trace;
    let last = res.len();
    (1..=last)
        .filter(|&k| k == 1 || k % every == 0 || k == last)
        .map(|k| TraceRecord {
            iter: k,
            theta: report.theta_trace.get(k).copied().unwrap_or(f64::NAN),
            residual: res[k - 1],
            rate: if k >= 2 && res[k - 2] > 0.0 {
                res[k - 1] / res[k - 2]
            } else {
                f64::NAN
            },
        })
        .collect()
}

/// PageRank with uniform teleportation and dangling mass spread uniformly.
/// Arc weights set the transition probabilities. Iterates until the l1 change
/// drops below `tol`; scores sum to one.
pub fn pagerank(a: &SparseMatrix, damping: f64, tol: f64) -> Result<(Ranking, SolveReport)> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(HotsError::InvalidParameter(format!("damping must lie in (0, 1), got {damping}")));
    }
    if !(tol > 0.0) {
        return Err(HotsError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = a.n();
    if n == 0 {
        return Err(HotsError::Domain("empty graph".into()));
    }
    let out = a.row_sums();
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let max_iter = 100_000;
    let mut scaled = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let mut dangling_mass = 0.0;
        for i in 0..n {
            if out[i] > 0.0 {
                scaled[i] = x[i] / out[i];
            } else {
                scaled[i] = 0.0;
                dangling_mass += x[i];
            }
        }
        a.apply_transpose_into(&scaled, &mut next);
        let base = (1.0 - damping) * uniform + damping * dangling_mass * uniform;
        next.iter_mut().for_each(|v| *v = damping * *v + base);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        residuals.push(change);
        if change < tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let params = vec![
        ("damping".to_string(), damping.to_string()),
        ("tol".to_string(), tol.to_string()),
    ];
    Ok((
        Ranking::new(x, "pagerank", params),
        SolveReport::finish(status, Vec::new(), residuals),
    ))
}

/// Kendall's tau-b between the score vectors of two rankings, in
/// `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    kendall_tau_scores(&r1.scores, &r2.scores)
}

pub fn kendall_tau_scores(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(HotsError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u128 * n.saturating_sub(1) as u128 / 2) as f64;
    let tie_pairs = |groups: &mut dyn Iterator<Item = usize>| -> f64 {
        groups.map(|g| (g as u128 * g.saturating_sub(1) as u128 / 2) as f64).sum()
    };
    let n1 = tie_pairs(&mut run_lengths(&pairs, |a, b| a.0 == b.0));
    let n3 = tie_pairs(&mut run_lengths(&pairs, |a, b| a == b));

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys) as f64;
    let n2 = tie_pairs(&mut run_lengths(&ys, |a, b| a == b));

    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        return Err(HotsError::Domain("tau-b is undefined when a ranking is constant".into()));
    }
    Ok(((n0 - n1 - n2 + n3 - 2.0 * swaps) / denom).clamp(-1.0, 1.0))
}

fn run_lengths<'a, T>(v: &'a [T], same: impl Fn(&T, &T) -> bool + 'a) -> impl Iterator<Item = usize> + 'a {
    let mut k = 0;
    std::iter::from_fn(move || {
        if k >= v.len() {
            return None;
        }
        let start = k;
        k += 1;
        while k < v.len() && same(&v[k - 1], &v[k]) {
            k += 1;
        }
        Some(k - start)
    })
}

/// Sorts `v` ascending and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_breaks_ties_by_id() {
        let r = Ranking::new(vec![0.2, 0.5, 0.2, 0.1], "t", Vec::new());
        assert_eq!(r.order, vec![1, 0, 2, 3]);
        assert_eq!(r.ranks(), vec![2, 1, 3, 4]);
    }

    #[test]
    fn tau_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau_scores(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau_scores(&x, &rev).unwrap(), -1.0);
        assert!(kendall_tau_scores(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn pagerank_on_cycles() {
        let two = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let (r, rep) = pagerank(&two, 0.85, 1e-12).unwrap();
        assert!(rep.status.is_converged());
        assert!(r.scores.iter().all(|s| (s - 0.5).abs() < 1e-12));
    }
}
