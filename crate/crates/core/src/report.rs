//! Solver state and reporting types shared by every solver.

use std::fmt;

use crate::numeric::mean;

/// How a potential vector is pinned down after each iteration. The HOTS
/// maps are additively homogeneous, so this only fixes the free constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    MeanZero,
    AnchorLast,
    None,
}

impl Normalization {
    pub fn apply(self, p: &mut [f64]) {
        let c = match self {
            Normalization::MeanZero => mean(p),
            Normalization::AnchorLast => p.last().copied().unwrap_or(0.0),
            Normalization::None => return,
        };
        p.iter_mut().for_each(|v| *v -= c);
        if self == Normalization::AnchorLast {
            if let Some(last) = p.last_mut() {
                *last = 0.0;
            }
        }
    }
}

/// Log-domain potentials `p`; the HOTS scores are `e^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreState {
    pub p: Vec<f64>,
    pub normalization: Normalization,
}

impl ScoreState {
    /// Wraps `p` and applies the normalization once.
    pub fn new(mut p: Vec<f64>, normalization: Normalization) -> Self {
        normalization.apply(&mut p);
        Self { p, normalization }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], Normalization::MeanZero)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn renormalize(&mut self) {
        self.normalization.apply(&mut self.p);
    }

    /// HOTS scores `e^{p_i}`.
    pub fn scores(&self) -> Vec<f64> {
        self.p.iter().map(|v| v.exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Oscillating,
    Diverged,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self == SolveStatus::Converged
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::MaxIter => "MaxIter",
            SolveStatus::Oscillating => "Oscillating",
            SolveStatus::Diverged => "Diverged",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm of the last step `p_{k+1} - p_k`.
    pub residual: f64,
    /// Objective value at each iterate, starting with the initial point.
    pub theta_trace: Vec<f64>,
    /// Step sup-norm per iteration.
    pub residual_trace: Vec<f64>,
    /// Empirical linear rate from the trailing residual ratios.
    pub rate_estimate: f64,
    pub status: SolveStatus,
}

impl SolveReport {
    pub(crate) fn finish(
        status: SolveStatus,
        theta_trace: Vec<f64>,
        residual_trace: Vec<f64>,
    ) -> Self {
        Self {
            iterations: residual_trace.len(),
            residual: residual_trace.last().copied().unwrap_or(0.0),
            rate_estimate: empirical_rate(&residual_trace),
            theta_trace,
            residual_trace,
            status,
        }
    }
}

const RATE_WINDOW: usize = 50;

/// Geometric mean of the last successive residual ratios, over a window of
/// at most 50 steps. Zero when the iteration stopped after one step.
pub fn empirical_rate(residuals: &[f64]) -> f64 {
    let r: Vec<f64> = residuals
        .iter()
        .copied()
        .take_while(|v| v.is_finite())
        .collect();
    // drop exact zeros at the tail (exact convergence)
    let last = match r.iter().rposition(|&v| v > 0.0) {
        Some(k) => k,
        None => return 0.0,
    };
    if last == 0 {
        return if r.len() > 1 { 0.0 } else { f64::NAN };
    }
    let first = last.saturating_sub(RATE_WINDOW);
    let first = (first..last).find(|&k| r[k] > 0.0).unwrap_or(last);
    if first == last {
        return 0.0;
    }
    (r[last] / r[first]).powf(1.0 / (last - first) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizations() {
        let mut p = vec![1.0, 2.0, 3.0];
        Normalization::MeanZero.apply(&mut p);
        assert_eq!(p, vec![-1.0, 0.0, 1.0]);
        let mut p = vec![1.0, 2.0, 3.5];
        Normalization::AnchorLast.apply(&mut p);
        assert_eq!(p, vec![-2.5, -1.5, 0.0]);
        let mut p = vec![1.0, 2.0];
        Normalization::None.apply(&mut p);
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn rate_of_geometric_sequence() {
        let r: Vec<f64> = (0..30).map(|k| 0.7f64.powi(k)).collect();
        assert!((empirical_rate(&r) - 0.7).abs() < 1e-12);
        assert_eq!(empirical_rate(&[1.0, 0.0]), 0.0);
    }
}
