use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::{norm2, sup_dist};
use crate::report::{SolveReport, SolveStatus};

/// Norm used to rescale each deformed iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeformNorm {
    #[default]
    Sup,
    L1,
    L2,
}

#[derive(Debug, Clone)]
pub struct DeformedOptions {
    pub tol: f64,
    /// Defaults to `10·n + 1000` when unset.
    pub max_iter: Option<usize>,
    pub norm: DeformNorm,
}

impl Default for DeformedOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            norm: DeformNorm::Sup,
        }
    }
}

fn check_input(a: &SparseMatrix, x: &[f64], alpha: f64) -> Result<()> {
    if x.len() != a.n() {
        return Err(HotsError::DimensionMismatch {
            expected: a.n(),
            got: x.len(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(HotsError::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(HotsError::Domain(format!("entry {v} is not a finite positive value")));
    }
    Ok(())
}

/// `log g(x)` with `g_i = (Aᵀx)_i^α / (A x^{−1})_i^{1−α}`.
fn log_g(a: &SparseMatrix, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let q: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let beta = 1.0 - alpha;
    let mut h = vec![0.0; a.n()];
    if alpha > 0.0 {
        let lt = a.log_apply_transpose(&q)?;
        for (i, (hi, t)) in h.iter_mut().zip(&lt).enumerate() {
            if *t == f64::NEG_INFINITY {
                return Err(HotsError::Structural(format!("column {i} of the matrix is zero")));
            }
            *hi += alpha * t;
        }
    }
    if beta > 0.0 {
        let neg: Vec<f64> = q.iter().map(|v| -v).collect();
        let la = a.log_apply(&neg)?;
        for (i, (hi, l)) in h.iter_mut().zip(&la).enumerate() {
            if *l == f64::NEG_INFINITY {
                return Err(HotsError::Structural(format!("row {i} of the matrix is zero")));
            }
            *hi -= beta * l;
        }
    }
    Ok(h)
}

/// Returns `(g(x)/‖g(x)‖, ‖g(x)‖)`; the norm is computed without forming
/// `g(x)` unscaled.
fn normalized_g(a: &SparseMatrix, x: &[f64], alpha: f64, norm: DeformNorm) -> Result<(Vec<f64>, f64)> {
    let h = log_g(a, x, alpha)?;
    let top = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut y: Vec<f64> = h.iter().map(|v| (v - top).exp()).collect();
    let rel = match norm {
        DeformNorm::Sup => 1.0,
        DeformNorm::L1 => y.iter().sum(),
        DeformNorm::L2 => norm2(&y),
    };
    y.iter_mut().for_each(|v| *v /= rel);
    Ok((y, top.exp() * rel))
}

/// One deformed HOTS step `g(x)/‖g(x)‖_∞`. `alpha = 1` is a power-method
/// step on `Aᵀ`, `alpha = ½` the multiplicative ideal HOTS step and
/// `alpha = 0` the anti-Perron iteration.
pub fn deformed_step(a: &SparseMatrix, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    deformed_step_with_norm(a, x, alpha, DeformNorm::Sup)
}

pub fn deformed_step_with_norm(a: &SparseMatrix, x: &[f64], alpha: f64, norm: DeformNorm) -> Result<Vec<f64>> {
    check_input(a, x, alpha)?;
    Ok(normalized_g(a, x, alpha, norm)?.0)
}

/// Iterates the deformed map until successive normalized iterates differ by
/// less than `tol` in sup-norm.
///
/// The report's `theta_trace` holds the normalization constant `‖g(x_k)‖`
/// per step; for `alpha = 1` it converges to the Perron root of `A`.
pub fn deformed_solve(
    a: &SparseMatrix,
    x0: &[f64],
    alpha: f64,
    opts: &DeformedOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_input(a, x0, alpha)?;
    if !(opts.tol > 0.0) {
        return Err(HotsError::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * a.n() + 1000);
    let mut x = rescale(x0, opts.norm);
    let mut growth = Vec::new();
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;
    for _ in 0..max_iter {
        let (next, g) = normalized_g(a, &x, alpha, opts.norm)?;
        let r = sup_dist(&next, &x);
        growth.push(g);
        residuals.push(r);
        x = next;
        if r < opts.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok((x, SolveReport::finish(status, growth, residuals)))
}

fn rescale(x: &[f64], norm: DeformNorm) -> Vec<f64> {
    let s = match norm {
        DeformNorm::Sup => x.iter().copied().fold(0.0, f64::max),
        DeformNorm::L1 => x.iter().sum(),
        DeformNorm::L2 => norm2(x),
    };
    x.iter().map(|v| v / s).collect()
}
