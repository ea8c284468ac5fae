//! Ideal HOTS: balancing of an irreducible matrix by the fixed-point map
//! `f(p) = ½(log Aᵀe^p − log Ae^{−p})`, its coordinate-descent variant, the
//! deformed family, flow recovery and rate diagnostics.

mod deformed;
mod dss;
mod flow;
mod hilbert;
mod rate;

pub use deformed::{deformed_solve, deformed_step, deformed_step_with_norm, DeformNorm, DeformedOptions};
pub use dss::{dss_solve, dss_step};
pub use flow::{recover_flow, BalancedFlow, FLOW_BALANCE_TOL};
pub use hilbert::{birkhoff_factor, hilbert_distance};
pub use rate::{ideal_transition_dense, rate_ideal, IdealRateMethod};

use std::borrow::Cow;

use crate::error::{HotsError, Result};
use crate::graph::{is_primitive_symmetrized, is_strongly_connected, SparseMatrix};
use crate::numeric::{log_sum_exp, sup_dist};
use crate::report::{Normalization, ScoreState, SolveReport, SolveStatus};

/// Consecutive period-2 detections before a run is declared oscillating.
const OSCILLATION_RUN: usize = 10;

#[derive(Debug, Clone)]
pub struct IdealOptions {
    /// Stop once the sup-norm step falls below this.
    pub tol: f64,
    /// Defaults to `10·n + 1000` when unset.
    pub max_iter: Option<usize>,
    pub normalization: Normalization,
    /// Refuse reducible inputs up front.
    pub check_irreducible: bool,
    /// Add this to the diagonal before solving. The optimal scaling does not
    /// depend on the diagonal, so this restores primitivity for free.
    pub add_diagonal: Option<f64>,
}

impl Default for IdealOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            normalization: Normalization::MeanZero,
            check_irreducible: true,
            add_diagonal: None,
        }
    }
}

impl IdealOptions {
    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n + 1000)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(HotsError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

fn check_len(a: &SparseMatrix, p: &[f64]) -> Result<()> {
    if p.len() != a.n() {
        return Err(HotsError::DimensionMismatch {
            expected: a.n(),
            got: p.len(),
        });
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite()) {
        return Err(HotsError::Domain(format!("potential {v} is not finite")));
    }
    Ok(())
}

fn negated(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| -v).collect()
}

/// `log θ₀(p)` given `log(Ae^{−p})`.
fn log_theta_from(p: &[f64], log_a_negp: &[f64]) -> f64 {
    let terms: Vec<f64> = p.iter().zip(log_a_negp).map(|(pi, l)| pi + l).collect();
    log_sum_exp(&terms)
}

/// `θ₀(p) = Σ_ij (A_ij + c)·e^{p_i−p_j}`, evaluated as `Σ_i e^{p_i}(Ae^{−p})_i`
/// in the log domain.
pub fn theta0(a: &SparseMatrix, p: &[f64]) -> Result<f64> {
    check_len(a, p)?;
    let la = a.log_apply(&negated(p))?;
    Ok(log_theta_from(p, &la).exp())
}

/// Gradient of `θ₀`: `e^{p_k}(Ae^{−p})_k − e^{−p_k}(Aᵀe^p)_k`.
pub fn theta0_gradient(a: &SparseMatrix, p: &[f64]) -> Result<Vec<f64>> {
    check_len(a, p)?;
    let la = a.log_apply(&negated(p))?;
    let lt = a.log_apply_transpose(p)?;
    Ok(p
        .iter()
        .zip(la.iter().zip(&lt))
        .map(|(pk, (l, t))| (pk + l).exp() - (t - pk).exp())
        .collect())
}

/// `f(p)` without normalization, plus `log θ₀(p)` which falls out of the same
/// products.
fn raw_step(a: &SparseMatrix, p: &[f64]) -> Result<(Vec<f64>, f64)> {
    let la = a.log_apply(&negated(p))?;
    let lt = a.log_apply_transpose(p)?;
    let mut next = Vec::with_capacity(p.len());
    for (i, (t, l)) in lt.iter().zip(&la).enumerate() {
        if *l == f64::NEG_INFINITY {
            return Err(HotsError::Structural(format!("row {i} of the matrix is zero")));
        }
        if *t == f64::NEG_INFINITY {
            return Err(HotsError::Structural(format!("column {i} of the matrix is zero")));
        }
        next.push(0.5 * (t - l));
    }
    Ok((next, log_theta_from(p, &la)))
}

/// One application of `f`, with the state's normalization re-applied.
pub fn ideal_step(a: &SparseMatrix, state: &ScoreState) -> Result<ScoreState> {
    check_len(a, &state.p)?;
    let (next, _) = raw_step(a, &state.p)?;
    Ok(ScoreState::new(next, state.normalization))
}

/// Checks shared by the ideal solvers; returns the matrix actually solved.
pub(crate) fn prepare<'a>(a: &'a SparseMatrix, opts: &IdealOptions) -> Result<Cow<'a, SparseMatrix>> {
    opts.validate()?;
    let a = match opts.add_diagonal {
        Some(eps) => Cow::Owned(a.add_diagonal(eps)?),
        None => Cow::Borrowed(a),
    };
    a.require_nonzero_rows_and_cols()?;
    if opts.check_irreducible && !is_strongly_connected(&a) {
        return Err(HotsError::Precondition(
            "matrix is reducible; use the effective model for graphs that are not strongly connected"
                .into(),
        ));
    }
    Ok(a)
}

/// Iterates `p ← f(p)` until the sup-norm step drops below `tol`.
///
/// Non-convergence is reported through the status, never as an error. On an
/// imprimitive matrix the iteration can lock onto a 2-cycle; that is
/// reported as [`SolveStatus::Oscillating`].
pub fn ideal_solve(
    a: &SparseMatrix,
    p0: &ScoreState,
    opts: &IdealOptions,
) -> Result<(ScoreState, SolveReport)> {
    check_len(a, &p0.p)?;
    let a = prepare(a, opts)?;
    if !is_primitive_symmetrized(&a) {
        log::warn!("A + Aᵀ is not primitive; the fixed-point iteration may oscillate");
    }
    let max_iter = opts.max_iter_for(a.n());
    let tol = opts.tol;

    let mut p = p0.p.clone();
    opts.normalization.apply(&mut p);
    let mut prev: Option<Vec<f64>> = None;
    let mut thetas = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut period_two = 0usize;
    let mut status = SolveStatus::MaxIter;

    for _ in 0..max_iter {
        let (mut next, log_theta) = raw_step(&a, &p)?;
        opts.normalization.apply(&mut next);
        thetas.push(log_theta.exp());
        let r1 = sup_dist(&next, &p);

        // A genuine 2-cycle: two steps return to the start while single steps
        // stay large and do not shrink.
        if let Some(pp) = &prev {
            let r2 = sup_dist(&next, pp);
            let stalled = residuals.last().is_some_and(|&r0| r1 >= (1.0 - 1e-6) * r0);
            if r2 < tol && r1 >= 10.0 * tol && stalled {
                period_two += 1;
            } else {
                period_two = 0;
            }
        }
        residuals.push(r1);
        prev = Some(std::mem::replace(&mut p, next));

        if r1 < tol {
            status = SolveStatus::Converged;
            break;
        }
        if period_two >= OSCILLATION_RUN {
            status = SolveStatus::Oscillating;
            break;
        }
    }
    thetas.push(theta0(&a, &p)?);
    let state = ScoreState {
        p,
        normalization: opts.normalization,
    };
    Ok((state, SolveReport::finish(status, thetas, residuals)))
}
