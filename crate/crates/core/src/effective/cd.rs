use super::{check_alpha, check_state, neg, DivergenceMonitor, EffectiveOptions, EffectiveParams, Lambda, LogSums};
use crate::cd::{coordinate_update, reduced_arc_value, ArcBounds, ExpSums, ExtraArcs, Incidence};
use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::{log_sum_exp, sup_dist};
use crate::report::{ScoreState, SolveReport, SolveStatus};

use super::AugmentedState;

/// Cyclic exact coordinate descent on the effective dual: each sweep updates
/// the pages in order, then the artificial node, then `(μ, a, b)` in closed
/// form. Converges to the same HOTS vector as
/// [`effective_solve`](super::effective_solve) up to a constant.
///
/// One reported iteration is one sweep. `theta_trace` holds `θ̃` after each
/// sweep and never increases.
pub fn effective_cd_solve(
    a: &SparseMatrix,
    p0: &AugmentedState,
    alpha: f64,
    opts: &EffectiveOptions,
) -> Result<(ScoreState, EffectiveParams, SolveReport)> {
    coordinate_descent(a, p0, alpha, opts, None)
}

/// Dual value with bound multipliers eliminated; without bounds this is the
/// effective dual `θ(p, λ)`.
pub(crate) fn bounded_theta(
    a: &SparseMatrix,
    p: &[f64],
    alpha: f64,
    lam: &Lambda,
    bounds: Option<ArcBounds<'_>>,
) -> f64 {
    let n = a.n();
    let (pages, pn) = (&p[..n], p[n]);
    let mut total = 0.0;
    for (e, (i, j, v)) in a.triplets().enumerate() {
        if v > 0.0 {
            let t = lam.mu + v.ln() + pages[i] - pages[j];
            total += match bounds {
                Some(b) => reduced_arc_value(t, b.lower[e], b.upper[e]),
                None => t.exp(),
            };
        }
    }
    let e_plus = log_sum_exp(pages);
    let e_minus = log_sum_exp(&neg(pages));
    if a.shift() > 0.0 {
        total += (lam.mu + a.shift().ln() + e_plus + e_minus).exp();
    }
    total += (lam.mu - lam.b - pn + e_plus).exp() + (lam.mu + lam.a + pn + e_minus).exp();
    let beta = 1.0 - alpha;
    total - beta * lam.a - lam.mu + beta * lam.b
}

/// Sum of clamped scaled flows `Σ mid(e^μ A_ij e^{p_i−p_j}, U, L)` plus the
/// unclamped shift part.
fn clamped_flow_total(a: &SparseMatrix, pages: &[f64], mu: f64, bounds: ArcBounds<'_>) -> f64 {
    let scale = mu.exp();
    let mut total = 0.0;
    for (e, (i, j, v)) in a.triplets().enumerate() {
        total += scale * bounds.clamp(e, v * (pages[i] - pages[j]).exp(), scale);
    }
    if a.shift() > 0.0 {
        total += (mu + a.shift().ln() + log_sum_exp(pages) + log_sum_exp(&neg(pages))).exp();
    }
    total
}

/// Shared sweep loop of the effective and bounded coordinate descent.
pub(crate) fn coordinate_descent(
    a: &SparseMatrix,
    p0: &AugmentedState,
    alpha: f64,
    opts: &EffectiveOptions,
    bounds: Option<ArcBounds<'_>>,
) -> Result<(ScoreState, EffectiveParams, SolveReport)> {
    check_alpha(alpha)?;
    opts.validate()?;
    check_state(a, &p0.p)?;
    let n = a.n();
    let inc = Incidence::new(a);
    let max_iter = opts.max_iter_for(n);

    let mut p = p0.p.clone();
    opts.normalization.apply(&mut p);
    let la = a.log_apply(&neg(&p[..n]))?;
    let mut lam = LogSums::from_kernel(&p[..n], &la).lambda(alpha, p[n])?;
    let objective = |p: &[f64], lam: &Lambda| -> Result<f64> {
        match bounds {
            None => {
                let la = a.log_apply(&neg(&p[..n]))?;
                Ok(LogSums::from_kernel(&p[..n], &la).theta_tilde(alpha))
            }
            Some(_) => Ok(bounded_theta(a, p, alpha, lam, bounds)),
        }
    };
    let theta0 = objective(&p, &lam)?;
    let mut monitor = DivergenceMonitor::new(theta0, opts);
    let mut thetas = vec![theta0];
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut before = p.clone();

    for _ in 0..max_iter {
        let mut sums = ExpSums::new(&p[..n]);
        for i in 0..n {
            let extra = ExtraArcs {
                log_in: lam.a + p[n] - p[i],
                log_out: p[i] - p[n] - lam.b,
            };
            let v = coordinate_update(&inc, &p, i, bounds, lam.mu, Some(&sums), Some(extra))?;
            sums.replace(p[i], v);
            p[i] = v;
        }
        let e_plus = log_sum_exp(&p[..n]);
        let e_minus = log_sum_exp(&neg(&p[..n]));
        p[n] = 0.5 * ((e_plus - lam.b) - (e_minus + lam.a));
        lam = match bounds {
            None => {
                let la = a.log_apply(&neg(&p[..n]))?;
                LogSums::from_kernel(&p[..n], &la).lambda(alpha, p[n])?
            }
            Some(b) => {
                let total = clamped_flow_total(a, &p[..n], lam.mu, b);
                if !(total > 0.0) || !total.is_finite() {
                    return Err(HotsError::Model("clamped flow total is not positive and finite".into()));
                }
                let mu = lam.mu + ((2.0 * alpha - 1.0) / total).ln();
                let lb = (1.0 - alpha).ln();
                Lambda {
                    mu,
                    a: lb - mu - p[n] - e_minus,
                    b: -(lb - mu + p[n] - e_plus),
                }
            }
        };
        opts.normalization.apply(&mut p);

        let r = sup_dist(&p, &before);
        residuals.push(r);
        before.copy_from_slice(&p);
        let theta = objective(&p, &lam)?;
        thetas.push(theta);
        if r < opts.tol {
            status = SolveStatus::Converged;
            break;
        }
        if monitor.observe(theta, &p) || !r.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
    }
    let params = EffectiveParams { alpha, lambda: lam };
    let state = ScoreState {
        p,
        normalization: opts.normalization,
    };
    Ok((state, params, SolveReport::finish(status, thetas, residuals)))
}
