use super::{check_alpha, check_state, effective_step_scoped, AugmentedState, LambdaScope};
use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::{centered_sup, mean, sup_norm};
use crate::report::SolveStatus;
use crate::spectral::{dense_eigenvalues, dominant_modulus, modulus_without_unit, RateEstimate};

/// Largest page count accepted by the dense route.
pub const DENSE_LIMIT: usize = 2000;

/// How far `F(p) − p` may be from a constant for `p` to count as converged.
const FIXED_POINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectiveRateMethod {
    /// Finite-difference Jacobian, all eigenvalues.
    #[default]
    FdDense,
    /// Finite-difference directional derivatives inside block orthogonal
    /// iteration, for graphs too large to densify.
    FdPower,
}

fn fd_step(p: &[f64]) -> f64 {
    1e-6 * (1.0 + sup_norm(p))
}

fn require_converged(a: &SparseMatrix, p: &[f64], alpha: f64, scope: LambdaScope) -> Result<()> {
    let f = effective_step_scoped(a, &AugmentedState { p: p.to_vec() }, alpha, scope)?;
    let diff: Vec<f64> = f.p.iter().zip(p).map(|(x, y)| x - y).collect();
    let r = centered_sup(&diff);
    if r > FIXED_POINT_TOL {
        return Err(HotsError::Precondition(format!(
            "potentials are not converged (fixed-point residual {r:.3e})"
        )));
    }
    Ok(())
}

/// Jacobian of the effective map `F` at `p` (length `n + 1`) by central
/// differences with step `1e-6·(1 + ‖p‖_∞)`, as dense rows.
pub fn effective_jacobian_fd(a: &SparseMatrix, p: &[f64], alpha: f64) -> Result<Vec<Vec<f64>>> {
    jacobian(a, p, alpha, LambdaScope::All)
}

fn jacobian(a: &SparseMatrix, p: &[f64], alpha: f64, scope: LambdaScope) -> Result<Vec<Vec<f64>>> {
    check_alpha(alpha)?;
    check_state(a, p)?;
    if a.n() > DENSE_LIMIT {
        return Err(HotsError::InvalidParameter(format!(
            "dense Jacobian limited to n <= {DENSE_LIMIT}, got {}",
            a.n()
        )));
    }
    let m = p.len();
    let h = fd_step(p);
    let mut rows = vec![vec![0.0; m]; m];
    let mut probe = p.to_vec();
    for k in 0..m {
        probe[k] = p[k] + h;
        let up = effective_step_scoped(a, &AugmentedState { p: probe.clone() }, alpha, scope)?;
        probe[k] = p[k] - h;
        let down = effective_step_scoped(a, &AugmentedState { p: probe.clone() }, alpha, scope)?;
        probe[k] = p[k];
        for (row, (u, d)) in rows.iter_mut().zip(up.p.iter().zip(&down.p)) {
            row[k] = (u - d) / (2.0 * h);
        }
    }
    Ok(rows)
}

/// Asymptotic rate `max{|λ| : λ ≠ 1}` of the effective iteration at a
/// converged `p`, from a finite-difference Jacobian.
pub fn rate_effective(a: &SparseMatrix, p: &[f64], alpha: f64, method: EffectiveRateMethod) -> Result<RateEstimate> {
    rate_effective_scoped(a, p, alpha, method, LambdaScope::All)
}

/// [`rate_effective`] for an iteration whose `λ` sums run over `scope`.
pub fn rate_effective_scoped(
    a: &SparseMatrix,
    p: &[f64],
    alpha: f64,
    method: EffectiveRateMethod,
    scope: LambdaScope,
) -> Result<RateEstimate> {
    check_alpha(alpha)?;
    check_state(a, p)?;
    require_converged(a, p, alpha, scope)?;
    match method {
        EffectiveRateMethod::FdDense => {
            let jac = jacobian(a, p, alpha, scope)?;
            Ok(RateEstimate {
                rate: modulus_without_unit(&dense_eigenvalues(&jac)),
                status: SolveStatus::Converged,
                iterations: 0,
            })
        }
        EffectiveRateMethod::FdPower => {
            // J·1 = 1, so on the complement of 1 the projected map ΠJ keeps
            // every other eigenvalue of J.
            let h = fd_step(p);
            let m = p.len();
            let mut failure = None;
            let op = |x: &[f64]| -> Vec<f64> {
                let scale = sup_norm(x).max(f64::MIN_POSITIVE);
                let up: Vec<f64> = p.iter().zip(x).map(|(v, d)| v + h * d / scale).collect();
                let down: Vec<f64> = p.iter().zip(x).map(|(v, d)| v - h * d / scale).collect();
                let fu = effective_step_scoped(a, &AugmentedState { p: up }, alpha, scope);
                let fd = effective_step_scoped(a, &AugmentedState { p: down }, alpha, scope);
                match (fu, fd) {
                    (Ok(fu), Ok(fd)) => {
                        let mut y: Vec<f64> = fu
                            .p
                            .iter()
                            .zip(&fd.p)
                            .map(|(u, d)| (u - d) * scale / (2.0 * h))
                            .collect();
                        let c = mean(&y);
                        y.iter_mut().for_each(|v| *v -= c);
                        y
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        vec![0.0; m]
                    }
                }
            };
            let est = dominant_modulus(op, m, 4, 1e-7, 5000, 0x5eed);
            match failure {
                Some(e) => Err(e),
                None => Ok(est),
            }
        }
    }
}
