use super::{check_len, negated};
use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::log_sum_exp;

/// Default node-balance tolerance for [`recover_flow`].
pub const FLOW_BALANCE_TOL: f64 = 1e-8;

/// The scaled traffic `ρ_ij = e^μ e^{p_i} A_ij e^{−p_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedFlow {
    /// Flow on the stored pattern of `A`.
    pub rho: SparseMatrix,
    pub mu: f64,
    /// Mass carried by the uniform shift `c·11ᵀ`. It is part of the unit
    /// total but not of `rho`.
    pub shift_mass: f64,
    /// Largest `|Σ_j ρ_ij − Σ_j ρ_ji|` over nodes, shift included.
    pub balance_residual: f64,
    /// Whether `balance_residual` is within the requested tolerance. A false
    /// value means `p` was not a fixed point.
    pub balanced: bool,
}

/// Recovers the flow from potentials. Without an explicit `mu`, the total
/// mass is normalized to one: `μ = −log θ₀(p)`.
pub fn recover_flow(a: &SparseMatrix, p: &[f64], mu: Option<f64>) -> Result<BalancedFlow> {
    check_len(a, p)?;
    let n = a.n();
    let la = a.log_apply(&negated(p))?;
    let log_total = log_sum_exp(&p.iter().zip(&la).map(|(x, y)| x + y).collect::<Vec<_>>());
    if !log_total.is_finite() {
        return Err(HotsError::Model("the matrix carries no flow".into()));
    }
    let mu = mu.unwrap_or(-log_total);

    let values: Vec<f64> = a
        .triplets()
        .map(|(i, j, v)| v * (mu + p[i] - p[j]).exp())
        .collect();
    let rho = SparseMatrix::try_new(
        n,
        a.row_offsets().to_vec(),
        a.col_indices().to_vec(),
        values,
        0.0,
    )?;

    let mut out = rho.row_sums();
    let mut inflow = vec![0.0; n];
    for (_, j, v) in rho.triplets() {
        inflow[j] += v;
    }
    let c = a.shift();
    let mut shift_mass = 0.0;
    if c > 0.0 {
        // shift rows: c·e^{μ+p_i}·Σ_j e^{−p_j}; columns: c·e^{μ−p_j}·Σ_i e^{p_i}
        let lp = log_sum_exp(p);
        let lm = log_sum_exp(&negated(p));
        for i in 0..n {
            out[i] += c * (mu + p[i] + lm).exp();
            inflow[i] += c * (mu - p[i] + lp).exp();
        }
        shift_mass = c * (mu + lp + lm).exp();
    }
    let balance_residual = out
        .iter()
        .zip(&inflow)
        .map(|(o, i)| (o - i).abs())
        .fold(0.0, f64::max);
    let balanced = balance_residual <= FLOW_BALANCE_TOL;
    if !balanced {
        log::warn!("recovered flow is unbalanced (residual {balance_residual:.3e})");
    }
    Ok(BalancedFlow {
        rho,
        mu,
        shift_mass,
        balance_residual,
        balanced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycle_flow_is_half_half() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let f = recover_flow(&a, &[0.5 * 2f64.ln(), 0.0], None).unwrap();
        assert!((f.rho.stored(0, 1) - 0.5).abs() < 1e-15);
        assert!((f.rho.stored(1, 0) - 0.5).abs() < 1e-15);
        assert!((f.mu + (2.0 * 2f64.sqrt()).ln()).abs() < 1e-15);
        assert!(f.balanced);
    }

    #[test]
    fn shift_mass_completes_the_total() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap()
            .with_shift(0.5)
            .unwrap();
        let f = recover_flow(&a, &[0.0, 0.0], None).unwrap();
        let total: f64 = f.rho.values().iter().sum::<f64>() + f.shift_mass;
        assert!((total - 1.0).abs() < 1e-15);
        assert!(f.balanced);
    }
}
