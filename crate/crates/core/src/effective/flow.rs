use super::{check_state, neg, AugmentedState, EffectiveParams};
use crate::error::Result;
use crate::graph::SparseMatrix;
use crate::numeric::log_sum_exp;

/// Traffic of the effective model, pages plus the artificial node.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveFlow {
    /// Page-to-page flow on the stored pattern of `A`.
    pub rho: SparseMatrix,
    /// Flow from each page into the artificial node.
    pub to_artificial: Vec<f64>,
    /// Flow from the artificial node into each page.
    pub from_artificial: Vec<f64>,
    /// Page-to-page mass carried by the uniform shift, not part of `rho`.
    pub shift_mass: f64,
    /// Largest node imbalance over the `n + 1` nodes.
    pub balance_residual: f64,
}

impl EffectiveFlow {
    /// Total flow over every arc, artificial ones included.
    pub fn total(&self) -> f64 {
        self.rho.values().iter().sum::<f64>()
            + self.shift_mass
            + self.to_artificial.iter().sum::<f64>()
            + self.from_artificial.iter().sum::<f64>()
    }
}

/// Recovers `ρ_ij = e^{μ+p_i−p_j}A_ij` together with the artificial arcs
/// `e^{μ−b−p_{n+1}+p_i}` and `e^{μ+a+p_{n+1}−p_j}`.
pub fn effective_flow(a: &SparseMatrix, state: &AugmentedState, params: &EffectiveParams) -> Result<EffectiveFlow> {
    check_state(a, &state.p)?;
    let n = a.n();
    let pages = state.pages();
    let pn = state.artificial();
    let lam = params.lambda;
    let values: Vec<f64> = a
        .triplets()
        .map(|(i, j, v)| v * (lam.mu + pages[i] - pages[j]).exp())
        .collect();
    let rho = SparseMatrix::try_new(n, a.row_offsets().to_vec(), a.col_indices().to_vec(), values, 0.0)?;
    let to_artificial: Vec<f64> = pages.iter().map(|p| (lam.mu - lam.b - pn + p).exp()).collect();
    let from_artificial: Vec<f64> = pages.iter().map(|p| (lam.mu + lam.a + pn - p).exp()).collect();

    let mut out = rho.row_sums();
    let mut inflow = vec![0.0; n];
    for (_, j, v) in rho.triplets() {
        inflow[j] += v;
    }
    let mut shift_mass = 0.0;
    if a.shift() > 0.0 {
        let c = a.shift();
        let lp = log_sum_exp(pages);
        let lm = log_sum_exp(&neg(pages));
        for i in 0..n {
            out[i] += c * (lam.mu + pages[i] + lm).exp();
            inflow[i] += c * (lam.mu - pages[i] + lp).exp();
        }
        shift_mass = c * (lam.mu + lp + lm).exp();
    }
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let o = out[i] + to_artificial[i];
        let inn = inflow[i] + from_artificial[i];
        residual = residual.max((o - inn).abs());
    }
    let art_out: f64 = from_artificial.iter().sum();
    let art_in: f64 = to_artificial.iter().sum();
    residual = residual.max((art_out - art_in).abs());
    Ok(EffectiveFlow {
        rho,
        to_artificial,
        from_artificial,
        shift_mass,
        balance_residual: residual,
    })
}
