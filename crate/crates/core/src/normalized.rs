//! Normalized HOTS: the effective model run on the row-normalized adjacency
//! matrix, extended by a link node that every page's score feeds through
//! when it has no outgoing link.
//!
//! The inner matrix has `n + 1` nodes: pages `0..n` with row-stochastic
//! rows, dangling pages pointing only to the link node `n`, and the link
//! node pointing to every page. The effective model then adds its own
//! artificial node on top.

use crate::effective::{
    effective_solve, rate_effective_scoped, AugmentedState, EffectiveOptions, EffectiveParams,
    EffectiveRateMethod, LambdaScope,
};
use crate::error::{HotsError, Result};
use crate::graph::{GraphMeta, SparseMatrix};
use crate::report::{ScoreState, SolveReport};
use crate::spectral::RateEstimate;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedModel {
    /// `(n + 1) × (n + 1)` inner matrix.
    pub inner: SparseMatrix,
    pub alpha: f64,
    /// Pages routed to the link node: no stored outgoing weight.
    pub dangling: Vec<bool>,
}

impl NormalizedModel {
    pub fn n_pages(&self) -> usize {
        self.dangling.len()
    }

    /// Scope for the variant whose multiplier sums leave the link node out.
    pub fn pages_only_scope(&self) -> LambdaScope {
        LambdaScope::Leading(self.n_pages())
    }
}

/// Builds the inner matrix in `O(m + n)`. Rows are divided by their stored
/// sum, so only weight ratios within a row matter. A shift on `a` is not
/// part of the model and is ignored.
pub fn build_normalized(a: &SparseMatrix, meta: &GraphMeta, alpha: f64) -> Result<NormalizedModel> {
    crate::effective::check_alpha(alpha)?;
    let n = a.n();
    if meta.n != n {
        return Err(HotsError::DimensionMismatch {
            expected: n,
            got: meta.n,
        });
    }
    if a.shift() > 0.0 {
        log::warn!("the normalized model ignores the matrix shift");
    }
    let link = n;
    let mut triplets = Vec::with_capacity(a.nnz() + 2 * n);
    let mut dangling = vec![false; n];
    for (i, flag) in dangling.iter_mut().enumerate() {
        let (cols, vals) = a.row(i);
        let sum: f64 = vals.iter().sum();
        if meta.dangling[i] || !(sum > 0.0) {
            *flag = true;
            triplets.push((i, link, 1.0));
        } else {
            triplets.extend(
                cols.iter()
                    .zip(vals)
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(&j, &v)| (i, j, v / sum)),
            );
        }
    }
    triplets.extend((0..n).map(|j| (link, j, 1.0)));
    Ok(NormalizedModel {
        inner: SparseMatrix::from_triplets(n + 1, triplets)?,
        alpha,
        dangling,
    })
}

/// Result of [`normalized_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSolution {
    /// Page potentials only, renormalized.
    pub pages: ScoreState,
    /// All `n + 2` potentials: pages, link node, artificial node.
    pub full: ScoreState,
    pub params: EffectiveParams,
}

/// Runs the effective HOTS iteration on the inner matrix. `p0` holds the
/// page potentials; the link and artificial nodes start at zero.
pub fn normalized_solve(
    model: &NormalizedModel,
    p0: &[f64],
    opts: &EffectiveOptions,
) -> Result<(NormalizedSolution, SolveReport)> {
    let n = model.n_pages();
    if p0.len() != n {
        return Err(HotsError::DimensionMismatch {
            expected: n,
            got: p0.len(),
        });
    }
    let mut start = p0.to_vec();
    start.extend([0.0, 0.0]);
    let start = AugmentedState::new(start)?;
    let (full, params, report) = effective_solve(&model.inner, &start, model.alpha, opts)?;
    let pages = ScoreState::new(full.p[..n].to_vec(), opts.normalization);
    Ok((NormalizedSolution { pages, full, params }, report))
}

/// Convergence rate of the normalized iteration at a converged solution.
pub fn normalized_rate(
    model: &NormalizedModel,
    solution: &NormalizedSolution,
    method: EffectiveRateMethod,
    scope: LambdaScope,
) -> Result<RateEstimate> {
    rate_effective_scoped(&model.inner, &solution.full.p, model.alpha, method, scope)
}
