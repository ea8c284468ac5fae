//! The effective HOTS model: an artificial node linked to and from every
//! page carries throughput `1 − α`, which makes the scaling problem well posed
//! on graphs that are not strongly connected.
//!
//! Potentials live on `n + 1` coordinates, the last one being the artificial
//! node. The multipliers `λ = (μ, a, b)` enforce unit total flow and the
//! artificial throughput; for fixed potentials they have a closed form, see
//! [`lambda_of`].

mod cd;
mod flow;
mod rate;

pub use cd::effective_cd_solve;
pub(crate) use cd::coordinate_descent;
pub use flow::{effective_flow, EffectiveFlow};
pub use rate::{effective_jacobian_fd, rate_effective, rate_effective_scoped, EffectiveRateMethod};

use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::{centered_sup, log_add_exp, log_sum_exp, sup_dist};
use crate::report::{Normalization, ScoreState, SolveReport, SolveStatus};

/// Smallest and largest accepted `α`. Both `2α − 1` and `1 − α` are taken
/// logarithms of, so the ends are excluded with a margin.
pub const ALPHA_MIN: f64 = 0.5 + 1e-6;
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;
pub const DEFAULT_ALPHA: f64 = 0.9;

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
        Ok(())
    } else {
        Err(HotsError::InvalidParameter(format!(
            "alpha must lie in ({ALPHA_MIN}, {ALPHA_MAX}), got {alpha}"
        )))
    }
}

/// Multipliers of the total-mass (`mu`) and artificial-throughput (`a`, `b`)
/// constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lambda {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub alpha: f64,
    pub lambda: Lambda,
}

impl EffectiveParams {
    pub fn new(alpha: f64, lambda: Lambda) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, lambda })
    }

    /// `(1 − α)/(2α − 1)`.
    pub fn gamma(&self) -> f64 {
        gamma(self.alpha)
    }
}

pub fn gamma(alpha: f64) -> f64 {
    (1.0 - alpha) / (2.0 * alpha - 1.0)
}

/// Page potentials followed by the artificial node's potential.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub p: Vec<f64>,
}

impl AugmentedState {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(HotsError::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite()) {
            return Err(HotsError::Domain(format!("potential {v} is not finite")));
        }
        Ok(Self { p })
    }

    /// All potentials zero, for `n` pages.
    pub fn zeros(n: usize) -> Self {
        Self { p: vec![0.0; n + 1] }
    }

    /// Page potentials with the artificial potential set to zero.
    pub fn from_pages(pages: &[f64]) -> Self {
        let mut p = pages.to_vec();
        p.push(0.0);
        Self { p }
    }

    pub fn pages(&self) -> &[f64] {
        &self.p[..self.p.len() - 1]
    }

    pub fn artificial(&self) -> f64 {
        self.p[self.p.len() - 1]
    }

    pub fn n_pages(&self) -> usize {
        self.p.len() - 1
    }
}

/// Which block the sums inside `λ(p)` run over. `Leading(k)` restricts them
/// to the first `k` pages; the normalized model uses it to compare against
/// the variant that leaves its link node out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaScope {
    #[default]
    All,
    Leading(usize),
}

#[derive(Debug, Clone)]
pub struct EffectiveOptions {
    pub tol: f64,
    /// Defaults to `10·n + 1000` when unset.
    pub max_iter: Option<usize>,
    pub normalization: Normalization,
    /// Declare divergence when the reduced dual falls this far below its
    /// starting value ...
    pub divergence_budget: f64,
    /// ... or the centered potentials spread beyond this ...
    pub spread_limit: f64,
    /// ... for this many consecutive iterations.
    pub divergence_patience: usize,
    pub lambda_scope: LambdaScope,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            normalization: Normalization::MeanZero,
            divergence_budget: 100.0,
            spread_limit: 50.0,
            divergence_patience: 20,
            lambda_scope: LambdaScope::All,
        }
    }
}

impl EffectiveOptions {
    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n + 1000)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(HotsError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Tracks the divergence rule across iterations.
#[derive(Debug, Clone)]
pub(crate) struct DivergenceMonitor {
    floor: f64,
    spread_limit: f64,
    patience: usize,
    strikes: usize,
}

impl DivergenceMonitor {
    pub fn new(theta_start: f64, opts: &EffectiveOptions) -> Self {
        Self {
            floor: theta_start - opts.divergence_budget,
            spread_limit: opts.spread_limit,
            patience: opts.divergence_patience.max(1),
            strikes: 0,
        }
    }

    /// Records one iterate; true once the rule has held long enough.
    pub fn observe(&mut self, theta: f64, p: &[f64]) -> bool {
        if theta < self.floor || centered_sup(p) > self.spread_limit || !theta.is_finite() {
            self.strikes += 1;
        } else {
            self.strikes = 0;
        }
        self.strikes >= self.patience
    }
}

/// `log S`, `log Σe^{p_i}` and `log Σe^{−p_j}` over the pages, where
/// `S = Σ_ij A_ij e^{p_i−p_j}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSums {
    pub s: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

impl LogSums {
    /// From `la = log(Ae^{−p})` over all pages.
    pub fn from_kernel(pages: &[f64], la: &[f64]) -> Self {
        let terms: Vec<f64> = pages.iter().zip(la).map(|(p, l)| p + l).collect();
        Self {
            s: log_sum_exp(&terms),
            e_plus: log_sum_exp(pages),
            e_minus: log_sum_exp(&pages.iter().map(|v| -v).collect::<Vec<_>>()),
        }
    }

    /// Sums restricted to the first `k` pages, by a direct pattern walk.
    pub fn leading(a: &SparseMatrix, pages: &[f64], k: usize) -> Self {
        let k = k.min(pages.len());
        let head = &pages[..k];
        let mut terms = Vec::new();
        for i in 0..k {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < k && v > 0.0 {
                    terms.push(v.ln() + pages[i] - pages[j]);
                }
            }
        }
        let e_plus = log_sum_exp(head);
        let e_minus = log_sum_exp(&head.iter().map(|v| -v).collect::<Vec<_>>());
        if a.shift() > 0.0 {
            terms.push(a.shift().ln() + e_plus + e_minus);
        }
        Self {
            s: log_sum_exp(&terms),
            e_plus,
            e_minus,
        }
    }

    pub fn scoped(a: &SparseMatrix, pages: &[f64], la: &[f64], scope: LambdaScope) -> Self {
        match scope {
            LambdaScope::All => Self::from_kernel(pages, la),
            LambdaScope::Leading(k) => Self::leading(a, pages, k),
        }
    }

    pub fn lambda(&self, alpha: f64, artificial: f64) -> Result<Lambda> {
        if self.s == f64::NEG_INFINITY {
            return Err(HotsError::Model("the matrix is zero, so no page carries flow".into()));
        }
        let lg = gamma(alpha).ln();
        Ok(Lambda {
            mu: (2.0 * alpha - 1.0).ln() - self.s,
            a: lg + self.s - artificial - self.e_minus,
            b: -(lg + self.s + artificial - self.e_plus),
        })
    }

    /// The reduced dual `θ̃`, which equals `θ(p, λ(p))`.
    pub fn theta_tilde(&self, alpha: f64) -> f64 {
        let beta = 1.0 - alpha;
        let delta = 2.0 * alpha - 1.0;
        let c = 1.0 - 2.0 * beta * beta.ln() - delta * delta.ln();
        c + beta * (self.e_plus + self.e_minus) + delta * self.s
    }
}

fn check_state(a: &SparseMatrix, p: &[f64]) -> Result<()> {
    if p.len() != a.n() + 1 {
        return Err(HotsError::DimensionMismatch {
            expected: a.n() + 1,
            got: p.len(),
        });
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite()) {
        return Err(HotsError::Domain(format!("potential {v} is not finite")));
    }
    Ok(())
}

pub(crate) fn neg(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| -v).collect()
}

/// The effective dual
/// `θ = Σ A_ij e^{p_i−p_j+μ} + Σ_i e^{−b−p_{n+1}+p_i+μ} + Σ_j e^{a+p_{n+1}−p_j+μ} − (1−α)a − μ + (1−α)b`.
pub fn theta_eff(a: &SparseMatrix, state: &AugmentedState, params: &EffectiveParams) -> Result<f64> {
    check_state(a, &state.p)?;
    let pages = state.pages();
    let pn = state.artificial();
    let la = a.log_apply(&neg(pages))?;
    let sums = LogSums::from_kernel(pages, &la);
    let Lambda { mu, a: la_, b } = params.lambda;
    let beta = 1.0 - params.alpha;
    let exp_terms = [sums.s + mu, sums.e_plus - b - pn + mu, sums.e_minus + la_ + pn + mu];
    Ok(log_sum_exp(&exp_terms).exp() - beta * la_ - mu + beta * b)
}

/// Closed-form minimizer of `θ` over `(μ, a, b)` at fixed potentials.
pub fn lambda_of(a: &SparseMatrix, state: &AugmentedState, alpha: f64) -> Result<Lambda> {
    check_alpha(alpha)?;
    check_state(a, &state.p)?;
    let pages = state.pages();
    let la = a.log_apply(&neg(pages))?;
    LogSums::from_kernel(pages, &la).lambda(alpha, state.artificial())
}

/// The reduced dual `θ̃(p) = C(α) + (1−α)(φ(p) + φ(−p)) + (2α−1)·log S` over
/// page potentials, with `φ` the log-sum-exp and
/// `C(α) = 1 − 2(1−α)log(1−α) − (2α−1)log(2α−1)`.
pub fn theta_tilde(a: &SparseMatrix, pages: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_state(a, &[pages, &[0.0]].concat())?;
    let la = a.log_apply(&neg(pages))?;
    let sums = LogSums::from_kernel(pages, &la);
    if sums.s == f64::NEG_INFINITY {
        return Err(HotsError::Model("the matrix is zero".into()));
    }
    Ok(sums.theta_tilde(alpha))
}

/// Page coordinates of the ideal HOTS step of the augmented matrix
/// `[[A, e^{−b}1], [e^a 1ᵀ, 0]]`, given the page kernels.
fn page_update(lt: &[f64], la: &[f64], pn: f64, lam: &Lambda) -> Vec<f64> {
    lt.iter()
        .zip(la)
        .map(|(t, l)| 0.5 * (log_add_exp(*t, pn + lam.a) - log_add_exp(*l, -pn - lam.b)))
        .collect()
}

/// The full ideal step `f^λ` of the augmented matrix for a given `λ`,
/// including the artificial coordinate `½(log Σe^{p_i} − b) − ½(log Σe^{−p_j} + a)`.
/// With `λ = λ(p)` that last coordinate equals `p_{n+1}`.
pub fn f_lambda(a: &SparseMatrix, state: &AugmentedState, lambda: &Lambda) -> Result<AugmentedState> {
    check_state(a, &state.p)?;
    let pages = state.pages();
    let pn = state.artificial();
    let lt = a.log_apply_transpose(pages)?;
    let la = a.log_apply(&neg(pages))?;
    let sums = LogSums::from_kernel(pages, &la);
    let mut next = page_update(&lt, &la, pn, lambda);
    next.push(0.5 * (sums.e_plus - lambda.b) - 0.5 * (sums.e_minus + lambda.a));
    Ok(AugmentedState { p: next })
}

/// One effective HOTS step `F(p)`: pages follow `f^{λ(p)}`, the artificial
/// node moves to `½log Σe^{p_i} − ½log Σe^{−p_j}`. No normalization is
/// applied; `F` commutes with adding a constant to every coordinate.
pub fn effective_step(a: &SparseMatrix, state: &AugmentedState, alpha: f64) -> Result<AugmentedState> {
    effective_step_scoped(a, state, alpha, LambdaScope::All)
}

pub(crate) fn effective_step_scoped(
    a: &SparseMatrix,
    state: &AugmentedState,
    alpha: f64,
    scope: LambdaScope,
) -> Result<AugmentedState> {
    check_alpha(alpha)?;
    check_state(a, &state.p)?;
    let pages = state.pages();
    let lt = a.log_apply_transpose(pages)?;
    let la = a.log_apply(&neg(pages))?;
    let all = LogSums::from_kernel(pages, &la);
    let sums = match scope {
        LambdaScope::All => all,
        LambdaScope::Leading(_) => LogSums::scoped(a, pages, &la, scope),
    };
    let lam = sums.lambda(alpha, state.artificial())?;
    let mut next = page_update(&lt, &la, state.artificial(), &lam);
    next.push(0.5 * (all.e_plus - all.e_minus));
    Ok(AugmentedState { p: next })
}

/// Everything one iteration needs at the current potentials.
struct Eval {
    lt: Vec<f64>,
    la: Vec<f64>,
    all: LogSums,
    lam: Lambda,
    theta: f64,
}

fn evaluate(a: &SparseMatrix, p: &[f64], alpha: f64, scope: LambdaScope) -> Result<Eval> {
    let n = a.n();
    let pages = &p[..n];
    let (lt, la) = rayon::join(|| a.log_apply_transpose(pages), || a.log_apply(&neg(pages)));
    let (lt, la) = (lt?, la?);
    let all = LogSums::from_kernel(pages, &la);
    let sums = match scope {
        LambdaScope::All => all,
        LambdaScope::Leading(_) => LogSums::scoped(a, pages, &la, scope),
    };
    let lam = sums.lambda(alpha, p[n])?;
    let theta = sums.theta_tilde(alpha);
    Ok(Eval {
        lt,
        la,
        all,
        lam,
        theta,
    })
}

/// Fixed-point iteration `p ← F(p)` with per-step normalization.
///
/// Returns the potentials over `n + 1` nodes, the parameters at the final
/// iterate and the report. The report's `theta_trace` holds the reduced dual
/// `θ̃(p_k) = θ(p_k, λ(p_k))`. On infeasible instances the potentials run
/// off to infinity; the divergence monitor then stops with
/// [`SolveStatus::Diverged`].
pub fn effective_solve(
    a: &SparseMatrix,
    p0: &AugmentedState,
    alpha: f64,
    opts: &EffectiveOptions,
) -> Result<(ScoreState, EffectiveParams, SolveReport)> {
    check_alpha(alpha)?;
    opts.validate()?;
    check_state(a, &p0.p)?;
    let max_iter = opts.max_iter_for(a.n());
    let n = a.n();

    let mut p = p0.p.clone();
    opts.normalization.apply(&mut p);
    let mut ev = evaluate(a, &p, alpha, opts.lambda_scope)?;
    let mut monitor = DivergenceMonitor::new(ev.theta, opts);
    let mut thetas = vec![ev.theta];
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;

    for _ in 0..max_iter {
        let mut next = page_update(&ev.lt, &ev.la, p[n], &ev.lam);
        next.push(0.5 * (ev.all.e_plus - ev.all.e_minus));
        opts.normalization.apply(&mut next);
        let r = sup_dist(&next, &p);
        residuals.push(r);
        p = next;
        ev = evaluate(a, &p, alpha, opts.lambda_scope)?;
        thetas.push(ev.theta);
        if r < opts.tol {
            status = SolveStatus::Converged;
            break;
        }
        if monitor.observe(ev.theta, &p) {
            status = SolveStatus::Diverged;
            break;
        }
        if !r.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
    }
    let params = EffectiveParams { alpha, lambda: ev.lam };
    let state = ScoreState {
        p,
        normalization: opts.normalization,
    };
    Ok((state, params, SolveReport::finish(status, thetas, residuals)))
}
