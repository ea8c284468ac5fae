//! Truncated scaling: balancing where each scaled entry is clamped into
//! `[L_ij, U_ij]`, and the effective HOTS model with such flow bounds.
//!
//! The bound multipliers have closed forms at fixed potentials, so the
//! solvers only ever carry `p` (and `λ`); the multipliers are recomputed on
//! demand by [`trunc_multipliers`].

use std::collections::HashSet;
use std::io::BufRead;

use crate::cd::{coordinate_update, reduced_arc_value, ArcBounds, ExpSums, Incidence};
use crate::effective::{coordinate_descent, AugmentedState, EffectiveFlow, EffectiveOptions, EffectiveParams};
use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::ideal::{prepare, IdealOptions};
use crate::numeric::{log_sum_exp, sup_dist};
use crate::report::{ScoreState, SolveReport, SolveStatus};

/// `max(min(x, a), b)`: `x` clamped into `[b, a]`.
pub fn mid(x: f64, a: f64, b: f64) -> Result<f64> {
    if b > a {
        return Err(HotsError::Precondition(format!("mid needs b <= a, got b = {b}, a = {a}")));
    }
    Ok(x.min(a).max(b))
}

/// Lower and upper flow bounds for each stored entry of a matrix. Arcs
/// without an explicit bound get `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundsSet {
    /// No bounds on any arc.
    pub fn unbounded(a: &SparseMatrix) -> Self {
        Self {
            lower: vec![0.0; a.nnz()],
            upper: vec![f64::INFINITY; a.nnz()],
        }
    }

    /// Bounds `(src, dst, lower, upper)` on stored positive arcs of `a`.
    pub fn from_entries<I>(a: &SparseMatrix, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64, f64)>,
    {
        let mut set = Self::unbounded(a);
        let mut seen = HashSet::new();
        for (i, j, lo, hi) in entries {
            set.insert(a, i, j, lo, hi, &mut seen)?;
        }
        Ok(set)
    }

    fn insert(
        &mut self,
        a: &SparseMatrix,
        i: usize,
        j: usize,
        lo: f64,
        hi: f64,
        seen: &mut HashSet<usize>,
    ) -> Result<()> {
        if i >= a.n() || j >= a.n() {
            return Err(HotsError::Domain(format!("bound on ({i}, {j}) outside the matrix")));
        }
        if !(lo >= 0.0) || !lo.is_finite() || hi.is_nan() {
            return Err(HotsError::Domain(format!(
                "bound on ({i}, {j}) needs a finite lower bound >= 0, got [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(HotsError::Domain(format!(
                "bound on ({i}, {j}) has lower {lo} above upper {hi}"
            )));
        }
        let (cols, vals) = a.row(i);
        let e = match cols.binary_search(&j) {
            Ok(k) if vals[k] > 0.0 => a.row_offsets()[i] + k,
            _ => {
                return Err(HotsError::Structural(format!(
                    "bound on ({i}, {j}), which is not a positive arc of the matrix"
                )))
            }
        };
        if !seen.insert(e) {
            return Err(HotsError::Domain(format!("arc ({i}, {j}) is bounded twice")));
        }
        self.lower[e] = lo;
        self.upper[e] = hi;
        Ok(())
    }

    /// Reads `src dst lower upper` lines; `inf` is accepted as upper bound
    /// and `#` starts a comment.
    pub fn from_reader<R: BufRead>(a: &SparseMatrix, reader: R) -> Result<Self> {
        let mut set = Self::unbounded(a);
        let mut seen = HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let bad = |message: String| HotsError::Parse {
                line: lineno,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 'src dst lower upper', found {} fields", fields.len())));
            }
            let i: usize = fields[0].parse().map_err(|_| bad(format!("invalid node id '{}'", fields[0])))?;
            let j: usize = fields[1].parse().map_err(|_| bad(format!("invalid node id '{}'", fields[1])))?;
            let lo: f64 = fields[2].parse().map_err(|_| bad(format!("invalid lower bound '{}'", fields[2])))?;
            let hi: f64 = fields[3].parse().map_err(|_| bad(format!("invalid upper bound '{}'", fields[3])))?;
            set.insert(a, i, j, lo, hi, &mut seen)
                .map_err(|e| bad(e.to_string()))?;
        }
        Ok(set)
    }

    /// Lower bounds aligned with the stored entries of the matrix.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Number of arcs with a nontrivial bound.
    pub fn bounded_count(&self) -> usize {
        self.lower
            .iter()
            .zip(&self.upper)
            .filter(|(l, u)| **l > 0.0 || **u < f64::INFINITY)
            .count()
    }

    pub(crate) fn arcs(&self) -> ArcBounds<'_> {
        ArcBounds {
            lower: &self.lower,
            upper: &self.upper,
        }
    }

    fn check_for(&self, a: &SparseMatrix) -> Result<()> {
        if self.lower.len() != a.nnz() {
            return Err(HotsError::DimensionMismatch {
                expected: a.nnz(),
                got: self.lower.len(),
            });
        }
        Ok(())
    }
}

fn check_potentials(a: &SparseMatrix, p: &[f64]) -> Result<()> {
    if p.len() != a.n() {
        return Err(HotsError::DimensionMismatch {
            expected: a.n(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Bound multipliers at `p`, aligned with the stored entries:
/// `e^η = max(L/(A e^{p_i−p_j}), 1)` and `e^{−ζ} = min(U/(A e^{p_i−p_j}), 1)`.
pub fn trunc_multipliers(a: &SparseMatrix, p: &[f64], bounds: &BoundsSet) -> Result<(Vec<f64>, Vec<f64>)> {
    check_potentials(a, p)?;
    bounds.check_for(a)?;
    let mut eta = vec![0.0; a.nnz()];
    let mut zeta = vec![0.0; a.nnz()];
    for (e, (i, j, v)) in a.triplets().enumerate() {
        let (lo, hi) = (bounds.lower[e], bounds.upper[e]);
        if lo == 0.0 && hi == f64::INFINITY {
            continue;
        }
        if !(v > 0.0) {
            return Err(HotsError::Structural(format!("bound on the zero entry ({i}, {j})")));
        }
        let lf = v.ln() + p[i] - p[j];
        if lo > 0.0 {
            eta[e] = (lo.ln() - lf).max(0.0);
        }
        if hi < f64::INFINITY {
            zeta[e] = (lf - hi.ln()).max(0.0);
        }
    }
    Ok((eta, zeta))
}

/// Dual of truncated scaling with the multipliers eliminated:
/// `Σ_ij h(log A_ij + p_i − p_j)` where `h` is `e^t` between the bounds and
/// linear in `t` outside them.
pub fn trunc_dual(a: &SparseMatrix, p: &[f64], bounds: &BoundsSet) -> Result<f64> {
    check_potentials(a, p)?;
    bounds.check_for(a)?;
    let mut total = 0.0;
    for (e, (i, j, v)) in a.triplets().enumerate() {
        if v > 0.0 {
            total += reduced_arc_value(v.ln() + p[i] - p[j], bounds.lower[e], bounds.upper[e]);
        }
    }
    if a.shift() > 0.0 {
        let neg: Vec<f64> = p.iter().map(|v| -v).collect();
        total += (a.shift().ln() + log_sum_exp(p) + log_sum_exp(&neg)).exp();
    }
    Ok(total)
}

/// Exact coordinate step on coordinate `l`:
/// `p_l = ½log Σ_i mid(A_il e^{p_i}, U_il e^{p_l}, L_il e^{p_l}) − ½log Σ_j mid(A_lj e^{−p_j}, U_lj e^{−p_l}, L_lj e^{−p_l})`,
/// diagonal excluded, then the state's normalization.
pub fn trunc_dss_step(a: &SparseMatrix, state: &ScoreState, bounds: &BoundsSet, l: usize) -> Result<ScoreState> {
    check_potentials(a, &state.p)?;
    bounds.check_for(a)?;
    if l >= a.n() {
        return Err(HotsError::InvalidParameter(format!("coordinate {l} out of range for n = {}", a.n())));
    }
    let inc = Incidence::new(a);
    let sums = ExpSums::new(&state.p);
    let v = coordinate_update(&inc, &state.p, l, Some(bounds.arcs()), 0.0, Some(&sums), None)?;
    let mut p = state.p.clone();
    p[l] = v;
    Ok(ScoreState::new(p, state.normalization))
}

/// Cyclic exact coordinate descent for truncated scaling. The report's
/// `theta_trace` holds [`trunc_dual`] after each sweep.
pub fn trunc_dss_solve(
    a: &SparseMatrix,
    p0: &ScoreState,
    bounds: &BoundsSet,
    opts: &IdealOptions,
) -> Result<(ScoreState, SolveReport)> {
    check_potentials(a, &p0.p)?;
    bounds.check_for(a)?;
    if opts.add_diagonal.is_some() {
        return Err(HotsError::InvalidParameter(
            "add_diagonal changes the pattern the bounds are aligned with".into(),
        ));
    }
    let a = prepare(a, opts)?;
    let inc = Incidence::new(&a);
    inc.require_off_diagonal()?;
    let arcs = Some(bounds.arcs());
    let max_iter = opts.max_iter_for(a.n());

    let mut p = p0.p.clone();
    opts.normalization.apply(&mut p);
    let mut thetas = vec![trunc_dual(&a, &p, bounds)?];
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut before = p.clone();
    for _ in 0..max_iter {
        let mut sums = ExpSums::new(&p);
        for l in 0..p.len() {
            let v = coordinate_update(&inc, &p, l, arcs, 0.0, Some(&sums), None)?;
            sums.replace(p[l], v);
            p[l] = v;
        }
        opts.normalization.apply(&mut p);
        let r = sup_dist(&p, &before);
        residuals.push(r);
        thetas.push(trunc_dual(&a, &p, bounds)?);
        before.copy_from_slice(&p);
        if r < opts.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let state = ScoreState {
        p,
        normalization: opts.normalization,
    };
    Ok((state, SolveReport::finish(status, thetas, residuals)))
}

/// The truncated scaled matrix `mid(A_ij e^{p_i−p_j}, U_ij, L_ij)` and its
/// node imbalance.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFlow {
    pub rho: SparseMatrix,
    /// Largest `|row sum − column sum|`, shift flow included.
    pub balance_residual: f64,
}

pub fn truncated_flow(a: &SparseMatrix, p: &[f64], bounds: &BoundsSet) -> Result<TruncatedFlow> {
    check_potentials(a, p)?;
    bounds.check_for(a)?;
    let arcs = bounds.arcs();
    let values: Vec<f64> = a
        .triplets()
        .enumerate()
        .map(|(e, (i, j, v))| arcs.clamp(e, v * (p[i] - p[j]).exp(), 1.0))
        .collect();
    let rho = SparseMatrix::try_new(a.n(), a.row_offsets().to_vec(), a.col_indices().to_vec(), values, 0.0)?;
    let balance_residual = imbalance(&rho, a.shift(), p, 0.0);
    Ok(TruncatedFlow { rho, balance_residual })
}

/// Largest node imbalance of `rho` plus the shift flow `c·e^{μ+p_i−p_j}`.
fn imbalance(rho: &SparseMatrix, shift: f64, p: &[f64], mu: f64) -> f64 {
    let n = rho.n();
    let mut out = rho.row_sums();
    let mut inflow = vec![0.0; n];
    for (_, j, v) in rho.triplets() {
        inflow[j] += v;
    }
    if shift > 0.0 {
        let neg: Vec<f64> = p.iter().map(|v| -v).collect();
        let (lp, lm) = (log_sum_exp(p), log_sum_exp(&neg));
        for i in 0..n {
            out[i] += shift * (mu + p[i] + lm).exp();
            inflow[i] += shift * (mu - p[i] + lp).exp();
        }
    }
    out.iter().zip(&inflow).map(|(o, i)| (o - i).abs()).fold(0.0, f64::max)
}

/// Coordinate descent for effective HOTS with flow bounds on the page arcs.
/// Each sweep updates the pages with clamped sums, then the artificial node,
/// then `μ ← μ + log((2α−1)/Σ mid(e^μ A_ij e^{p_i−p_j}, U, L))` followed by
/// the closed forms of `a` and `b`. With no bounds it reduces to
/// [`effective_cd_solve`](crate::effective::effective_cd_solve).
pub fn bounded_hots_solve(
    a: &SparseMatrix,
    bounds: &BoundsSet,
    alpha: f64,
    p0: &AugmentedState,
    opts: &EffectiveOptions,
) -> Result<(ScoreState, EffectiveParams, SolveReport)> {
    bounds.check_for(a)?;
    coordinate_descent(a, p0, alpha, opts, Some(bounds.arcs()))
}

/// Flow of the bounded effective model: clamped page arcs plus the
/// artificial arcs.
pub fn bounded_flow(
    a: &SparseMatrix,
    state: &AugmentedState,
    params: &EffectiveParams,
    bounds: &BoundsSet,
) -> Result<EffectiveFlow> {
    bounds.check_for(a)?;
    let mut flow = crate::effective::effective_flow(a, state, params)?;
    let pages = state.pages();
    let mu = params.lambda.mu;
    let scale = mu.exp();
    let arcs = bounds.arcs();
    let values: Vec<f64> = a
        .triplets()
        .enumerate()
        .map(|(e, (i, j, v))| scale * arcs.clamp(e, v * (pages[i] - pages[j]).exp(), scale))
        .collect();
    flow.rho = SparseMatrix::try_new(a.n(), a.row_offsets().to_vec(), a.col_indices().to_vec(), values, 0.0)?;

    let n = a.n();
    let mut out = flow.rho.row_sums();
    let mut inflow = vec![0.0; n];
    for (_, j, v) in flow.rho.triplets() {
        inflow[j] += v;
    }
    if a.shift() > 0.0 {
        let neg: Vec<f64> = pages.iter().map(|v| -v).collect();
        let (lp, lm) = (log_sum_exp(pages), log_sum_exp(&neg));
        for i in 0..n {
            out[i] += a.shift() * (mu + pages[i] + lm).exp();
            inflow[i] += a.shift() * (mu - pages[i] + lp).exp();
        }
    }
    let mut residual: f64 = 0.0;
    for i in 0..n {
        residual = residual.max((out[i] + flow.to_artificial[i] - inflow[i] - flow.from_artificial[i]).abs());
    }
    let art: f64 = flow.from_artificial.iter().sum::<f64>() - flow.to_artificial.iter().sum::<f64>();
    flow.balance_residual = residual.max(art.abs());
    Ok(flow)
}
