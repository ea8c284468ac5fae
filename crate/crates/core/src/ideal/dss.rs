use super::{check_len, prepare, theta0, IdealOptions};
use crate::cd::{coordinate_update, ExpSums, Incidence};
use crate::error::Result;
use crate::graph::SparseMatrix;
use crate::numeric::sup_dist;
use crate::report::{ScoreState, SolveReport, SolveStatus};

/// Sets coordinate `i` to the exact minimizer of `θ₀` in that coordinate,
/// `p_i = ½log Σ_{j≠i} A_ji e^{p_j} − ½log Σ_{l≠i} A_il e^{−p_l}`, then
/// re-applies the state's normalization. `at` must be the transpose of `a`.
pub fn dss_step(a: &SparseMatrix, at: &SparseMatrix, state: &ScoreState, i: usize) -> Result<ScoreState> {
    check_len(a, &state.p)?;
    if i >= a.n() {
        return Err(crate::HotsError::InvalidParameter(format!(
            "coordinate {i} out of range for n = {}",
            a.n()
        )));
    }
    let inc = Incidence::with_transpose(a, at)?;
    let sums = ExpSums::new(&state.p);
    let v = coordinate_update(&inc, &state.p, i, None, 0.0, Some(&sums), None)?;
    let mut p = state.p.clone();
    p[i] = v;
    Ok(ScoreState::new(p, state.normalization))
}

/// Cyclic coordinate descent on `θ₀` (Gauss–Seidel sweeps over `0..n`).
/// Unlike [`ideal_solve`](super::ideal_solve) this needs no primitivity.
///
/// One reported iteration is one full sweep; the residual is the sup-norm
/// change of the normalized potentials over the sweep.
pub fn dss_solve(a: &SparseMatrix, p0: &ScoreState, opts: &IdealOptions) -> Result<(ScoreState, SolveReport)> {
    check_len(a, &p0.p)?;
    let a = prepare(a, opts)?;
    let inc = Incidence::new(&a);
    inc.require_off_diagonal()?;
    let max_iter = opts.max_iter_for(a.n());

    let mut p = p0.p.clone();
    opts.normalization.apply(&mut p);
    let mut thetas = vec![theta0(&a, &p)?];
    let mut residuals = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut before = p.clone();

    for _ in 0..max_iter {
        let mut sums = ExpSums::new(&p);
        for i in 0..p.len() {
            let v = coordinate_update(&inc, &p, i, None, 0.0, Some(&sums), None)?;
            sums.replace(p[i], v);
            p[i] = v;
        }
        opts.normalization.apply(&mut p);
        let r = sup_dist(&p, &before);
        residuals.push(r);
        thetas.push(theta0(&a, &p)?);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Normalization;

    #[test]
    fn one_sweep_on_two_cycle() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let at = a.explicit_transpose();
        let s = ScoreState::new(vec![0.0, 0.0], Normalization::None);
        let s = dss_step(&a, &at, &s, 0).unwrap();
        let s = dss_step(&a, &at, &s, 1).unwrap();
        // p1 = ½log2, then p2 = ½log(e^{p1}) − ½log(2e^{−p1}) = p1 − ½log2 = 0
        assert!((s.p[0] - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(s.p[1].abs() < 1e-15);
    }
}
