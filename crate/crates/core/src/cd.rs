//! Exact coordinate updates shared by the DSS, truncated-scaling and
//! effective-model coordinate descent solvers.
//!
//! Every update has the same shape: the new potential of node `i` is
//! `p_i + ½·log(in_i / out_i)`, where `in_i` and `out_i` are the incoming and
//! outgoing flows of `i` measured relative to `e^{p_i}`, diagonal excluded
//! (a loop contributes equally to both sides and cancels from the exact
//! minimizer). The solvers differ only in how each arc's flow is clamped and
//! in extra terms for the artificial node. When some arc of `i` carries a
//! nontrivial bound, that closed form is only exact while no clamp changes
//! state, so the update instead solves the piecewise balance equation.

use std::borrow::Cow;

use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::log_sum_exp;

/// Per-arc lower/upper flow bounds aligned with a matrix's stored entries.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArcBounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl ArcBounds<'_> {
    /// Clamped flow of entry `e` whose unclamped flow is `f`, where the
    /// bounds apply to `scale·f`. Unbounded entries pass through untouched so
    /// that trivial bounds reproduce the unbounded solvers bit for bit.
    #[inline]
    pub fn clamp(&self, e: usize, f: f64, scale: f64) -> f64 {
        let (lo, hi) = (self.lower[e], self.upper[e]);
        if lo == 0.0 && hi == f64::INFINITY {
            f
        } else {
            (scale * f).min(hi).max(lo) / scale
        }
    }

    #[inline]
    fn clamp_log(&self, e: usize, lf: f64, log_scale: f64) -> f64 {
        let (lo, hi) = (self.lower[e], self.upper[e]);
        if lo == 0.0 && hi == f64::INFINITY {
            lf
        } else {
            (lf + log_scale).min(hi.ln()).max(lo.ln()) - log_scale
        }
    }
}

/// Arc term of the dual once the bound multipliers are eliminated, at log
/// flow `t`: `e^t` inside `[lo, hi]`, continued linearly in `t` outside.
pub(crate) fn reduced_arc_value(t: f64, lo: f64, hi: f64) -> f64 {
    let x = t.exp();
    if x < lo {
        lo * (1.0 - lo.ln() + t)
    } else if x > hi {
        hi * (1.0 + t - hi.ln())
    } else {
        x
    }
}

/// `Σ e^{p_j}` and `Σ e^{−p_j}` over a set of coordinates, kept current under
/// single-coordinate changes. Needed for the shift term `c·11ᵀ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExpSums {
    pub plus: f64,
    pub minus: f64,
}

impl ExpSums {
    pub fn new(p: &[f64]) -> Self {
        Self {
            plus: p.iter().map(|v| v.exp()).sum(),
            minus: p.iter().map(|v| (-v).exp()).sum(),
        }
    }

    pub fn replace(&mut self, old: f64, new: f64) {
        self.plus += new.exp() - old.exp();
        self.minus += (-new).exp() - (-old).exp();
    }
}

/// A matrix together with its explicit transpose, for walking the incoming
/// arcs of a node. `origin[k]` maps entry `k` of the transpose back to `A`.
#[derive(Debug, Clone)]
pub(crate) struct Incidence<'a> {
    pub a: &'a SparseMatrix,
    pub at: Cow<'a, SparseMatrix>,
    pub origin: Vec<usize>,
}

impl<'a> Incidence<'a> {
    pub fn new(a: &'a SparseMatrix) -> Self {
        let (at, origin) = a.explicit_transpose_with_map();
        Self {
            a,
            at: Cow::Owned(at),
            origin,
        }
    }

    /// Borrows a caller-supplied transpose. Without the entry map this
    /// incidence can only be used unbounded.
    pub fn with_transpose(a: &'a SparseMatrix, at: &'a SparseMatrix) -> Result<Self> {
        if at.n() != a.n() || at.nnz() != a.nnz() {
            return Err(HotsError::DimensionMismatch {
                expected: a.nnz(),
                got: at.nnz(),
            });
        }
        Ok(Self {
            a,
            at: Cow::Borrowed(at),
            origin: Vec::new(),
        })
    }

    /// Fails when some node has no off-diagonal incoming or outgoing arc, so
    /// that the coordinate update would take the log of zero.
    pub fn require_off_diagonal(&self) -> Result<()> {
        if self.a.shift() > 0.0 && self.a.n() > 1 {
            return Ok(());
        }
        for i in 0..self.a.n() {
            if !has_off_diagonal(self.a, i) {
                return Err(HotsError::Structural(format!(
                    "node {i} has no outgoing arc to another node"
                )));
            }
            if !has_off_diagonal(&self.at, i) {
                return Err(HotsError::Structural(format!(
                    "node {i} has no incoming arc from another node"
                )));
            }
        }
        Ok(())
    }

    /// `(in_i, out_i)` relative to `e^{p_i}` over the stored pattern.
    pub fn relative_sums(
        &self,
        p: &[f64],
        i: usize,
        bounds: Option<ArcBounds<'_>>,
        log_scale: f64,
    ) -> (f64, f64) {
        let scale = log_scale.exp();
        let inflow = match bounds {
            None => in_sum(&self.at, p, i, |_, f| f),
            Some(b) => in_sum(&self.at, p, i, |k, f| b.clamp(self.origin[k], f, scale)),
        };
        let outflow = match bounds {
            None => out_sum(self.a, p, i, |_, f| f),
            Some(b) => out_sum(self.a, p, i, |e, f| b.clamp(e, f, scale)),
        };
        (inflow, outflow)
    }

    /// Log-domain version of [`relative_sums`](Self::relative_sums), used when
    /// the direct sums over- or underflow.
    pub fn log_relative_sums(
        &self,
        p: &[f64],
        i: usize,
        bounds: Option<ArcBounds<'_>>,
        log_scale: f64,
    ) -> (f64, f64) {
        let mut terms = Vec::new();
        let (cols, vals) = self.at.row(i);
        let base = self.at.row_offsets()[i];
        for (k, (&j, &v)) in cols.iter().zip(vals).enumerate() {
            if j != i && v > 0.0 {
                let lf = v.ln() + p[j] - p[i];
                terms.push(match bounds {
                    None => lf,
                    Some(b) => b.clamp_log(self.origin[base + k], lf, log_scale),
                });
            }
        }
        let lin = log_sum_exp(&terms);
        terms.clear();
        let (cols, vals) = self.a.row(i);
        let base = self.a.row_offsets()[i];
        for (k, (&l, &v)) in cols.iter().zip(vals).enumerate() {
            if l != i && v > 0.0 {
                let lf = v.ln() + p[i] - p[l];
                terms.push(match bounds {
                    None => lf,
                    Some(b) => b.clamp_log(base + k, lf, log_scale),
                });
            }
        }
        (lin, log_sum_exp(&terms))
    }
}

fn has_off_diagonal(a: &SparseMatrix, i: usize) -> bool {
    let (cols, vals) = a.row(i);
    cols.iter().zip(vals).any(|(&j, &v)| j != i && v > 0.0)
}

/// `Σ_{l≠i} clamp(A_il e^{p_i−p_l})`; the closure receives the entry index.
#[inline]
pub(crate) fn out_sum(
    a: &SparseMatrix,
    p: &[f64],
    i: usize,
    clamp: impl Fn(usize, f64) -> f64,
) -> f64 {
    let base = a.row_offsets()[i];
    let (cols, vals) = a.row(i);
    let pi = p[i];
    let mut s = 0.0;
    for (k, (&l, &v)) in cols.iter().zip(vals).enumerate() {
        if l != i {
            s += clamp(base + k, v * (pi - p[l]).exp());
        }
    }
    s
}

/// `Σ_{j≠i} clamp(A_ji e^{p_j−p_i})` walking row `i` of the transpose; the
/// closure receives the transpose's entry index.
#[inline]
pub(crate) fn in_sum(
    at: &SparseMatrix,
    p: &[f64],
    i: usize,
    clamp: impl Fn(usize, f64) -> f64,
) -> f64 {
    let base = at.row_offsets()[i];
    let (cols, vals) = at.row(i);
    let pi = p[i];
    let mut s = 0.0;
    for (k, (&j, &v)) in cols.iter().zip(vals).enumerate() {
        if j != i {
            s += clamp(base + k, v * (p[j] - pi).exp());
        }
    }
    s
}

/// Extra log-flows entering and leaving node `i` besides the matrix arcs,
/// both relative to `e^{p_i}`: the artificial node in the effective model.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExtraArcs {
    pub log_in: f64,
    pub log_out: f64,
}

/// Exact minimizing update of coordinate `i`. Returns the new value; the
/// caller owns `p` and the running [`ExpSums`].
pub(crate) fn coordinate_update(
    inc: &Incidence<'_>,
    p: &[f64],
    i: usize,
    bounds: Option<ArcBounds<'_>>,
    log_scale: f64,
    sums: Option<&ExpSums>,
    extra: Option<ExtraArcs>,
) -> Result<f64> {
    let c = inc.a.shift();
    let shift_terms = match sums {
        Some(s) if c > 0.0 => {
            let (ep, em) = (p[i].exp(), (-p[i]).exp());
            // Σ_{j≠i} c·e^{p_j−p_i} and Σ_{l≠i} c·e^{p_i−p_l}
            Some((c * ((s.plus - ep).max(0.0) * em), c * ((s.minus - em).max(0.0) * ep)))
        }
        _ => None,
    };
    let (mut free_in, mut free_out) = shift_terms.unwrap_or((0.0, 0.0));
    if let Some(x) = extra {
        free_in += x.log_in.exp();
        free_out += x.log_out.exp();
    }
    if let Some(b) = bounds {
        if inc.has_bounded_arc(b, i) {
            if let Some(delta) = bounded_delta(inc, p, i, b, log_scale, free_in, free_out)? {
                return Ok(p[i] + delta);
            }
        }
    }
    let (mut fin, mut fout) = inc.relative_sums(p, i, bounds, log_scale);
    fin += free_in;
    fout += free_out;
    let ok = |v: f64| v > 0.0 && v.is_finite();
    let delta = if ok(fin) && ok(fout) {
        0.5 * (fin.ln() - fout.ln())
    } else {
        let (mut lin, mut lout) = inc.log_relative_sums(p, i, bounds, log_scale);
        if let Some((si, so)) = shift_terms {
            lin = crate::numeric::log_add_exp(lin, si.ln());
            lout = crate::numeric::log_add_exp(lout, so.ln());
        }
        if let Some(x) = extra {
            lin = crate::numeric::log_add_exp(lin, x.log_in);
            lout = crate::numeric::log_add_exp(lout, x.log_out);
        }
        if lin == f64::NEG_INFINITY || lout == f64::NEG_INFINITY {
            return Err(HotsError::Structural(format!(
                "node {i} has an empty {} side",
                if lin == f64::NEG_INFINITY { "incoming" } else { "outgoing" }
            )));
        }
        0.5 * (lin - lout)
    };
    let v = p[i] + delta;
    if !v.is_finite() {
        return Err(HotsError::Domain(format!("coordinate {i} left the finite range")));
    }
    Ok(v)
}

impl Incidence<'_> {
    fn has_bounded_arc(&self, b: ArcBounds<'_>, i: usize) -> bool {
        let bounded = |e: usize| b.lower[e] > 0.0 || b.upper[e] < f64::INFINITY;
        let (lo, hi) = (self.a.row_offsets()[i], self.a.row_offsets()[i + 1]);
        let (tlo, thi) = (self.at.row_offsets()[i], self.at.row_offsets()[i + 1]);
        (lo..hi).any(bounded) || (tlo..thi).any(|k| bounded(self.origin[k]))
    }
}

/// One arc of node `i` seen from the move `p_i → p_i + δ`: scaled flow
/// `x·e^{±δ}` clamped to `[lo, hi]`, with `+` for outgoing arcs.
#[derive(Debug, Clone, Copy)]
struct MovingArc {
    x: f64,
    lo: f64,
    hi: f64,
    out: bool,
}

impl MovingArc {
    /// Clamped flow after the move, given `g = e^δ`.
    #[inline]
    fn flow(&self, g: f64) -> f64 {
        let f = if self.out { self.x * g } else { self.x / g };
        f.min(self.hi).max(self.lo)
    }

    #[inline]
    fn state(&self, g: f64) -> (bool, bool) {
        let f = if self.out { self.x * g } else { self.x / g };
        (f > self.lo, f < self.hi)
    }

    /// Values of `δ` where the arc enters or leaves a bound.
    fn breakpoints(&self, into: &mut Vec<f64>) {
        let sign = if self.out { 1.0 } else { -1.0 };
        if self.lo > 0.0 {
            into.push(sign * (self.lo / self.x).ln());
        }
        if self.hi < f64::INFINITY {
            into.push(sign * (self.hi / self.x).ln());
        }
    }
}

/// Exact minimizer of the reduced dual along coordinate `i`: the root of the
/// nondecreasing net outflow `D(δ)`. `free_in` and `free_out` are unclamped
/// flows relative to `e^{p_i}`. Returns `None` when the flows over- or
/// underflow, leaving the caller's log-domain closed form in charge.
fn bounded_delta(
    inc: &Incidence<'_>,
    p: &[f64],
    i: usize,
    b: ArcBounds<'_>,
    log_scale: f64,
    free_in: f64,
    free_out: f64,
) -> Result<Option<f64>> {
    thread_local! {
        static ARCS: std::cell::RefCell<Vec<MovingArc>> = const { std::cell::RefCell::new(Vec::new()) };
    }
    ARCS.with_borrow_mut(|arcs| {
        arcs.clear();
        let scale = log_scale.exp();
        let (cols, vals) = inc.a.row(i);
        let base = inc.a.row_offsets()[i];
        for (k, (&l, &v)) in cols.iter().zip(vals).enumerate() {
            if l != i && v > 0.0 {
                let (lo, hi) = (b.lower[base + k], b.upper[base + k]);
                arcs.push(MovingArc { x: scale * v * (p[i] - p[l]).exp(), lo, hi, out: true });
            }
        }
        let (cols, vals) = inc.at.row(i);
        let base = inc.at.row_offsets()[i];
        for (k, (&j, &v)) in cols.iter().zip(vals).enumerate() {
            if j != i && v > 0.0 {
                let e = inc.origin[base + k];
                arcs.push(MovingArc { x: scale * v * (p[j] - p[i]).exp(), lo: b.lower[e], hi: b.upper[e], out: false });
            }
        }
        let (fin, fout) = (scale * free_in, scale * free_out);
        if !(fin.is_finite() && fout.is_finite()) || arcs.iter().any(|a| !(a.x > 0.0 && a.x.is_finite())) {
            return Ok(None);
        }
        solve_piecewise(arcs, fin, fout, i).map(Some)
    })
}

fn solve_piecewise(arcs: &[MovingArc], fin: f64, fout: f64, i: usize) -> Result<f64> {
    // usually no clamp changes state, and then the root on the current piece is exact
    let delta = piece_root(arcs, fin, fout, 1.0);
    if delta.is_finite() {
        let g = delta.exp();
        if arcs.iter().all(|a| a.state(1.0) == a.state(g)) {
            return Ok(delta);
        }
    }

    let net = |delta: f64| {
        let g = delta.exp();
        let arcs_net: f64 = arcs.iter().map(|a| if a.out { a.flow(g) } else { -a.flow(g) }).sum();
        arcs_net + fout * g - fin / g
    };
    let magnitude: f64 = arcs.iter().map(|a| a.flow(1.0)).sum::<f64>() + fin + fout;
    let slack = 1e-12 * magnitude;
    // limits of D at ±∞; a finite limit of the wrong sign means no minimizer
    let grows = fout > 0.0 || arcs.iter().any(|a| a.out && a.hi == f64::INFINITY);
    let falls = fin > 0.0 || arcs.iter().any(|a| !a.out && a.hi == f64::INFINITY);
    let sup: f64 = arcs.iter().map(|a| if a.out { a.hi } else { -a.lo }).sum();
    let inf: f64 = arcs.iter().map(|a| if a.out { a.lo } else { -a.hi }).sum();
    if (!grows && sup < -slack) || (!falls && inf > slack) {
        return Err(HotsError::Domain(format!(
            "coordinate {i} has no minimizer: its flow bounds cannot be balanced"
        )));
    }
    if net(0.0).abs() <= slack {
        return Ok(0.0);
    }

    // segment [left, right] between consecutive breakpoints bracketing the root
    let mut points = Vec::with_capacity(2 * arcs.len());
    for a in arcs {
        a.breakpoints(&mut points);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let k = points.partition_point(|&t| net(t) < 0.0);
    let left = if k == 0 { f64::NEG_INFINITY } else { points[k - 1] };
    let right = points.get(k).copied().unwrap_or(f64::INFINITY);
    let probe = match (left.is_finite(), right.is_finite()) {
        (true, true) => 0.5 * (left + right),
        (true, false) => left + 1.0,
        (false, true) => right - 1.0,
        (false, false) => 0.0,
    };
    let delta = piece_root(arcs, fin, fout, probe.exp());
    // a flat piece has every point as a minimizer; stay closest to zero
    let delta = if delta.is_nan() { 0.0 } else { delta };
    Ok(delta.max(left).min(right))
}

/// Root of `D` continued from the piece containing `δ = log g`, where
/// `D(δ) = co·e^δ + kc − ci·e^{−δ}`. NaN when `D` is constant there.
fn piece_root(arcs: &[MovingArc], fin: f64, fout: f64, g: f64) -> f64 {
    let (mut co, mut ci, mut kc) = (fout, fin, 0.0);
    for a in arcs {
        let f = a.flow(g);
        let free = f > a.lo && f < a.hi;
        match (free, a.out) {
            (true, true) => co += a.x,
            (true, false) => ci += a.x,
            (false, true) => kc += f,
            (false, false) => kc -= f,
        }
    }
    if co > 0.0 && ci > 0.0 {
        let root = (kc * kc + 4.0 * co * ci).sqrt();
        let y = if kc >= 0.0 { 2.0 * ci / (kc + root) } else { (root - kc) / (2.0 * co) };
        y.ln()
    } else if co > 0.0 {
        if kc < 0.0 { (-kc / co).ln() } else { f64::NEG_INFINITY }
    } else if ci > 0.0 {
        if kc > 0.0 { (ci / kc).ln() } else { f64::INFINITY }
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_sums_skip_the_diagonal() {
        let a = SparseMatrix::from_dense(&[vec![5.0, 1.0], vec![2.0, 7.0]]).unwrap();
        let inc = Incidence::new(&a);
        let p = [0.3, -0.2];
        let (fin, fout) = inc.relative_sums(&p, 0, None, 0.0);
        assert!((fin - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((fout - 0.5f64.exp()).abs() < 1e-15);
        let (lin, lout) = inc.log_relative_sums(&p, 0, None, 0.0);
        assert!((lin.exp() - fin).abs() < 1e-14 && (lout.exp() - fout).abs() < 1e-14);
    }

    #[test]
    fn clamping_respects_scale() {
        let lower = [0.0, 1.0];
        let upper = [0.5, f64::INFINITY];
        let b = ArcBounds {
            lower: &lower,
            upper: &upper,
        };
        assert_eq!(b.clamp(0, 2.0, 1.0), 0.5);
        assert_eq!(b.clamp(0, 2.0, 0.5), 1.0);
        assert_eq!(b.clamp(1, 0.25, 2.0), 0.5);
        assert!((b.clamp_log(0, 2f64.ln(), 0.0) - 0.5f64.ln()).abs() < 1e-15);
    }
}
