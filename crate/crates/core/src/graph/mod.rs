//! Sparse nonnegative matrices in CSR form and the matrix–vector kernels the
//! solvers are built on.
//!
//! A [`SparseMatrix`] stores the pattern of `A` together with an optional
//! scalar `shift`: the logical entry `(i, j)` is `A[i][j] + shift`. The shift
//! is how the uniformly perturbed matrix `A + c·11ᵀ` is represented without
//! materializing `n²` entries.

mod connectivity;
mod io;

pub use connectivity::{is_primitive_symmetrized, is_strongly_connected};
pub use io::{from_edge_list, from_matrix_market, write_edge_list, EdgeListOptions};

use rayon::prelude::*;

use crate::error::{HotsError, Result};
use crate::numeric::log_sum_exp;

/// Below this many stored entries the kernels stay on the calling thread.
const PAR_MIN_NNZ: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    shift: f64,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, checking every invariant.
    pub fn try_new(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
        shift: f64,
    ) -> Result<Self> {
        if row_offsets.len() != n + 1 {
            return Err(HotsError::DimensionMismatch {
                expected: n + 1,
                got: row_offsets.len(),
            });
        }
        if col_indices.len() != values.len() {
            return Err(HotsError::DimensionMismatch {
                expected: col_indices.len(),
                got: values.len(),
            });
        }
        if row_offsets[0] != 0 || row_offsets[n] != col_indices.len() {
            return Err(HotsError::Domain("row offsets do not span the entry arrays".into()));
        }
        for i in 0..n {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(HotsError::Domain(format!("row offsets decrease at row {i}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.iter().any(|&j| j >= n) {
                return Err(HotsError::Domain(format!("column index out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HotsError::Domain(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(HotsError::Domain(format!("entry {v} is not a finite nonnegative value")));
        }
        check_shift(shift)?;
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
            shift,
        })
    }

    /// Builds a canonical matrix from `(row, col, value)` triplets. Repeated
    /// coordinates are summed.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= n || j >= n {
                return Err(HotsError::Domain(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(HotsError::Domain(format!("entry ({i}, {j}) has weight {v}")));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
            shift: 0.0,
        })
    }

    /// Dense constructor; exact zeros are left out of the pattern.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(HotsError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }

    pub fn with_shift(mut self, shift: f64) -> Result<Self> {
        check_shift(shift)?;
        self.shift = shift;
        Ok(self)
    }

    /// Returns a copy with `eps` added to every diagonal entry. The optimal
    /// scaling does not depend on the diagonal, so this can be used to make an
    /// irreducible but imprimitive matrix primitive.
    pub fn add_diagonal(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(HotsError::InvalidParameter(format!("diagonal increment {eps}")));
        }
        let triplets = self.triplets().chain((0..self.n).map(|i| (i, i, eps)));
        Self::from_triplets(self.n, triplets)?.with_shift(self.shift)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and stored values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Stored value at `(i, j)`, zero when absent. The shift is not included.
    pub fn stored(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Logical entry `(i, j)`: stored value plus shift.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.stored(i, j) + self.shift
    }

    /// Dense copy of the logical matrix. Test and diagnostic use only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![self.shift; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            dense[i][j] += v;
        }
        dense
    }

    /// Logical row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).1.iter().sum::<f64>() + self.shift * self.n as f64)
            .collect()
    }

    /// Rows of the logical matrix without a positive entry.
    pub fn zero_rows(&self) -> Vec<usize> {
        if self.shift > 0.0 {
            return Vec::new();
        }
        (0..self.n)
            .filter(|&i| !self.row(i).1.iter().any(|&v| v > 0.0))
            .collect()
    }

    /// Columns of the logical matrix without a positive entry.
    pub fn zero_cols(&self) -> Vec<usize> {
        if self.shift > 0.0 {
            return Vec::new();
        }
        let mut seen = vec![false; self.n];
        for (&j, &v) in self.col_indices.iter().zip(&self.values) {
            if v > 0.0 {
                seen[j] = true;
            }
        }
        (0..self.n).filter(|&j| !seen[j]).collect()
    }

    /// Fails with a structural error when a logical row or column is empty.
    pub fn require_nonzero_rows_and_cols(&self) -> Result<()> {
        self.require_nonzero_rows()?;
        self.require_nonzero_cols()
    }

    pub fn require_nonzero_rows(&self) -> Result<()> {
        match self.zero_rows().first() {
            Some(i) => Err(HotsError::Structural(format!("row {i} has no positive entry"))),
            None => Ok(()),
        }
    }

    pub fn require_nonzero_cols(&self) -> Result<()> {
        match self.zero_cols().first() {
            Some(j) => Err(HotsError::Structural(format!("column {j} has no positive entry"))),
            None => Ok(()),
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(HotsError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn parallel(&self) -> bool {
        self.nnz() >= PAR_MIN_NNZ && rayon::current_num_threads() > 1
    }

    /// `A·x + shift·(Σx)·1`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// Allocation-free [`apply`](Self::apply); lengths are the caller's
    /// responsibility.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let row_dot = |i: usize| -> f64 {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
        };
        if self.parallel() {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row_dot(i));
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = row_dot(i);
            }
        }
        if self.shift != 0.0 {
            let extra = self.shift * x.iter().sum::<f64>();
            out.iter_mut().for_each(|o| *o += extra);
        }
    }

    /// `Aᵀ·x + shift·(Σx)·1`, by scattering over the rows of `A`. No
    /// transposed structure is built.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut out = vec![0.0; self.n];
        self.apply_transpose_into(x, &mut out);
        Ok(out)
    }

    pub fn apply_transpose_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let scatter = |rows: std::ops::Range<usize>, acc: &mut [f64]| {
            for i in rows {
                let xi = x[i];
                let (cols, vals) = self.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    acc[j] += v * xi;
                }
            }
        };
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.parallel() {
            // One accumulation buffer per contiguous block of rows, merged in
            // block order so that the result only depends on the thread count.
            let blocks = rayon::current_num_threads();
            let step = self.n.div_ceil(blocks);
            let partials: Vec<Vec<f64>> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut acc = vec![0.0; self.n];
                    let lo = (b * step).min(self.n);
                    let hi = ((b + 1) * step).min(self.n);
                    scatter(lo..hi, &mut acc);
                    acc
                })
                .collect();
            for acc in &partials {
                for (o, a) in out.iter_mut().zip(acc) {
                    *o += a;
                }
            }
        } else {
            scatter(0..self.n, out);
        }
        if self.shift != 0.0 {
            let extra = self.shift * x.iter().sum::<f64>();
            out.iter_mut().for_each(|o| *o += extra);
        }
    }

    /// `log(A·e^q)` elementwise, evaluated with max-subtraction. Rows whose
    /// sum underflows are recomputed with an exact per-row log-sum-exp.
    /// Empty logical rows yield `-inf`.
    pub fn log_apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_len(q)?;
        let m = finite_max(q);
        let y: Vec<f64> = q.iter().map(|&v| (v - m).exp()).collect();
        let mut z = vec![0.0; self.n];
        self.apply_into(&y, &mut z);
        let mut shift_lse = None;
        for (i, zi) in z.iter_mut().enumerate() {
            if zi.is_normal() {
                *zi = zi.ln() + m;
            } else {
                let (cols, vals) = self.row(i);
                let mut terms: Vec<f64> = cols
                    .iter()
                    .zip(vals)
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(&j, &v)| v.ln() + q[j])
                    .collect();
                if self.shift > 0.0 {
                    let s = *shift_lse.get_or_insert_with(|| log_sum_exp(q));
                    terms.push(self.shift.ln() + s);
                }
                *zi = log_sum_exp(&terms);
            }
        }
        Ok(z)
    }

    /// `log(Aᵀ·e^q)` elementwise; same stabilization as
    /// [`log_apply`](Self::log_apply).
    pub fn log_apply_transpose(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_len(q)?;
        let m = finite_max(q);
        let y: Vec<f64> = q.iter().map(|&v| (v - m).exp()).collect();
        let mut z = vec![0.0; self.n];
        self.apply_transpose_into(&y, &mut z);
        if z.iter().all(|v| v.is_normal()) {
            z.iter_mut().for_each(|v| *v = v.ln() + m);
            return Ok(z);
        }
        // Exact two-pass fallback: column maxima, then shifted sums.
        let shift_term = (self.shift > 0.0).then(|| self.shift.ln() + log_sum_exp(q));
        let mut colmax = vec![f64::NEG_INFINITY; self.n];
        for (i, j, v) in self.triplets() {
            if v > 0.0 {
                colmax[j] = colmax[j].max(v.ln() + q[i]);
            }
        }
        if let Some(t) = shift_term {
            colmax.iter_mut().for_each(|c| *c = c.max(t));
        }
        let mut sums = vec![0.0; self.n];
        for (i, j, v) in self.triplets() {
            if v > 0.0 {
                sums[j] += (v.ln() + q[i] - colmax[j]).exp();
            }
        }
        Ok(sums
            .iter()
            .zip(&colmax)
            .map(|(&s, &c)| {
                if c == f64::NEG_INFINITY {
                    return c;
                }
                let s = s + shift_term.map_or(0.0, |t| (t - c).exp());
                s.ln() + c
            })
            .collect())
    }

    /// Canonical CSR of `Aᵀ` with the same shift.
    pub fn explicit_transpose(&self) -> SparseMatrix {
        self.explicit_transpose_with_map().0
    }

    /// Transpose plus, for each stored entry of `Aᵀ`, the index of the same
    /// entry in `A`'s arrays.
    pub fn explicit_transpose_with_map(&self) -> (SparseMatrix, Vec<usize>) {
        let n = self.n;
        let mut row_offsets = vec![0usize; n + 1];
        for &j in &self.col_indices {
            row_offsets[j + 1] += 1;
        }
        for j in 0..n {
            row_offsets[j + 1] += row_offsets[j];
        }
        let mut next = row_offsets.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut origin = vec![0usize; self.nnz()];
        // Rows are visited in increasing order, so each transposed row comes
        // out sorted.
        for i in 0..n {
            for e in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[e];
                let k = next[j];
                col_indices[k] = i;
                values[k] = self.values[e];
                origin[k] = e;
                next[j] += 1;
            }
        }
        let t = SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
            shift: self.shift,
        };
        (t, origin)
    }
}

fn check_shift(shift: f64) -> Result<()> {
    if !(shift >= 0.0) || !shift.is_finite() {
        return Err(HotsError::Domain(format!("shift {shift} must be finite and nonnegative")));
    }
    Ok(())
}

fn finite_max(q: &[f64]) -> f64 {
    let m = q.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if m.is_finite() {
        m
    } else {
        0.0
    }
}

/// Structural summary of a loaded graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMeta {
    pub n: usize,
    /// Stored-edge count.
    pub m: usize,
    /// `dangling[i]` is true iff row `i` of the stored pattern is empty.
    pub dangling: Vec<bool>,
    pub labels: Option<Vec<String>>,
}

impl GraphMeta {
    pub fn from_matrix(a: &SparseMatrix) -> Self {
        let dangling = (0..a.n()).map(|i| a.row(i).0.is_empty()).collect();
        Self {
            n: a.n(),
            m: a.nnz(),
            dangling,
            labels: None,
        }
    }

    pub fn dangling_count(&self) -> usize {
        self.dangling.iter().filter(|&&d| d).count()
    }
}
