use super::{check_len, raw_step};
use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;
use crate::numeric::{centered_sup, dot};
use crate::report::SolveStatus;
use crate::spectral::{dense_eigenvalues, dominant_modulus, modulus_without_unit, RateEstimate};

/// Largest size accepted by the dense eigenvalue route.
pub const DENSE_LIMIT: usize = 2000;

/// How far `f(v) − v` may be from a constant for `v` to count as a fixed point.
const FIXED_POINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdealRateMethod {
    #[default]
    Dense,
    Power,
}

/// Pieces of the Jacobian `P` of `f` at `v`, rescaled so nothing overflows.
/// `P x = ½(Aᵀ(w⁺∘x)/d⁺ + A(w⁻∘x)/d⁻)` with `w^± = e^{±v − max}` and
/// `d⁺ = Aᵀw⁺`, `d⁻ = Aw⁻`.
struct Jacobian<'a> {
    a: &'a SparseMatrix,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
    d_plus: Vec<f64>,
    d_minus: Vec<f64>,
}

impl<'a> Jacobian<'a> {
    fn new(a: &'a SparseMatrix, v: &[f64]) -> Result<Self> {
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bottom = v.iter().copied().fold(f64::INFINITY, f64::min);
        let w_plus: Vec<f64> = v.iter().map(|x| (x - top).exp()).collect();
        let w_minus: Vec<f64> = v.iter().map(|x| (bottom - x).exp()).collect();
        let d_plus = a.apply_transpose(&w_plus)?;
        let d_minus = a.apply(&w_minus)?;
        if d_plus.iter().chain(&d_minus).any(|d| !(*d > 0.0)) {
            return Err(HotsError::Domain(
                "potentials too spread to evaluate the Jacobian in double precision".into(),
            ));
        }
        Ok(Self {
            a,
            w_plus,
            w_minus,
            d_plus,
            d_minus,
        })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xp: Vec<f64> = x.iter().zip(&self.w_plus).map(|(a, b)| a * b).collect();
        let xm: Vec<f64> = x.iter().zip(&self.w_minus).map(|(a, b)| a * b).collect();
        let up = self.a.apply_transpose(&xp).expect("dimension checked");
        let um = self.a.apply(&xm).expect("dimension checked");
        (0..x.len())
            .map(|i| 0.5 * (up[i] / self.d_plus[i] + um[i] / self.d_minus[i]))
            .collect()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let yp: Vec<f64> = y.iter().zip(&self.d_plus).map(|(a, b)| a / b).collect();
        let ym: Vec<f64> = y.iter().zip(&self.d_minus).map(|(a, b)| a / b).collect();
        let up = self.a.apply(&yp).expect("dimension checked");
        let um = self.a.apply_transpose(&ym).expect("dimension checked");
        (0..y.len())
            .map(|j| 0.5 * (self.w_plus[j] * up[j] + self.w_minus[j] * um[j]))
            .collect()
    }

    fn dense(&self) -> Vec<Vec<f64>> {
        let m = self.a.to_dense();
        let n = m.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        0.5 * (m[j][i] * self.w_plus[j] / self.d_plus[i]
                            + m[i][j] * self.w_minus[j] / self.d_minus[i])
                    })
                    .collect()
            })
            .collect()
    }
}

fn require_fixed_point(a: &SparseMatrix, v: &[f64]) -> Result<()> {
    check_len(a, v)?;
    let (fv, _) = raw_step(a, v)?;
    let diff: Vec<f64> = fv.iter().zip(v).map(|(x, y)| x - y).collect();
    let r = centered_sup(&diff);
    if r > FIXED_POINT_TOL {
        return Err(HotsError::Precondition(format!(
            "potentials are not a fixed point (residual {r:.3e})"
        )));
    }
    Ok(())
}

/// The Jacobian `P` of the ideal HOTS map at `v`, as a dense row-major matrix.
/// `P` is row-stochastic.
pub fn ideal_transition_dense(a: &SparseMatrix, v: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_len(a, v)?;
    if a.n() > DENSE_LIMIT {
        return Err(HotsError::InvalidParameter(format!(
            "dense Jacobian limited to n <= {DENSE_LIMIT}, got {}",
            a.n()
        )));
    }
    Ok(Jacobian::new(a, v)?.dense())
}

/// Asymptotic linear rate `|λ₂(P)|` of the ideal HOTS iteration at the fixed
/// point `v`.
///
/// The power route deflates the unit eigenvalue with the left Perron vector
/// `π` of `P` and runs block orthogonal iteration on `x ↦ Px − (πᵀPx)·1`.
/// At an exact fixed point `π` is the normalized node throughput, which is
/// used to start its power iteration.
pub fn rate_ideal(a: &SparseMatrix, v: &[f64], method: IdealRateMethod) -> Result<RateEstimate> {
    require_fixed_point(a, v)?;
    let n = a.n();
    match method {
        IdealRateMethod::Dense => {
            let p = ideal_transition_dense(a, v)?;
            Ok(RateEstimate {
                rate: modulus_without_unit(&dense_eigenvalues(&p)),
                status: SolveStatus::Converged,
                iterations: 0,
            })
        }
        IdealRateMethod::Power => {
            let jac = Jacobian::new(a, v)?;
            let pi = left_perron(&jac, a, v)?;
            let op = |x: &[f64]| {
                let mut y = jac.apply(x);
                let c = dot(&pi, &y);
                y.iter_mut().for_each(|t| *t -= c);
                y
            };
            Ok(dominant_modulus(op, n, 4, 1e-10, 20_000, 0x5eed))
        }
    }
}

/// Left Perron vector of `P`, normalized to unit sum, by lazy power iteration
/// `π ← ½(π + Pᵀπ)`.
fn left_perron(jac: &Jacobian<'_>, a: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    // throughput e^{−v_i}(Aᵀe^v)_i
    let lt = a.log_apply_transpose(v)?;
    let logs: Vec<f64> = lt.iter().zip(v).map(|(t, x)| t - x).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pi: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    for _ in 0..20_000 {
        let pt = jac.apply_transpose(&pi);
        let mut next: Vec<f64> = pi.iter().zip(&pt).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < 1e-14 {
            break;
        }
    }
    Ok(pi)
}
