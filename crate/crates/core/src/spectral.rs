//! Eigenvalue tools used by the convergence-rate diagnostics.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::{dot, norm2};
use crate::report::SolveStatus;

/// A spectral rate together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// All eigenvalues of a dense row-major square matrix.
pub fn dense_eigenvalues(rows: &[Vec<f64>]) -> Vec<Complex<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    m.complex_eigenvalues().iter().copied().collect()
}

/// Removes the eigenvalue closest to 1 and returns the largest modulus of
/// the rest (zero for a 1x1 spectrum).
pub fn modulus_without_unit(eigs: &[Complex<f64>]) -> f64 {
    let unit = eigs
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1 - Complex::new(1.0, 0.0)).norm();
            let db = (b.1 - Complex::new(1.0, 0.0)).norm();
            da.total_cmp(&db)
        })
        .map(|(k, _)| k);
    eigs.iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != unit)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max)
}

/// Orthonormalizes the columns in place (modified Gram–Schmidt, applied
/// twice). Columns that collapse are replaced by fresh random directions.
fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for k in 0..cols.len() {
        for attempt in 0..3 {
            for _ in 0..2 {
                for j in 0..k {
                    let c = dot(&cols[j], &cols[k]);
                    let (head, tail) = cols.split_at_mut(k);
                    tail[0].iter_mut().zip(&head[j]).for_each(|(x, q)| *x -= c * q);
                }
            }
            let nrm = norm2(&cols[k]);
            if nrm > 1e-150 || attempt == 2 {
                let nrm = nrm.max(f64::MIN_POSITIVE);
                cols[k].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            cols[k].iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
        }
    }
}

/// Largest eigenvalue modulus of a linear operator, by orthogonal (block
/// power) iteration with Rayleigh–Ritz extraction. The block handles complex
/// conjugate pairs and near-ties in modulus that defeat a single vector.
///
/// Stops when the Ritz estimate moves less than `tol` for three consecutive
/// iterations; otherwise returns the last estimate with `MaxIter`.
pub fn dominant_modulus<F>(
    mut op: F,
    n: usize,
    block: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> RateEstimate
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return RateEstimate {
            rate: 0.0,
            status: SolveStatus::Converged,
            iterations: 0,
        };
    }
    let s = block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut basis, &mut rng);

    let mut estimate = f64::NAN;
    let mut stable = 0;
    for it in 1..=max_iter {
        let mut images: Vec<Vec<f64>> = basis.iter().map(|v| op(v)).collect();
        let h: Vec<Vec<f64>> = (0..s)
            .map(|i| (0..s).map(|j| dot(&basis[i], &images[j])).collect())
            .collect();
        let ritz = modulus_max(&dense_eigenvalues(&h));
        if (ritz - estimate).abs() <= tol * ritz.max(1e-3) {
            stable += 1;
        } else {
            stable = 0;
        }
        estimate = ritz;
        if stable >= 3 {
            return RateEstimate {
                rate: estimate,
                status: SolveStatus::Converged,
                iterations: it,
            };
        }
        orthonormalize(&mut images, &mut rng);
        basis = images;
    }
    RateEstimate {
        rate: estimate,
        status: SolveStatus::MaxIter,
        iterations: max_iter,
    }
}

fn modulus_max(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_spectrum_of_small_matrices() {
        let eigs = dense_eigenvalues(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let mut re: Vec<f64> = eigs.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-14 && (re[1] - 1.0).abs() < 1e-14);
        assert!((modulus_without_unit(&eigs) - 1.0).abs() < 1e-14);

        let rot = dense_eigenvalues(&[vec![0.0, -0.5], vec![0.5, 0.0]]);
        assert!(rot.iter().all(|z| (z.norm() - 0.5).abs() < 1e-14));
    }

    #[test]
    fn block_iteration_resolves_complex_pairs() {
        // block diagonal: rotation-scaling with modulus 0.9, then 0.5 and 0.1
        let a = [
            vec![0.0, -0.9, 0.0, 0.0],
            vec![0.9, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 0.1],
        ];
        let op = |x: &[f64]| -> Vec<f64> { a.iter().map(|r| dot(r, x)).collect() };
        let est = dominant_modulus(op, 4, 3, 1e-12, 1000, 7);
        assert_eq!(est.status, SolveStatus::Converged);
        assert!((est.rate - 0.9).abs() < 1e-10, "{}", est.rate);
    }

    #[test]
    fn nilpotent_operator_has_zero_modulus() {
        let op = |x: &[f64]| -> Vec<f64> { vec![x[1], 0.0] };
        let est = dominant_modulus(op, 2, 1, 1e-12, 200, 1);
        assert!(est.rate < 1e-8);
    }
}
