//! Instance generators and independent reference solvers shared by the
//! integration tests and the acceptance harness. Nothing here calls the
//! solvers under test.

#![allow(dead_code, clippy::needless_range_loop)]

use hotskit::SparseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense(rows: &[&[f64]]) -> SparseMatrix {
    SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// Weight `e^u` with `u` uniform in `[-spread, spread]`.
pub fn weight(rng: &mut ChaCha8Rng, spread: f64) -> f64 {
    rng.random_range(-spread..=spread).exp()
}

/// Entrywise positive matrix, diagonal included.
pub fn random_positive(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..n).map(|_| weight(rng, 1.5)).collect())
        .collect()
}

/// Positive off the diagonal, zero on it.
pub fn random_positive_offdiag(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { weight(rng, 1.0) }).collect())
        .collect()
}

/// Weighted cycle plus `chords` random arcs, optionally with a positive
/// diagonal. Strongly connected by construction.
pub fn random_strong(n: usize, chords: usize, diagonal: bool, rng: &mut ChaCha8Rng) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, (i + 1) % n, weight(rng, 1.0)));
        if diagonal {
            t.push((i, i, weight(rng, 1.0)));
        }
    }
    for _ in 0..chords {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            t.push((i, j, weight(rng, 1.0)));
        }
    }
    SparseMatrix::from_triplets(n, t).unwrap()
}

/// Random digraph with arc probability `prob`, no structure guaranteed.
pub fn random_digraph(n: usize, prob: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < prob {
                t.push((i, j, weight(rng, 1.0)));
            }
        }
    }
    if t.is_empty() {
        t.push((0, 1, 1.0));
    }
    SparseMatrix::from_triplets(n, t).unwrap()
}

pub fn random_vector(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
}

pub fn mean_zero(p: &[f64]) -> Vec<f64> {
    let m = p.iter().sum::<f64>() / p.len() as f64;
    p.iter().map(|v| v - m).collect()
}

pub fn sup_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, piv);
        rhs.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

/// `Σ_ij A_ij e^{p_i − p_j}` on a dense matrix.
pub fn dense_theta0(a: &[Vec<f64>], p: &[f64]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i][j] * (p[i] - p[j]).exp();
        }
    }
    s
}

/// Minimizer of `θ₀` by damped Newton on the dense Hessian, mean-zero.
pub fn newton_balance(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut p = vec![0.0f64; n];
    for _ in 0..200 {
        let mut g = vec![0.0; n];
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = a[i][j] * (p[i] - p[j]).exp();
                g[i] += w;
                g[j] -= w;
                h[i][i] += w;
                h[j][j] += w;
                h[i][j] -= w;
                h[j][i] -= w;
            }
        }
        let theta = dense_theta0(a, &p);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-15 * theta {
            break;
        }
        // the all-ones direction is a null direction of H; pin it
        for row in h.iter_mut() {
            for v in row.iter_mut() {
                *v += 1.0 / n as f64;
            }
        }
        let d = solve_linear(h, g.iter().map(|v| -v).collect());
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = p.iter().zip(&d).map(|(x, y)| x + t * y).collect();
            if dense_theta0(a, &trial) <= theta + 1e-4 * t * slope || t < 1e-12 {
                p = trial;
                break;
            }
            t *= 0.5;
        }
    }
    mean_zero(&p)
}

/// Dominant eigenvector of `Aᵀ` by dense power iteration, unit l2 norm.
pub fn perron_transpose(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut x = vec![1.0; n];
    for _ in 0..100_000 {
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                y[j] += a[i][j] * x[i];
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let change = sup_diff(&x, &y);
        x = y;
        if change < 1e-15 {
            break;
        }
    }
    x
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    d / (nx * ny)
}

/// One bounded arc of a truncated-scaling instance.
#[derive(Debug, Clone, Copy)]
pub struct Arc {
    pub i: usize,
    pub j: usize,
    pub a: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Minimizes the truncated-scaling dual with explicit multipliers,
/// `Σ A_ij e^{p_i − p_j + η_ij − ζ_ij} − Σ η_ij L_ij + Σ ζ_ij U_ij` over
/// `p` and `η, ζ ≥ 0`, by projected gradient with backtracking. Returns
/// mean-zero potentials.
pub fn projected_gradient_trunc(n: usize, arcs: &[Arc]) -> Vec<f64> {
    let m = arcs.len();
    // x = (p, η, ζ)
    let dim = n + 2 * m;
    let objective = |x: &[f64]| -> f64 {
        let mut s = 0.0;
        for (e, arc) in arcs.iter().enumerate() {
            let (eta, zeta) = (x[n + e], x[n + m + e]);
            s += arc.a * (x[arc.i] - x[arc.j] + eta - zeta).exp();
            s -= eta * arc.lower;
            if arc.upper.is_finite() {
                s += zeta * arc.upper;
            }
        }
        s
    };
    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; dim];
        for (e, arc) in arcs.iter().enumerate() {
            let r = arc.a * (x[arc.i] - x[arc.j] + x[n + e] - x[n + m + e]).exp();
            g[arc.i] += r;
            g[arc.j] -= r;
            g[n + e] = r - arc.lower;
            g[n + m + e] = if arc.upper.is_finite() { arc.upper - r } else { 0.0 };
        }
        g
    };
    // multipliers of absent bounds stay pinned at zero
    let free = |k: usize| -> bool {
        if k < n {
            return true;
        }
        let e = (k - n) % m;
        if k < n + m {
            arcs[e].lower > 0.0
        } else {
            arcs[e].upper.is_finite()
        }
    };
    let project = |x: &mut [f64]| {
        for k in n..dim {
            if !free(k) {
                x[k] = 0.0;
            } else {
                x[k] = x[k].max(0.0);
            }
        }
    };

    let mut x = vec![0.0; dim];
    let mut t = 0.1;
    for _ in 0..2_000_000 {
        let f = objective(&x);
        let g = gradient(&x);
        let mut step;
        loop {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v - t * d).collect();
            project(&mut trial);
            step = trial.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>();
            let lin: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let sq: f64 = step.iter().map(|v| v * v).sum();
            if objective(&trial) <= f + lin + sq / (2.0 * t) {
                x = trial;
                break;
            }
            t *= 0.5;
        }
        let pg = step.iter().fold(0.0f64, |a, v| a.max(v.abs())) / t;
        if pg < 1e-13 {
            break;
        }
        t *= 1.5;
    }
    mean_zero(&x[..n])
}

/// Bounds for a dense off-diagonal positive matrix that admit a truncated
/// scaling. A balanced flow `X` is built by pushing circulations around
/// random triangles of the balanced flow `ρ*`; bounds are then placed so
/// that `X` is strictly feasible while `ρ*` violates some of them.
pub fn feasible_bounds(rows: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<Arc> {
    let n = rows.len();
    let p = newton_balance(rows);
    let balanced: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rows[i][j] * (p[i] - p[j]).exp()).collect())
        .collect();
    let mut x = balanced.clone();
    for _ in 0..3 {
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let k = (0..n).find(|&k| k != i && k != j).unwrap();
        let room = x[i][j].min(x[j][k]).min(x[k][i]);
        let delta = room * rng.random_range(-0.5..0.5);
        x[i][j] += delta;
        x[j][k] += delta;
        x[k][i] += delta;
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (mut lower, mut upper) = (0.0, f64::INFINITY);
            if rng.random::<f64>() < 0.5 {
                if balanced[i][j] > x[i][j] {
                    upper = 1.02 * x[i][j];
                } else {
                    lower = 0.98 * x[i][j];
                }
            }
            arcs.push(Arc { i, j, a: rows[i][j], lower, upper });
        }
    }
    arcs
}
