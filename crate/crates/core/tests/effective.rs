mod common;

use common::*;
use hotskit::effective::*;
use hotskit::spectral::dense_eigenvalues;
use hotskit::synth::{arcs_to_matrix, synth_graph, SynthModel};
use hotskit::{HotsError, SolveStatus, SparseMatrix};
use proptest::prelude::*;
use rand::Rng;

fn two_node() -> SparseMatrix {
    dense(&[&[0.001, 1.0], &[2.0, 0.0]])
}

fn chain() -> SparseMatrix {
    dense(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]])
}

fn theta_at(a: &SparseMatrix, p: &[f64], alpha: f64, lam: Lambda) -> f64 {
    let state = AugmentedState::new(p.to_vec()).unwrap();
    theta_eff(a, &state, &EffectiveParams::new(alpha, lam).unwrap()).unwrap()
}

#[test]
fn theta_eff_examples() {
    let empty = SparseMatrix::from_triplets(1, []).unwrap();
    assert!((theta_at(&empty, &[0.0, 0.0], 0.9, Lambda::default()) - 2.0).abs() < 1e-15);

    let mut r = rng(1);
    let a = random_digraph(6, 0.4, &mut r);
    let p = random_vector(7, 2.0, &mut r);
    let lam = Lambda { mu: -0.3, a: 0.2, b: 0.5 };
    let shifted: Vec<f64> = p.iter().map(|v| v + 4.2).collect();
    let (t0, t1) = (theta_at(&a, &p, 0.8, lam), theta_at(&a, &shifted, 0.8, lam));
    assert!((t0 - t1).abs() <= 1e-12 * t0.abs());
}

#[test]
fn lambda_collapses_at_zero() {
    let a = dense(&[&[0.0, 1.0], &[2.0, 0.0]]);
    let lam = lambda_of(&a, &AugmentedState::zeros(2), 0.9).unwrap();
    assert!((lam.mu - (0.8f64 / 3.0).ln()).abs() < 1e-15);
    let zero = SparseMatrix::from_triplets(2, []).unwrap();
    assert!(matches!(lambda_of(&zero, &AugmentedState::zeros(2), 0.9).unwrap_err(), HotsError::Model(_)));
}

#[test]
fn lambda_zeroes_its_partials_and_minimizes() {
    let mut r = rng(2);
    for _ in 0..20 {
        let n = r.random_range(2..=10);
        let a = random_digraph(n, 0.4, &mut r);
        let alpha = r.random_range(0.55..0.99);
        let p = random_vector(n + 1, 2.0, &mut r);
        let lam = lambda_of(&a, &AugmentedState::new(p.clone()).unwrap(), alpha).unwrap();
        let h = 1e-5;
        let f = |l: Lambda| theta_at(&a, &p, alpha, l);
        let base = f(lam);
        let partials = [
            (f(Lambda { mu: lam.mu + h, ..lam }) - f(Lambda { mu: lam.mu - h, ..lam })) / (2.0 * h),
            (f(Lambda { a: lam.a + h, ..lam }) - f(Lambda { a: lam.a - h, ..lam })) / (2.0 * h),
            (f(Lambda { b: lam.b + h, ..lam }) - f(Lambda { b: lam.b - h, ..lam })) / (2.0 * h),
        ];
        for g in partials {
            assert!(g.abs() <= 1e-8 * base.abs().max(1.0), "partial {g}");
        }
        for _ in 0..5 {
            let other = Lambda {
                mu: lam.mu + r.random_range(-1.0..1.0),
                a: lam.a + r.random_range(-1.0..1.0),
                b: lam.b + r.random_range(-1.0..1.0),
            };
            assert!(base <= f(other) + 1e-12);
        }
    }
}

#[test]
fn theta_eff_matches_finite_differences() {
    // gradient in p: flow out minus flow in at each node, artificial included
    let mut r = rng(3);
    for _ in 0..10 {
        let n = r.random_range(2..=8);
        let a = random_digraph(n, 0.5, &mut r);
        let p = random_vector(n + 1, 1.0, &mut r);
        let lam = Lambda { mu: -1.0, a: 0.3, b: -0.2 };
        let state = AugmentedState::new(p.clone()).unwrap();
        let flow = effective_flow(&a, &state, &EffectiveParams::new(0.9, lam).unwrap()).unwrap();
        let mut grad = vec![0.0; n + 1];
        for (i, j, v) in flow.rho.triplets() {
            grad[i] += v;
            grad[j] -= v;
        }
        for i in 0..n {
            grad[i] += flow.to_artificial[i] - flow.from_artificial[i];
            grad[n] += flow.from_artificial[i] - flow.to_artificial[i];
        }
        let h = 1e-6;
        for k in 0..=n {
            let mut up = p.clone();
            let mut down = p.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (theta_at(&a, &up, 0.9, lam) - theta_at(&a, &down, 0.9, lam)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1.0), "coord {k}: {fd} vs {}", grad[k]);
        }
    }
}

#[test]
fn step_by_hand() {
    let a = dense(&[&[0.0, 1.0], &[2.0, 0.0]]);
    let next = effective_step(&a, &AugmentedState::zeros(2), 0.9).unwrap();
    // S = 3, Σe^{p} = Σe^{−p} = 2, γ = 1/8: e^a = e^{−b} = 3/16
    let side: f64 = 3.0 / 16.0;
    let f0 = 0.5 * ((2.0 + side).ln() - (1.0 + side).ln());
    assert!((next.p[0] - f0).abs() < 1e-15);
    assert!((next.p[1] + f0).abs() < 1e-15);
    assert_eq!(next.p[2], 0.0);
}

#[test]
fn solve_two_node() {
    let a = two_node();
    let opts = EffectiveOptions { tol: 1e-12, ..Default::default() };
    let (s, params, rep) = effective_solve(&a, &AugmentedState::zeros(2), 0.9, &opts).unwrap();
    assert!(rep.status.is_converged());
    assert!((rep.rate_estimate - 0.8846).abs() < 5e-3);
    let state = AugmentedState::new(s.p.clone()).unwrap();
    let f = effective_step(&a, &state, 0.9).unwrap();
    let shift = f.p[0] - s.p[0];
    assert!(f.p.iter().zip(&s.p).all(|(x, y)| (x - y - shift).abs() <= 1e-9));

    let flow = effective_flow(&a, &state, &params).unwrap();
    assert!(flow.balance_residual <= 1e-9);
    assert!((flow.total() - 1.0).abs() <= 1e-9);
    let artificial: f64 = flow.to_artificial.iter().sum();
    assert!((artificial - 0.1).abs() <= 1e-9);
}

#[test]
fn chain_diverges_for_large_alpha() {
    for alpha in [0.8, 0.9, 0.99] {
        let (_, _, rep) = effective_solve(&chain(), &AugmentedState::zeros(3), alpha, &Default::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Diverged, "alpha {alpha}");
        let (_, _, rep) = effective_cd_solve(&chain(), &AugmentedState::zeros(3), alpha, &Default::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Diverged, "cd alpha {alpha}");
    }
    let (_, _, rep) = effective_solve(&chain(), &AugmentedState::zeros(3), 0.7, &Default::default()).unwrap();
    assert!(rep.status.is_converged());
}

#[test]
fn chain_dual_is_unbounded() {
    let mut prev = f64::INFINITY;
    for k in 1..=20 {
        let k = k as f64;
        let v = theta_tilde(&chain(), &[-k, 0.0, k], 0.9).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn alpha_outside_range_is_rejected() {
    for alpha in [0.5, 0.3, 1.0, 1.2] {
        let err = effective_solve(&two_node(), &AugmentedState::zeros(2), alpha, &Default::default()).unwrap_err();
        assert!(matches!(err, HotsError::InvalidParameter(_)), "{alpha}: {err}");
    }
}

#[test]
fn symmetric_graph_has_unique_solution() {
    let mut r = rng(4);
    let mut t = Vec::new();
    for i in 0..8 {
        let w = weight(&mut r, 1.0);
        t.push((i, (i + 1) % 8, w));
        t.push(((i + 1) % 8, i, w));
    }
    let a = SparseMatrix::from_triplets(8, t).unwrap();
    let opts = EffectiveOptions { tol: 1e-12, ..Default::default() };
    let p0 = AugmentedState::new(random_vector(9, 2.0, &mut r)).unwrap();
    let q0 = AugmentedState::new(random_vector(9, 2.0, &mut r)).unwrap();
    let (s, _, _) = effective_solve(&a, &p0, 0.9, &opts).unwrap();
    let (t, _, _) = effective_solve(&a, &q0, 0.9, &opts).unwrap();
    assert!(sup_diff(&s.p, &t.p) <= 1e-7);
}

#[test]
fn theta_tilde_is_the_reduced_dual() {
    let mut r = rng(5);
    for _ in 0..20 {
        let n = r.random_range(2..=8);
        let a = random_digraph(n, 0.5, &mut r);
        let alpha = r.random_range(0.55..0.99);
        let pages = random_vector(n, 2.0, &mut r);
        let lse = |v: &[f64]| v.iter().map(|x| x.exp()).sum::<f64>().ln();
        let neg: Vec<f64> = pages.iter().map(|v| -v).collect();
        let best = 0.5 * (lse(&pages) - lse(&neg));
        let mut p = pages.clone();
        p.push(best);
        let lam = lambda_of(&a, &AugmentedState::new(p.clone()).unwrap(), alpha).unwrap();
        let reduced = theta_at(&a, &p, alpha, lam);
        let tt = theta_tilde(&a, &pages, alpha).unwrap();
        assert!((reduced - tt).abs() <= 1e-9 * tt.abs().max(1.0), "{reduced} vs {tt}");
        for d in [-0.5, 0.3] {
            let mut q = p.clone();
            q[n] += d;
            let lq = lambda_of(&a, &AugmentedState::new(q.clone()).unwrap(), alpha).unwrap();
            assert!(theta_at(&a, &q, alpha, lq) >= tt - 1e-12);
        }
    }
}

#[test]
fn theta_tilde_is_strictly_convex_on_two_nodes() {
    let a = two_node();
    let mut r = rng(6);
    for _ in 0..10 {
        let p = random_vector(2, 2.0, &mut r);
        // the reduced dual only depends on p₁ − p₂; its second derivative
        // along (1, −1) must be positive
        let h = 1e-4;
        let at = |t: f64| theta_tilde(&a, &[p[0] + t, p[1] - t], 0.9).unwrap();
        let second = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
        assert!(second > 0.0, "{second}");
        let along_ones = theta_tilde(&a, &[p[0] + 1.0, p[1] + 1.0], 0.9).unwrap() - at(0.0);
        assert!(along_ones.abs() < 1e-12);
    }
}

#[test]
fn coordinate_descent_matches_fixed_point_on_synthetic_graph() {
    let n = 1500;
    let arcs = synth_graph(n, SynthModel::preferential(), 21).unwrap();
    let a = arcs_to_matrix(n, &arcs).unwrap();
    let opts = EffectiveOptions { tol: 1e-10, ..Default::default() };
    let (s, _, rs) = effective_solve(&a, &AugmentedState::zeros(n), 0.9, &opts).unwrap();
    let (c, _, rc) = effective_cd_solve(&a, &AugmentedState::zeros(n), 0.9, &opts).unwrap();
    assert!(rs.status.is_converged() && rc.status.is_converged());
    assert!(sup_diff(&s.p, &c.p) <= 1e-6);
    for w in rc.theta_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    }
}

#[test]
fn fixed_point_trace_is_monotone() {
    let mut r = rng(7);
    for _ in 0..10 {
        let n = r.random_range(3..=20);
        let a = random_strong(n, n, false, &mut r);
        let p0 = AugmentedState::new(random_vector(n + 1, 2.0, &mut r)).unwrap();
        let (_, _, rep) = effective_solve(&a, &p0, 0.85, &Default::default()).unwrap();
        assert!(rep.status.is_converged());
        for w in rep.theta_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }
}

#[test]
fn rate_two_node_and_spectrum() {
    let a = two_node();
    let (s, _, _) = effective_solve(&a, &AugmentedState::zeros(2), 0.9, &Default::default()).unwrap();
    let rate = rate_effective(&a, &s.p, 0.9, EffectiveRateMethod::FdDense).unwrap().rate;
    assert!((rate - 0.8846).abs() < 5e-3);
    let power = rate_effective(&a, &s.p, 0.9, EffectiveRateMethod::FdPower).unwrap().rate;
    assert!((power - rate).abs() < 1e-4);

    let eigs = dense_eigenvalues(&effective_jacobian_fd(&a, &s.p, 0.9).unwrap());
    assert!(eigs.iter().all(|z| z.im.abs() < 1e-5 && z.re > -1.0 && z.re < 1.0 + 1e-6));
    assert_eq!(eigs.iter().filter(|z| (z.re - 1.0).abs() < 1e-6).count(), 1);

    let err = rate_effective(&a, &[0.0, 0.0, 0.0], 0.9, EffectiveRateMethod::FdDense).unwrap_err();
    assert!(matches!(err, HotsError::Precondition(_)));
}

#[test]
fn empirical_rate_matches_spectrum_on_small_digraphs() {
    let mut r = rng(8);
    let opts = EffectiveOptions { tol: 1e-12, ..Default::default() };
    for _ in 0..5 {
        let a = random_strong(10, 8, false, &mut r);
        let (s, _, rep) = effective_solve(&a, &AugmentedState::zeros(10), 0.9, &opts).unwrap();
        assert!(rep.status.is_converged());
        let rate = rate_effective(&a, &s.p, 0.9, EffectiveRateMethod::FdDense).unwrap().rate;
        assert!((rate - rep.rate_estimate).abs() <= 0.05, "{rate} vs {}", rep.rate_estimate);
    }
}

proptest! {
    #[test]
    fn step_commutes_with_constants(n in 2usize..=8, seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut r = rng(seed);
        let a = random_digraph(n, 0.5, &mut r);
        let p = random_vector(n + 1, 2.0, &mut r);
        let shifted: Vec<f64> = p.iter().map(|v| v + c).collect();
        let f = effective_step(&a, &AugmentedState::new(p).unwrap(), 0.9).unwrap();
        let g = effective_step(&a, &AugmentedState::new(shifted).unwrap(), 0.9).unwrap();
        for (x, y) in g.p.iter().zip(&f.p) {
            prop_assert!((x - y - c).abs() <= 1e-12);
        }
    }
}
