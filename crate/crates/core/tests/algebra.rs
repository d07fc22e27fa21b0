#![allow(clippy::needless_range_loop)]

use approx::assert_relative_eq;
use proptest::prelude::*;

use jacobi_lab::dynamics::{apply_generator, drift, drift_with, DriftForm};
use jacobi_lab::jacobi1d::{jacobi_eval, jacobi_zeros, monic_jacobi, stieltjes_residual};
use jacobi_lab::martcoef::{
    esym_at_z, mart_coeffs, mart_coeffs_printed, q_n_eval, rate_r, remark45_parity, MartingaleSystem,
};
use jacobi_lab::sympoly::{charpoly_from_esym, esym_all, esym_gradient, esym_leave_one_out};
use jacobi_lab::{convert_k_to_pq, Kappa, MultiplicityParams, Params};

fn sorted_point(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.999f64..0.999, len).prop_map(|mut x| {
        x.sort_by(f64::total_cmp);
        x
    })
}

fn spaced(x: &[f64], gap: f64) -> bool {
    x.windows(2).all(|w| w[1] - w[0] > gap)
}

proptest! {
    #[test]
    fn k_pq_round_trip(k1 in -0.4f64..3.0, k2 in -0.4f64..3.0, k3 in 0.1f64..4.0, n in 1usize..8) {
        let k = MultiplicityParams::new(k1, k2, k3).unwrap();
        let back = convert_k_to_pq(&k, n).unwrap().to_multiplicity().unwrap();
        prop_assert!((back.k1 - k1).abs() <= 1e-12 * (1.0 + k1.abs()));
        prop_assert!((back.k2 - k2).abs() <= 1e-12 * (1.0 + k2.abs()));
        prop_assert!((back.k3 - k3).abs() <= 1e-12 * k3);
    }

    #[test]
    fn regimes_are_nested(n in 1usize..8, kappa in 0.05f64..10.0, p in -2.0f64..15.0, q in -2.0f64..15.0) {
        let params = Params::new(n, Kappa::Finite(kappa), p, q).unwrap();
        let r = params.validate();
        let (alpha, beta) = params.alpha_beta();
        prop_assert!(!r.nonattainment || r.valid);
        prop_assert_eq!(r.zeros_start_ok, alpha > -1.0 && beta > -1.0);
        prop_assert!(!r.valid || r.zeros_start_ok);
    }

    #[test]
    fn vieta(x in prop::collection::vec(-1.0f64..1.0, 1..=8), y in -2.0f64..2.0) {
        let direct: f64 = x.iter().map(|xi| y - xi).product();
        let scale: f64 = x.iter().map(|xi| (y - xi).abs()).product::<f64>().max(1.0);
        prop_assert!((charpoly_from_esym(&esym_all(&x), y) - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn pair_identity(x in prop::collection::vec(-1.0f64..1.0, 2..=8)) {
        let big = x.len();
        for i in 0..big {
            for j in 0..big {
                if i == j {
                    continue;
                }
                let without_i = esym_leave_one_out(&x, i).unwrap();
                let without_j = esym_leave_one_out(&x, j).unwrap();
                let rest: Vec<f64> = (0..big).filter(|&m| m != i && m != j).map(|m| x[m]).collect();
                let both = esym_all(&rest);
                for n in 1..=big as i64 {
                    let lhs = without_j.get(n - 1) - without_i.get(n - 1);
                    let rhs = (x[i] - x[j]) * both.get(n - 2);
                    prop_assert!((lhs - rhs).abs() <= 1e-12, "n={} i={} j={}", n, i, j);
                }
            }
        }
    }

    #[test]
    fn double_sum_identity(x in prop::collection::vec(-1.0f64..1.0, 2..=8)) {
        let big = x.len();
        let full = esym_all(&x);
        for n in 2..=big + 1 {
            let mut total = 0.0;
            for i in 0..big {
                for j in 0..big {
                    if i != j {
                        let rest: Vec<f64> = (0..big).filter(|&m| m != i && m != j).map(|m| x[m]).collect();
                        total += esym_all(&rest).get(n as i64 - 2);
                    }
                }
            }
            let factor = ((big + 2 - n) * (big + 1 - n)) as f64;
            prop_assert!((total - factor * full.get(n as i64 - 2)).abs() <= 1e-11);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(x in prop::collection::vec(-0.99f64..0.99, 1..=8)) {
        let grad = esym_gradient(&x);
        let h = 1e-6;
        for i in 0..x.len() {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let (eu, ed) = (esym_all(&up), esym_all(&down));
            for n in 0..=x.len() {
                let fd = (eu.get(n as i64) - ed.get(n as i64)) / (2.0 * h);
                prop_assert!((fd - grad[n][i]).abs() <= 1e-8, "n={} i={}", n, i);
            }
        }
    }

    #[test]
    fn drift_forms_agree(x in sorted_point(5), p in 4.5f64..12.0, q in 4.5f64..12.0) {
        prop_assume!(spaced(&x, 1e-3));
        let params = Params::new(5, Kappa::Finite(2.0), p, q).unwrap();
        let reference = drift(&params, &x).unwrap();
        for form in [DriftForm::ProductPairs, DriftForm::Linearized, DriftForm::Factorized] {
            let other = drift_with(form, &params, &x).unwrap();
            for (a, b) in reference.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    /// The drift of `q_n` under the normalized SDE, computed from the
    /// particle drift and the gradient of `q_n`, equals `-r_n q_n`.
    #[test]
    fn q_n_is_an_eigenfunction_of_the_drift(x in sorted_point(4), p in 3.2f64..10.0, q in 3.2f64..10.0) {
        prop_assume!(spaced(&x, 1e-3));
        let params = Params::new(4, Kappa::Infinite, p, q).unwrap();
        let sys = MartingaleSystem::new(4, p, q).unwrap();
        let b = drift(&params, &x).unwrap();
        let grad = esym_gradient(&x);
        for n in 1..=4 {
            let coeffs = sys.q_coeffs(n);
            let lhs: f64 = (0..4)
                .map(|i| b[i] * (0..=4).map(|m| coeffs[m] * grad[m][i]).sum::<f64>())
                .sum();
            let rhs = -rate_r(n, p, q) * q_n_eval(&sys, n, &x);
            let scale: f64 = (0..4).map(|i| (b[i] * grad[n][i]).abs()).sum::<f64>().max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "n={} lhs={} rhs={}", n, lhs, rhs);
        }
    }
}

/// `P_n = sum_s binom(n+a, n-s) binom(n+b, s) ((x-1)/2)^s ((x+1)/2)^(n-s)`.
fn jacobi_explicit(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let gbinom = |top: f64, k: usize| (0..k).fold(1.0, |acc, i| acc * (top - i as f64) / (i + 1) as f64);
    let (mut sum, mut abs_sum) = (0.0, 0.0);
    for s in 0..=n {
        let term = gbinom(n as f64 + a, n - s)
            * gbinom(n as f64 + b, s)
            * ((x - 1.0) / 2.0).powi(s as i32)
            * ((x + 1.0) / 2.0).powi((n - s) as i32);
        sum += term;
        abs_sum += term.abs();
    }
    (sum, abs_sum)
}

#[test]
fn jacobi_matches_explicit_sum() {
    for n in 0..=15 {
        for &(a, b) in &[(0.0, 0.0), (-0.5, 0.5), (1.5, 0.5), (3.0, -0.7), (2.2, 4.1)] {
            for i in 0..=40 {
                let x = -1.0 + i as f64 / 20.0;
                let (oracle, scale) = jacobi_explicit(n, a, b, x);
                let got = jacobi_eval(n, a, b, x).unwrap();
                assert!(
                    (got - oracle).abs() <= 1e-11 * scale.max(oracle.abs()),
                    "n={n} a={a} b={b} x={x}: {got} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn monic_is_scaled_explicit_sum() {
    let (a, b) = (1.5, 0.5);
    for n in 1..=10 {
        let monic = monic_jacobi(n, a, b).unwrap();
        let lead = (1..=n).fold(1.0, |acc, j| acc * (n as f64 + a + b + j as f64) / (2.0 * j as f64));
        for y in [-0.9, -0.3, 0.2, 0.8] {
            assert_relative_eq!(monic.eval(y) * lead, jacobi_explicit(n, a, b, y).0, max_relative = 1e-10, epsilon = 1e-12);
        }
    }
}

#[test]
fn zeros_interlace() {
    for &(a, b) in &[(0.0, 0.0), (-0.5, -0.5), (1.5, 0.5), (3.0, 0.0)] {
        for n in 2..=10 {
            let lo = jacobi_zeros(n - 1, a, b).unwrap().into_vec();
            let hi = jacobi_zeros(n, a, b).unwrap().into_vec();
            for j in 0..n - 1 {
                assert!(hi[j] < lo[j] && lo[j] < hi[j + 1], "n={n} a={a} b={b}");
            }
        }
    }
}

#[test]
fn zeros_are_roots_and_equilibria() {
    for &(a, b) in &[(0.0, 0.0), (-0.5, 3.0), (1.5, 0.5)] {
        for n in 1..=8 {
            let z = jacobi_zeros(n, a, b).unwrap().into_vec();
            for &zj in &z {
                assert!(jacobi_eval(n, a, b, zj).unwrap().abs() < 1e-10);
            }
            let res = stieltjes_residual(&z, a, b).unwrap();
            assert!(res.iter().all(|r| r.abs() < 1e-9));
            // the normalized drift vanishes at z for (p, q) = (b + N, a + N)
            let params = Params::new(n, Kappa::Infinite, b + n as f64, a + n as f64).unwrap();
            for v in drift(&params, &z).unwrap() {
                assert!(v.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn three_routes_to_esym_at_zeros() {
    for &(a, b) in &[(0.0, 0.0), (1.5, 0.5), (-0.5, 2.0), (3.0, 3.0)] {
        for big in 1..=8 {
            let (p, q) = (b + big as f64, a + big as f64);
            let closed = esym_at_z(big, a, b).unwrap();
            let vieta = esym_all(jacobi_zeros(big, a, b).unwrap().as_slice());
            // q_n(z) = 0 recursively: e_n = -sum_{l >= 1} c_{n,l} e_{n-l}
            let mut rec = vec![1.0];
            for n in 1..=big {
                let c = mart_coeffs(big, n, p, q).unwrap();
                let val = -(1..=n).map(|l| c[l] * rec[n - l]).sum::<f64>();
                rec.push(val);
            }
            for n in 0..=big {
                let (x, y, z) = (closed.get(n as i64), vieta.get(n as i64), rec[n]);
                assert!((x - y).abs() <= 1e-9, "N={big} n={n}");
                assert!((x - z).abs() <= 1e-9, "N={big} n={n}");
                assert!((y - z).abs() <= 1e-9, "N={big} n={n}");
            }
        }
    }
}

#[test]
fn generator_on_e1_and_constants() {
    let k = MultiplicityParams::new(0.7, 1.3, 0.9).unwrap();
    let x = [-0.8, -0.1, 0.3, 0.75];
    let big = x.len() as f64;
    assert_eq!(apply_generator(&k, &[1.0], &x).unwrap(), 0.0);
    let e1: f64 = x.iter().sum();
    let expected = -big * k.k1 - (1.0 + k.k1 + 2.0 * k.k2 + 2.0 * k.k3 * (big - 1.0)) * e1;
    assert_relative_eq!(apply_generator(&k, &[0.0, 1.0], &x).unwrap(), expected, max_relative = 1e-12);
}

#[test]
fn coefficient_examples() {
    let (p, q) = (4.0, 7.0);
    for big in 1..=4 {
        let c = mart_coeffs(big, 1, p, q).unwrap();
        assert_relative_eq!(c[1], -(big as f64) * (p - q) / (p + q), max_relative = 1e-14);
        let printed = mart_coeffs_printed(big, 1, p, q).unwrap();
        assert_relative_eq!(printed.recurrence[1], -c[1], max_relative = 1e-14);
    }
    let c = mart_coeffs(2, 2, 5.0, 5.0).unwrap();
    assert_relative_eq!(c[2], 1.0 / 9.0, max_relative = 1e-14);
    let printed = mart_coeffs_printed(2, 2, 5.0, 5.0).unwrap();
    assert_relative_eq!(printed.closed_form.unwrap()[2], -3.0 / 9.0, max_relative = 1e-14);
}

#[test]
fn parity_formula_mismatch_at_two_particles() {
    for alpha in [0.0, 0.5, 1.5, 4.0] {
        let canonical = esym_at_z(2, alpha, alpha).unwrap().get(2);
        assert_relative_eq!(canonical, -1.0 / (2.0 * alpha + 3.0), max_relative = 1e-13);
        assert_relative_eq!(remark45_parity(2, alpha, 2), -(2.0 * alpha + 3.0), max_relative = 1e-13);
        let z = jacobi_zeros(2, alpha, alpha).unwrap();
        assert_relative_eq!(z.as_slice()[0] * z.as_slice()[1], canonical, max_relative = 1e-12);
    }
}
