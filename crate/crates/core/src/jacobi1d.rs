//! One-dimensional Jacobi polynomials `P_n^(alpha, beta)` on `[-1, 1]`:
//! evaluation, monic normalization, zeros and the electrostatic
//! equilibrium residual that characterizes those zeros.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Newton iterations per zero before giving up on that zero.
const NEWTON_BUDGET: usize = 100;

fn check_indices(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > -1.0) || !(beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Jacobi indices must satisfy alpha, beta > -1, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

/// Monic Jacobi polynomial of degree `n`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiPoly {
    pub degree: usize,
    pub alpha: f64,
    pub beta: f64,
    pub coeffs: Vec<f64>,
}

impl JacobiPoly {
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree]
    }
}

/// Ordered zeros `z_1 < ... < z_N` in `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroVector(Vec<f64>);

impl ZeroVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `P_n^(alpha, beta)(y)` by the three-term recurrence in `n`.
pub fn jacobi_eval(n: usize, alpha: f64, beta: f64, y: f64) -> Result<f64> {
    check_indices(alpha, beta)?;
    if n == 0 {
        return Ok(1.0);
    }
    let ab = alpha + beta;
    let mut prev = 1.0;
    let mut cur = (alpha + 1.0) + (ab + 2.0) * (y - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + ab;
        let a = 2.0 * k * (k + ab) * (s - 2.0);
        let b = (s - 1.0) * s * (s - 2.0);
        let c = (s - 1.0) * (alpha * alpha - beta * beta);
        let d = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        let next = ((b * y + c) * cur - d * prev) / a;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Leading coefficient `l_N = 2^-N binom(2N + alpha + beta, N)` of `P_N`.
pub fn leading_coeff(n: usize, alpha: f64, beta: f64) -> Result<f64> {
    let ab = alpha + beta;
    if !(ab > -2.0) {
        return Err(Error::Domain(format!("alpha + beta must exceed -2, got {ab}")));
    }
    // binom(a, N) for real a as a finite product; exact in N, no gamma poles
    let nf = n as f64;
    let value = (1..=n).fold(1.0, |acc, j| acc * (nf + ab + j as f64) / (2.0 * j as f64));
    if value == 0.0 || !value.is_finite() {
        return Err(Error::Domain(format!(
            "leading coefficient vanishes for N={n}, alpha+beta={ab}"
        )));
    }
    Ok(value)
}

/// Recurrence coefficients `(b_k, a_k)` of the monic family:
/// `p_{k+1}(y) = (y - b_k) p_k(y) - a_k p_{k-1}(y)`.
fn monic_recurrence(k: usize, alpha: f64, beta: f64) -> (f64, f64) {
    let ab = alpha + beta;
    let kf = k as f64;
    let s = 2.0 * kf + ab;
    let b = if k == 0 {
        (beta - alpha) / (ab + 2.0)
    } else {
        (beta * beta - alpha * alpha) / (s * (s + 2.0))
    };
    let a = match k {
        0 => 0.0,
        // the (1 + alpha + beta) factors cancel
        1 => 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab)),
        _ => {
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab)
                / (s * s * (s + 1.0) * (s - 1.0))
        }
    };
    (b, a)
}

/// Value and derivative of the monic `P_N / l_N` at `y`.
pub fn monic_eval_with_derivative(n: usize, alpha: f64, beta: f64, y: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let (b, a) = monic_recurrence(k, alpha, beta);
        let p_next = (y - b) * p - a * p_prev;
        let d_next = p + (y - b) * d - a * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Monomial coefficients of `P_N^(alpha, beta) / l_N^(alpha, beta)`.
pub fn monic_jacobi(n: usize, alpha: f64, beta: f64) -> Result<JacobiPoly> {
    check_indices(alpha, beta)?;
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = vec![1.0];
    for k in 0..n {
        let (b, a) = monic_recurrence(k, alpha, beta);
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= b * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= a * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(JacobiPoly { degree: n, alpha, beta, coeffs: cur })
}

/// The `N` ordered zeros of `P_N^(alpha, beta)`.
///
/// Newton with deflation from Chebyshev starting points, then one
/// undeflated polish per zero. If that fails to produce `N` distinct zeros
/// inside `(-1, 1)` the zeros are bracketed by sign changes on a Chebyshev
/// grid and bisected.
pub fn jacobi_zeros(n: usize, alpha: f64, beta: f64) -> Result<ZeroVector> {
    check_indices(alpha, beta)?;
    match newton_deflation(n, alpha, beta) {
        Some(z) => Ok(ZeroVector(z)),
        None => zeros_by_bracketing(n, alpha, beta).map(ZeroVector),
    }
}

fn is_strictly_inside(z: &[f64]) -> bool {
    z.iter().all(|&v| v > -1.0 && v < 1.0) && z.windows(2).all(|w| w[0] < w[1])
}

pub(crate) fn newton_deflation(n: usize, alpha: f64, beta: f64) -> Option<Vec<f64>> {
    let mut found: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -((2 * i + 1) as f64 * PI / (2 * n) as f64).cos();
        let mut converged = false;
        for _ in 0..NEWTON_BUDGET {
            let (p, dp) = monic_eval_with_derivative(n, alpha, beta, x);
            let pull: f64 = found.iter().map(|&z| 1.0 / (x - z)).sum();
            let denom = dp - p * pull;
            if denom == 0.0 || !denom.is_finite() {
                break;
            }
            let step = p / denom;
            x -= step;
            if !x.is_finite() {
                break;
            }
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !(x > -1.0 && x < 1.0) {
            return None;
        }
        found.push(x);
    }
    for z in found.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = monic_eval_with_derivative(n, alpha, beta, *z);
            if dp == 0.0 {
                break;
            }
            *z -= p / dp;
        }
    }
    found.sort_by(f64::total_cmp);
    is_strictly_inside(&found).then_some(found)
}

pub(crate) fn zeros_by_bracketing(n: usize, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    let grid_len = 400 * n.max(1);
    let value = |y: f64| monic_eval_with_derivative(n, alpha, beta, y).0;
    let mut zeros = Vec::with_capacity(n);
    let mut lo = -1.0;
    let mut f_lo = value(lo);
    for k in 1..=grid_len {
        let hi = -((k as f64) * PI / grid_len as f64).cos();
        let f_hi = value(hi);
        if f_lo == 0.0 && lo > -1.0 {
            zeros.push(lo);
        } else if f_lo * f_hi < 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = value(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        lo = hi;
        f_lo = f_hi;
    }
    if zeros.len() != n || !is_strictly_inside(&zeros) {
        return Err(Error::NoConvergence(format!(
            "bracketing found {} of {n} zeros of P_{n}^({alpha},{beta})",
            zeros.len()
        )));
    }
    Ok(zeros)
}

/// Component `j`: `sum_{i != j} 1/(x_j - x_i) + (alpha+1)/(2(x_j - 1)) + (beta+1)/(2(x_j + 1))`.
///
/// Vanishes exactly at the zeros of `P_N^(alpha, beta)`.
pub fn stieltjes_residual(x: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
    for (j, &xj) in x.iter().enumerate() {
        if !(xj.abs() < 1.0) {
            return Err(Error::Singular(format!("coordinate {j} = {xj} is not inside (-1, 1)")));
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (j, &xj) in x.iter().enumerate() {
        let mut acc = (alpha + 1.0) / (2.0 * (xj - 1.0)) + (beta + 1.0) / (2.0 * (xj + 1.0));
        for (i, &xi) in x.iter().enumerate() {
            if i == j {
                continue;
            }
            if xi == xj {
                return Err(Error::Singular(format!("coordinates {i} and {j} coincide at {xj}")));
            }
            acc += 1.0 / (xj - xi);
        }
        out.push(acc);
    }
    Ok(out)
}
