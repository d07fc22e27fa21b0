//! Martingales built from elementary symmetric polynomials.
//!
//! For the normalized process the drift of `e^{rt} e_m(X_t)` is
//!
//! ```text
//! e^{rt} [ (r - r_m) e_m + (p-q)(N-m+1) e_{m-1} - (N-m+2)(N-m+1) e_{m-2} ]
//! ```
//!
//! with `r_m = m(p+q-m+1)`. Choosing `c_{n,l}` so that the drift of
//! `e^{r_n t} q_n`, `q_n = sum_l c_{n,l} e_{n-l}`, cancels order by order
//! makes `e^{r_n t} q_n(X_t)` a martingale. None of this involves `kappa`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi1d::monic_jacobi;
use crate::sympoly::{esym_all, ESymVector};

/// `r_n = n (p + q - n + 1)`.
pub fn rate_r(n: usize, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    nf * (p + q - nf + 1.0)
}

/// `r_n - r_{n-l} = l (p + q - 2n + l + 1)`.
fn rate_gap(n: usize, l: usize, p: f64, q: f64) -> Result<f64> {
    let gap = l as f64 * (p + q - 2.0 * n as f64 + l as f64 + 1.0);
    if gap.abs() <= 1e-12 * (p.abs() + q.abs()).max(1.0) {
        return Err(Error::Degenerate(format!(
            "r_{n} = r_{} for p + q = {}",
            n - l,
            p + q
        )));
    }
    Ok(gap)
}

/// Coefficients `c_{n,0} = 1, c_{n,1}, ..., c_{n,n}` by drift cancellation:
///
/// `c_{n,l} = [(N-n+l)(N-n+l-1) c_{n,l-2} - (p-q)(N-n+l) c_{n,l-1}] / (r_n - r_{n-l})`.
pub fn mart_coeffs(n_particles: usize, n: usize, p: f64, q: f64) -> Result<Vec<f64>> {
    check_order(n_particles, n)?;
    let big = n_particles as f64;
    let nf = n as f64;
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    for l in 1..=n {
        let m = big - nf + l as f64;
        let two_back = if l >= 2 { c[l - 2] } else { 0.0 };
        let num = m * (m - 1.0) * two_back - (p - q) * m * c[l - 1];
        c[l] = num / rate_gap(n, l, p, q)?;
    }
    Ok(c)
}

fn check_order(n_particles: usize, n: usize) -> Result<()> {
    if n > n_particles {
        return Err(Error::Domain(format!("order {n} exceeds particle count {n_particles}")));
    }
    Ok(())
}

/// The published recurrences, evaluated literally, for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrintedCoeffs {
    /// `c_{n,1} = (p-q)(N-n+1)/(r_n - r_{n-1})` and
    /// `c_{n,l} = [(p-q)(N-n+l) c_{n,l-1} - (N-n+l)(N-n+l+1) c_{n,l-2}] / (r_n - r_{n-l})`.
    pub recurrence: Vec<f64>,
    /// For `p = q`: zero at odd `l`, and
    /// `c_{n,2m} = (-1)^m (N-n+2)_{2m} / (m! 2^m prod_{i=1..m} (p+q-2n+2i+1))`.
    pub closed_form: Option<Vec<f64>>,
}

pub fn mart_coeffs_printed(n_particles: usize, n: usize, p: f64, q: f64) -> Result<PrintedCoeffs> {
    check_order(n_particles, n)?;
    let big = n_particles as f64;
    let nf = n as f64;
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    for l in 1..=n {
        let m = big - nf + l as f64;
        let two_back = if l >= 2 { c[l - 2] } else { 0.0 };
        let num = (p - q) * m * c[l - 1] - m * (m + 1.0) * two_back;
        c[l] = num / rate_gap(n, l, p, q)?;
    }
    let closed_form = (p == q).then(|| {
        let base = big - nf + 2.0;
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        for half in 1..=n / 2 {
            let mut num = 1.0;
            for i in 0..2 * half {
                num *= base + i as f64;
            }
            let mut den = 1.0;
            for i in 1..=half {
                den *= i as f64 * 2.0 * (p + q - 2.0 * nf + 2.0 * i as f64 + 1.0);
            }
            let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
            out[2 * half] = sign * num / den;
        }
        out
    });
    Ok(PrintedCoeffs { recurrence: c, closed_form })
}

/// Rates `r_0..r_N` and the unit lower-triangular matrix `T` with
/// `T[n][n - l] = c_{n,l}`, so that row `n` lists `q_n` in the `e_m` basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleSystem {
    pub n_particles: usize,
    pub p: f64,
    pub q: f64,
    pub rates: Vec<f64>,
    pub transfer: Vec<Vec<f64>>,
}

impl MartingaleSystem {
    pub fn new(n_particles: usize, p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::InvalidParams(format!("p, q must be finite, got {p}, {q}")));
        }
        let rates = (0..=n_particles).map(|n| rate_r(n, p, q)).collect();
        let mut transfer = vec![vec![0.0; n_particles + 1]; n_particles + 1];
        for n in 0..=n_particles {
            let c = mart_coeffs(n_particles, n, p, q)?;
            for (l, cl) in c.into_iter().enumerate() {
                transfer[n][n - l] = cl;
            }
        }
        Ok(MartingaleSystem { n_particles, p, q, rates, transfer })
    }

    /// `q_n` as coefficients over `e_0..e_N`.
    pub fn q_coeffs(&self, n: usize) -> &[f64] {
        &self.transfer[n]
    }

    /// Solves `T u = rhs` by forward substitution.
    fn solve_lower(&self, rhs: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; rhs.len()];
        for n in 0..rhs.len() {
            let partial: f64 = (0..n).map(|m| self.transfer[n][m] * u[m]).sum();
            u[n] = rhs[n] - partial;
        }
        u
    }

    /// Rows of `T^{-1} diag(unit_l) T` applied to `e(x0)`: entry `[n][l]`
    /// is the coefficient `a_{n,l}` of `e^{-r_l t}` in `E[e_n(X_t)]`.
    pub fn decay_coefficients(&self, x0: &[f64]) -> Vec<Vec<f64>> {
        let size = self.n_particles + 1;
        let e0 = esym_all(x0);
        let projected = self.apply(e0.values());
        let mut a = vec![vec![0.0; size]; size];
        for l in 0..size {
            let mut unit = vec![0.0; size];
            unit[l] = projected[l];
            let col = self.solve_lower(&unit);
            for n in 0..size {
                a[n][l] = col[n];
            }
        }
        a
    }

    fn apply(&self, e: &[f64]) -> Vec<f64> {
        self.transfer
            .iter()
            .map(|row| row.iter().zip(e).map(|(t, v)| t * v).sum())
            .collect()
    }
}

/// Drift of `e^{r_n t} q_n(X_t)` at `x` (divided by `e^{r_n t}`), assembled
/// term by term from the drift of each `e^{r_n t} e_{n-l}`. Returns the
/// drift and the largest absolute term, so callers can judge cancellation.
pub fn drift_cancellation_residual(sys: &MartingaleSystem, n: usize, x: &[f64]) -> (f64, f64) {
    let e = esym_all(x);
    let big = sys.n_particles as f64;
    let (p, q) = (sys.p, sys.q);
    let mut total = 0.0;
    let mut scale: f64 = 0.0;
    for l in 0..=n {
        let c = sys.transfer[n][n - l];
        let m = (n - l) as i64;
        let mf = m as f64;
        let terms = [
            c * (sys.rates[n] - sys.rates[n - l]) * e.get(m),
            c * (p - q) * (big - mf + 1.0) * e.get(m - 1),
            -c * (big - mf + 2.0) * (big - mf + 1.0) * e.get(m - 2),
        ];
        for t in terms {
            total += t;
            scale = scale.max(t.abs());
        }
    }
    (total, scale)
}

/// `q_n(x) = e_n(x) + sum_{l=1}^n c_{n,l} e_{n-l}(x)`.
pub fn q_n_eval(sys: &MartingaleSystem, n: usize, x: &[f64]) -> f64 {
    let e = esym_all(x);
    q_n_from_esym(sys, n, &e)
}

pub fn q_n_from_esym(sys: &MartingaleSystem, n: usize, e: &ESymVector) -> f64 {
    sys.transfer[n][..=n].iter().zip(e.values()).map(|(t, v)| t * v).sum()
}

/// `E[e(X_t)] = T^{-1} diag(e^{-r_n t}) T e(x0)` for the normalized process.
///
/// For the original clock `X_t = X~_{kappa t}` pass `kappa * t`.
pub fn expected_esym_curve(sys: &MartingaleSystem, x0: &[f64], t: f64) -> ESymVector {
    let e0 = esym_all(x0);
    let decayed: Vec<f64> = sys
        .apply(e0.values())
        .into_iter()
        .zip(&sys.rates)
        .map(|(v, r)| v * (-r * t).exp())
        .collect();
    ESymVector::from_values(sys.solve_lower(&decayed))
}

/// Rising factorial `(a)_k`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a + i as f64))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

/// `e_n(z)` at the zeros of `P_N^(alpha, beta)`, from the coefficient
/// expansion of `P_N` around `y = 1`:
///
/// `2^N / binom(2N+a+b, N) * sum_{l=N-n}^N (-1)^{N-l} binom(N,l) binom(l,N-n) (N+a+b+1)_l (a+l+1)_{N-l} / (N! 2^l)`.
pub fn esym_at_z(n_particles: usize, alpha: f64, beta: f64) -> Result<ESymVector> {
    if !(alpha > -1.0) || !(beta > -1.0) {
        return Err(Error::Domain(format!(
            "Jacobi indices must satisfy alpha, beta > -1, got ({alpha}, {beta})"
        )));
    }
    let big = n_particles;
    let ab = alpha + beta;
    // 2^N / binom(2N+a+b, N) = prod_j 2 j / (N + a + b + j)
    let prefactor = (1..=big).fold(1.0, |acc, j| {
        acc * 2.0 * j as f64 / (big as f64 + ab + j as f64)
    });
    if !prefactor.is_finite() {
        return Err(Error::Domain(format!("binomial pole at N={big}, alpha+beta={ab}")));
    }
    let factorial: f64 = (1..=big).map(|j| j as f64).product();
    let mut values = Vec::with_capacity(big + 1);
    for n in 0..=big {
        let mut sum = 0.0;
        for l in (big - n)..=big {
            let sign = if (big - l).is_multiple_of(2) { 1.0 } else { -1.0 };
            sum += sign
                * binomial(big, l)
                * binomial(l, big - n)
                * pochhammer(big as f64 + ab + 1.0, l)
                * pochhammer(alpha + l as f64 + 1.0, big - l)
                / (factorial * 2f64.powi(l as i32));
        }
        values.push(prefactor * sum);
    }
    Ok(ESymVector::from_values(values))
}

/// The simplified `alpha = beta` formulas as published, for comparison
/// with [`esym_at_z`]. `N = 2R`: `e_{2m} = (-1)^m R! m!/(R-m)! (2R+a+1/2-m)_m / (1/2+R-m)_m`
/// and zero at odd index; `N = 2R+1`: `e_{2m+1}` with `3/2` in place of `1/2`
/// and zero at even index.
pub fn remark45_parity(n_particles: usize, alpha: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let even_n = n_particles.is_multiple_of(2);
    let r = n_particles / 2;
    let (m, shift) = match (even_n, n.is_multiple_of(2)) {
        (true, true) => (n / 2, 0.5),
        (false, false) => ((n - 1) / 2, 1.5),
        _ => return 0.0,
    };
    if m > r {
        return 0.0;
    }
    let fact = |k: usize| (1..=k).fold(1.0, |acc, i| acc * i as f64);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let rf = r as f64;
    let mf = m as f64;
    sign * fact(r) * fact(m) / fact(r - m) * pochhammer(2.0 * rf + alpha + shift - mf, m)
        / pochhammer(shift + rf - mf, m)
}

/// `E[prod_i (y - X_i)]` for the process started at the Jacobi zeros, i.e.
/// the monic `P_N^(alpha, beta)` at `y`.
pub fn expected_charpoly(n_particles: usize, alpha: f64, beta: f64, y: f64) -> Result<f64> {
    Ok(monic_jacobi(n_particles, alpha, beta)?.eval(y))
}
