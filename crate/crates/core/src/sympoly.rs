//! Elementary symmetric polynomials `e_0, ..., e_N` and the characteristic
//! polynomial they encode: `prod_j (y - x_j) = sum_n (-1)^n e_n(x) y^(N-n)`.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values `(e_0(x), ..., e_N(x))` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ESymVector(Vec<f64>);

impl ESymVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        ESymVector(values)
    }

    /// Number of variables `N`.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    /// `e_n` with `e_n = 0` for `n < 0` or `n > N`.
    pub fn get(&self, n: i64) -> f64 {
        if n < 0 {
            return 0.0;
        }
        self.0.get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for ESymVector {
    type Output = f64;

    fn index(&self, n: usize) -> &f64 {
        &self.0[n]
    }
}

fn esym_iter<'a>(xs: impl Iterator<Item = &'a f64>, len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len + 1];
    e[0] = 1.0;
    for (m, &x) in xs.enumerate() {
        // after this pass e holds the values for the first m + 1 variables
        for n in (1..=m + 1).rev() {
            e[n] += x * e[n - 1];
        }
    }
    e
}

/// All elementary symmetric values, adding one variable at a time.
pub fn esym_all(x: &[f64]) -> ESymVector {
    ESymVector(esym_iter(x.iter(), x.len()))
}

/// Elementary symmetric values of `x` with coordinate `j` (0-based) removed.
pub fn esym_leave_one_out(x: &[f64], j: usize) -> Result<ESymVector> {
    if j >= x.len() {
        return Err(Error::IndexOutOfRange { index: j, len: x.len() });
    }
    let rest = x.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, v)| v);
    Ok(ESymVector(esym_iter(rest, x.len() - 1)))
}

/// `G[n][i] = d e_n / d x_i = e_{n-1}(x without x_i)` for `n = 0..=N`.
///
/// Every `e_n` is affine in each single coordinate, so `d^2 e_n / d x_i^2 = 0`.
pub fn esym_gradient(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut grad = vec![vec![0.0; n]; n + 1];
    for i in 0..n {
        let loo = esym_leave_one_out(x, i).expect("index in range");
        for deg in 1..=n {
            grad[deg][i] = loo[deg - 1];
        }
    }
    grad
}

/// `sum_n (-1)^n e_n y^(N-n)`, evaluated by Horner's rule.
pub fn charpoly_from_esym(e: &ESymVector, y: f64) -> f64 {
    e.values()
        .iter()
        .enumerate()
        .fold(0.0, |acc, (n, &en)| {
            let signed = if n % 2 == 0 { en } else { -en };
            acc * y + signed
        })
}
