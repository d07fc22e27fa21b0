//! Numerical laboratory for beta-Jacobi diffusions on the alcove
//! `A_N = { -1 <= x_1 <= ... <= x_N <= 1 }`.
//!
//! The process solves
//! `dX_i = sqrt(2(1-X_i^2)) dB_i + kappa((p-q) - (p+q)X_i + 2 sum_{j!=i} (1-X_iX_j)/(X_i-X_j)) dt`.
//! Suitable combinations `q_n` of elementary symmetric polynomials give
//! martingales `e^{r_n t} q_n(X_t)` whose coefficients do not involve
//! `kappa`; started at the zeros of `P_N^(q-N, p-N)` the expected
//! characteristic polynomial stays equal to the monic Jacobi polynomial.
//! The modules here compute those objects and check them against
//! simulation, ODE integration and sampling of the stationary ensemble.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod jacobi1d;
pub mod martcoef;
pub mod params;
pub mod stats;
pub mod sympoly;

pub use error::{Error, Result};
pub use params::{convert_k_to_pq, Kappa, MultiplicityParams, Params, RegimeReport};
