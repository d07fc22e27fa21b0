//! Trajectories of the Jacobi process on the alcove
//! `A_N = { -1 <= x_1 <= ... <= x_N <= 1 }`.
//!
//! The normalized process solves
//!
//! ```text
//! dX_i = sqrt(2/kappa) sqrt(1 - X_i^2) dB_i
//!        + ((p-q) - (p+q) X_i + 2 sum_{j != i} (1 - X_i X_j)/(X_i - X_j)) dt
//! ```
//!
//! and the original one is `X_t = X~_{kappa t}`. Paths are advanced by
//! Euler-Maruyama with a clamp-and-sort boundary policy; `kappa = inf` is
//! integrated with classical RK4.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Kappa, MultiplicityParams, Params};
use crate::sympoly::esym_gradient;
use crate::stats::{mean_stderr, Estimate, Observable};

/// Distance kept from the walls `x = ±1` after each step.
pub const BOUNDARY_EPS: f64 = 1e-12;
/// Minimum spacing enforced between neighbours before a drift evaluation.
pub const TIE_GAP: f64 = 1e-10;

/// A point of the alcove: ordered coordinates in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlcovePoint(Vec<f64>);

impl AlcovePoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParams("alcove point needs at least one coordinate".into()));
        }
        if x.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidParams(format!("coordinates outside [-1, 1]: {x:?}")));
        }
        if x.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParams(format!("coordinates not ordered: {x:?}")));
        }
        Ok(AlcovePoint(x))
    }

    /// Strict inequalities everywhere.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|v| v.abs() < 1.0) && self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Algebraically equivalent ways of writing the normalized drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftForm {
    /// `(p-q) - (p+q)x_i + sum_j ((1+x_i)(1-x_j) + (1+x_j)(1-x_i))/(x_i - x_j)`.
    ProductPairs,
    /// `(p-q) - (p+q)x_i + 2 sum_j (1 - x_i x_j)/(x_i - x_j)`.
    Pairwise,
    /// `(p-q) + (2(N-1) - (p+q))x_i + 2 sum_j (1 - x_i^2)/(x_i - x_j)`.
    Linearized,
    /// `2(1-x_i^2) [ (p-N+1)/(2(x_i+1)) + (q-N+1)/(2(x_i-1)) + sum_j 1/(x_i - x_j) ]`.
    Factorized,
}

fn check_distinct(x: &[f64]) -> Result<()> {
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] == x[j] {
                return Err(Error::Singular(format!("coordinates {i} and {j} coincide at {}", x[i])));
            }
        }
    }
    Ok(())
}

/// Drift of the normalized process.
pub fn drift(params: &Params, x: &[f64]) -> Result<Vec<f64>> {
    drift_with(DriftForm::Pairwise, params, x)
}

pub fn drift_with(form: DriftForm, params: &Params, x: &[f64]) -> Result<Vec<f64>> {
    check_distinct(x)?;
    let (p, q) = (params.p, params.q);
    let big = x.len() as f64;
    let out = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let others = x.iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, &xj)| xj);
            match form {
                DriftForm::ProductPairs => {
                    let s: f64 = others
                        .map(|xj| ((1.0 + xi) * (1.0 - xj) + (1.0 + xj) * (1.0 - xi)) / (xi - xj))
                        .sum();
                    (p - q) - (p + q) * xi + s
                }
                DriftForm::Pairwise => {
                    let s: f64 = others.map(|xj| (1.0 - xi * xj) / (xi - xj)).sum();
                    (p - q) - (p + q) * xi + 2.0 * s
                }
                DriftForm::Linearized => {
                    let s: f64 = others.map(|xj| 1.0 / (xi - xj)).sum();
                    (p - q) + (2.0 * (big - 1.0) - (p + q)) * xi + 2.0 * (1.0 - xi * xi) * s
                }
                DriftForm::Factorized => {
                    let s: f64 = others.map(|xj| 1.0 / (xi - xj)).sum();
                    let walls = (p - (big - 1.0)) / (2.0 * (xi + 1.0))
                        + (q - (big - 1.0)) / (2.0 * (xi - 1.0));
                    2.0 * (1.0 - xi * xi) * (walls + s)
                }
            }
        })
        .collect();
    Ok(out)
}

/// Time parametrization of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// `X~_t`: unit drift, diffusion `sqrt(2/kappa)`.
    Normalized,
    /// `X_t`: drift scaled by `kappa`, diffusion `sqrt(2)`.
    Original,
}

/// How often the boundary policy intervened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyCounts {
    pub clamps: u64,
    pub tie_spreads: u64,
}

impl PolicyCounts {
    fn add(&mut self, other: PolicyCounts) {
        self.clamps += other.clamps;
        self.tie_spreads += other.tie_spreads;
    }
}

/// Sorts, clamps into `[-1+eps, 1-eps]` and separates neighbours closer
/// than [`TIE_GAP`].
fn enforce_policy(x: &mut [f64], counts: &mut PolicyCounts) {
    let lo = -1.0 + BOUNDARY_EPS;
    let hi = 1.0 - BOUNDARY_EPS;
    for v in x.iter_mut() {
        if !(*v >= lo) {
            *v = lo;
            counts.clamps += 1;
        } else if *v > hi {
            *v = hi;
            counts.clamps += 1;
        }
    }
    x.sort_by(f64::total_cmp);
    for i in 1..x.len() {
        if x[i] - x[i - 1] < TIE_GAP {
            x[i] = x[i - 1] + TIE_GAP;
            counts.tie_spreads += 1;
        }
    }
    if let Some(last) = x.last_mut() {
        if *last > hi {
            *last = hi;
            for i in (0..x.len() - 1).rev() {
                if x[i + 1] - x[i] < TIE_GAP {
                    x[i] = x[i + 1] - TIE_GAP;
                }
            }
        }
    }
}

fn step_in_place(
    params: &Params,
    clock: Clock,
    x: &mut [f64],
    dt: f64,
    noise: &[f64],
    counts: &mut PolicyCounts,
) {
    let b = drift(params, x).expect("policy keeps coordinates distinct");
    let (drift_scale, diffusion) = match (clock, params.kappa) {
        (Clock::Normalized, kappa) => (1.0, (2.0 * kappa.recip()).sqrt()),
        (Clock::Original, Kappa::Finite(k)) => (k, 2f64.sqrt()),
        (Clock::Original, Kappa::Infinite) => unreachable!("rejected by simulate"),
    };
    let sq_dt = dt.sqrt();
    for i in 0..x.len() {
        let vol = (1.0 - x[i] * x[i]).max(0.0).sqrt();
        x[i] += drift_scale * b[i] * dt + diffusion * vol * sq_dt * noise[i];
    }
    enforce_policy(x, counts);
}

/// One Euler-Maruyama step of the normalized process followed by the
/// clamp-and-sort boundary policy. `noise` holds `N` standard normals.
pub fn euler_step(params: &Params, x: &[f64], dt: f64, noise: &[f64]) -> AlcovePoint {
    let mut next = x.to_vec();
    let mut counts = PolicyCounts::default();
    enforce_policy(&mut next, &mut counts);
    step_in_place(params, Clock::Normalized, &mut next, dt, noise, &mut counts);
    AlcovePoint(next)
}

/// `min(1e-3, 0.1 / (p + q))`.
pub fn default_dt(params: &Params) -> f64 {
    (0.1 / (params.p + params.q)).min(1e-3)
}

/// What to simulate: record grid, step size, path count and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub grid: Vec<f64>,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMeta {
    pub dt: f64,
    pub boundary_eps: f64,
    pub tie_gap: f64,
    pub kappa: Kappa,
    pub p: f64,
    pub q: f64,
    pub clock: Clock,
    pub policy: PolicyCounts,
}

/// `paths × grid × N` states recorded on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub n_particles: usize,
    pub paths: usize,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub meta: SchemeMeta,
    states: Vec<f64>,
}

impl PathEnsemble {
    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let n = self.n_particles;
        let start = (path * self.grid.len() + k) * n;
        &self.states[start..start + n]
    }

    /// Mean of `f` over paths at grid index `k`, with its standard error.
    pub fn estimate_with(&self, k: usize, f: impl Fn(&[f64]) -> f64) -> Estimate {
        let values: Vec<f64> = (0..self.paths).map(|m| f(self.state(m, k))).collect();
        mean_stderr(&values)
    }

    pub fn estimate(&self, k: usize, obs: Observable) -> Estimate {
        self.estimate_with(k, |x| obs.eval(x))
    }
}

/// Per-path random stream: ChaCha8 keyed by the master seed, one stream
/// per path index, so a path's noise never depends on scheduling.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// `M` independent paths, recorded at `spec.grid`. Paths run in parallel on
/// the current rayon pool; the output does not depend on the pool size.
pub fn simulate(params: &Params, x0: &[f64], spec: &SimulationSpec) -> Result<PathEnsemble> {
    if !params.validate().valid {
        return Err(Error::InvalidParams(format!(
            "p, q must exceed N - 1 + 1/kappa: {params:?}"
        )));
    }
    if spec.clock == Clock::Original && params.kappa.is_infinite() {
        return Err(Error::InvalidParams("original clock needs finite kappa".into()));
    }
    let start = AlcovePoint::new(x0.to_vec())?;
    if !start.is_interior() || x0.len() != params.n {
        return Err(Error::InvalidParams(format!("start must be an interior point of A_{}", params.n)));
    }
    if !(spec.dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {}", spec.dt)));
    }
    if spec.grid.first() != Some(&0.0) || spec.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("grid must start at 0 and increase".into()));
    }
    if spec.paths == 0 {
        return Err(Error::InvalidParams("need at least one path".into()));
    }
    // steps per grid interval, rounded up so no step exceeds dt
    let plan: Vec<(usize, f64)> = spec
        .grid
        .windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            let steps = ((len / spec.dt) - 1e-9).ceil().max(1.0) as usize;
            (steps, len / steps as f64)
        })
        .collect();
    let n = params.n;
    let per_path: Vec<(Vec<f64>, PolicyCounts)> = (0..spec.paths)
        .into_par_iter()
        .map(|m| {
            let mut rng = path_rng(spec.seed, m as u64);
            let mut counts = PolicyCounts::default();
            let mut x = x0.to_vec();
            let mut record = Vec::with_capacity(spec.grid.len() * n);
            record.extend_from_slice(&x);
            let mut noise = vec![0.0; n];
            for &(steps, h) in &plan {
                for _ in 0..steps {
                    for z in noise.iter_mut() {
                        *z = StandardNormal.sample(&mut rng);
                    }
                    step_in_place(params, spec.clock, &mut x, h, &noise, &mut counts);
                }
                record.extend_from_slice(&x);
            }
            (record, counts)
        })
        .collect();
    let mut states = Vec::with_capacity(spec.paths * spec.grid.len() * n);
    let mut policy = PolicyCounts::default();
    for (record, counts) in per_path {
        states.extend(record);
        policy.add(counts);
    }
    Ok(PathEnsemble {
        n_particles: n,
        paths: spec.paths,
        grid: spec.grid.clone(),
        seed: spec.seed,
        meta: SchemeMeta {
            dt: spec.dt,
            boundary_eps: BOUNDARY_EPS,
            tie_gap: TIE_GAP,
            kappa: params.kappa,
            p: params.p,
            q: params.q,
            clock: spec.clock,
            policy,
        },
        states,
    })
}

/// CSV with columns `path,t,x_1..x_N`.
pub fn write_trajectory_csv<W: Write>(ens: &PathEnsemble, mut out: W) -> io::Result<()> {
    write!(out, "path,t")?;
    for i in 1..=ens.n_particles {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for m in 0..ens.paths {
        for (k, t) in ens.grid.iter().enumerate() {
            write!(out, "{m},{t:?}")?;
            for v in ens.state(m, k) {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
}

/// `E[e_n(X_t)]` estimates for every grid time and `n = 0..=N`.
pub fn esym_moments(ens: &PathEnsemble) -> Vec<MomentRow> {
    let mut rows = Vec::new();
    for (k, &t) in ens.grid.iter().enumerate() {
        for n in 0..=ens.n_particles {
            let est = ens.estimate(k, Observable::Esym(n));
            rows.push(MomentRow { t, n, estimate: est.estimate, stderr: est.stderr });
        }
    }
    rows
}

/// CSV with columns `t,n,estimate,stderr`.
pub fn write_moment_csv<W: Write>(rows: &[MomentRow], mut out: W) -> io::Result<()> {
    writeln!(out, "t,n,estimate,stderr")?;
    for r in rows {
        writeln!(out, "{:?},{},{:?},{:?}", r.t, r.n, r.estimate, r.stderr)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

const ODE_HALVINGS: u32 = 12;

fn rk4_step(params: &Params, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(u, v)| u + s * v).collect()
    };
    let k1 = drift(params, x)?;
    let k2 = drift(params, &axpy(x, h / 2.0, &k1))?;
    let k3 = drift(params, &axpy(x, h / 2.0, &k2))?;
    let k4 = drift(params, &axpy(x, h, &k3))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn rk4_adaptive(params: &Params, x: &[f64], h: f64, depth: u32) -> Result<Vec<f64>> {
    match rk4_step(params, x, h) {
        Ok(next) if next.windows(2).all(|w| w[0] < w[1]) => Ok(next),
        Ok(_) | Err(Error::Singular(_)) if depth < ODE_HALVINGS => {
            let mid = rk4_adaptive(params, x, h / 2.0, depth + 1)?;
            rk4_adaptive(params, &mid, h / 2.0, depth + 1)
        }
        Ok(_) => Err(Error::NoConvergence(format!(
            "RK4 lost the ordering of the coordinates after {ODE_HALVINGS} halvings"
        ))),
        Err(e) => Err(e),
    }
}

/// Classical RK4 for `dx/dt = drift(x)`, the `kappa = inf` process.
/// Steps that would tie coordinates are retried with halved step size.
pub fn ode_integrate(params: &Params, x0: &[f64], t_max: f64, h: f64) -> Result<OdeTrajectory> {
    if !params.kappa.is_infinite() {
        return Err(Error::InvalidParams("the deterministic limit needs kappa = inf".into()));
    }
    if !params.validate().zeros_start_ok {
        return Err(Error::InvalidParams(format!("p, q must exceed N - 1: {params:?}")));
    }
    let start = AlcovePoint::new(x0.to_vec())?;
    if !start.is_interior() || x0.len() != params.n {
        return Err(Error::InvalidParams(format!("start must be an interior point of A_{}", params.n)));
    }
    if !(h > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidParams(format!("need h > 0 and t_max >= 0, got {h}, {t_max}")));
    }
    let steps = (t_max / h).round().max(1.0) as usize;
    let h_eff = t_max / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    states.push(x.clone());
    for s in 1..=steps {
        x = rk4_adaptive(params, &x, h_eff, 0)?;
        times.push(s as f64 * h_eff);
        states.push(x.clone());
    }
    Ok(OdeTrajectory { times, states })
}

/// `L_k f(x)` for `f = sum_n coeffs[n] e_n`.
///
/// Each `e_n` is affine in every single coordinate, so the
/// `(1 - x_i^2) d^2/dx_i^2` part vanishes and only the first-order part
/// `sum_i (-k1 - (1+k1+2k2) x_i + 2k3 sum_j (1-x_i^2)/(x_i-x_j)) df/dx_i`
/// contributes.
pub fn apply_generator(k: &MultiplicityParams, coeffs: &[f64], x: &[f64]) -> Result<f64> {
    check_distinct(x)?;
    let n = x.len();
    if coeffs.len() > n + 1 {
        return Err(Error::InvalidParams(format!(
            "{} coefficients for polynomials in {n} variables",
            coeffs.len()
        )));
    }
    let grad = esym_gradient(x);
    let mut total = 0.0;
    for i in 0..n {
        let xi = x[i];
        let interaction: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| (1.0 - xi * xi) / (xi - x[j]))
            .sum();
        let b = -k.k1 - (1.0 + k.k1 + 2.0 * k.k2) * xi + 2.0 * k.k3 * interaction;
        let df: f64 = coeffs.iter().enumerate().map(|(deg, c)| c * grad[deg][i]).sum();
        total += b * df;
    }
    Ok(total)
}

/// Uniform random point of the alcove interior with neighbours at least
/// `min_gap` apart (rejection sampling).
pub fn random_interior_point<R: rand::Rng>(rng: &mut R, n: usize, min_gap: f64) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        x.sort_by(f64::total_cmp);
        let spaced = x.windows(2).all(|w| w[1] - w[0] >= min_gap);
        let inside = x.iter().all(|v| 1.0 - v.abs() >= min_gap);
        if spaced && inside {
            return x;
        }
    }
}

/// `-<lambda(n), lambda(n) + 2 rho(k)>` for `lambda(n) = (1^n, 0^{N-n})`.
pub fn eigenvalue_lambda_n(k: &MultiplicityParams, n_particles: usize, n: usize) -> f64 {
    let rho = k.rho(n_particles);
    -(0..n).map(|i| 1.0 + 2.0 * rho[i]).sum::<f64>()
}
