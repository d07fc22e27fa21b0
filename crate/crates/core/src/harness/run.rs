use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, Start};
use super::report::{render_discrepancies, report_render, Discrepancy, Format, ReportRow, VerificationReport};
use crate::dynamics::{
    apply_generator, eigenvalue_lambda_n, esym_moments, ode_integrate, random_interior_point,
    simulate, write_moment_csv, write_trajectory_csv, Clock, PathEnsemble, SimulationSpec,
};
use crate::ensemble::{jacobi_weight_cdf, mcmc_sample, moment_estimate, write_sample_csv, McmcTuning};
use crate::error::{Error, Result};
use crate::jacobi1d::{jacobi_zeros, stieltjes_residual};
use crate::martcoef::{
    drift_cancellation_residual, esym_at_z, expected_charpoly, expected_esym_curve,
    mart_coeffs_printed, q_n_eval, rate_r, remark45_parity, MartingaleSystem,
};
use crate::params::{Kappa, MultiplicityParams, Params};
use crate::stats::{ks_critical_1pct, ks_statistic, two_sample_z, Estimate, Observable};
use crate::sympoly::{charpoly_from_esym, esym_all};

/// A file produced by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(file_name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact { file_name: file_name.into(), bytes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: VerificationReport,
    /// Kind-specific data files, in a fixed order.
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn artifact(&self, file_name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.file_name == file_name)
    }

    /// Writes the artifacts plus `report.csv` and `report.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for a in &self.artifacts {
            std::fs::write(dir.join(&a.file_name), &a.bytes)?;
        }
        std::fs::write(dir.join("report.csv"), report_render(&self.report, Format::Csv)?)?;
        std::fs::write(dir.join("report.json"), report_render(&self.report, Format::Json)?)?;
        Ok(())
    }
}

/// Runs the experiment and, when `out` is given, writes its files there.
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<VerificationReport> {
    let output = execute(config)?;
    if let Some(dir) = out {
        output.write_to(dir)?;
    }
    Ok(output.report)
}

/// Runs the experiment on a pool of `config.workers` threads (or the
/// global pool) and returns the report with its data files.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let resolved = config.resolve()?;
    match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(resolved))
        }
        None => dispatch(resolved),
    }
}

fn dispatch(c: ExperimentConfig) -> Result<RunOutput> {
    match c.kind {
        ExperimentKind::Coeffs => run_coeffs(c),
        ExperimentKind::Zeros => run_zeros(c),
        ExperimentKind::Martingale | ExperimentKind::Charpoly => run_paths(c),
        ExperimentKind::Eigen => run_eigen(c),
        ExperimentKind::Stationary => run_stationary(c),
        ExperimentKind::Ode => run_ode(c),
    }
}

/// Seed of the `index`-th auxiliary run derived from a master seed (SplitMix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn run_coeffs(c: ExperimentConfig) -> Result<RunOutput> {
    let params = c.params()?;
    let (n_big, p, q) = (params.n, params.p, params.q);
    let tol = c.tol();
    let sys = MartingaleSystem::new(n_big, p, q)?;
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed());
    let points: Vec<Vec<f64>> = (0..20).map(|_| random_interior_point(&mut rng, n_big, 1e-3)).collect();
    for n in 1..=n_big {
        let worst = points
            .iter()
            .map(|x| {
                let (total, scale) = drift_cancellation_residual(&sys, n, x);
                total.abs() / scale.max(1.0)
            })
            .fold(0.0, f64::max);
        rows.push(ReportRow::deterministic(format!("drift_cancellation(n={n})"), None, worst, 0.0, tol));
    }
    if params.validate().zeros_start_ok {
        let (alpha, beta) = params.alpha_beta();
        let z = jacobi_zeros(n_big, alpha, beta)?;
        for n in 1..=n_big {
            rows.push(ReportRow::deterministic(
                format!("q_{n}(z)"),
                None,
                q_n_eval(&sys, n, z.as_slice()),
                0.0,
                tol,
            ));
        }
    }

    let mut table = String::from("n,l,c_canonical,c_printed,abs_diff\n");
    let mut discrepancies = Vec::new();
    for n in 1..=n_big {
        let canonical = &sys.q_coeffs(n)[..=n];
        let printed = c.compare_printed.then(|| mart_coeffs_printed(n_big, n, p, q)).transpose()?;
        for l in 0..=n {
            let cl = canonical[n - l];
            let pl = printed.as_ref().map(|pc| pc.recurrence[l]);
            table.push_str(&format!(
                "{n},{l},{cl:?},{},{}\n",
                opt_str(pl),
                opt_str(pl.map(|v| (v - cl).abs()))
            ));
        }
        if let Some(pc) = &printed {
            for l in 1..=n {
                discrepancies.push(Discrepancy::new(
                    format!("recurrence(N={n_big};n={n};l={l})"),
                    canonical[n - l],
                    pc.recurrence[l],
                ));
            }
            if let Some(closed) = &pc.closed_form {
                for l in (2..=n).step_by(2) {
                    discrepancies.push(Discrepancy::new(
                        format!("closed_form(N={n_big};n={n};l={l})"),
                        canonical[n - l],
                        closed[l],
                    ));
                }
            }
        }
    }
    let mut artifacts = vec![Artifact::new("coeffs.csv", table.into_bytes())];
    if c.compare_printed {
        artifacts.push(Artifact::new("discrepancies.csv", render_discrepancies(&discrepancies)));
    }
    Ok(RunOutput { report: VerificationReport::new(c, rows, discrepancies), artifacts })
}

fn run_zeros(c: ExperimentConfig) -> Result<RunOutput> {
    let n = c.n()?;
    let (alpha, beta) = (c.alpha.unwrap_or_default(), c.beta.unwrap_or_default());
    let z = jacobi_zeros(n, alpha, beta)?;
    let residual = stieltjes_residual(z.as_slice(), alpha, beta)?;
    let tol = c.tol();
    let mut table = String::from("index,z,residual\n");
    let mut rows = Vec::new();
    for (j, (zj, rj)) in z.as_slice().iter().zip(&residual).enumerate() {
        table.push_str(&format!("{},{zj:?},{rj:?}\n", j + 1));
        rows.push(ReportRow::deterministic(format!("residual(z_{})", j + 1), None, rj.abs(), 0.0, tol));
    }
    let artifacts = vec![Artifact::new("zeros.csv", table.into_bytes())];
    Ok(RunOutput { report: VerificationReport::new(c, rows, Vec::new()), artifacts })
}

fn start_point(start: &Start, params: &Params) -> Result<Vec<f64>> {
    let n = params.n;
    match start {
        Start::Named(name) if name == "zeros" => {
            let (alpha, beta) = params.alpha_beta();
            if !params.validate().zeros_start_ok {
                return Err(Error::Config(format!(
                    "start at the zeros needs p, q > N - 1, got p={}, q={}",
                    params.p, params.q
                )));
            }
            Ok(jacobi_zeros(n, alpha, beta)?.into_vec())
        }
        Start::Named(name) if name == "equispaced" => {
            Ok((1..=n).map(|i| -1.0 + 2.0 * i as f64 / (n + 1) as f64).collect())
        }
        Start::Named(other) => Err(Error::Config(format!(
            "unknown start {other:?}; use \"zeros\", \"equispaced\" or a list of coordinates"
        ))),
        Start::Point(x) => {
            if x.len() != n {
                return Err(Error::Config(format!("start has {} coordinates, N = {n}", x.len())));
            }
            Ok(x.clone())
        }
    }
}

fn is_zeros_start(start: &Start) -> bool {
    matches!(start, Start::Named(name) if name == "zeros")
}

struct PathRun {
    kappa: Kappa,
    ensemble: PathEnsemble,
    /// Per grid index, the estimates of `e_1..e_N`.
    esym: Vec<Vec<Estimate>>,
}

fn simulate_run(params: &Params, x0: &[f64], c: &ExperimentConfig, seed: u64) -> Result<PathRun> {
    let spec = SimulationSpec {
        grid: c.t_grid.clone().unwrap_or_default(),
        dt: c.dt.unwrap_or_default(),
        paths: c.paths.unwrap_or_default(),
        seed,
        clock: Clock::Normalized,
    };
    let ensemble = simulate(params, x0, &spec)?;
    let esym = (0..spec.grid.len())
        .map(|k| (1..=params.n).map(|n| ensemble.estimate(k, Observable::Esym(n))).collect())
        .collect();
    Ok(PathRun { kappa: params.kappa, ensemble, esym })
}

fn kappa_tag(kappa: Kappa) -> String {
    format!("kappa={kappa}")
}

fn moment_rows(
    c: &ExperimentConfig,
    params: &Params,
    x0: &[f64],
    sys: &MartingaleSystem,
    run: &PathRun,
    tag: &str,
) -> Result<Vec<ReportRow>> {
    let threshold = c.z_threshold();
    let floor = c.esym_abs_floor.unwrap_or(0.0);
    let zeros_start = c.start.as_ref().is_some_and(is_zeros_start);
    let (alpha, beta) = params.alpha_beta();
    let mut rows = Vec::new();
    for (k, &t) in run.ensemble.grid.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let curve = expected_esym_curve(sys, x0, t);
        for n in 1..=params.n {
            let est = run.esym[k][n - 1];
            rows.push(ReportRow::statistical(
                format!("e_{n}{tag}"),
                Some(t),
                est.estimate,
                est.stderr,
                curve.get(n as i64),
                threshold,
                floor,
            ));
        }
        if c.kind == ExperimentKind::Martingale {
            for n in 1..=params.n {
                let growth = (sys.rates[n] * t).exp();
                let est = run.ensemble.estimate_with(k, |x| growth * q_n_eval(sys, n, x));
                rows.push(ReportRow::statistical(
                    format!("mart_q_{n}{tag}"),
                    Some(t),
                    est.estimate,
                    est.stderr,
                    q_n_eval(sys, n, x0),
                    threshold,
                    0.0,
                ));
            }
        }
        for &y in c.y_values.as_deref().unwrap_or_default() {
            let predicted = if zeros_start {
                expected_charpoly(params.n, alpha, beta, y)?
            } else {
                charpoly_from_esym(&curve, y)
            };
            let est = run.ensemble.estimate(k, Observable::CharPoly(y));
            rows.push(ReportRow::statistical(
                format!("charpoly(y={y}){tag}"),
                Some(t),
                est.estimate,
                est.stderr,
                predicted,
                threshold,
                0.0,
            ));
        }
    }
    Ok(rows)
}

fn moments_csv(run: &PathRun) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_moment_csv(&esym_moments(&run.ensemble), &mut bytes)?;
    Ok(bytes)
}

fn run_paths(c: ExperimentConfig) -> Result<RunOutput> {
    let params = c.params()?;
    let x0 = start_point(c.start.as_ref().expect("resolved"), &params)?;
    let sys = MartingaleSystem::new(params.n, params.p, params.q)?;
    let main = simulate_run(&params, &x0, &c, c.seed())?;
    let mut rows = moment_rows(&c, &params, &x0, &sys, &main, "")?;
    let mut artifacts = vec![Artifact::new("moments.csv", moments_csv(&main)?)];
    let threshold = c.z_threshold();
    for (i, &kappa) in c.compare_kappas.iter().flatten().enumerate() {
        let other_params = Params::new(params.n, kappa, params.p, params.q)?;
        let other = simulate_run(&other_params, &x0, &c, derive_seed(c.seed(), i as u64 + 1))?;
        let tag = format!("[{}]", kappa_tag(other.kappa));
        rows.extend(moment_rows(&c, &other_params, &x0, &sys, &other, &tag)?);
        for (k, &t) in main.ensemble.grid.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            for n in 1..=params.n {
                let (a, b) = (other.esym[k][n - 1], main.esym[k][n - 1]);
                let diff = a.estimate - b.estimate;
                let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
                let mut row = ReportRow::statistical(
                    format!("kappa_diff(e_{n};{} vs {})", kappa_tag(other.kappa), kappa_tag(main.kappa)),
                    Some(t),
                    diff,
                    se,
                    0.0,
                    threshold,
                    0.0,
                );
                row.zscore = two_sample_z(&a, &b);
                rows.push(row);
            }
        }
        artifacts.push(Artifact::new(format!("moments_kappa_{kappa}.csv"), moments_csv(&other)?));
    }
    Ok(RunOutput { report: VerificationReport::new(c, rows, Vec::new()), artifacts })
}

const EIGEN_K12: [f64; 2] = [0.5, 1.0];
const EIGEN_K3: [f64; 3] = [0.5, 1.0, 2.0];

/// `max_{x, n} |L_k q_n(x) - lambda_n q_n(x)| / max(1, |lambda_n q_n(x)|)`.
fn eigen_residual(k: &MultiplicityParams, sys: &MartingaleSystem, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=sys.n_particles {
        let lambda = eigenvalue_lambda_n(k, sys.n_particles, n);
        for x in points {
            let lq = apply_generator(k, sys.q_coeffs(n), x)?;
            let rhs = lambda * q_n_eval(sys, n, x);
            worst = worst.max((lq - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn run_eigen(c: ExperimentConfig) -> Result<RunOutput> {
    let tol = c.tol();
    let count = c.points.unwrap_or(100);
    let cases: Vec<(usize, MultiplicityParams)> = match c.n_particles {
        Some(n) if c.k1.is_some() || c.p.is_some() => vec![(n, c.multiplicities()?)],
        _ => {
            let ns: Vec<usize> = match c.n_particles {
                Some(n) => vec![n],
                None => (2..=6).collect(),
            };
            let mut out = Vec::new();
            for &n in &ns {
                for k1 in EIGEN_K12 {
                    for k2 in EIGEN_K12 {
                        for k3 in EIGEN_K3 {
                            out.push((n, MultiplicityParams::new(k1, k2, k3)?));
                        }
                    }
                }
            }
            out
        }
    };
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed());
    for (n_big, k) in &cases {
        let params = crate::params::convert_k_to_pq(k, *n_big)?;
        let sys = MartingaleSystem::new(*n_big, params.p, params.q)?;
        let points: Vec<Vec<f64>> = (0..count).map(|_| random_interior_point(&mut rng, *n_big, 1e-3)).collect();
        let label = format!("N={n_big};k={}/{}/{}", k.k1, k.k2, k.k3);
        rows.push(ReportRow::deterministic(
            format!("eigen({label})"),
            None,
            eigen_residual(k, &sys, &points)?,
            0.0,
            tol,
        ));
        // eigenvalue bookkeeping: -<lambda, lambda + 2 rho> = -k3 r_n
        let gap = (1..=*n_big)
            .map(|n| {
                let a = eigenvalue_lambda_n(k, *n_big, n);
                let b = -k.k3 * rate_r(n, params.p, params.q);
                (a - b).abs() / b.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        rows.push(ReportRow::deterministic(format!("eigenvalue({label})"), None, gap, 0.0, tol));
    }
    // one q_n per (N, p, q), checked against every k3
    let mut seen: Vec<(usize, f64, f64)> = Vec::new();
    for (n_big, k) in &cases {
        let base = crate::params::convert_k_to_pq(k, *n_big)?;
        if seen.iter().any(|&(n, p, q)| n == *n_big && p == base.p && q == base.q) {
            continue;
        }
        seen.push((*n_big, base.p, base.q));
        let sys = MartingaleSystem::new(*n_big, base.p, base.q)?;
        let points: Vec<Vec<f64>> = (0..count).map(|_| random_interior_point(&mut rng, *n_big, 1e-3)).collect();
        for k3 in EIGEN_K3 {
            let kk = Params::new(*n_big, Kappa::Finite(k3), base.p, base.q)?.to_multiplicity()?;
            rows.push(ReportRow::deterministic(
                format!("eigen_fixed_pq(N={n_big};p={};q={};k3={k3})", base.p, base.q),
                None,
                eigen_residual(&kk, &sys, &points)?,
                0.0,
                tol,
            ));
        }
    }
    Ok(RunOutput { report: VerificationReport::new(c, rows, Vec::new()), artifacts: Vec::new() })
}

#[derive(Serialize)]
struct SummaryEntry {
    observable: String,
    estimate: f64,
    stderr: f64,
    predicted: f64,
    zscore: Option<f64>,
}

fn run_stationary(c: ExperimentConfig) -> Result<RunOutput> {
    let n_big = c.n()?;
    let k = c.multiplicities()?;
    let (alpha, beta) = k.alpha_beta();
    let tuning = McmcTuning {
        burn_in: c.burn_in.unwrap_or_default(),
        thin: c.thin.unwrap_or(1),
        chains: c.chains.unwrap_or(1),
        ..McmcTuning::default()
    };
    let sample = mcmc_sample(&k, n_big, c.draws.unwrap_or_default(), c.seed(), &tuning)?;
    let threshold = c.z_threshold();
    let ez = esym_at_z(n_big, alpha, beta)?;
    let mut observables: Vec<(Observable, f64)> =
        (1..=n_big).map(|n| (Observable::Esym(n), ez.get(n as i64))).collect();
    for &y in c.y_values.as_deref().unwrap_or_default() {
        observables.push((Observable::CharPoly(y), expected_charpoly(n_big, alpha, beta, y)?));
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (obs, predicted) in observables {
        let est = moment_estimate(&sample, obs)?;
        let row = ReportRow::statistical(obs.label(), None, est.estimate, est.stderr, predicted, threshold, 0.0);
        summary.push(SummaryEntry {
            observable: obs.label(),
            estimate: est.estimate,
            stderr: est.stderr,
            predicted,
            zscore: row.zscore,
        });
        rows.push(row);
    }
    if n_big == 1 {
        let xs: Vec<f64> = sample.iter().map(|x| x[0]).collect();
        let (a, b) = (k.k1 + k.k2 - 0.5, k.k2 - 0.5);
        let d = ks_statistic(&xs, |x| jacobi_weight_cdf(a, b, x));
        rows.push(ReportRow::upper_bound("ks_marginal", d, ks_critical_1pct(xs.len())));
    }

    let mut discrepancies = Vec::new();
    let a_rem = c.alpha.unwrap_or(alpha);
    let canonical = esym_at_z(2, a_rem, a_rem)?;
    discrepancies.push(Discrepancy::new(
        format!("remark_parity(N=2;alpha={a_rem};n=2)"),
        canonical.get(2),
        remark45_parity(2, a_rem, 2),
    ));
    if alpha == beta && n_big != 2 {
        for n in 1..=n_big {
            discrepancies.push(Discrepancy::new(
                format!("remark_parity(N={n_big};alpha={alpha};n={n})"),
                ez.get(n as i64),
                remark45_parity(n_big, alpha, n),
            ));
        }
    }

    let mut sample_csv = Vec::new();
    write_sample_csv(&sample, &mut sample_csv)?;
    let mut summary_json = serde_json::to_vec_pretty(&summary)?;
    summary_json.push(b'\n');
    let artifacts = vec![
        Artifact::new("sample.csv", sample_csv),
        Artifact::new("summary.json", summary_json),
    ];
    Ok(RunOutput { report: VerificationReport::new(c, rows, discrepancies), artifacts })
}

fn run_ode(c: ExperimentConfig) -> Result<RunOutput> {
    let params = c.params()?;
    let start = c.start.clone().expect("resolved");
    let x0 = start_point(&start, &params)?;
    let traj = ode_integrate(&params, &x0, c.t_max.unwrap_or(1.0), c.h.unwrap_or(1e-4))?;
    let sys = MartingaleSystem::new(params.n, params.p, params.q)?;
    let mut rows = Vec::new();
    if is_zeros_start(&start) {
        let sup = traj
            .states
            .iter()
            .flat_map(|x| x.iter().zip(&x0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        rows.push(ReportRow::deterministic("sup_dist_to_zeros", None, sup, 0.0, c.tol_fixed_point.unwrap_or(1e-8)));
    }
    let mut table = String::from("t");
    for i in 1..=params.n {
        table.push_str(&format!(",x_{i}"));
    }
    table.push('\n');
    let mut worst: f64 = 0.0;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let e = esym_all(x);
        let curve = expected_esym_curve(&sys, &x0, *t);
        for n in 1..=params.n as i64 {
            worst = worst.max((e.get(n) - curve.get(n)).abs());
        }
        table.push_str(&format!("{t:?}"));
        for v in x {
            table.push_str(&format!(",{v:?}"));
        }
        table.push('\n');
    }
    rows.push(ReportRow::deterministic("max_esym_curve_error", None, worst, 0.0, c.tol_curve.unwrap_or(1e-6)));
    let artifacts = vec![Artifact::new("ode.csv", table.into_bytes())];
    Ok(RunOutput { report: VerificationReport::new(c, rows, Vec::new()), artifacts })
}

/// Simulation only: `trajectory.csv` and `moments.csv` for a martingale or
/// charpoly style config, without any verification.
pub fn simulate_artifacts(config: &ExperimentConfig, clock: Clock) -> Result<Vec<Artifact>> {
    let mut c = config.clone();
    if !matches!(c.kind, ExperimentKind::Martingale | ExperimentKind::Charpoly) {
        c.kind = ExperimentKind::Martingale;
    }
    let c = c.resolve()?;
    let body = || -> Result<Vec<Artifact>> {
        let params = c.params()?;
        let x0 = start_point(c.start.as_ref().expect("resolved"), &params)?;
        let spec = SimulationSpec {
            grid: c.t_grid.clone().unwrap_or_default(),
            dt: c.dt.unwrap_or_default(),
            paths: c.paths.unwrap_or_default(),
            seed: c.seed(),
            clock,
        };
        let ens = simulate(&params, &x0, &spec)?;
        let mut trajectory = Vec::new();
        write_trajectory_csv(&ens, &mut trajectory)?;
        let mut moments = Vec::new();
        write_moment_csv(&esym_moments(&ens), &mut moments)?;
        Ok(vec![Artifact::new("trajectory.csv", trajectory), Artifact::new("moments.csv", moments)])
    };
    match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}
