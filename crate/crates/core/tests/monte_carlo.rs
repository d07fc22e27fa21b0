use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use jacobi_lab::dynamics::{euler_step, simulate, Clock, SimulationSpec};
use jacobi_lab::ensemble::{jacobi_weight_cdf, mcmc_sample, moment_estimate, McmcTuning};
use jacobi_lab::harness::{execute, ExperimentConfig, ExperimentKind};
use jacobi_lab::jacobi1d::jacobi_zeros;
use jacobi_lab::martcoef::esym_at_z;
use jacobi_lab::stats::{ks_critical_1pct, ks_statistic, mean_stderr, two_sample_z, Observable};
use jacobi_lab::sympoly::esym_all;
use jacobi_lab::{convert_k_to_pq, Kappa, MultiplicityParams, Params};

#[test]
fn martingales_have_constant_mean() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Martingale);
    cfg.n_particles = Some(3);
    cfg.kappa = Some(Kappa::Finite(2.0));
    cfg.p = Some(5.0);
    cfg.q = Some(5.0);
    cfg.paths = Some(4000);
    cfg.seed = Some(11);
    let report = execute(&cfg).unwrap().report;
    let mart: Vec<_> = report.rows.iter().filter(|r| r.name.starts_with("mart_q_")).collect();
    assert_eq!(mart.len(), 9);
    for row in mart {
        assert!(row.predicted.abs() < 1e-12, "{}: q_n(z) should vanish", row.name);
        assert!(row.zscore.unwrap().abs() <= 3.0, "{row:?}");
    }
}

#[test]
fn martingale_from_off_equilibrium_start() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Martingale);
    cfg.n_particles = Some(2);
    cfg.kappa = Some(Kappa::Finite(1.5));
    cfg.p = Some(4.0);
    cfg.q = Some(6.0);
    cfg.start = Some(jacobi_lab::harness::Start::Point(vec![-0.3, 0.6]));
    cfg.paths = Some(4000);
    cfg.seed = Some(12);
    let report = execute(&cfg).unwrap().report;
    assert!(report.pass(), "{:#?}", report.rows);
}

/// Fine and coarse Euler paths driven by the same Brownian increments.
#[test]
fn halving_dt_moves_moments_by_less_than_one_standard_error() {
    let params = Params::new(3, Kappa::Finite(2.0), 5.0, 5.0).unwrap();
    let x0 = jacobi_zeros(3, 2.0, 2.0).unwrap().into_vec();
    let (dt, horizon, paths): (f64, f64, u64) = (2e-3, 0.5, 2000);
    let steps = (horizon / dt).round() as usize;
    let mut fine_vals = vec![Vec::new(); 4];
    let mut coarse_vals = vec![Vec::new(); 4];
    for m in 0..paths {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        rng.set_stream(m);
        let (mut fine, mut coarse) = (x0.clone(), x0.clone());
        for _ in 0..steps {
            let z1: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let z2: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            fine = euler_step(&params, &fine, dt / 2.0, &z1).into_vec();
            fine = euler_step(&params, &fine, dt / 2.0, &z2).into_vec();
            let z: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| (a + b) / 2f64.sqrt()).collect();
            coarse = euler_step(&params, &coarse, dt, &z).into_vec();
        }
        let (ef, ec) = (esym_all(&fine), esym_all(&coarse));
        for n in 1..=3 {
            fine_vals[n].push(ef.get(n as i64));
            coarse_vals[n].push(ec.get(n as i64));
        }
    }
    for n in 1..=3 {
        let f = mean_stderr(&fine_vals[n]);
        let c = mean_stderr(&coarse_vals[n]);
        assert!((f.estimate - c.estimate).abs() < f.stderr, "n={n}: {f:?} vs {c:?}");
    }
}

#[test]
fn original_clock_is_time_changed_normalized_clock() {
    let kappa = 2.0;
    let params = Params::new(3, Kappa::Finite(kappa), 5.0, 6.0).unwrap();
    let x0 = vec![-0.5, 0.0, 0.4];
    let s = 0.2;
    let original = simulate(
        &params,
        &x0,
        &SimulationSpec { grid: vec![0.0, s], dt: 5e-4, paths: 5000, seed: 41, clock: Clock::Original },
    )
    .unwrap();
    let normalized = simulate(
        &params,
        &x0,
        &SimulationSpec { grid: vec![0.0, kappa * s], dt: 1e-3, paths: 5000, seed: 42, clock: Clock::Normalized },
    )
    .unwrap();
    for n in 1..=3 {
        let a = original.estimate(1, Observable::Esym(n));
        let b = normalized.estimate(1, Observable::Esym(n));
        let z = two_sample_z(&a, &b).unwrap();
        assert!(z.abs() <= 3.0, "n={n}: {a:?} vs {b:?}");
    }
}

/// Long-run SDE moments, MCMC moments and the zeros all agree.
#[test]
fn sde_and_sampler_share_the_stationary_law() {
    let k = MultiplicityParams::new(1.0, 3.0, 1.0).unwrap();
    let params = convert_k_to_pq(&k, 3).unwrap();
    assert!(params.validate().nonattainment);
    let (alpha, beta) = k.alpha_beta();
    let exact = esym_at_z(3, alpha, beta).unwrap();
    let sde = simulate(
        &params,
        &[-0.5, 0.0, 0.5],
        &SimulationSpec { grid: vec![0.0, 3.0], dt: 1e-3, paths: 4000, seed: 51, clock: Clock::Normalized },
    )
    .unwrap();
    let tuning = McmcTuning { burn_in: 2000, ..McmcTuning::default() };
    let sample = mcmc_sample(&k, 3, 20_000, 52, &tuning).unwrap();
    for n in 1..=3 {
        let a = sde.estimate(1, Observable::Esym(n));
        let b = moment_estimate(&sample, Observable::Esym(n)).unwrap();
        assert!(two_sample_z(&a, &b).unwrap().abs() <= 3.0, "n={n}: {a:?} vs {b:?}");
        assert!(a.zscore(exact.get(n as i64)).unwrap().abs() <= 3.0);
        assert!(b.zscore(exact.get(n as i64)).unwrap().abs() <= 3.0);
    }
}

#[test]
fn one_particle_marginal_passes_ks() {
    let k = MultiplicityParams::new(0.5, 1.5, 1.0).unwrap();
    let sample = mcmc_sample(&k, 1, 20_000, 61, &McmcTuning::default()).unwrap();
    let xs: Vec<f64> = sample.iter().map(|x| x[0]).collect();
    let d = ks_statistic(&xs, |x| jacobi_weight_cdf(k.k1 + k.k2 - 0.5, k.k2 - 0.5, x));
    assert!(d < ks_critical_1pct(xs.len()), "D = {d}");
}
