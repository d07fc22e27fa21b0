//! End-to-end checks, one line per criterion. Run with
//! `cargo test --test acceptance`.

#![allow(clippy::needless_range_loop)]

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use jacobi_lab::harness::{execute, report_render, ExperimentConfig, ExperimentKind, Format, ReportRow, RunOutput, Start};
use jacobi_lab::jacobi1d::jacobi_zeros;
use jacobi_lab::martcoef::{esym_at_z, mart_coeffs};
use jacobi_lab::sympoly::esym_all;
use jacobi_lab::Kappa;

const SEED: u64 = 20261019;
const INDICES: [f64; 5] = [-0.5, 0.0, 0.5, 1.5, 3.0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn max_abs_z<'a>(rows: impl IntoIterator<Item = &'a ReportRow>) -> f64 {
    max_of(rows.into_iter().filter_map(|r| r.zscore.map(f64::abs)))
}

fn zeros_electrostatics() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for n in 1..=8 {
        for &a in &INDICES {
            for &b in &INDICES {
                let mut cfg = ExperimentConfig::new(ExperimentKind::Zeros);
                cfg.n_particles = Some(n);
                cfg.alpha = Some(a);
                cfg.beta = Some(b);
                let report = execute(&cfg).expect("zeros run").report;
                all &= report.pass();
                worst = worst.max(max_of(report.rows.iter().map(|r| r.estimate)));
            }
        }
    }
    verdict(all && worst <= 1e-9, format!("max Stieltjes residual {worst:.2e} (tol 1e-9)"))
}

fn coefficient_consistency() -> Verdict {
    let mut worst_q: f64 = 0.0;
    let mut worst_routes: f64 = 0.0;
    let mut all = true;
    for big in 1..=8 {
        for &a in &INDICES {
            for &b in &INDICES {
                let (p, q) = (b + big as f64, a + big as f64);
                let mut cfg = ExperimentConfig::new(ExperimentKind::Coeffs);
                cfg.n_particles = Some(big);
                cfg.p = Some(p);
                cfg.q = Some(q);
                let report = execute(&cfg).expect("coeffs run").report;
                all &= report.pass();
                let q_rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.name.ends_with("(z)")).collect();
                all &= q_rows.len() == big;
                worst_q = worst_q.max(max_of(q_rows.iter().map(|r| r.estimate.abs())));

                let closed = esym_at_z(big, a, b).expect("closed form");
                let vieta = esym_all(jacobi_zeros(big, a, b).expect("zeros").as_slice());
                let mut rec = vec![1.0];
                for n in 1..=big {
                    let c = mart_coeffs(big, n, p, q).expect("coefficients");
                    let e_n = -(1..=n).map(|l| c[l] * rec[n - l]).sum::<f64>();
                    rec.push(e_n);
                }
                for n in 0..=big {
                    let (x, y, z) = (closed.get(n as i64), vieta.get(n as i64), rec[n]);
                    worst_routes = worst_routes.max(max_of([(x - y).abs(), (x - z).abs(), (y - z).abs()]));
                }
            }
        }
    }
    let pass = all && worst_q <= 1e-9 && worst_routes <= 1e-9;
    verdict(pass, format!("max |q_n(z)| {worst_q:.2e}, max three-route gap {worst_routes:.2e} (tol 1e-9)"))
}

fn generator_eigen() -> Verdict {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Eigen);
    cfg.points = Some(100);
    cfg.seed = Some(SEED);
    let report = execute(&cfg).expect("eigen run").report;
    let eigen = report.rows.iter().filter(|r| r.name.starts_with("eigen(")).count();
    let fixed = report.rows.iter().filter(|r| r.name.starts_with("eigen_fixed_pq(")).count();
    let worst = max_of(report.rows.iter().map(|r| r.estimate));
    let pass = report.pass() && eigen == 60 && fixed > 0 && fixed % 3 == 0;
    verdict(
        pass,
        format!("{eigen} (N,k) cases and {fixed} fixed-(p,q) k3 checks, max relative residual {worst:.2e} (tol 1e-9)"),
    )
}

fn ode_limit() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for start in ["zeros", "equispaced"] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ode);
        cfg.n_particles = Some(4);
        cfg.p = Some(5.0);
        cfg.q = Some(7.0);
        cfg.h = Some(1e-4);
        cfg.t_max = Some(1.0);
        cfg.start = Some(Start::Named(start.into()));
        let report = execute(&cfg).expect("ode run").report;
        pass &= report.pass();
        for r in &report.rows {
            if start == "zeros" && r.name == "sup_dist_to_zeros" {
                parts.push(format!("(a) sup|x(t)-z| {:.2e} (tol 1e-8)", r.estimate));
            }
            if start == "equispaced" && r.name == "max_esym_curve_error" {
                parts.push(format!("(b) max|e_n - curve| {:.2e} (tol 1e-6)", r.estimate));
            }
        }
    }
    pass &= parts.len() == 2;
    verdict(pass, parts.join(", "))
}

fn martingale_config(workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Charpoly);
    cfg.n_particles = Some(3);
    cfg.kappa = Some(Kappa::Finite(2.0));
    cfg.p = Some(5.0);
    cfg.q = Some(5.0);
    cfg.start = Some(Start::Named("zeros".into()));
    cfg.dt = Some(1e-3);
    cfg.paths = Some(20_000);
    cfg.t_grid = Some(vec![0.0, 0.25, 0.5, 1.0]);
    cfg.y_values = Some(vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    cfg.esym_abs_floor = Some(0.01);
    cfg.z_threshold = Some(3.0);
    cfg.compare_kappas = Some(vec![Kappa::Finite(1.0), Kappa::Finite(4.0)]);
    cfg.seed = Some(SEED);
    cfg.workers = Some(workers);
    cfg
}

fn is_reference_row(r: &ReportRow) -> bool {
    !r.name.contains("[kappa=") && !r.name.starts_with("kappa_diff")
}

fn martingale_mc(out: &RunOutput, elapsed: Duration) -> Verdict {
    let rows: Vec<&ReportRow> = out.report.rows.iter().filter(|r| is_reference_row(r)).collect();
    let esym = rows.iter().filter(|r| r.name.starts_with("e_")).count();
    let charpoly = rows.iter().filter(|r| r.name.starts_with("charpoly")).count();
    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| format!("{}@t={:?}", r.name, r.t.unwrap_or(0.0))).collect();
    let pass = failed.is_empty() && esym == 9 && charpoly == 15;
    let mut detail = format!(
        "kappa=2, {esym} e_n and {charpoly} charpoly checks, max |z| {:.2}, 3 runs in {:.1}s on one thread",
        max_abs_z(rows.iter().copied()),
        elapsed.as_secs_f64()
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join(" ")));
    }
    verdict(pass, detail)
}

fn kappa_independence(out: &RunOutput) -> Verdict {
    let diffs: Vec<&ReportRow> = out.report.rows.iter().filter(|r| r.name.starts_with("kappa_diff")).collect();
    let failed: Vec<String> = diffs.iter().filter(|r| !r.pass).map(|r| format!("{}@t={:?}", r.name, r.t.unwrap_or(0.0))).collect();
    let others: Vec<&ReportRow> = out.report.rows.iter().filter(|r| r.name.contains("[kappa=")).collect();
    let others_failed = others.iter().filter(|r| !r.pass).count();
    let pass = failed.is_empty() && diffs.len() == 18;
    let mut detail = format!(
        "{} two-sample z (kappa 1 and 4 vs 2), max |z| {:.2}; kappa=1,4 against closed forms: max |z| {:.2}, {} outside 3 SE",
        diffs.len(),
        max_abs_z(diffs.iter().copied()),
        max_abs_z(others.iter().copied()),
        others_failed
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join(" ")));
    }
    verdict(pass, detail)
}

fn stationary_config(n: usize, workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Stationary);
    cfg.n_particles = Some(n);
    cfg.k1 = Some(1.0);
    cfg.k2 = Some(1.0);
    cfg.k3 = Some(1.0);
    cfg.draws = Some(100_000);
    cfg.seed = Some(SEED);
    cfg.workers = Some(workers);
    cfg
}

fn stationary(three: &RunOutput, one: &RunOutput, elapsed: Duration) -> Verdict {
    let cfg = &three.report.summary.config;
    let alpha_beta = (cfg.alpha, cfg.k2.map(|k2| (1.0 + 2.0 * k2) / 2.0 - 1.0));
    let ks = one.report.row("ks_marginal");
    let pass = three.report.pass() && three.report.rows.len() == 3 && one.report.pass() && ks.is_some();
    verdict(
        pass,
        format!(
            "N=3 (alpha, beta)={:?}: max |z| {:.2} over e_1..e_3; N=1 KS D={:.5} vs 1% critical {:.5}; {:.1}s",
            (alpha_beta.0.unwrap_or(f64::NAN), alpha_beta.1.unwrap_or(f64::NAN)),
            max_abs_z(&three.report.rows),
            ks.map_or(f64::NAN, |r| r.estimate),
            ks.map_or(f64::NAN, |r| r.predicted),
            elapsed.as_secs_f64()
        ),
    )
}

fn discrepancy_reports(stationary: &RunOutput) -> Verdict {
    let dir = std::env::temp_dir().join(format!("jacobi-lab-acceptance-{}", std::process::id()));
    let bin = env!("CARGO_BIN_EXE_jacobi-lab");
    let mut found = Vec::new();
    let mut pass = true;
    for (n, p, q, key) in [("1", "3", "5", "recurrence(N=1;n=1;l=1)"), ("2", "5", "5", "closed_form(N=2;n=2;l=2)")] {
        let status = Command::new(bin)
            .args(["coeffs", "--n-particles", n, "--p", p, "--q", q, "--compare-printed", "--out"])
            .arg(&dir)
            .output()
            .expect("run binary");
        pass &= status.status.success();
        let table = std::fs::read_to_string(dir.join("discrepancies.csv")).unwrap_or_default();
        let line = table.lines().find(|l| l.starts_with(key)).map(str::to_string);
        match line {
            Some(l) => {
                let cols: Vec<f64> = l.split(',').skip(1).filter_map(|v| v.parse().ok()).collect();
                let (canonical, printed) = (cols[0], cols[1]);
                pass &= canonical != printed;
                found.push(format!("{key}: canonical {canonical:.4} printed {printed:.4}"));
            }
            None => pass = false,
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    match stationary.report.discrepancies.first() {
        Some(d) => {
            let alpha = stationary.report.summary.config.alpha.unwrap_or(f64::NAN);
            pass &= (d.canonical + 1.0 / (2.0 * alpha + 3.0)).abs() < 1e-12
                && (d.printed + (2.0 * alpha + 3.0)).abs() < 1e-12;
            found.push(format!("{}: canonical {:.4} printed {:.4}", d.name, d.canonical, d.printed));
        }
        None => pass = false,
    }
    verdict(pass, found.join("; "))
}

fn files(out: &RunOutput) -> Vec<u8> {
    let mut bytes = report_render(&out.report, Format::Csv).expect("render");
    for a in &out.artifacts {
        bytes.extend(a.file_name.as_bytes());
        bytes.extend(&a.bytes);
    }
    bytes
}

fn reproducibility(paths_1: &RunOutput, stat_1: &RunOutput) -> Verdict {
    let paths_4 = execute(&martingale_config(4)).expect("martingale run");
    let stat_4 = execute(&stationary_config(3, 4)).expect("stationary run");
    let same_paths = files(paths_1) == files(&paths_4);
    let same_stat = files(stat_1) == files(&stat_4);
    let names: Vec<&str> = paths_1.artifacts.iter().chain(&stat_1.artifacts).map(|a| a.file_name.as_str()).collect();
    verdict(
        same_paths && same_stat,
        format!("1 vs 4 workers, seed {SEED}: path CSVs identical={same_paths}, ensemble CSVs identical={same_stat} ({})", names.join(", ")),
    )
}

fn report(results: &mut Vec<bool>, index: usize, title: &str, started: Instant, v: Verdict) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {index}. {title}: {} [{:.2}s]", v.detail, started.elapsed().as_secs_f64());
    results.push(v.pass);
}

fn main() -> ExitCode {
    let mut results = Vec::new();

    let t = Instant::now();
    report(&mut results, 1, "zeros and electrostatics", t, zeros_electrostatics());
    let t = Instant::now();
    report(&mut results, 2, "coefficient consistency", t, coefficient_consistency());
    let t = Instant::now();
    report(&mut results, 3, "generator eigenfunctions", t, generator_eigen());
    let t = Instant::now();
    report(&mut results, 4, "deterministic limit", t, ode_limit());

    let t = Instant::now();
    let paths = execute(&martingale_config(1)).expect("martingale run");
    let paths_time = t.elapsed();
    report(&mut results, 5, "martingale Monte Carlo", t, martingale_mc(&paths, paths_time));
    let t = Instant::now();
    report(&mut results, 6, "kappa independence", t, kappa_independence(&paths));

    let t = Instant::now();
    let stat3 = execute(&stationary_config(3, 1)).expect("stationary run");
    let stat1 = execute(&stationary_config(1, 1)).expect("stationary run");
    let stat_time = t.elapsed();
    report(&mut results, 7, "stationary ensemble", t, stationary(&stat3, &stat1, stat_time));

    let t = Instant::now();
    report(&mut results, 8, "discrepancy reports", t, discrepancy_reports(&stat3));
    let t = Instant::now();
    report(&mut results, 9, "reproducibility", t, reproducibility(&paths, &stat3));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
