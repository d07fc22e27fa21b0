use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jacobi_lab::dynamics::Clock;
use jacobi_lab::harness::{
    execute, report_render, simulate_artifacts, Artifact, ExperimentConfig, ExperimentKind, Format,
    RunOutput, Start,
};
use jacobi_lab::{Error, Kappa};

#[derive(Parser)]
#[command(name = "jacobi-lab", version, about = "Beta-Jacobi diffusions on the alcove: coefficients, zeros, simulation and checks")]
struct Cli {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Martingale coefficients c_{n,l}.
    Coeffs {
        #[command(flatten)]
        params: Overrides,
    },
    /// Zeros of P_N^(alpha, beta) with their electrostatic residuals.
    Zeros {
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
    },
    /// Euler-Maruyama paths: trajectory and moment CSVs.
    Simulate {
        #[arg(long, value_enum, default_value_t = ClockArg::Normalized)]
        clock: ClockArg,
        #[command(flatten)]
        params: Overrides,
    },
    /// Run a verification experiment and print its report.
    Verify {
        #[arg(value_enum)]
        kind: VerifyKind,
        #[command(flatten)]
        params: Overrides,
    },
    /// MCMC draws from the stationary ensemble with a moment summary.
    SampleEnsemble {
        #[command(flatten)]
        params: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Normalized,
    Original,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Martingale,
    Charpoly,
    Eigen,
    Stationary,
    Ode,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    n_particles: Option<usize>,
    /// Positive number or `inf`.
    #[arg(long)]
    kappa: Option<Kappa>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// `zeros`, `equispaced` or comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    compare_kappas: Option<Vec<Kappa>>,
    #[arg(long)]
    compare_printed: bool,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    z_threshold: Option<f64>,
}

fn parse_start(s: &str) -> Result<Start, Error> {
    match s {
        "zeros" | "equispaced" => Ok(Start::Named(s.to_string())),
        _ => s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Start::Point)
            .map_err(|_| Error::Config(format!("cannot parse start {s:?}"))),
    }
}

macro_rules! overlay {
    ($cfg:ident, $o:ident, $($field:ident),*) => {
        $( if $o.$field.is_some() { $cfg.$field = $o.$field.clone(); } )*
    };
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), Error> {
        overlay!(
            cfg, self, n_particles, kappa, p, q, k1, k2, k3, alpha, beta, dt, t_grid, paths,
            draws, y_values, compare_kappas, burn_in, thin, chains, t_max, h, points, z_threshold
        );
        if let Some(s) = &self.start {
            cfg.start = Some(parse_start(s)?);
        }
        if self.tol.is_some() {
            cfg.tol_deterministic = self.tol;
        }
        if self.compare_printed {
            cfg.compare_printed = true;
        }
        Ok(())
    }
}

fn base_config(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::new(kind),
    };
    cfg.kind = kind;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg)
}

fn write_outputs(dir: Option<&Path>, artifacts: &[Artifact]) -> Result<(), Error> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        for a in artifacts {
            std::fs::write(dir.join(&a.file_name), &a.bytes)?;
        }
    }
    Ok(())
}

fn emit(bytes: &[u8]) -> Result<(), Error> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(bytes)?;
    stdout.flush()?;
    Ok(())
}

fn verdict(output: &RunOutput) -> ExitCode {
    if output.report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Runs and prints `primary` (an artifact) or the report when `primary` is `None`.
fn run_and_emit(cli: &Cli, cfg: ExperimentConfig, primary: Option<&str>) -> Result<ExitCode, Error> {
    let output = execute(&cfg)?;
    if let Some(dir) = &cli.out {
        output.write_to(dir)?;
    }
    match primary.and_then(|name| output.artifact(name)) {
        Some(a) => emit(&a.bytes)?,
        None => emit(&report_render(&output.report, cli.format)?)?,
    }
    Ok(verdict(&output))
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Coeffs { params } => {
            let mut cfg = base_config(cli, ExperimentKind::Coeffs)?;
            params.apply(&mut cfg)?;
            run_and_emit(cli, cfg, Some("coeffs.csv"))
        }
        Command::Zeros { degree, alpha, beta } => {
            let mut cfg = base_config(cli, ExperimentKind::Zeros)?;
            if degree.is_some() {
                cfg.n_particles = *degree;
            }
            if alpha.is_some() {
                cfg.alpha = *alpha;
            }
            if beta.is_some() {
                cfg.beta = *beta;
            }
            run_and_emit(cli, cfg, Some("zeros.csv"))
        }
        Command::Simulate { clock, params } => {
            let mut cfg = base_config(cli, ExperimentKind::Martingale)?;
            params.apply(&mut cfg)?;
            let clock = match clock {
                ClockArg::Normalized => Clock::Normalized,
                ClockArg::Original => Clock::Original,
            };
            let artifacts = simulate_artifacts(&cfg, clock)?;
            write_outputs(cli.out.as_deref(), &artifacts)?;
            if cli.out.is_none() {
                emit(&artifacts[1].bytes)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { kind, params } => {
            let kind = match kind {
                VerifyKind::Martingale => ExperimentKind::Martingale,
                VerifyKind::Charpoly => ExperimentKind::Charpoly,
                VerifyKind::Eigen => ExperimentKind::Eigen,
                VerifyKind::Stationary => ExperimentKind::Stationary,
                VerifyKind::Ode => ExperimentKind::Ode,
            };
            let mut cfg = base_config(cli, kind)?;
            params.apply(&mut cfg)?;
            run_and_emit(cli, cfg, None)
        }
        Command::SampleEnsemble { params } => {
            let mut cfg = base_config(cli, ExperimentKind::Stationary)?;
            params.apply(&mut cfg)?;
            run_and_emit(cli, cfg, Some("summary.json"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("jacobi-lab: {e}");
            if e.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
