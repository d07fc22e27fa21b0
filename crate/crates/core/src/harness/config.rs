use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{convert_k_to_pq, Kappa, MultiplicityParams, Params};

pub const DEFAULT_TOL_DETERMINISTIC: f64 = 1e-9;
pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Coeffs,
    Zeros,
    Martingale,
    Charpoly,
    Eigen,
    Stationary,
    Ode,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Coeffs => "coeffs",
            ExperimentKind::Zeros => "zeros",
            ExperimentKind::Martingale => "martingale",
            ExperimentKind::Charpoly => "charpoly",
            ExperimentKind::Eigen => "eigen",
            ExperimentKind::Stationary => "stationary",
            ExperimentKind::Ode => "ode",
        }
    }
}

/// Starting configuration of a trajectory experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Start {
    /// `"zeros"`, `"equispaced"`.
    Named(String),
    Point(Vec<f64>),
}

/// Everything a run needs. Unset fields take kind-specific defaults, which
/// [`ExperimentConfig::resolve`] fills in so the report echoes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Kappa>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Start>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_values: Option<Vec<f64>>,
    /// Extra `kappa` values simulated with the same `(p, q)` and compared
    /// against the main run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_kappas: Option<Vec<Kappa>>,
    #[serde(default)]
    pub compare_printed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Random interior points per `(N, k, n)` in the eigen check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_deterministic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_fixed_point: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_curve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_threshold: Option<f64>,
    /// Absolute slack on `e_n` moment checks: pass if `|z| <= threshold`
    /// or `|estimate - predicted| <= esym_abs_floor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esym_abs_floor: Option<f64>,
    /// Thread count; never echoed since results do not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n_particles: None,
            kappa: None,
            p: None,
            q: None,
            k1: None,
            k2: None,
            k3: None,
            alpha: None,
            beta: None,
            start: None,
            dt: None,
            t_grid: None,
            paths: None,
            draws: None,
            seed: None,
            y_values: None,
            compare_kappas: None,
            compare_printed: false,
            burn_in: None,
            thin: None,
            chains: None,
            t_max: None,
            h: None,
            points: None,
            tol_deterministic: None,
            tol_fixed_point: None,
            tol_curve: None,
            z_threshold: None,
            esym_abs_floor: None,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn need<T: Copy>(&self, value: Option<T>, field: &str) -> Result<T> {
        value.ok_or_else(|| {
            Error::Config(format!("kind {} requires `{field}`", self.kind.name()))
        })
    }

    pub fn n(&self) -> Result<usize> {
        let n = self.need(self.n_particles, "n_particles")?;
        if n == 0 {
            return Err(Error::Config("n_particles must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol_deterministic.unwrap_or(DEFAULT_TOL_DETERMINISTIC)
    }

    pub fn z_threshold(&self) -> f64 {
        self.z_threshold.unwrap_or(DEFAULT_Z_THRESHOLD)
    }

    fn k_triple(&self) -> Option<Result<MultiplicityParams>> {
        match (self.k1, self.k2, self.k3) {
            (Some(k1), Some(k2), Some(k3)) => Some(MultiplicityParams::new(k1, k2, k3)),
            (None, None, None) => None,
            _ => Some(Err(Error::Config("give all of k1, k2, k3 or none".into()))),
        }
    }

    /// `(N, kappa, p, q)` from either `kappa, p, q` or `k1, k2, k3`.
    pub fn params(&self) -> Result<Params> {
        let n = self.n()?;
        if let Some(k) = self.k_triple() {
            if self.p.is_some() || self.q.is_some() {
                return Err(Error::Config("give either p, q or k1, k2, k3, not both".into()));
            }
            return convert_k_to_pq(&k?, n);
        }
        let p = self.need(self.p, "p")?;
        let q = self.need(self.q, "q")?;
        let kappa = match self.kind {
            ExperimentKind::Ode => match self.kappa {
                None | Some(Kappa::Infinite) => Kappa::Infinite,
                Some(k) => {
                    return Err(Error::Config(format!("kind ode runs at kappa = inf, got {k}")))
                }
            },
            ExperimentKind::Coeffs => self.kappa.unwrap_or(Kappa::Infinite),
            _ => self.need(self.kappa, "kappa")?,
        };
        Params::new(n, kappa, p, q)
    }

    /// `(k1, k2, k3)` given directly or converted from `kappa, p, q`.
    pub fn multiplicities(&self) -> Result<MultiplicityParams> {
        match self.k_triple() {
            Some(k) => k,
            None => self.params()?.to_multiplicity(),
        }
    }

    /// Copy with every default made explicit.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        c.seed = Some(self.seed());
        c.tol_deterministic = Some(self.tol());
        match c.kind {
            ExperimentKind::Coeffs => {
                let params = c.params()?;
                c.kappa = Some(params.kappa);
            }
            ExperimentKind::Zeros => {
                c.n()?;
                c.need(c.alpha, "alpha")?;
                c.need(c.beta, "beta")?;
            }
            ExperimentKind::Martingale | ExperimentKind::Charpoly => {
                let params = c.params()?;
                if c.k_triple().is_none() {
                    c.kappa = Some(params.kappa);
                }
                c.start.get_or_insert(Start::Named("zeros".into()));
                c.t_grid.get_or_insert(vec![0.0, 0.25, 0.5, 1.0]);
                c.dt.get_or_insert(crate::dynamics::default_dt(&params));
                c.paths.get_or_insert(20_000);
                c.z_threshold.get_or_insert(DEFAULT_Z_THRESHOLD);
                c.esym_abs_floor.get_or_insert(0.01);
                if c.kind == ExperimentKind::Charpoly {
                    c.y_values.get_or_insert(vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
                }
            }
            ExperimentKind::Eigen => {
                c.points.get_or_insert(100);
            }
            ExperimentKind::Stationary => {
                let k = c.multiplicities()?;
                c.n()?;
                c.k1 = Some(k.k1);
                c.k2 = Some(k.k2);
                c.k3 = Some(k.k3);
                c.kappa = None;
                c.p = None;
                c.q = None;
                let defaults = crate::ensemble::McmcTuning::default();
                c.draws.get_or_insert(100_000);
                c.burn_in.get_or_insert(defaults.burn_in);
                c.thin.get_or_insert(defaults.thin);
                c.chains.get_or_insert(defaults.chains);
                c.z_threshold.get_or_insert(DEFAULT_Z_THRESHOLD);
                if c.alpha.is_none() {
                    c.alpha = Some(k.alpha_beta().0);
                }
            }
            ExperimentKind::Ode => {
                let params = c.params()?;
                c.kappa = Some(params.kappa);
                c.start.get_or_insert(Start::Named("zeros".into()));
                c.t_max.get_or_insert(1.0);
                c.h.get_or_insert(1e-4);
                c.tol_fixed_point.get_or_insert(1e-8);
                c.tol_curve.get_or_insert(1e-6);
            }
        }
        Ok(c)
    }
}
