//! Parameter triples for the Jacobi process and the conversions between
//! the multiplicity coordinates `(k1, k2, k3)`, the SDE coordinates
//! `(kappa, p, q)` and the classical Jacobi indices `(alpha, beta)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Inverse temperature of the diffusion. `Infinite` is the deterministic
/// limit in which the SDE degenerates to an ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Finite(f64),
    Infinite,
}

impl Kappa {
    /// `1/kappa`, with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Kappa::Finite(k) => 1.0 / k,
            Kappa::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Kappa::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Kappa::Finite(k) => Some(k),
            Kappa::Infinite => None,
        }
    }

    fn is_positive(self) -> bool {
        match self {
            Kappa::Finite(k) => k > 0.0 && k.is_finite(),
            Kappa::Infinite => true,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(k) => write!(f, "{k}"),
            Kappa::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Kappa::Infinite),
            other => {
                let k: f64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("cannot parse kappa from {s:?}")))?;
                if k.is_infinite() && k > 0.0 {
                    Ok(Kappa::Infinite)
                } else {
                    Ok(Kappa::Finite(k))
                }
            }
        }
    }
}

// JSON has no infinity literal, so the deterministic limit travels as "inf".
impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Finite(k) => serializer.serialize_f64(*k),
            Kappa::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(k) => Ok(Kappa::Finite(k)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `(N, kappa, p, q)` for the process on the alcove with `N` particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub kappa: Kappa,
    pub p: f64,
    pub q: f64,
}

/// Multiplicities on the roots `e_i`, `2e_i`, `e_i ± e_j` of `BC_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Which parameter regimes a [`Params`] value falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeReport {
    /// `kappa > 0` and `p, q > N - 1 + 1/kappa`.
    pub valid: bool,
    /// `p, q > N - 1`, i.e. `alpha, beta > -1`, so the Jacobi zeros exist.
    pub zeros_start_ok: bool,
    /// `kappa >= 1` and `p, q >= N - 1 + 2/kappa`: the boundary is never hit.
    pub nonattainment: bool,
}

impl Params {
    pub fn new(n: usize, kappa: Kappa, p: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("particle count must be at least 1".into()));
        }
        if !kappa.is_positive() {
            return Err(Error::InvalidParams(format!("kappa must be positive, got {kappa}")));
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::InvalidParams(format!("p and q must be finite, got p={p}, q={q}")));
        }
        Ok(Params { n, kappa, p, q })
    }

    /// `(alpha, beta) = (q - N, p - N)`.
    pub fn alpha_beta(&self) -> (f64, f64) {
        let n = self.n as f64;
        (self.q - n, self.p - n)
    }

    pub fn validate(&self) -> RegimeReport {
        let base = self.n as f64 - 1.0;
        let inv = self.kappa.recip();
        let min_pq = self.p.min(self.q);
        let valid = self.kappa.is_positive() && min_pq > base + inv;
        let kappa_ge_one = match self.kappa {
            Kappa::Finite(k) => k >= 1.0,
            Kappa::Infinite => true,
        };
        RegimeReport {
            valid,
            zeros_start_ok: min_pq > base,
            nonattainment: valid && kappa_ge_one && min_pq >= base + 2.0 * inv,
        }
    }

    /// Inverse of [`convert_k_to_pq`]; needs a finite `kappa`.
    pub fn to_multiplicity(&self) -> Result<MultiplicityParams> {
        let kappa = self.kappa.finite().ok_or_else(|| {
            Error::Domain("multiplicities are undefined for kappa = inf".into())
        })?;
        let base = self.n as f64 - 1.0;
        let k2 = kappa * (self.p - base) - 0.5;
        let k1 = kappa * (self.q - self.p);
        MultiplicityParams::new(k1, k2, kappa)
    }
}

impl MultiplicityParams {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        if !(k3 > 0.0) || !k3.is_finite() {
            return Err(Error::Domain(format!("k3 must be positive, got {k3}")));
        }
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::Domain(format!("k1, k2 must be finite, got {k1}, {k2}")));
        }
        Ok(MultiplicityParams { k1, k2, k3 })
    }

    /// `k3 > 0`, `k2 > -1/2`, `k1 + k2 > -1/2`: the weight is integrable.
    pub fn in_stationary_regime(&self) -> bool {
        self.k3 > 0.0 && self.k2 > -0.5 && self.k1 + self.k2 > -0.5
    }

    /// Coordinates `rho(k)_i = (k1 + 2 k2 + 2 k3 (N - i)) / 2`, `i = 1..=N`.
    pub fn rho(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| (self.k1 + 2.0 * self.k2 + 2.0 * self.k3 * (n - i) as f64) / 2.0)
            .collect()
    }

    /// Jacobi indices of the stationary ensemble,
    /// `alpha = (1 + 2k1 + 2k2)/(2k3) - 1`, `beta = (1 + 2k2)/(2k3) - 1`.
    pub fn alpha_beta(&self) -> (f64, f64) {
        let two_k3 = 2.0 * self.k3;
        (
            (1.0 + 2.0 * self.k1 + 2.0 * self.k2) / two_k3 - 1.0,
            (1.0 + 2.0 * self.k2) / two_k3 - 1.0,
        )
    }
}

/// `kappa = k3`, `q = N-1 + (1+2k1+2k2)/(2k3)`, `p = N-1 + (1+2k2)/(2k3)`.
pub fn convert_k_to_pq(k: &MultiplicityParams, n: usize) -> Result<Params> {
    if !(k.k3 > 0.0) {
        return Err(Error::Domain(format!("k3 must be positive, got {}", k.k3)));
    }
    let base = n as f64 - 1.0;
    let two_k3 = 2.0 * k.k3;
    let q = base + (1.0 + 2.0 * k.k1 + 2.0 * k.k2) / two_k3;
    let p = base + (1.0 + 2.0 * k.k2) / two_k3;
    Params::new(n, Kappa::Finite(k.k3), p, q)
}
