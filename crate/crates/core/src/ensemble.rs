//! Random-walk Metropolis sampler for the beta-Jacobi ensemble on the alcove,
//!
//! ```text
//! w(x) ∝ prod_i (1-x_i)^{k1+k2-1/2} (1+x_i)^{k2-1/2} prod_{i<j} |x_i - x_j|^{2 k3},
//! ```
//!
//! the stationary law of the Jacobi process.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::jacobi1d::jacobi_zeros;
use crate::params::MultiplicityParams;
use crate::stats::{batch_means, Estimate, Observable};

/// Minimum number of retained draws for a moment estimate.
pub const MIN_DRAWS: usize = 100;
const BATCHES_PER_CHAIN: usize = 25;
/// Sweeps between proposal-scale updates during burn-in.
const ADAPT_WINDOW: usize = 100;
const TARGET_ACCEPT: (f64, f64) = (0.25, 0.35);

/// Unnormalized log-density; `-inf` on the boundary or at ties.
pub fn log_density_unnormalized(k: &MultiplicityParams, x: &[f64]) -> f64 {
    let a = k.k1 + k.k2 - 0.5;
    let b = k.k2 - 0.5;
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        if !(xi > -1.0 && xi < 1.0) {
            return f64::NEG_INFINITY;
        }
        total += a * (1.0 - xi).ln() + b * (1.0 + xi).ln();
        for &xj in &x[i + 1..] {
            let gap = (xi - xj).abs();
            if gap == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += 2.0 * k.k3 * gap.ln();
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcTuning {
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub initial_scale: f64,
}

impl Default for McmcTuning {
    fn default() -> Self {
        McmcTuning { burn_in: 10_000, thin: 10, chains: 4, initial_scale: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_scales: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
}

/// Retained draws, chains stored one after another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSample {
    pub n_particles: usize,
    pub chain_lengths: Vec<usize>,
    pub meta: ChainMeta,
    draws: Vec<f64>,
}

impl EnsembleSample {
    pub fn len(&self) -> usize {
        self.chain_lengths.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.n_particles..(i + 1) * self.n_particles]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.n_particles)
    }
}

struct ChainOutput {
    draws: Vec<f64>,
    scale: f64,
    acceptance: f64,
}

/// One Metropolis sweep over unordered coordinates: each coordinate in turn
/// gets a Gaussian kick accepted with the usual ratio. The target is
/// permutation invariant, so states are sorted only when recorded.
fn sweep(
    k: &MultiplicityParams,
    x: &mut Vec<f64>,
    log_w: &mut f64,
    scale: f64,
    rng: &mut ChaCha8Rng,
    proposal: &mut Vec<f64>,
) -> usize {
    let mut accepted = 0;
    for i in 0..x.len() {
        proposal.clone_from(x);
        let kick: f64 = StandardNormal.sample(rng);
        proposal[i] += scale * kick;
        let log_prop = log_density_unnormalized(k, proposal);
        let u: f64 = rng.random();
        if log_prop > f64::NEG_INFINITY && u.ln() < log_prop - *log_w {
            std::mem::swap(x, proposal);
            *log_w = log_prop;
            accepted += 1;
        }
    }
    accepted
}

fn run_chain(
    k: &MultiplicityParams,
    start: &[f64],
    draws: usize,
    tuning: &McmcTuning,
    seed: u64,
    chain: usize,
) -> ChainOutput {
    let n = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    let mut x = start.to_vec();
    let mut log_w = log_density_unnormalized(k, &x);
    let mut proposal = Vec::with_capacity(n);
    let mut scale = tuning.initial_scale;

    let mut window_acc = 0;
    for s in 1..=tuning.burn_in {
        window_acc += sweep(k, &mut x, &mut log_w, scale, &mut rng, &mut proposal);
        if s % ADAPT_WINDOW == 0 {
            let rate = window_acc as f64 / (ADAPT_WINDOW * n) as f64;
            if rate < TARGET_ACCEPT.0 || rate > TARGET_ACCEPT.1 {
                let mid = 0.5 * (TARGET_ACCEPT.0 + TARGET_ACCEPT.1);
                scale = (scale * (2.0 * (rate - mid)).exp()).clamp(1e-6, 2.0);
            }
            window_acc = 0;
        }
    }

    let mut out = Vec::with_capacity(draws * n);
    let mut accepted = 0usize;
    for _ in 0..draws {
        for _ in 0..tuning.thin {
            accepted += sweep(k, &mut x, &mut log_w, scale, &mut rng, &mut proposal);
        }
        let start = out.len();
        out.extend_from_slice(&x);
        out[start..].sort_by(f64::total_cmp);
    }
    let proposals = (draws * tuning.thin * n).max(1);
    ChainOutput { draws: out, scale, acceptance: accepted as f64 / proposals as f64 }
}

/// `draws` retained states split evenly over `tuning.chains` independent
/// chains, each started at the Jacobi zeros of the matching indices.
/// Chains run in parallel; each chain has its own stream of the master seed.
pub fn mcmc_sample(
    k: &MultiplicityParams,
    n_particles: usize,
    draws: usize,
    seed: u64,
    tuning: &McmcTuning,
) -> Result<EnsembleSample> {
    if !k.in_stationary_regime() {
        return Err(Error::InvalidParams(format!(
            "need k3 > 0, k2 > -1/2, k1 + k2 > -1/2, got {k:?}"
        )));
    }
    if n_particles == 0 || tuning.chains == 0 || tuning.thin == 0 {
        return Err(Error::InvalidParams("particles, chains and thinning must be positive".into()));
    }
    let (alpha, beta) = k.alpha_beta();
    let start = jacobi_zeros(n_particles, alpha, beta)?.into_vec();
    let lengths: Vec<usize> = (0..tuning.chains)
        .map(|c| draws / tuning.chains + usize::from(c < draws % tuning.chains))
        .collect();
    let outputs: Vec<ChainOutput> = lengths
        .par_iter()
        .enumerate()
        .map(|(c, &len)| run_chain(k, &start, len, tuning, seed, c))
        .collect();
    let total_props: f64 = lengths.iter().map(|&l| (l * tuning.thin * n_particles) as f64).sum();
    let acceptance_rate = outputs
        .iter()
        .zip(&lengths)
        .map(|(o, &l)| o.acceptance * (l * tuning.thin * n_particles) as f64)
        .sum::<f64>()
        / total_props.max(1.0);
    let meta = ChainMeta {
        burn_in: tuning.burn_in,
        thin: tuning.thin,
        proposal_scales: outputs.iter().map(|o| o.scale).collect(),
        acceptance_rates: outputs.iter().map(|o| o.acceptance).collect(),
        acceptance_rate,
        seed,
    };
    let mut all = Vec::with_capacity(draws * n_particles);
    for o in outputs {
        all.extend(o.draws);
    }
    Ok(EnsembleSample { n_particles, chain_lengths: lengths, meta, draws: all })
}

/// Batch-means estimate of `E[obs(X)]`.
pub fn moment_estimate(sample: &EnsembleSample, obs: Observable) -> Result<Estimate> {
    if sample.len() < MIN_DRAWS {
        return Err(Error::TooFewDraws { needed: MIN_DRAWS, got: sample.len() });
    }
    let values: Vec<f64> = sample.iter().map(|x| obs.eval(x)).collect();
    let mut segments = Vec::with_capacity(sample.chain_lengths.len());
    let mut offset = 0;
    for &len in &sample.chain_lengths {
        segments.push(&values[offset..offset + len]);
        offset += len;
    }
    Ok(batch_means(&segments, BATCHES_PER_CHAIN))
}

/// CDF of the normalized weight `(1-x)^a (1+x)^b` on `[-1, 1]`.
pub fn jacobi_weight_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // u = (1+x)/2 is Beta(b+1, a+1)
    beta_reg(b + 1.0, a + 1.0, (1.0 + x) / 2.0)
}

/// CSV with columns `draw,x_1..x_N`.
pub fn write_sample_csv<W: Write>(sample: &EnsembleSample, mut out: W) -> io::Result<()> {
    write!(out, "draw")?;
    for i in 1..=sample.n_particles {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for (d, x) in sample.iter().enumerate() {
        write!(out, "{d}")?;
        for v in x {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
