//! Monte Carlo information-spectrum (IS) lower and dependence-testing (DT)
//! upper bounds on the block error rate.
//!
//! A block of `N` channel uses has information density `i_N`, the sum of `N`
//! independent per-use densities. With `B` payload bits:
//!
//! * IS: `sup_beta P[i_N <= log2 beta] - beta / 2^B`.
//! * DT: `E[2^{-[i_N - log2((2^B - 1) / 2)]^+}]`.
//!
//! Both are estimated from one sorted array of simulated `i_N`.

use crate::rng::{substream, SimRng};
use crate::stats::{parallel_collect, Moments};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Source of i.i.d. per-use information-density draws (bits).
pub trait DensitySampler: Sync {
    fn sample(&self, rng: &mut SimRng) -> f64;

    /// Largest value a single draw can take.
    fn max_density(&self) -> f64;
}

/// Sampler returning a fixed value, for noiseless reference channels.
#[derive(Debug, Clone, Copy)]
pub struct Deterministic(pub f64);

impl DensitySampler for Deterministic {
    fn sample(&self, _rng: &mut SimRng) -> f64 {
        self.0
    }

    fn max_density(&self) -> f64 {
        self.0
    }
}

fn block_density<S: DensitySampler + ?Sized>(sampler: &S, n_uses: usize, rng: &mut SimRng) -> f64 {
    (0..n_uses).map(|_| sampler.sample(rng)).sum()
}

/// One draw of the block information density over `n_uses` uses.
pub fn sample_block_density<S: DensitySampler + ?Sized>(
    sampler: &S,
    n_uses: usize,
    seed: u64,
) -> Result<f64> {
    if n_uses == 0 {
        return Err(Error::invalid("block needs at least one channel use"));
    }
    Ok(block_density(sampler, n_uses, &mut substream(seed, 0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "DT")]
    Dt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub kind: BoundKind,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Maximising `log2 beta` (IS only).
    pub log2_beta_star: Option<f64>,
}

/// `log2((2^B - 1) / 2)` without forming `2^B`.
pub fn dt_threshold(bits: u32) -> f64 {
    let b = bits as f64;
    b - 1.0 + (-(-b * LN_2).exp()).ln_1p() / LN_2
}

/// Simulated block densities in ascending order.
#[derive(Debug, Clone)]
pub struct BlockSamples {
    sorted: Vec<f64>,
    n_uses: usize,
}

impl BlockSamples {
    pub fn draw<S: DensitySampler + ?Sized>(
        sampler: &S,
        n_uses: usize,
        n_blocks: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_uses == 0 || n_blocks == 0 {
            return Err(Error::invalid("need at least one block of at least one use"));
        }
        let mut sorted = parallel_collect(n_blocks, seed, |rng| block_density(sampler, n_uses, rng));
        if sorted.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite block information density".into()));
        }
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted, n_uses })
    }

    pub fn n_uses(&self) -> usize {
        self.n_uses
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn moments(&self) -> Moments {
        Moments::from_slice(&self.sorted)
    }

    /// IS bound for `bits` payload bits. The empirical CDF jumps only at
    /// sample values and `beta / 2^B` increases in `beta`, so the supremum is
    /// attained at one of the samples and an exact scan finds it.
    pub fn is_bound(&self, bits: u32) -> BoundEstimate {
        let n = self.sorted.len();
        let b = bits as f64;
        let mut best = 0.0;
        let mut best_t = None;
        let mut best_p = 0.0;
        let mut i = 0;
        while i < n {
            let t = self.sorted[i];
            let mut j = i + 1;
            while j < n && self.sorted[j] == t {
                j += 1;
            }
            let p = j as f64 / n as f64;
            let v = p - (t - b).exp2();
            if v > best {
                best = v;
                best_t = Some(t);
                best_p = p;
            }
            i = j;
        }
        BoundEstimate {
            kind: BoundKind::Is,
            value: best,
            stderr: (best_p * (1.0 - best_p) / n as f64).sqrt(),
            n_samples: n,
            log2_beta_star: best_t,
        }
    }

    /// DT bound for `bits` payload bits.
    pub fn dt_bound(&self, bits: u32) -> BoundEstimate {
        let thr = dt_threshold(bits);
        let m = Moments::from_slice(
            &self
                .sorted
                .iter()
                .map(|i| (-(i - thr).max(0.0)).exp2())
                .collect::<Vec<_>>(),
        );
        BoundEstimate {
            kind: BoundKind::Dt,
            value: m.mean().clamp(0.0, 1.0),
            stderr: m.mean_stderr(),
            n_samples: self.sorted.len(),
            log2_beta_star: None,
        }
    }
}

/// Smallest block count accepted by the bound estimators.
pub const MIN_BLOCKS: usize = 100_000;

fn check_blocks(n: usize) -> Result<()> {
    if n < MIN_BLOCKS {
        return Err(Error::invalid(format!(
            "at least {MIN_BLOCKS} blocks are needed, got {n}"
        )));
    }
    Ok(())
}

pub fn is_lower_bound<S: DensitySampler + ?Sized>(
    sampler: &S,
    n_uses: usize,
    bits: u32,
    n_blocks: usize,
    seed: u64,
) -> Result<BoundEstimate> {
    check_blocks(n_blocks)?;
    Ok(BlockSamples::draw(sampler, n_uses, n_blocks, seed)?.is_bound(bits))
}

pub fn dt_upper_bound<S: DensitySampler + ?Sized>(
    sampler: &S,
    n_uses: usize,
    bits: u32,
    n_blocks: usize,
    seed: u64,
) -> Result<BoundEstimate> {
    check_blocks(n_blocks)?;
    Ok(BlockSamples::draw(sampler, n_uses, n_blocks, seed)?.dt_bound(bits))
}
