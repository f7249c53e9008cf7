//! Streaming moments and deterministic parallel Monte Carlo reduction.

use crate::rng::{substream, SimRng};
use rayon::prelude::*;

/// Samples per work unit. Fixed so results are independent of thread count.
pub const CHUNK: usize = 8192;

/// Running count, mean and central moments up to order four.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let t1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += t1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += t1;
    }

    /// Combines two disjoint sample sets (Pebay's pairwise update).
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let d3 = d2 * d;
        let d4 = d2 * d2;
        let mean = self.mean + d * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        Moments {
            n: self.n + other.n,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Moments {
        let mut m = Moments::default();
        for &x in xs {
            m.push(x);
        }
        m
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn mean_stderr(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of [`Moments::variance`].
    pub fn variance_stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let mu4 = self.m4 / n;
        let s2 = self.m2 / n;
        ((mu4 - s2 * s2).max(0.0) / n).sqrt()
    }
}

fn chunk_bounds(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(n - c * CHUNK)))
        .collect()
}

/// Moments of `n` draws of `sample`, chunked over substreams of `seed`.
pub fn parallel_moments<F>(n: usize, seed: u64, sample: F) -> Moments
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let parts: Vec<Moments> = chunk_bounds(n)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = substream(seed, c);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect();
    parts.iter().fold(Moments::default(), |acc, m| acc.merge(m))
}

/// Runs `chunk(rng, len)` once per chunk of `n` items on its own substream
/// and returns the per-chunk results in chunk order.
pub fn parallel_chunks<T, F>(n: usize, seed: u64, chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync,
{
    chunk_bounds(n)
        .into_par_iter()
        .map(|(c, len)| chunk(&mut substream(seed, c), len))
        .collect()
}

/// `n` draws of `sample` in deterministic order.
pub fn parallel_collect<F>(n: usize, seed: u64, sample: F) -> Vec<f64>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let parts: Vec<Vec<f64>> = chunk_bounds(n)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = substream(seed, c);
            (0..len).map(|_| sample(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}
