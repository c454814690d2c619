//! OFDM block geometry and (de)modulation.
//!
//! A block of `N` frequency-domain symbols maps to `N + nu` time samples:
//! the unitary inverse DFT output with its last `nu` samples prepended as a
//! cyclic prefix. Equivalently, sample `n` of the block is
//! `(1/sqrt(N)) * sum_p c(p) exp(j 2 pi p (n - nu) / N)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::stbc::Stbc;
use crate::{Error, Result};

/// OFDM block geometry plus the space-time scheme in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub scheme: Stbc,
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, cp_len: usize, scheme: Stbc) -> Result<Self> {
        if n_subcarriers < 4 || !n_subcarriers.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_subcarriers must be a power of two >= 4, got {n_subcarriers}"
            )));
        }
        if cp_len == 0 || cp_len >= n_subcarriers {
            return Err(Error::Config(format!(
                "cp_len must satisfy 0 < cp_len < n_subcarriers, got cp_len={cp_len} n_subcarriers={n_subcarriers}"
            )));
        }
        Ok(Self {
            n_subcarriers,
            cp_len,
            scheme,
        })
    }

    /// Total block length `N + nu`.
    pub fn block_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

/// One OFDM block of `N` frequency-domain symbols for one antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqBlock(pub Vec<Complex64>);

/// One OFDM block of `N + nu` time samples (cyclic prefix included).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBlock(pub Vec<Complex64>);

/// Unitary OFDM modulation with cyclic prefix.
pub fn ofdm_modulate(block: &FreqBlock, cfg: &OfdmConfig) -> Result<TimeBlock> {
    let n = cfg.n_subcarriers;
    if block.0.len() != n {
        return Err(Error::Shape(format!(
            "frequency block has {} symbols, expected {n}",
            block.0.len()
        )));
    }
    let mut g = block.0.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut g);
    let scale = (n as f64).sqrt().recip();
    for z in &mut g {
        *z *= scale;
    }
    // g~(n) = g((n - nu) mod N): last nu samples prepended
    let nu = cfg.cp_len;
    let mut out = Vec::with_capacity(n + nu);
    out.extend_from_slice(&g[n - nu..]);
    out.extend_from_slice(&g);
    Ok(TimeBlock(out))
}

/// Inverse of [`ofdm_modulate`]: strip the cyclic prefix, forward unitary DFT.
pub fn ofdm_demodulate(block: &TimeBlock, cfg: &OfdmConfig) -> Result<FreqBlock> {
    let n = cfg.n_subcarriers;
    let nu = cfg.cp_len;
    if block.0.len() != n + nu {
        return Err(Error::Shape(format!(
            "time block has {} samples, expected {}",
            block.0.len(),
            n + nu
        )));
    }
    let mut c = block.0[nu..].to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut c);
    let scale = (n as f64).sqrt().recip();
    for z in &mut c {
        *z *= scale;
    }
    Ok(FreqBlock(c))
}
