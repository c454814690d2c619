//! Space-time encoding and transmit-frame assembly for two transmit antennas.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::modulation::{map_symbols, ModulationFormat};
use crate::ofdm::{ofdm_modulate, FreqBlock, OfdmConfig, TimeBlock};
use crate::{Error, Result};

/// Space-time scheme: the two hypotheses of the identification problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stbc {
    /// Alamouti: per subcarrier, antenna 0 sends `[c0, -c1*]` and antenna 1
    /// sends `[c1, c0*]` over two consecutive OFDM blocks.
    #[serde(alias = "al")]
    Alamouti,
    /// Spatial multiplexing: independent streams, one block per antenna slot.
    #[serde(alias = "sm")]
    SpatialMux,
}

impl Stbc {
    /// Number of OFDM slots per STBC block (`U`): 2 for AL, 1 for SM.
    pub fn slots(&self) -> usize {
        match self {
            Stbc::Alamouti => 2,
            Stbc::SpatialMux => 1,
        }
    }
}

/// Baseband transmit frame: one sample stream per transmit antenna.
#[derive(Debug, Clone)]
pub struct TxFrame {
    pub streams: [Vec<Complex64>; 2],
    pub scheme: Stbc,
}

impl TxFrame {
    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Encodes two fresh data blocks into per-antenna slot sequences.
pub fn stbc_encode(
    block0: &FreqBlock,
    block1: &FreqBlock,
    scheme: Stbc,
) -> Result<[Vec<FreqBlock>; 2]> {
    if block0.0.len() != block1.0.len() {
        return Err(Error::Shape(format!(
            "block length mismatch: {} vs {}",
            block0.0.len(),
            block1.0.len()
        )));
    }
    Ok(match scheme {
        Stbc::Alamouti => {
            let neg_conj1 = FreqBlock(block1.0.iter().map(|z| -z.conj()).collect());
            let conj0 = FreqBlock(block0.0.iter().map(|z| z.conj()).collect());
            [
                vec![block0.clone(), neg_conj1],
                vec![block1.clone(), conj0],
            ]
        }
        Stbc::SpatialMux => [vec![block0.clone()], vec![block1.clone()]],
    })
}

/// Builds a transmit frame of `n_blocks` OFDM blocks per antenna.
///
/// Data symbols are drawn deterministically from the seed; for AL the block
/// count must be even so every Alamouti pair is complete.
pub fn build_tx_frame(
    n_blocks: usize,
    cfg: &OfdmConfig,
    fmt: ModulationFormat,
    rng_seed: u64,
) -> Result<TxFrame> {
    if n_blocks == 0 {
        return Err(Error::Config("n_blocks must be positive".into()));
    }
    if cfg.scheme == Stbc::Alamouti && n_blocks % 2 != 0 {
        return Err(Error::Config(format!(
            "Alamouti frames need an even number of OFDM blocks, got {n_blocks}"
        )));
    }
    let n = cfg.n_subcarriers;
    // each encoder invocation consumes two fresh data blocks
    let invocations = n_blocks / cfg.scheme.slots();
    let data = map_symbols(invocations * 2 * n, fmt, rng_seed);
    let mut chunks = data.chunks_exact(n);
    let block_len = cfg.block_len();
    let mut streams = [
        Vec::with_capacity(n_blocks * block_len),
        Vec::with_capacity(n_blocks * block_len),
    ];
    for _ in 0..invocations {
        let c0 = FreqBlock(chunks.next().expect("sized above").to_vec());
        let c1 = FreqBlock(chunks.next().expect("sized above").to_vec());
        let encoded = stbc_encode(&c0, &c1, cfg.scheme)?;
        for (antenna, slots) in encoded.iter().enumerate() {
            for slot in slots {
                streams[antenna].extend(ofdm_modulate(slot, cfg)?.0);
            }
        }
    }
    Ok(TxFrame {
        streams,
        scheme: cfg.scheme,
    })
}

/// Block `q` of the stream shifted left by `tau` samples:
/// samples `[q(N+nu)+tau, (q+1)(N+nu)+tau)`.
pub fn shifted_block_view(
    stream: &[Complex64],
    tau: usize,
    q: usize,
    cfg: &OfdmConfig,
) -> Result<TimeBlock> {
    let block_len = cfg.block_len();
    if tau >= block_len {
        return Err(Error::Bounds(format!(
            "shift tau={tau} outside [0, {block_len})"
        )));
    }
    let start = q * block_len + tau;
    let end = start + block_len;
    if end > stream.len() {
        return Err(Error::Bounds(format!(
            "block q={q} at shift tau={tau} needs samples [{start}, {end}) but stream has {}",
            stream.len()
        )));
    }
    Ok(TimeBlock(stream[start..end].to_vec()))
}
